import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aderdg.tables import basis_eval_all, basis_matrix, build_tables, gauss_legendre_01


def leggauss01(N):
    x, w = np.polynomial.legendre.leggauss(N + 1)
    return (x + 1) / 2, w / 2


@pytest.mark.parametrize("N", range(0, 41))
def test_nodes_weights_match_numpy_leggauss(N):
    nodes, weights = gauss_legendre_01(N)
    ref_x, ref_w = leggauss01(N)
    np.testing.assert_allclose(nodes, ref_x, rtol=0, atol=1e-14)
    np.testing.assert_allclose(weights, ref_w, rtol=0, atol=1e-14)


@pytest.mark.parametrize("N", range(0, 11))
def test_quadrature_exact_to_degree_2N_plus_1(N):
    tb = build_tables(N)
    for k in range(2 * N + 2):
        assert abs(tb.weights @ tb.nodes**k - 1 / (k + 1)) <= 1e-13


@pytest.mark.parametrize("N", range(0, 11))
def test_mass_matrix_equals_weights(N):
    tb = build_tables(N)
    np.testing.assert_allclose(tb.M, tb.weights, rtol=0, atol=1e-13)


@pytest.mark.parametrize("N", range(1, 11))
def test_B_row_sums_equal_nodes(N):
    tb = build_tables(N)
    np.testing.assert_allclose(tb.B.sum(axis=1), tb.nodes, rtol=0, atol=1e-12)


def test_degree_zero_is_backward_euler():
    # the linear function u_n + c t is outside the degree-0 trial space,
    # so the row-sum identity of higher degrees does not hold here
    tb = build_tables(0)
    assert tb.B.shape == (1, 1) and tb.B[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert tb.nodes[0] == 0.5


@pytest.mark.parametrize("N", range(0, 11))
def test_K_inverse_maps_left_trace_to_ones(N):
    tb = build_tables(N)
    np.testing.assert_allclose(tb.K_inv @ tb.phi_at_0, np.ones(N + 1), rtol=0, atol=1e-12)


def test_invariants_hold_loosely_at_degree_20():
    tb = build_tables(20)
    np.testing.assert_allclose(tb.B.sum(axis=1), tb.nodes, atol=1e-8)
    np.testing.assert_allclose(tb.K_inv @ tb.phi_at_0, 1.0, atol=1e-8)
    assert abs(tb.weights @ tb.nodes**41 - 1 / 42) <= 1e-8


@pytest.mark.parametrize("N", [1, 2, 5, 8, 13])
def test_symmetry(N):
    tb = build_tables(N)
    np.testing.assert_allclose(tb.nodes + tb.nodes[::-1], 1.0, atol=1e-15)
    np.testing.assert_allclose(tb.weights, tb.weights[::-1], atol=1e-15)
    np.testing.assert_allclose(tb.phi_at_0, tb.phi_at_1[::-1], atol=1e-12)


@pytest.mark.parametrize("N", [0, 1, 4, 9])
def test_basis_is_cardinal_at_nodes(N):
    tb = build_tables(N)
    np.testing.assert_array_equal(basis_matrix(tb, tb.nodes), np.eye(N + 1))


@given(N=st.integers(0, 12), tau=st.floats(-0.5, 1.5))
def test_partition_of_unity(N, tau):
    tb = build_tables(N)
    assert basis_eval_all(tb, tau).sum() == pytest.approx(1.0, abs=1e-10)


@given(N=st.integers(1, 10), coeffs=st.lists(st.floats(-3, 3), min_size=11, max_size=11))
def test_interpolation_and_differentiation_exact_for_degree_N(N, coeffs):
    tb = build_tables(N)
    p = np.polynomial.Polynomial(coeffs[: N + 1])
    vals = p(tb.nodes)
    taus = np.linspace(0, 1, 7)
    np.testing.assert_allclose(basis_matrix(tb, taus) @ vals, p(taus), atol=1e-11)
    np.testing.assert_allclose(tb.diff_matrix @ vals, p.deriv()(tb.nodes), atol=1e-10)


def test_endpoint_values_match_basis_evaluation():
    tb = build_tables(4)
    np.testing.assert_allclose(basis_eval_all(tb, 0.0), tb.phi_at_0, atol=1e-15)
    np.testing.assert_allclose(basis_eval_all(tb, 1.0), tb.phi_at_1, atol=1e-15)


def test_tables_are_cached_and_read_only():
    tb = build_tables(3)
    assert build_tables(3) is tb
    with pytest.raises(ValueError):
        tb.B[0, 0] = 1.0


@pytest.mark.parametrize("bad,exc", [(-1, ValueError), (1.5, TypeError), ("2", TypeError)])
def test_degree_validation(bad, exc):
    with pytest.raises(exc):
        build_tables(bad)


def test_extended_precision_rule():
    N, dps = 6, 40
    nodes, weights = gauss_legendre_01(N, dps=dps)
    assert nodes.dtype == object
    with mpmath.workdps(dps):
        for x in nodes:
            assert abs(mpmath.legendre(N + 1, 2 * x - 1)) < mpmath.mpf(10) ** -35
        for k in range(2 * N + 2):
            s = mpmath.fsum(w * x**k for w, x in zip(weights, nodes))
            assert abs(s - mpmath.mpf(1) / (k + 1)) < mpmath.mpf(10) ** -36
    tb = build_tables(N, dps=dps)
    with mpmath.workdps(dps):
        err = max(abs(r - x) for r, x in zip(tb.B.sum(axis=1), tb.nodes))
    assert err < mpmath.mpf(10) ** -35
