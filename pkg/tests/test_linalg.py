import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aderdg.linalg import SingularMatrixError, det, lu_factor, lu_solve, mat_inverse, norm_inf, norm_max


def test_solve_matches_numpy(rng):
    A = rng.standard_normal((8, 8))
    b = rng.standard_normal(8)
    np.testing.assert_allclose(lu_solve(A, b), np.linalg.solve(A, b), rtol=1e-12)


def test_batched_solve_and_det(rng):
    A = rng.standard_normal((5, 4, 4))
    b = rng.standard_normal((5, 4))
    x = lu_solve(A, b)
    np.testing.assert_allclose(np.einsum("bij,bj->bi", A, x), b, atol=1e-12)
    np.testing.assert_allclose(det(A), np.linalg.det(A), rtol=1e-12)


def test_complex_system(rng):
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    b = rng.standard_normal(6) + 0j
    np.testing.assert_allclose(A @ lu_solve(A, b), b, atol=1e-12)


def test_inverse_needs_pivoting():
    A = np.array([[0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(mat_inverse(A) @ A, np.eye(2), atol=1e-15)
    np.testing.assert_array_equal(mat_inverse(np.array([[1.0, 1.0], [0.0, 1.0]])), [[1, -1], [0, 1]])


def test_singular_raises_and_mask():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        lu_factor(A)
    batch = np.stack([np.eye(2), A])
    f = lu_factor(batch, check=False)
    np.testing.assert_array_equal(f.singular, [False, True])
    with pytest.raises(SingularMatrixError) as info:
        lu_factor(batch)
    assert "batch" in str(info.value)
    assert det(A) == 0


def test_extended_precision_against_mpmath():
    with mpmath.workdps(40):
        A = np.array([[mpmath.mpf(4), mpmath.mpf(1), mpmath.mpf(2)],
                      [mpmath.mpf(1), mpmath.mpf(3), mpmath.mpf(0)],
                      [mpmath.mpf(2), mpmath.mpf(0), mpmath.mpf(5)]], dtype=object)
        b = np.array([mpmath.mpf(1), mpmath.mpf(2), mpmath.mpf(3)], dtype=object)
        x = lu_solve(A, b)
        ref = mpmath.lu_solve(mpmath.matrix(A.tolist()), mpmath.matrix(b.tolist()))
        assert max(abs(x[i] - ref[i]) for i in range(3)) < mpmath.mpf(10) ** -38


def test_norms():
    assert norm_max(np.array([[1.0, -3.0], [2.0, 0.5]])) == 3.0
    assert norm_inf(np.array([[1.0, -3.0], [2.0, 0.5]])) == 4.0


@given(arrays(np.float64, (5, 5), elements=st.floats(-1, 1)), arrays(np.float64, 5, elements=st.floats(-10, 10)))
def test_diagonally_dominant_residual(M, b):
    A = M + 6 * np.eye(5)
    x = lu_solve(A, b)
    assert np.max(np.abs(A @ x - b)) <= 1e-12 * max(1.0, np.abs(b).max())
