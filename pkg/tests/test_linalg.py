import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_dilation import linalg as la
from conftest import power_norm, random_matrix


def test_op_norm_examples():
    assert la.op_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-15)
    assert la.op_norm(np.diag([2.0, -3.0])) == pytest.approx(3.0, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_op_norm_power_iteration(seed):
    a = random_matrix(la.rng_from_seed(seed), 6, 4)
    assert abs(la.op_norm(a) - power_norm(a)) <= 1e-8


def test_op_norm_large_uses_lapack():
    a = random_matrix(la.rng_from_seed(3), la.JACOBI_MAX_DIM + 10)
    assert la.op_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-12)
    h = a + a.conj().T
    assert la.hermitian_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).max(), rel=1e-12)


def test_is_psd_examples():
    assert la.is_psd(np.eye(3))
    assert not la.is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
    b = random_matrix(la.rng_from_seed(1), 5)
    assert la.is_psd(b.conj().T @ b)
    assert not la.is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))  # not Hermitian


def test_haar_unitary():
    u = la.haar_unitary(1, 0)
    assert abs(abs(u[0, 0]) - 1.0) < 1e-15
    u = la.haar_unitary(6, 11)
    assert np.abs(u.conj().T @ u - np.eye(6)).max() <= 1e-12
    assert np.array_equal(u, la.haar_unitary(6, 11))


def test_svd_convention(rng):
    a = random_matrix(rng, 5)
    f = la.svd(a)
    assert np.all(np.diff(f.singulars) <= 0)
    assert np.abs(f.left @ np.diag(f.singulars) @ f.right - a).max() <= 1e-12


def test_herm_eig_clusters():
    u = la.haar_unitary(5, 2)
    h = u @ np.diag([1.0, 1.0 + 1e-12, 2.0, 3.0, 3.0]) @ u.conj().T
    e = la.herm_eig(h, cluster_tol=1e-8)
    assert sorted(c.rank for c in e.clusters) == [1, 2, 2]
    Q, lam = e.frame()
    assert np.abs(Q @ np.diag(lam) @ Q.conj().T - h).max() <= 1e-11


def test_inv_rejects_singular():
    with pytest.raises(la.LinalgError):
        la.inv(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(la.LinalgError):
        la.as_matrix(np.array([[np.nan]]))


def test_tolerance_policy_validation():
    with pytest.raises(ValueError):
        la.TolerancePolicy(algebraic_tol=0.0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_polar_round_trip(n, seed):
    a = random_matrix(la.rng_from_seed(seed), n)
    U, P = la.polar(a)
    assert np.abs(a - U @ P).max() <= 1e-10 * max(1.0, la.op_norm(a))
    assert la.is_unitary(U, 1e-10)
    assert la.is_psd(P, 1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_eigh_reassembles(n, seed):
    b = random_matrix(la.rng_from_seed(seed), n)
    h = b + b.conj().T
    w, v = la.eigh(h)
    assert np.abs(v @ np.diag(w) @ v.conj().T - h).max() <= 1e-10 * max(1.0, la.op_norm(h))
