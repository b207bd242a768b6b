import numpy as np
import pytest

from annulus_dilation import qa
from annulus_dilation.annuli import hereditary_dilation_check, random_qa
from annulus_dilation.geometry import lambda_lift
from annulus_dilation.linalg import LinalgError, haar_unitary, op_norm
from annulus_dilation.params import AnnulusParam

P = AnnulusParam(0.5)
r = P.r
Z = np.array([0.0, 0.3 + 0.2j, -0.5j, 0.8])


def test_regularize_examples():
    T = np.diag([1.0, 1.3])
    assert np.allclose(qa.regularize(T, P, 100).T_m, T, atol=1e-13)
    reg = qa.regularize(r * np.eye(2), P, 100)
    assert np.allclose(reg.T_m, (r + 0.01) * np.eye(2), atol=1e-13)
    for seed in range(10):
        T = random_qa(3, P, seed)
        assert op_norm(qa.regularize(T, P, 50).T_m - T) <= 1 / 50 + 1e-12
    with pytest.raises(LinalgError):
        qa.regularize(3 * np.eye(2), P)
    with pytest.raises(ValueError):
        qa.clamp_spectrum(np.array([1.0]), P, 1)


def test_build_F_requires_interior_spectrum():
    with pytest.raises(qa.RegularizationRequired):
        qa.build_F(r * np.eye(2), P)


def test_build_F_examples():
    m = qa.build_F(np.eye(2), P)
    pi = lambda_lift(1.0, P)
    vals = m.F(Z)
    assert np.allclose(vals, pi(Z)[:, None, None] * np.eye(2), atol=1e-13)
    assert np.allclose(m.F(0.0), np.eye(2), atol=1e-14)
    lam = 1.3
    m = qa.build_F(np.array([[lam]]), P)
    assert np.allclose(m.F(Z)[:, 0, 0], lambda_lift(lam, P)(Z), atol=1e-13)
    U = haar_unitary(3, 7)
    m = qa.build_F(U, P)
    assert np.allclose(m.F(Z), pi(Z)[:, None, None] * U, atol=1e-12)


def test_F_values_stay_in_QA():
    T = random_qa(4, P, seed=3, margin=0.05)
    m = qa.build_F(T, P)
    pts = 0.99 * np.exp(1j * np.linspace(0, 2 * np.pi, 50))
    assert qa.pointwise_membership(m, pts) <= 1 / r
    assert np.abs(m.F(0.0) - T).max() <= 1e-12


def test_compression_examples():
    m = qa.build_F(np.eye(2), P)
    rep = qa.verify_compression(m, n_max=5, rho=0.9, M=1024)
    assert rep.max_error <= 1e-10
    lam = 0.8
    m = qa.build_F(np.array([[lam]]), P)
    assert abs(qa.interior_powers(m, 1, 0.9, 1024)[1][0, 0] - lam) <= 1e-10


def test_compression_random_4x4():
    T = random_qa(4, P, seed=21, margin=0.02)
    m = qa.build_F(T, P)
    coarse = qa.verify_compression(m, 5, 0.9, 2048)
    rep = qa.verify_compression(m, 5, 0.9, 4096)
    fine = qa.verify_compression(m, 5, 0.9, 8192)
    assert rep.max_error <= 1e-6
    assert fine.max_error <= max(coarse.max_error, 1e-12)


def test_laurent_multiplier_scalar_coefficients():
    lam = 1.2
    m = qa.build_F(np.array([[lam]]), P)
    mult = qa.laurent_multiplier(m, 8, M=1024, eps=1e-3)
    theta = mult.samples.theta
    vals = mult.samples.values[:, 0, 0]
    for k in (-3, 0, 2):
        ref = np.mean(vals * np.exp(-1j * k * theta))
        assert abs(mult.coeff(k)[0, 0] - ref) <= 1e-13
    with pytest.raises(ValueError):
        mult.section(np.arange(-300, 1), np.arange(0, 300))
    with pytest.raises(ValueError):
        qa.laurent_multiplier(m, 256, M=1024)


def test_laurent_section_is_toeplitz():
    T = random_qa(2, P, seed=4, margin=0.05)
    mult = qa.laurent_multiplier(qa.build_F(T, P), 6, M=512)
    A = mult.truncation(3)
    n = 2
    assert np.allclose(A[:n, :n], A[n:2 * n, n:2 * n])
    assert np.allclose(A[n:2 * n, :n], mult.coeff(1))


def test_boundary_law_and_trend():
    U = haar_unitary(2, 9)
    m = qa.build_F(U, P)
    trend = qa.verify_scriptQA_defect(m, N_list=(16, 32, 64), M=1024)
    assert trend.boundary_law <= 1e-8
    assert trend.defects[0] >= trend.defects[-1]
    assert trend.non_increasing
    assert trend.section_norm <= 1 / r + 1e-8


def test_boundary_target_matches_arcs():
    T = random_qa(3, P, seed=5, margin=0.05)
    m = qa.build_F(T, P)
    s = qa.boundary_samples(m, M=512, eps=1e-3)
    assert qa.boundary_law_residual(m, s) <= 1e-8
    with pytest.raises(ValueError):
        qa.boundary_samples(m, M=511)


def test_hereditary_pipeline():
    T = random_qa(2, P, seed=6, margin=0.05)
    m = qa.build_F(T, P)
    J, V = qa.interior_circulant(m, rho=0.5, M=64)
    rep = hereditary_dilation_check(T, J, V, P)
    assert rep.precondition_ok and rep.holds


def test_dilate_identity():
    model, rep = qa.dilate(np.eye(2), P, m=100, N_list=(8, 16, 32), M=1024)
    assert rep.compression.max_error <= 1e-6
    assert rep.trend.boundary_law <= 1e-8
    assert rep.consistency["C"] <= 1.0
    d = rep.to_dict()
    assert d["m"] == 100 and d["trend"]["N"] == [8, 16, 32]


def test_dilate_boundary_input():
    T = np.diag([r, 1.0, 1 / r])
    model, rep = qa.dilate(T, P, m=50, N_list=(8, 16), M=512)
    assert np.all(model.lambdas > r) and np.all(model.lambdas < 1 / r)
    assert rep.regularization == pytest.approx(1 / 50)
    # telescoping: ||A^n - B^n|| <= |n| max(||A||, ||B||)^(|n|-1) ||A - B||,
    # with ||T_m^-1 - T^-1|| <= r^-2 ||T_m - T||
    for key, err in rep.consistency["errors_vs_T"].items():
        n = int(key)
        step = 1 / 50 if n > 0 else r ** -2 / 50
        assert err <= abs(n) * r ** -(abs(n) - 1) * step + 1e-6
