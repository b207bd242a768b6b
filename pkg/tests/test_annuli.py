import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_dilation import annuli as an
from annulus_dilation.linalg import LinalgError, haar_unitary, rng_from_seed
from annulus_dilation.params import AnnulusParam
from conftest import random_matrix

P = AnnulusParam(0.5)
r = P.r


def test_param_constants():
    assert P.mu == pytest.approx(r ** 2 + r ** -2)
    assert P.nu == pytest.approx(r ** -2 - r ** 2)
    assert P.to_q().q == pytest.approx(0.25)
    assert P.to_q().to_r().r == pytest.approx(0.5)
    with pytest.raises(ValueError):
        AnnulusParam(1.0)


def test_in_QA_examples():
    assert an.in_QA(np.eye(3), P)
    assert an.in_QA(np.diag([r, 1 / r]), P)
    assert not an.in_QA((1 / r + 0.1) * np.eye(2), P)


def test_qa_defect_examples():
    assert np.abs(an.qa_defect(r * np.eye(2), P)).max() <= 1e-14
    d = an.qa_defect(np.eye(2), P)
    assert np.allclose(d, (1 / r - r) ** 2 * np.eye(2), atol=1e-14)
    T, _ = an.random_scriptqa(4, P, seed=3)
    assert np.abs(an.qa_defect(T, P)).max() <= 1e-10


def test_in_scriptQA_examples():
    U = haar_unitary(3, 5)
    res = an.in_scriptQA(U @ np.diag([r, r, 1 / r]), P)
    assert res.flag
    assert round(np.trace(res.P_plus).real) == 2
    assert np.allclose(res.P_plus + res.P_minus, np.eye(3), atol=1e-10)
    assert not an.in_scriptQA(np.eye(2), P).flag
    res = an.in_scriptQA(r * np.eye(2), P)
    assert res.flag and np.allclose(res.P_plus, np.eye(2)) and np.allclose(res.P_minus, 0)


def test_pick_defect_examples():
    assert np.abs(an.pick_defect(r * np.eye(2), P)).max() <= 1e-14
    d = an.pick_defect(np.eye(2), P)
    assert np.allclose(d, (1 / r - r) ** 2 / P.nu * np.eye(2))
    assert an.in_PA(np.eye(2), P)
    U = haar_unitary(3, 1)
    assert np.allclose(an.pick_defect_flipped(U, P), (1 / r - r) ** 2 / P.nu * np.eye(3), atol=1e-12)
    J = random_matrix(rng_from_seed(2), 3) + 2 * np.eye(3)
    assert np.allclose(an.pick_defect_flipped(J, P), an.pick_defect(J.conj().T, P), atol=1e-12)


def test_in_PA_against_numpy_eigvals():
    rng = rng_from_seed(8)
    agree = 0
    for i in range(200):
        T = an.random_qa(3, P, rng)
        Ti = np.linalg.inv(T)
        D = P.mu * np.eye(3) - T.conj().T @ T - Ti.conj().T @ Ti
        ref = np.linalg.eigvalsh(D).min() >= -1e-10
        agree += an.in_PA(T, P) == ref
    assert agree == 200


def test_in_scriptPA_examples():
    J = np.diag([r, 1 / r])
    assert an.in_scriptPA(J, P)
    assert np.abs(an.pick_defect(np.diag([r, r]), P)).max() <= 1e-14
    assert not an.in_scriptPA(np.eye(2), P)


def test_in_scriptSA_examples():
    assert an.in_scriptSA(np.diag([r * np.exp(0.3j), 1 / r]), P)
    assert not an.in_scriptSA(np.array([[r, 1.0], [0.0, r]]), P)
    U = haar_unitary(2, 4)
    assert an.in_scriptSA(U @ np.diag([r, 1 / r]) @ U.conj().T, P)


def test_membership_report_diag():
    rep = an.membership_report(np.diag([r, 1 / r]), P)
    assert rep.QA and rep.scriptQA and rep.scriptPA and rep.scriptSA
    assert rep.chain_violations() == []
    d = rep.to_dict()
    assert d["flags"]["scriptQA"] and "P_plus" in d


def test_hereditary_trivial_dilation():
    T = an.random_qa(3, P, seed=9, margin=0.1)
    X = an.random_qa(2, P, seed=10, margin=0.1)
    J = np.block([[T, np.zeros((3, 2))], [np.zeros((2, 3)), X]])
    V = np.eye(5)[:, :3]
    rep = an.hereditary_dilation_check(T, J, V, P)
    assert rep.precondition_ok and rep.holds
    assert abs(rep.gaps["final"]) <= 1e-10  # equality for a direct sum


def test_hereditary_precondition_violation():
    T = an.random_qa(2, P, seed=1, margin=0.1)
    J = an.random_qa(4, P, seed=2, margin=0.1)
    rep = an.hereditary_dilation_check(T, J, np.eye(4)[:, :2], P)
    assert not rep.precondition_ok
    with pytest.raises(LinalgError):
        an.hereditary_dilation_check(T, J, 2 * np.eye(4)[:, :2], P)


def test_extremality_trivial_and_perturbed():
    J, _ = an.random_scriptqa(3, P, seed=4)
    X = an.random_qa(2, P, seed=5, margin=0.1)
    F = np.block([[J, np.zeros((3, 2))], [np.zeros((2, 3)), X]])
    V = np.eye(5)[:, :3]
    rep = an.extremality_witness(J, F, V, P)
    assert rep.valid_dilation and rep.reduces and rep.consistent
    E = np.zeros((5, 5))
    E[3, 0] = 0.05
    rep = an.extremality_witness(J, F + E, V, P)
    assert not rep.reduces


def _closure_inputs(seed):
    rng = rng_from_seed(seed)
    J, _ = an.random_scriptqa(int(rng.integers(1, 5)), P, rng)
    return J, rng


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_scriptQA_closure(seed):
    J, rng = _closure_inputs(seed)
    n = J.shape[0]
    U = haar_unitary(n, rng)
    K, _ = an.random_scriptqa(2, P, rng)
    for M in (U @ J @ U.conj().T, np.kron(J, np.eye(2)), np.block([[J, np.zeros((n, 2))], [np.zeros((2, n)), K]])):
        assert an.in_scriptQA(M, P).flag


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_inclusion_chain(seed, n):
    rng = rng_from_seed(seed)
    kind = int(rng.integers(0, 3))
    if kind == 0:
        T = an.random_qa(n, P, rng)
    elif kind == 1:
        T, _ = an.random_scriptqa(n, P, rng)
    else:
        T = random_matrix(rng, n) + 1.5 * np.eye(n)
    rep = an.membership_report(T, P)
    assert rep.chain_violations() == []
    if rep.scriptPA:
        assert an.normality_residual(T) <= 1e-8
    assert rep.scriptPA == rep.scriptSA


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5))
def test_norm_test_matches_defect(seed, n):
    T = an.random_qa(n, P, seed) * np.exp(rng_from_seed(seed).uniform(-0.3, 0.3))
    psd = np.linalg.eigvalsh(an.qa_defect(T, P)).min() >= -an.qa_psd_tol(P, 1e-10)
    assert an.in_QA(T, P) == psd
