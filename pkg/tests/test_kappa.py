import math

import numpy as np
import pytest

from annulus_dilation import kappa
from annulus_dilation.annuli import in_scriptQA, random_qa, random_scriptqa
from annulus_dilation.inner import psi_W, random_inner_spec, tsikalas_f
from annulus_dilation.linalg import haar_unitary, rng_from_seed, singular_values
from annulus_dilation.params import AnnulusParam

Q = 0.25
P = AnnulusParam(0.5)


def test_convert_convention_examples():
    T, q = kappa.convert_convention(np.diag([P.r, 1 / P.r]), P.r)
    assert q == pytest.approx(Q)
    assert np.allclose(T, np.diag([Q, 1.0]))
    T, _ = kappa.convert_convention(np.eye(2), P.r)
    assert np.allclose(T, P.r * np.eye(2))


def test_convert_convention_membership():
    rng = rng_from_seed(5)
    for i in range(100):
        T = random_scriptqa(3, P, rng)[0] if i % 2 else random_qa(3, P, rng)
        J, q = kappa.convert_convention(T, P.r)
        s = singular_values(J)
        boundary = bool(np.all(np.minimum(np.abs(s - q), np.abs(s - 1.0)) <= 1e-10))
        assert boundary == in_scriptQA(T, P).flag


def test_boundary_op_form():
    op = kappa.BoundaryOpQ(haar_unitary(4, 1), 2, Q)
    assert np.allclose(np.sort(singular_values(op.J)), [Q, Q, 1, 1])
    assert np.allclose(op.J @ op.J_inv, np.eye(4), atol=1e-13)
    with pytest.raises(ValueError):
        kappa.BoundaryOpQ(np.eye(2), 3, Q)


def test_normal_functional_calculus():
    psi = psi_W(random_inner_spec(Q, seed=2))
    eig = np.concatenate([np.exp(1j * np.array([0.3, 2.0])), Q * np.exp(1j * np.array([1.0, -2.5]))])
    J = np.diag(eig)
    ev = kappa.eval_fn_on_op(psi, J, Q)
    ref = np.abs(psi(eig)).max()
    assert abs(ev.norm - ref) <= ev.tail + 1e-10
    assert ev.norm <= 1 + 1e-8


def test_tsikalas_on_diagonal():
    f = tsikalas_f(1, Q)
    ev = kappa.eval_fn_on_op(f, np.diag([Q, 1.0]), Q)
    ref = np.diag([(Q + Q / Q) / (1 + Q), (1 + Q) / (1 + Q)])
    assert np.allclose(ev.value, ref)
    ev = kappa.eval_fn_on_op(f, np.array([[0.6]]), Q)
    assert ev.value[0, 0] == pytest.approx(f(0.6))


def test_two_by_two_witness():
    J = np.array([[0.0, 1.0], [Q, 0.0]])
    assert kappa.eval_fn_on_op(tsikalas_f(1, Q), J, Q).norm == pytest.approx(2 / (1 + Q))


def test_eval_refuses_outside_annulus():
    psi = psi_W(random_inner_spec(Q, seed=2))
    with pytest.raises(kappa.RefusalError):
        kappa.eval_fn_on_op(psi, 1.5 * np.eye(2), Q)
    with pytest.raises(TypeError):
        kappa.eval_fn_on_op(lambda z: z, np.eye(2), Q)


def test_empty_budget():
    res = kappa.search_kappa(budget=0)
    assert res.best == kappa.EMPTY and res.evaluations == []


def test_search_deterministic_and_bounded():
    a = kappa.search_kappa(budget=300, task_size=100, seed=3)
    b = kappa.search_kappa(budget=300, task_size=100, seed=3, workers=2)
    assert a.evaluations == b.evaluations
    assert a.best.key() == b.best.key()
    assert a.violations == [] and a.max_value <= kappa.UPPER_BOUND + 1e-6
    assert a.best.value == a.max_value
    assert a.best.value >= 2 / (1 + Q) - 1e-12  # the 2x2 witness is in the pool


def test_workers_env(monkeypatch):
    monkeypatch.setenv(kappa.WORKERS_ENV, "3")
    assert kappa.default_workers() == 3
    monkeypatch.setenv(kappa.WORKERS_ENV, "junk")
    assert kappa.default_workers() == 1


def test_pa_truncation_model():
    m = kappa.pa_truncation_model(Q, 1, seed=0)
    assert max(m.values.values()) <= 1 + 1e-12
    defects = [kappa.pa_truncation_model(Q, s, seed=0).closure_defect for s in (2, 5, 10, 20)]
    assert all(b < a for a, b in zip(defects, defects[1:]))
    m = kappa.pa_truncation_model(Q, 20, seed=0)
    assert m.frame_unitarity_defect <= 1e-14
    assert abs(max(m.values.values()) - math.sqrt(2)) < 0.1
