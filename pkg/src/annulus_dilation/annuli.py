"""Membership tests for the operator annuli and their dilation boundaries.

Classes of invertible operators, for ``0 < r < 1``:

``QA``
    quantum annulus, ``||T|| <= 1/r`` and ``||T^-1|| <= 1/r``.
``scriptQA``
    ``T^*T = r^2 P+ + r^-2 P-`` for complementary projections.
``PA``
    Pick annulus, hereditary kernel defect ``pick_defect(T) >= 0``.
``scriptPA``
    ``pick_defect(J) == -pick_defect_flipped(J)`` and it is a projection.
``scriptSA``
    normal with spectrum on the two boundary circles.

At finite dimension ``scriptPA`` forces normality, so the boundary chain
collapses to ``scriptSA == scriptPA`` inside ``scriptQA``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .linalg import (
    LinalgError,
    adjoint,
    as_matrix,
    eigh,
    haar_unitary,
    inv,
    is_psd,
    min_eigenvalue,
    op_norm,
    rng_from_seed,
)
from .params import AnnulusParam


class MembershipError(RuntimeError):
    """Internal inconsistency between two membership criteria."""


def _square(T):
    T = as_matrix(T, "T")
    if T.shape[0] != T.shape[1]:
        raise LinalgError(f"operator must be square, got shape {T.shape}")
    return T


def in_QA(T, param: AnnulusParam, tol=1e-10):
    T = _square(T)
    Ti = inv(T)
    bound = 1.0 / param.r + tol
    return op_norm(T) <= bound and op_norm(Ti) <= bound


def qa_defect(T, param: AnnulusParam):
    """``mu - T^*T - T^-1 T^-*``; PSD exactly on QA, zero exactly on scriptQA."""
    T = _square(T)
    Ti = inv(T)
    n = T.shape[0]
    return param.mu * np.eye(n) - adjoint(T) @ T - Ti @ adjoint(Ti)


def qa_psd_tol(param: AnnulusParam, tol):
    """PSD tolerance on ``qa_defect`` matching a norm slack ``tol``.

    The defect eigenvalue ``f(s) = mu - s^2 - s^-2`` has slope magnitude at
    most ``2 nu / r`` on the two boundary singular values.
    """
    return 2.0 * param.nu / param.r * tol


class ScriptQAResult(NamedTuple):
    flag: bool
    P_plus: Optional[np.ndarray]
    P_minus: Optional[np.ndarray]


def in_scriptQA(T, param: AnnulusParam, tol=1e-8):
    T = _square(T)
    defect = qa_defect(T, param)
    if op_norm(defect) > tol:
        return ScriptQAResult(False, None, None)
    w, v = eigh(adjoint(T) @ T)
    inner = w < 1.0  # split at the geometric midpoint of r^2 and r^-2
    target = np.where(inner, param.r ** 2, param.r ** -2)
    slack = 10.0 * tol * param.r ** -2 / param.nu + 1e-12
    worst = np.abs(w - target).max()
    if worst > slack * max(1.0, param.r ** -2):
        raise MembershipError(
            f"defect norm within {tol:g} but T*T eigenvalue off {{r^2, r^-2}} by {worst:.3e}"
        )
    vp, vm = v[:, inner], v[:, ~inner]
    return ScriptQAResult(True, vp @ adjoint(vp), vm @ adjoint(vm))


def pick_defect(T, param: AnnulusParam):
    """Hereditary defect ``(mu - T^*T - T^-* T^-1) / nu``."""
    T = _square(T)
    Ti = inv(T)
    n = T.shape[0]
    return (param.mu * np.eye(n) - adjoint(T) @ T - adjoint(Ti) @ Ti) / param.nu


def pick_defect_flipped(J, param: AnnulusParam):
    """``(mu - J J^* - J^-1 J^-*) / nu``, i.e. ``pick_defect(J^*)``."""
    J = _square(J)
    Ji = inv(J)
    n = J.shape[0]
    return (param.mu * np.eye(n) - J @ adjoint(J) - Ji @ adjoint(Ji)) / param.nu


def in_PA(T, param: AnnulusParam, tol=1e-10):
    return is_psd(pick_defect(T, param), tol)


def scriptPA_residuals(J, param: AnnulusParam):
    p = pick_defect(J, param)
    flipped = pick_defect_flipped(J, param)
    return {
        "antisymmetry": float(op_norm(p + flipped)),
        "idempotence": float(op_norm(p @ p - p)),
        "hermitian": float(op_norm(p - adjoint(p))),
    }


def in_scriptPA(J, param: AnnulusParam, tol=1e-8):
    res = scriptPA_residuals(J, param)
    return all(v <= tol for v in res.values())


def normality_residual(T):
    T = as_matrix(T)
    return float(op_norm(adjoint(T) @ T - T @ adjoint(T)))


def in_scriptSA(T, param: AnnulusParam, tol=1e-8):
    T = _square(T)
    if normality_residual(T) > tol:
        return False
    mods = np.abs(np.linalg.eigvals(T))
    off = np.minimum(np.abs(mods - param.r), np.abs(mods - 1.0 / param.r))
    return bool(off.max() <= tol)


@dataclass
class MembershipReport:
    r: float
    QA: bool
    scriptQA: bool
    PA: bool
    scriptPA: bool
    scriptSA: bool
    defects: dict
    P_plus: Optional[np.ndarray] = field(default=None, repr=False)
    P_minus: Optional[np.ndarray] = field(default=None, repr=False)

    def chain_violations(self):
        """Implications that must hold; returns the names of broken ones."""
        rules = {
            "scriptQA=>QA": (self.scriptQA, self.QA),
            "scriptSA=>scriptPA": (self.scriptSA, self.scriptPA),
            "scriptPA=>scriptQA": (self.scriptPA, self.scriptQA),
            "scriptPA=>PA": (self.scriptPA, self.PA),
            "PA=>QA": (self.PA, self.QA),
        }
        return [name for name, (a, b) in rules.items() if a and not b]

    def to_dict(self):
        out = {
            "r": self.r,
            "flags": {
                "QA": self.QA,
                "scriptQA": self.scriptQA,
                "PA": self.PA,
                "scriptPA": self.scriptPA,
                "scriptSA": self.scriptSA,
            },
            "defects": self.defects,
            "chain_violations": self.chain_violations(),
            "note": "finite dimension: scriptPA forces normality, so scriptPA == scriptSA here",
        }
        if self.P_plus is not None:
            out["P_plus"] = self.P_plus
            out["P_minus"] = self.P_minus
        return out


def membership_report(T, param: AnnulusParam, tol=1e-8):
    T = _square(T)
    qd = qa_defect(T, param)
    pd = pick_defect(T, param)
    sq = in_scriptQA(T, param, tol)
    pa_res = scriptPA_residuals(T, param)
    defects = {
        "norm_T": op_norm(T),
        "norm_T_inv": op_norm(inv(T)),
        "qa_defect_min_eig": min_eigenvalue(qd),
        "qa_defect_norm": op_norm(qd),
        "pick_defect_min_eig": min_eigenvalue(pd),
        "scriptPA": pa_res,
        "normality": normality_residual(T),
    }
    return MembershipReport(
        r=param.r,
        QA=in_QA(T, param, tol),
        scriptQA=sq.flag,
        PA=is_psd(pd, tol),
        scriptPA=all(v <= tol for v in pa_res.values()),
        scriptSA=in_scriptSA(T, param, tol),
        defects=defects,
        P_plus=sq.P_plus,
        P_minus=sq.P_minus,
    )


# ---------------------------------------------------------------- dilations


@dataclass
class HereditaryReport:
    precondition_ok: bool
    holds: bool
    residuals: dict
    gaps: dict


def hereditary_dilation_check(T, J, V, param: AnnulusParam, tol=1e-8):
    """Walk the inequality chain showing ``pick_defect(T) >= V^* pick_defect(J) V``
    whenever ``T^{+-1} = V^* J^{+-1} V``.

    Each positive-semidefinite gap is reported by its smallest eigenvalue.
    """
    T, J, V = _square(T), _square(J), as_matrix(V, "V")
    n = T.shape[0]
    if V.shape != (J.shape[0], n):
        raise LinalgError(f"V must map C^{n} into C^{J.shape[0]}, got shape {V.shape}")
    iso = op_norm(adjoint(V) @ V - np.eye(n))
    if iso > tol:
        raise LinalgError(f"V is not an isometry: ||V*V - I|| = {iso:.3e}")
    Ti, Ji = inv(T), inv(J)
    residuals = {
        "isometry": iso,
        "compression_plus": op_norm(T - adjoint(V) @ J @ V),
        "compression_minus": op_norm(Ti - adjoint(V) @ Ji @ V),
    }
    if max(residuals["compression_plus"], residuals["compression_minus"]) > tol:
        return HereditaryReport(False, False, residuals, {})

    mu, nu = param.mu, param.nu
    Vs = adjoint(V)
    Q = np.eye(J.shape[0]) - V @ Vs
    lhs = mu * np.eye(n) - adjoint(T) @ T - adjoint(Ti) @ Ti
    step2 = mu * np.eye(n) - Vs @ adjoint(J) @ V @ Vs @ J @ V - Vs @ adjoint(Ji) @ V @ Vs @ Ji @ V
    squeeze = Vs @ adjoint(J) @ Q @ J @ V + Vs @ adjoint(Ji) @ Q @ Ji @ V
    step4 = Vs @ (mu * np.eye(J.shape[0]) - adjoint(J) @ J - adjoint(Ji) @ Ji) @ V
    final = pick_defect(T, param) - Vs @ pick_defect(J, param) @ V
    residuals["substitution"] = op_norm(lhs - step2)
    residuals["regrouping"] = op_norm(step2 - squeeze - step4)
    residuals["rescaling"] = op_norm(step4 - nu * Vs @ pick_defect(J, param) @ V)
    gaps = {
        "compression_squeeze": min_eigenvalue(squeeze),
        "final": min_eigenvalue(final),
    }
    holds = all(g >= -tol for g in gaps.values()) and all(
        residuals[k] <= tol * max(1.0, mu) for k in ("substitution", "regrouping", "rescaling")
    )
    return HereditaryReport(True, holds, residuals, gaps)


@dataclass
class ExtremalityReport:
    J_in_scriptQA: bool
    F_in_QA: bool
    compression_ok: bool
    residuals: dict

    @property
    def valid_dilation(self):
        return self.J_in_scriptQA and self.F_in_QA and self.compression_ok

    @property
    def reduces(self):
        return max(self.residuals.get("reduce_F", np.inf), self.residuals.get("reduce_F_adj", np.inf)) <= self.residuals["tol"]

    @property
    def consistent(self):
        """A valid dilation of a boundary element must be trivial."""
        return (not self.valid_dilation) or self.reduces


def extremality_witness(J, F, V, param: AnnulusParam, tol=1e-10):
    """Check that a dilation of ``J`` in scriptQA to ``F`` in QA is trivial,
    i.e. that ``ran V`` reduces ``F``."""
    J, F, V = _square(J), _square(F), as_matrix(V, "V")
    Vs = adjoint(V)
    residuals = {
        "tol": tol,
        "compression_plus": op_norm(J - Vs @ F @ V),
        "compression_minus": op_norm(inv(J) - Vs @ inv(F) @ V),
        "isometry": op_norm(Vs @ V - np.eye(J.shape[0])),
    }
    compression_ok = max(residuals["compression_plus"], residuals["compression_minus"], residuals["isometry"]) <= tol
    Q = np.eye(F.shape[0]) - V @ Vs
    residuals["reduce_F"] = op_norm(Q @ F @ V)
    residuals["reduce_F_adj"] = op_norm(Q @ adjoint(F) @ V)
    return ExtremalityReport(
        J_in_scriptQA=in_scriptQA(J, param, max(tol, 1e-8)).flag,
        F_in_QA=in_QA(F, param, tol),
        compression_ok=compression_ok,
        residuals=residuals,
    )


# --------------------------------------------------------------- samplers


def scriptqa_element(U, p, param: AnnulusParam):
    """``U @ diag(r I_p, r^-1 I_{n-p})``."""
    U = _square(U)
    d = np.concatenate([np.full(p, param.r), np.full(U.shape[0] - p, 1.0 / param.r)])
    return U * d[None, :]


def random_scriptqa(n, param: AnnulusParam, seed, p=None):
    rng = rng_from_seed(seed)
    if p is None:
        p = int(rng.integers(0, n + 1))
    return scriptqa_element(haar_unitary(n, rng), p, param), p


def random_with_singulars(s, seed):
    rng = rng_from_seed(seed)
    n = len(s)
    return haar_unitary(n, rng) @ np.diag(s) @ haar_unitary(n, rng)


def random_qa(n, param: AnnulusParam, seed, margin=0.0):
    """Random element of QA with log-uniform singular values in
    ``[r e^{margin}, r^-1 e^{-margin}]``."""
    rng = rng_from_seed(seed)
    L = param.L - margin
    s = np.exp(rng.uniform(-L, L, size=n))
    return random_with_singulars(s, rng)
