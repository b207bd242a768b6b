"""Cross-module invariant battery with pinned seeds.

Each criterion returns a :class:`CriterionResult` holding the worst
observed residuals, the thresholds they were held to and the wall time.
``quick=True`` shrinks the sample counts and truncation sizes.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import annuli, disc, inner, kappa, qa
from .linalg import complex_gaussian, haar_unitary, is_psd, op_norm, rng_from_seed
from .params import AnnulusParam

BASE_SEED = 20240601


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    metrics: dict
    thresholds: dict
    elapsed: float
    failures: list = field(default_factory=list)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        worst = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] criterion {self.cid} ({self.name}): {worst}; {self.elapsed:.1f}s"

    def to_dict(self):
        return {
            "id": self.cid,
            "name": self.name,
            "passed": self.passed,
            "metrics": self.metrics,
            "thresholds": self.thresholds,
            "elapsed": self.elapsed,
            "failures": self.failures,
        }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


class _Check:
    """Tracks worst values against thresholds."""

    def __init__(self, thresholds, upper=True):
        self.thresholds = thresholds
        self.worst = {k: (0.0 if upper else math.inf) for k in thresholds}
        self.failures = []

    def see(self, key, value, label):
        self.worst[key] = max(self.worst[key], float(value))
        if not value <= self.thresholds[key]:
            self.failures.append(f"{label}: {key} = {value:.3e} > {self.thresholds[key]:.1e}")

    def flag(self, ok, label):
        if not ok:
            self.failures.append(label)


def _result(cid, name, check, t0, extra=None, time_limit=None):
    elapsed = time.perf_counter() - t0
    metrics = dict(check.worst)
    if extra:
        metrics.update(extra)
    if time_limit is not None and elapsed > time_limit:
        check.failures.append(f"runtime {elapsed:.1f}s exceeds {time_limit}s")
    th = dict(check.thresholds)
    if time_limit is not None:
        th["runtime_s"] = time_limit
    return CriterionResult(cid, name, not check.failures, metrics, th, elapsed, check.failures[:20])


# --------------------------------------------------------------- 1: disc


def criterion_disc(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 20 if quick else 100
    chk = _Check({"F0": 1e-12, "boundary_unitarity": 1e-10, "intertwining": 1e-8, "interior_excess": 1e-12})
    rng = rng_from_seed([seed, 1])
    for i in range(count):
        n = 1 + i % 6
        T = disc.random_contraction(n, float(rng.uniform(0.05, 0.95)), rng)
        rep = disc.verify_sznagy(T, N=64, M=2048)
        lab = f"sample {i} (n={n})"
        chk.see("F0", rep.F0_error, lab)
        chk.see("boundary_unitarity", rep.boundary_unitarity, lab)
        chk.see("intertwining", rep.intertwining, lab)
        chk.see("interior_excess", max(0.0, rep.max_interior_norm - 1.0), lab)
    return _result(1, "disc dilation", chk, t0, {"samples": count}, time_limit=30.0)


# ---------------------------------------------------------------- 2: row


def random_row(g, n, norm, rng):
    Ts = [complex_gaussian(rng, (n, n)) for _ in range(g)]
    s = op_norm(np.hstack(Ts))
    return [t * (norm / s) for t in Ts]


def criterion_row(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 10 if quick else 50
    chk = _Check({"fock_isometry": 1e-12, "intertwining": 1e-8, "F0": 1e-12})
    rng = rng_from_seed([seed, 2])
    for i in range(count):
        g = 2 + i % 2
        n = 1 + (i // 2) % 4
        Ts = random_row(g, n, float(rng.uniform(0.2, 0.9)), rng)
        rep = disc.nelson_row(Ts, ell=4, N=64)
        lab = f"sample {i} (g={g}, n={n})"
        chk.see("fock_isometry", rep.fock_isometry, lab)
        chk.see("intertwining", rep.intertwining, lab)
        chk.see("F0", max(rep.F0_errors), lab)
    return _result(2, "row contraction lift", chk, t0, {"samples": count})


# ------------------------------------------------------ 3: doubly commuting


def criterion_doubly_commuting(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 10 if quick else 50
    chk = _Check({"double_commutation": 1e-12, "boundary_unitarity": 1e-10, "intertwining": 1e-8})
    rng = rng_from_seed([seed, 3])
    for i in range(count):
        dims = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        Ts = disc.gen_doubly_commuting([seed, 3, i], dims)
        rep = disc.nelson_doubly_commuting(Ts, points=20, seed=i)
        lab = f"pair {i} dims={dims}"
        chk.see("double_commutation", max(rep.double_commutation, rep.commutation), lab)
        chk.see("boundary_unitarity", rep.boundary_unitarity, lab)
        chk.see("intertwining", rep.intertwining, lab)
    # a commuting pair that does not doubly commute must be refused
    A = np.array([[0.3, 0.4], [0.0, 0.5]])
    try:
        disc.nelson_doubly_commuting([A, A @ A])
        chk.flag(False, "commuting but not doubly commuting pair was accepted")
    except disc.DilationError:
        pass
    return _result(3, "doubly commuting lift", chk, t0, {"samples": count})


# ------------------------------------------------------------- 4: QA lift


def qa_sample(i, param, rng):
    n = 1 + i % 6
    T = annuli.random_qa(n, param, rng)
    if i % 10 == 9:
        # push one singular value onto each boundary circle
        u, s, vh = np.linalg.svd(T)
        s[0] = 1.0 / param.r
        s[-1] = param.r if n > 1 else s[-1]
        T = (u * s) @ vh
    return T


def criterion_qa(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 5 if quick else 50
    N_list = (32, 64, 128) if quick else (64, 128, 256)
    M = 2048 if quick else 4096
    param = AnnulusParam(0.5)
    chk = _Check({"compression": 1e-6, "boundary_law": 1e-8, "section_excess": 1e-8})
    rng = rng_from_seed([seed, 4])
    worst_ratio = 0.0
    for i in range(count):
        T = qa_sample(i, param, rng)
        model, rep = qa.dilate(T, param, m=100, N_list=N_list, M=M, rho=0.9)
        lab = f"sample {i} (n={T.shape[0]})"
        chk.see("compression", rep.compression.max_error, lab)
        chk.see("boundary_law", rep.trend.boundary_law, lab)
        chk.see("section_excess", max(0.0, rep.trend.section_norm - 1.0 / param.r), lab)
        chk.flag(rep.trend.non_increasing, f"{lab}: defect trend {rep.trend.defects} increases beyond 10%")
        d = rep.trend.defects
        worst_ratio = max(worst_ratio, max(b / a for a, b in zip(d, d[1:])))
    return _result(
        4,
        "quantum annulus dilation",
        chk,
        t0,
        {"samples": count, "worst_trend_ratio": worst_ratio},
        time_limit=None if quick else 300.0,
    )


# ------------------------------------------------------------ 5: membership


def membership_sample(i, param, rng):
    """Cycle through generic, boundary, normal-boundary and near-boundary
    samples; returns ``(T, kind)``."""
    n = int(rng.integers(1, 6))
    kind = ("generic", "scriptQA", "scriptSA", "near", "scaled")[i % 5]
    if kind == "generic":
        T = annuli.random_qa(n, param, rng, margin=-0.3)  # some fall outside
    elif kind == "scriptQA":
        T, _ = annuli.random_scriptqa(n, param, rng)
    elif kind == "scriptSA":
        U = haar_unitary(n, rng)
        d = np.where(rng.uniform(0, 1, n) < 0.5, param.r, 1.0 / param.r) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        T = (U * d[None, :]) @ U.conj().T
    elif kind == "near":
        s = np.exp(rng.uniform(-param.L, param.L, n))
        s[0] = (1.0 / param.r) * (1.0 + float(rng.choice([-1, 1])) * 10.0 ** rng.uniform(-6, -2))
        T = annuli.random_with_singulars(s, rng)
    else:
        T = complex_gaussian(rng, (n, n)) * float(rng.uniform(0.2, 2.0))
    return T, kind


def criterion_membership(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 100 if quick else 1000
    param = AnnulusParam(0.5)
    tol = 1e-8
    chk = _Check({"constructed_defect": 1e-10, "scriptPA_normality": 1e-8})
    rng = rng_from_seed([seed, 5])
    agree = 0
    chain = 0
    for i in range(count):
        T, kind = membership_sample(i, param, rng)
        lab = f"sample {i} ({kind})"
        norm_flag = annuli.in_QA(T, param, tol)
        psd_flag = is_psd(annuli.qa_defect(T, param), annuli.qa_psd_tol(param, tol))
        if norm_flag == psd_flag:
            agree += 1
        else:
            chk.failures.append(f"{lab}: norm test {norm_flag} vs defect PSD {psd_flag}")
        rep = annuli.membership_report(T, param, tol)
        if rep.chain_violations():
            chain += 1
            chk.failures.append(f"{lab}: chain violations {rep.chain_violations()}")
        if kind in ("scriptQA", "scriptSA"):
            chk.see("constructed_defect", op_norm(annuli.qa_defect(T, param)), lab)
        if rep.scriptPA:
            chk.see("scriptPA_normality", annuli.normality_residual(T), lab)
    return _result(
        5, "membership oracles", chk, t0, {"samples": count, "agreement": agree / count, "chain_violations": chain}
    )


# ----------------------------------------------------------- 6: extremality


def criterion_extremality(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 20 if quick else 100
    param = AnnulusParam(0.5)
    chk = _Check({"reduction": 1e-10})
    rng = rng_from_seed([seed, 6])
    rejected = 0
    for i in range(count):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        J, _ = annuli.random_scriptqa(n, param, rng)
        X = annuli.random_qa(m, param, rng)
        F = np.zeros((n + m, n + m), dtype=np.complex128)
        F[:n, :n], F[n:, n:] = J, X
        V = np.eye(n + m)[:, :n]
        rep = annuli.extremality_witness(J, F, V, param)
        lab = f"trivial {i}"
        chk.flag(rep.valid_dilation, f"{lab}: not recognized as a valid dilation {rep.residuals}")
        chk.see("reduction", max(rep.residuals["reduce_F"], rep.residuals["reduce_F_adj"]), lab)
        # couple ran V to its complement; compressions of F^{+-1} are unchanged
        E = complex_gaussian(rng, (m, n)) * 10.0 ** rng.uniform(-3, -1)
        Fp = F.copy()
        Fp[n:, :n] = E
        rep_p = annuli.extremality_witness(J, Fp, V, param)
        if rep_p.compression_ok and not rep_p.F_in_QA and not rep_p.reduces:
            rejected += 1
        else:
            chk.failures.append(f"perturbed {i}: not rejected {rep_p.residuals}")
        chk.flag(rep_p.consistent, f"perturbed {i}: valid but non-reducing dilation")
    return _result(6, "dilation extremality", chk, t0, {"trivial": count, "rejected": rejected})


# ------------------------------------------------------------ 7: inner


def criterion_inner(quick=False, seed=BASE_SEED):
    t0 = time.perf_counter()
    count = 10 if quick else 50
    chk = _Check({"boundary_modulus": 1e-6, "zero_residual": 1e-6, "refinement_excess": 0.0})
    qs = (0.3, 0.5, 0.7)
    for i in range(count):
        q = qs[i % 3]
        spec = inner.random_inner_spec(q, [seed, 7, i], max_zeros=3)
        psi = inner.psi_W(spec)
        lab = f"spec {i} q={q} zeros={len(spec.zeros)}"
        err = inner.boundary_modulus_error(psi, q, 512)
        chk.see("boundary_modulus", max(err.values()), lab)
        for z in inner.zero_certificate(psi):
            chk.see("zero_residual", z["residual"], lab)
            chk.flag(z["winding"] == z["multiplicity"], f"{lab}: winding {z['winding']} != {z['multiplicity']}")
        theta = 2.0 * np.pi * np.arange(64) / 64
        for w in spec.zeros:
            t = abs(w) ** -2
            for rad in (1.0, q):
                alpha = rad * np.exp(1j * theta) * np.conj(w)
                v1, b1 = inner.jk(alpha, t, q)
                n_pos, n_neg = inner.jk_terms(alpha, t, q)
                v2, b2 = inner.jk(alpha, t, q, terms=(2 * n_pos + 1, 2 * n_neg + 1))
                excess = float(np.abs(v1 - v2).max()) - (b1 + b2) - 1e-13 * float(np.abs(v1).max())
                chk.see("refinement_excess", max(0.0, excess), lab)
    return _result(7, "annulus inner functions", chk, t0, {"specs": count})


# ---------------------------------------------------------- 8: kappa


def criterion_kappa(quick=False, seed=BASE_SEED, workers=1):
    t0 = time.perf_counter()
    budget = 600 if quick else 10_000
    chk = _Check({"bound_excess": 1e-6})
    res = kappa.search_kappa(q=0.25, budget=budget, seed=7, dims=(2, 4, 8, 16), workers=workers)
    chk.see("bound_excess", max(0.0, res.max_value - kappa.UPPER_BOUND), "search")
    chk.flag(not res.violations, f"{len(res.violations)} evaluations above 1 + sqrt 2")
    chk.flag(res.best.value >= 1.5, f"best value {res.best.value:.6f} below 1.5")
    pa = kappa.pa_truncation_model(0.25, 20, seed)
    extra = {
        "budget": budget,
        "best": res.best.value,
        "best_fn": res.best.fn,
        "best_op": res.best.op,
        "refusals": res.refusals,
        "reference_2": kappa.REFERENCE_QA,
        "reference_sqrt2": kappa.REFERENCE_PA,
        "pa_model_max": max(pa.values.values()),
    }
    return _result(8, "spectral constant search", chk, t0, extra, time_limit=None if quick else 600.0)


CRITERIA = {
    1: criterion_disc,
    2: criterion_row,
    3: criterion_doubly_commuting,
    4: criterion_qa,
    5: criterion_membership,
    6: criterion_extremality,
    7: criterion_inner,
    8: criterion_kappa,
}


def verify_suite(quick=False, only=None, seed=BASE_SEED):
    ids = sorted(CRITERIA) if only is None else sorted(only)
    unknown = [i for i in ids if i not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criterion ids {unknown}; known {sorted(CRITERIA)}")
    return [CRITERIA[i](quick=quick, seed=seed) for i in ids]
