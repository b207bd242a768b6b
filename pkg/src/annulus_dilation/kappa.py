"""Lower estimates for the spectral constant of the quantum annulus.

Works in the ``q < |z| < 1`` convention.  Candidates are boundary operators
``J = U diag(q I_p, I_{n-p})`` (so ``J^* J = q^2 P_+ + P_-``); for each one
``||psi(J)||`` is computed exactly for Tsikalas functions and through a
certified Laurent truncation for inner functions.  The best value found is
a lower bound for the constant, which is known to lie in ``[2, 1 + sqrt 2]``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .inner import (
    InnerError,
    PsiW,
    TsikalasFunction,
    certified_expansion,
    random_inner_spec,
    tsikalas_f,
    validate_zero_set,
)
from .linalg import adjoint, as_matrix, complex_gaussian, haar_unitary, op_norm, rng_from_seed
from .matrixio import matrix_to_obj
from .params import AnnulusParam

UPPER_BOUND = 1.0 + math.sqrt(2.0)
REFERENCE_QA = 2.0
REFERENCE_PA = math.sqrt(2.0)
WORKERS_ENV = "ANNULUS_DILATION_WORKERS"


class RefusalError(RuntimeError):
    """The functional calculus could not certify its truncation."""


# ------------------------------------------------------------- operators


@dataclass
class BoundaryOpQ:
    U: np.ndarray = field(repr=False)
    p: int
    q: float

    def __post_init__(self):
        self.U = as_matrix(self.U, "U")
        if not (0 <= self.p <= self.U.shape[0]):
            raise ValueError("p must lie in [0, dim]")

    @property
    def dim(self):
        return self.U.shape[0]

    @property
    def moduli(self):
        return np.concatenate([np.full(self.p, self.q), np.ones(self.dim - self.p)])

    @property
    def J(self):
        return self.U * self.moduli[None, :]

    @property
    def J_inv(self):
        return adjoint(self.U) / self.moduli[:, None]


def convert_convention(T, r):
    """``(r T, r^2)``: maps ``r < |z| < 1/r`` onto ``r^2 < |z| < 1``."""
    param = r if isinstance(r, AnnulusParam) else AnnulusParam(float(r))
    return param.r * as_matrix(T, "T"), param.r ** 2


def cyclic_shift(n, step=1):
    P = np.zeros((n, n))
    P[(np.arange(n) + step) % n, np.arange(n)] = 1.0
    return P


# ----------------------------------------------------- functional calculus


@dataclass
class Evaluation:
    value: np.ndarray = field(repr=False)
    tail: float
    norm: float


def _norm_bounds(J, J_inv, q, slack=1e-9):
    a, b = op_norm(J), op_norm(J_inv)
    if a > 1.0 + slack or b > 1.0 / q + slack / q:
        raise RefusalError(f"operator outside the closed annulus: ||J|| = {a:.12g}, ||J^-1|| = {b:.12g}")
    # round up into a small set of buckets so expansions can be shared
    return max(a, 1.0 + slack), max(b, (1.0 + slack) / q)


def _horner(coeffs, X, K, n):
    acc = np.zeros((n, n), dtype=np.complex128)
    for k in range(K, 0, -1):
        acc = (acc + coeffs[k] * np.eye(n)) @ X
    return acc


def eval_fn_on_op(fn, J, q=None, tail_tol=1e-8, J_inv=None):
    """``fn(J)`` with a certified tail bound.

    ``fn`` is a :class:`TsikalasFunction` (exact Laurent polynomial) or a
    :class:`PsiW`.  Raises :class:`RefusalError` when the truncation cannot
    be certified below ``tail_tol``.
    """
    J = as_matrix(J, "J")
    if q is None:
        q = fn.q
    n = J.shape[0]
    if J_inv is None:
        J_inv = np.linalg.inv(J)
    if isinstance(fn, TsikalasFunction):
        c = fn.laurent
        k = fn.n
        val = c[k] * np.linalg.matrix_power(J, k) + c[-k] * np.linalg.matrix_power(J_inv, k)
        return Evaluation(val, 0.0, op_norm(val))
    if not isinstance(fn, PsiW):
        raise TypeError(f"unsupported function type {type(fn).__name__}")
    a, b = _norm_bounds(J, J_inv, q)
    key = (round(a, 9), round(b, 9), tail_tol)
    exp_ = fn._coeff_cache.get(key)
    if exp_ is None:
        try:
            exp_ = certified_expansion(fn, q, fn.r_in, fn.r_out, a=key[0], b=key[1], tail_tol=tail_tol)
        except InnerError as e:
            raise RefusalError(str(e)) from e
        fn._coeff_cache[key] = exp_
    if exp_.tail > tail_tol:
        raise RefusalError(f"certified tail {exp_.tail:.3e} exceeds {tail_tol:.3e}")
    c = exp_.coeffs
    val = c[0] * np.eye(n) + _horner(c, J, exp_.K_pos, n)
    neg = {k: c[-k] for k in range(1, exp_.K_neg + 1)}
    val = val + _horner(neg, J_inv, exp_.K_neg, n)
    return Evaluation(val, exp_.tail, op_norm(val))


# ----------------------------------------------------------- certificates


@dataclass
class KappaCertificate:
    value: float
    fn: str
    op: str
    tail: float
    J: np.ndarray = field(default=None, repr=False)
    q: float = None

    def key(self):
        return (self.value, self.fn, self.op)

    def to_dict(self):
        return {
            "value": self.value,
            "fn": self.fn,
            "op": self.op,
            "tail": self.tail,
            "q": self.q,
            "J": None if self.J is None else matrix_to_obj(self.J),
        }


EMPTY = KappaCertificate(value=0.0, fn="", op="", tail=0.0)


def better(a, b):
    """Max by value, then by descriptor (lexicographic) for determinism."""
    return a if a.key() >= b.key() else b


@dataclass
class SearchConfig:
    q: float = 0.25
    budget: int = 10_000
    seed: int = 7
    dims: tuple = (2, 4, 8, 16)
    n_max: int = 6
    inner_pool: int = 2
    task_size: int = 250
    refine_fraction: float = 0.3
    tail_tol: float = 1e-8
    workers: int = 1


@dataclass
class SearchResult:
    best: KappaCertificate
    evaluations: list  # (value, fn, op, tail) rows
    violations: list
    refusals: int
    config: SearchConfig

    @property
    def max_value(self):
        return max((row[0] for row in self.evaluations), default=0.0)


# ------------------------------------------------------------ candidates


def haar_candidate(rng, dim, q):
    p = int(rng.integers(1, dim)) if dim > 1 else 0
    return BoundaryOpQ(haar_unitary(dim, rng), p, q)


def permutation_candidate(rng, dim, q):
    """Cyclic shift composed with diagonal phases, with the inner-radius
    directions every other basis vector, one contiguous run, or a random
    subset.  Conjugating by the permutation that lists those directions
    first puts the operator in :class:`BoundaryOpQ` form without changing
    any ``||psi(J)||``."""
    step = int(rng.integers(1, dim)) if dim > 1 else 0
    CD = cyclic_shift(dim, step).astype(np.complex128)
    if rng.uniform() < 0.5:
        CD = CD * np.exp(2j * np.pi * rng.uniform(0, 1, dim))[None, :]
    u = rng.uniform()
    if u < 1.0 / 3.0:
        mask = np.arange(dim) % 2 == 0
    elif u < 2.0 / 3.0 and dim > 1:  # one contiguous run
        run = int(rng.integers(1, dim))
        mask = np.roll(np.arange(dim) < run, int(rng.integers(0, dim)))
    else:
        mask = rng.uniform(0, 1, dim) < 0.5
    order = np.concatenate([np.flatnonzero(mask), np.flatnonzero(~mask)])
    Pm = np.eye(dim)[:, order]
    return BoundaryOpQ(Pm.T @ CD @ Pm, int(mask.sum()), q)


def _op_descriptor(kind, op, task, index):
    return f"{kind}:task={task}:i={index}:dim={op.dim}:p={op.p}"


# ---------------------------------------------------------------- search


class _Recorder:
    def __init__(self, q, tail_tol):
        self.q = q
        self.tail_tol = tail_tol
        self.best = EMPTY
        self.rows = []
        self.violations = []
        self.refusals = 0

    def evaluate(self, fn, op, desc):
        try:
            ev = eval_fn_on_op(fn, op.J, self.q, self.tail_tol, J_inv=op.J_inv)
        except RefusalError:
            self.refusals += 1
            return None
        cert = KappaCertificate(ev.norm, fn.descriptor(), desc, ev.tail, op.J, self.q)
        self.rows.append((ev.norm, cert.fn, desc, ev.tail))
        if ev.norm > UPPER_BOUND + 1e-6:
            self.violations.append(cert)
        self.best = better(cert, self.best)
        return cert


def _function_pool(cfg, rng):
    fns = [tsikalas_f(n, cfg.q) for n in range(1, cfg.n_max + 1)]
    for _ in range(cfg.inner_pool):
        fns.append(PsiW(random_inner_spec(cfg.q, rng)))
    return fns


def _geodesic_step(U, rng, eps):
    H = complex_gaussian(rng, U.shape)
    H = 0.5 * (H + adjoint(H))
    H /= max(op_norm(H), 1e-300)
    return U @ expm(1j * eps * H)


def _perturb_zeros(spec, rng, eps):
    """Rotate one zero by a small angle; moduli (hence k) are unchanged."""
    zeros = list(spec.zeros)
    j = int(rng.integers(len(zeros)))
    zeros[j] = zeros[j] * np.exp(1j * eps * rng.standard_normal())
    return validate_zero_set(zeros, spec.q)


def _run_task(args):
    cfg, task, n_evals = args
    rng = rng_from_seed([cfg.seed, task])
    rec = _Recorder(cfg.q, cfg.tail_tol)
    fns = _function_pool(cfg, rng)
    n_refine = int(cfg.refine_fraction * n_evals)
    n_explore = n_evals - n_refine
    ops = {}
    count = i = 0
    while count < n_explore:
        dim = int(rng.choice(cfg.dims))
        kind = "perm" if rng.uniform() < 0.5 else "haar"
        op = permutation_candidate(rng, dim, cfg.q) if kind == "perm" else haar_candidate(rng, dim, cfg.q)
        desc = _op_descriptor(kind, op, task, i)
        ops[desc] = op
        for fn in fns:
            if count >= n_explore:
                break
            rec.evaluate(fn, op, desc)
            count += 1
        i += 1
    if rec.best is EMPTY or n_refine == 0:
        return rec
    # local refinement of this task's best pair
    fn = next(f for f in fns if f.descriptor() == rec.best.fn)
    op = ops[rec.best.op]
    current, eps = rec.best.value, 0.3
    for step in range(n_refine):
        cand_fn, cand_op = fn, op
        if isinstance(fn, PsiW) and step % 5 == 4:
            try:
                cand_fn = PsiW(_perturb_zeros(fn.spec, rng, eps))
            except InnerError:
                continue
        else:
            cand_op = BoundaryOpQ(_geodesic_step(op.U, rng, eps), op.p, op.q)
        cert = rec.evaluate(cand_fn, cand_op, f"{rec.best.op.split(':refine')[0]}:refine={step}")
        if cert is not None and cert.value > current:
            fn, op, current = cand_fn, cand_op, cert.value
        else:
            eps = max(0.7 * eps, 1e-3)
    return rec


def default_workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def search_kappa(cfg=None, **overrides):
    """Random search with local refinement; deterministic for a given
    ``(seed, budget, task_size)`` whatever the worker count."""
    cfg = cfg or SearchConfig()
    if overrides:
        cfg = SearchConfig(**{**cfg.__dict__, **overrides})
    if cfg.budget <= 0:
        return SearchResult(EMPTY, [], [], 0, cfg)
    sizes = [cfg.task_size] * (cfg.budget // cfg.task_size)
    if cfg.budget % cfg.task_size:
        sizes.append(cfg.budget % cfg.task_size)
    jobs = [(cfg, t, n) for t, n in enumerate(sizes)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            recs = list(pool.map(_run_task, jobs))
    else:
        recs = [_run_task(j) for j in jobs]
    best = EMPTY
    rows, violations, refusals = [], [], 0
    for rec in recs:  # task order, so rows are identical for any worker count
        best = better(rec.best, best)
        rows.extend(rec.rows)
        violations.extend(rec.violations)
        refusals += rec.refusals
    return SearchResult(best, rows, violations, refusals, cfg)


# ------------------------------------------------------ reference models


@dataclass
class PAModel:
    J: np.ndarray = field(repr=False)
    shift_modes: int
    frame_unitarity_defect: float
    closure_defect: float
    values: dict
    reference: float = REFERENCE_PA

    def to_dict(self):
        return {
            "shift_modes": self.shift_modes,
            "dim": self.J.shape[0],
            "frame_unitarity_defect": self.frame_unitarity_defect,
            "closure_defect": self.closure_defect,
            "values": self.values,
            "reference_sqrt2": self.reference,
        }


def pa_truncation_model(q, shift_modes, seed, fns=None, unitary_dim=2):
    """Unitary summand plus a cyclically closed weighted shift.

    The shift acts on ``2 (shift_modes - 1)`` modes with weight ``q`` on the
    negative half and ``1`` on the rest, so its frame is an exact unitary;
    the wrap-around entry is the only departure from the bilateral shift
    and is reported as ``closure_defect`` (Frobenius norm over root
    dimension).  ``shift_modes = 1`` leaves only the unitary summand.
    """
    if shift_modes < 1:
        raise ValueError("shift_modes must be at least 1")
    rng = rng_from_seed(seed)
    s = 2 * (shift_modes - 1)
    u = haar_unitary(unitary_dim, rng)
    dim = s + unitary_dim
    frame = np.zeros((dim, dim), dtype=np.complex128)
    d = np.ones(dim)
    closure = 0.0
    if s:
        C = cyclic_shift(s)
        frame[:s, :s] = C
        d[: s // 2] = q
        h = s // 2
        closure = float(np.linalg.norm(C[:h, h:]) / math.sqrt(dim))
    frame[s:, s:] = u
    J = frame * d[None, :]
    if fns is None:
        fns = [tsikalas_f(n, q) for n in range(1, 5)]
    J_inv = np.linalg.inv(J)
    values = {}
    for fn in fns:
        values[fn.descriptor()] = eval_fn_on_op(fn, J, q, J_inv=J_inv).norm
    unit = float(np.abs(adjoint(frame) @ frame - np.eye(dim)).max())
    return PAModel(J, shift_modes, unit, closure, values)
