"""Inner functions on the annulus ``q < |z| < 1``.

The bilateral series ``f(alpha, t) = sum_n alpha^n / (1 - t q^{2n})``
converges for ``q^2 < |alpha| < 1``.  With ``t = |w|^-2`` the function
``B_w(z) = f(z conj(w), |w|^-2)`` vanishes at ``w`` and has constant modulus
on each boundary circle, the outer modulus being ``1/|w|`` times the inner
one.  Consequently ``tau(z) = z^-k prod_j B_{w_j}(z)`` has the same modulus on
both circles whenever ``|prod w_j| = q^k``, and ``psi_W = tau / tau(1)`` is
inner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .linalg import rng_from_seed
from .params import AnnulusQ


class InnerError(ValueError):
    pass


class SeriesDomainError(InnerError):
    pass


class ZeroSetRejected(InnerError):
    def __init__(self, nearest_k, residual):
        super().__init__(f"no integer k fits the zero product: nearest k = {nearest_k}, residual {residual:.6g}")
        self.nearest_k = nearest_k
        self.residual = residual


def _q(q):
    return q.q if isinstance(q, AnnulusQ) else AnnulusQ(float(q)).q


# ------------------------------------------------------ Jordan-Kronecker


POLE_GUARD = 1e-6
MAX_TERMS = 100_000


def _pos_terms(amax, t, q2, tail_tol):
    """Smallest N with the ``n > N`` tail certified below ``tail_tol``."""
    if amax >= 1.0:
        raise SeriesDomainError(f"|alpha| = {amax} outside the convergence annulus")
    N = 0
    while True:
        d = 1.0 - t * q2 ** (N + 1)
        if d > 0.5:
            bound = amax ** (N + 1) / ((1.0 - amax) * d)
            if bound <= tail_tol:
                return N, bound
        N += 1
        if N > MAX_TERMS:
            raise SeriesDomainError("series truncation budget exhausted")


def _neg_terms(amin, t, q2, tail_tol):
    beta = q2 / amin
    if beta >= 1.0:
        raise SeriesDomainError(f"|alpha| = {amin} outside the convergence annulus")
    N = 0
    while True:
        d = t - q2 ** (N + 1)
        if d > 0.5 * t:
            bound = beta ** (N + 1) / ((1.0 - beta) * d)
            if bound <= tail_tol:
                return N, bound
        N += 1
        if N > MAX_TERMS:
            raise SeriesDomainError("series truncation budget exhausted")


def check_pole_guard(t, q):
    """``1 - t q^{2n}`` vanishes at ``t = q^{-2n}``; require a relative gap."""
    q2 = q * q
    n = math.log(t) / -math.log(q2)
    nearest = round(n)
    gap = abs(1.0 - t * q2 ** nearest)
    if gap < POLE_GUARD:
        raise SeriesDomainError(f"t = {t!r} is within {gap:.2e} of the pole at n = {nearest}")


def jk(alpha, t, q, tail_tol=1e-14, terms=None):
    """Evaluate ``f(alpha, t)``; returns ``(value, tail_bound)``.

    ``alpha`` may be an array. ``terms=(n_pos, n_neg)`` overrides the
    automatic truncation (the returned bound then reflects that choice).
    """
    q = _q(q)
    t = float(t)
    if t <= 0:
        raise SeriesDomainError("t must be positive")
    a = np.asarray(alpha, dtype=np.complex128)
    mod = np.abs(a)
    q2 = q * q
    if mod.size and (mod.max() >= 1.0 or mod.min() <= q2):
        raise SeriesDomainError(f"|alpha| must lie in ({q2}, 1); got range [{mod.min()}, {mod.max()}]")
    check_pole_guard(t, q)
    amax = float(mod.max()) if mod.size else 0.5
    amin = float(mod.min()) if mod.size else 0.5
    if terms is None:
        n_pos, b_pos = _pos_terms(amax, t, q2, tail_tol / 2)
        n_neg, b_neg = _neg_terms(amin, t, q2, tail_tol / 2)
    else:
        n_pos, n_neg = terms
        b_pos = _tail_pos(amax, t, q2, n_pos)
        b_neg = _tail_neg(amin, t, q2, n_neg)
    value = _backend.jk_series(a, t, q, n_pos, n_neg)
    return value, b_pos + b_neg


def _tail_pos(amax, t, q2, N):
    d = 1.0 - t * q2 ** (N + 1)
    return amax ** (N + 1) / ((1.0 - amax) * d) if d > 0 else math.inf


def _tail_neg(amin, t, q2, N):
    beta = q2 / amin
    d = t - q2 ** (N + 1)
    return beta ** (N + 1) / ((1.0 - beta) * d) if d > 0 else math.inf


def jk_terms(alpha, t, q, tail_tol=1e-14):
    """Truncation levels chosen by :func:`jk` for the given arguments."""
    mod = np.abs(np.asarray(alpha, dtype=np.complex128))
    q2 = _q(q) ** 2
    return _pos_terms(float(mod.max()), t, q2, tail_tol / 2)[0], _neg_terms(float(mod.min()), t, q2, tail_tol / 2)[0]


def B_w(w, q, tail_tol=1e-14):
    """Single-zero factor ``z -> f(z conj(w), |w|^-2)``."""
    q = _q(q)
    w = complex(w)
    t = abs(w) ** -2

    def fn(z):
        return jk(np.asarray(z, dtype=np.complex128) * np.conj(w), t, q, tail_tol)[0]

    return fn


# ----------------------------------------------------------- zero sets


@dataclass(frozen=True)
class InnerSpec:
    zeros: tuple
    k: int
    q: float
    residual: float

    @property
    def boundary_margin(self):
        mods = np.abs(np.asarray(self.zeros))
        return float(min((mods - self.q).min(), (1.0 - mods).min()))

    def to_dict(self):
        return {
            "q": self.q,
            "k": self.k,
            "zeros": [[z.real, z.imag] for z in self.zeros],
            "boundary_margin": self.boundary_margin,
        }

    def descriptor(self):
        return "W[" + ",".join(f"{z.real:.6f}{z.imag:+.6f}j" for z in self.zeros) + "]"


def validate_zero_set(W, q, tol=1e-9):
    """Find ``k`` with ``|prod w| = q^k``.  Zeros must lie in the closed
    annulus; the residual is measured in logarithms."""
    q = _q(q)
    zeros = tuple(complex(w) for w in W)
    if not zeros:
        raise InnerError("zero set is empty")
    mods = np.abs(np.asarray(zeros))
    if np.any(mods < q - tol) or np.any(mods > 1.0 + tol):
        raise InnerError(f"zeros must lie in {q} <= |w| <= 1; moduli {mods.tolist()}")
    logp = float(np.sum(np.log(mods)))
    k = int(round(logp / math.log(q)))
    residual = abs(logp - k * math.log(q))
    if residual > tol:
        raise ZeroSetRejected(k, residual)
    return InnerSpec(zeros, k, q, residual)


def default_margin(q):
    return 0.05 * (1.0 - q)


# ---------------------------------------------------------------- psi_W


class PsiW:
    """``psi_W(z) = tau(z) / tau(1)`` with ``tau(z) = z^-k prod B_w(z)``.

    Analytic on ``r_in < |z| < r_out`` where ``r_out = 1 / max|w|`` and
    ``r_in = q^2 / min|w|``.
    """

    kind = "inner"

    def __init__(self, spec, min_margin=None, tail_tol=1e-14):
        if min_margin is None:
            min_margin = default_margin(spec.q)
        if spec.boundary_margin < min_margin:
            raise InnerError(
                f"zeros are {spec.boundary_margin:.3g} from the boundary; need at least {min_margin:.3g}"
            )
        self.spec = spec
        self.q = spec.q
        self.tail_tol = tail_tol
        self._factors = [B_w(w, spec.q, tail_tol) for w in spec.zeros]
        tau1 = self.tau(np.array([1.0 + 0j]))[0]
        if abs(tau1) < 1e-12:
            raise InnerError("tau(1) vanishes; rotate the zero set away from 1")
        self.tau1 = tau1
        self._coeff_cache = {}

    @property
    def r_out(self):
        return 1.0 / np.abs(np.asarray(self.spec.zeros)).max()

    @property
    def r_in(self):
        return self.q ** 2 / np.abs(np.asarray(self.spec.zeros)).min()

    def tau(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = z ** (-self.spec.k)
        for f in self._factors:
            out = out * f(z)
        return out

    def __call__(self, z):
        return self.tau(z) / self.tau1

    def descriptor(self):
        return f"psi:{self.spec.descriptor()}:q={self.q:g}"


def psi_W(spec, **kw):
    return PsiW(spec, **kw)


def winding_number(fn, center, radius, M=512):
    """Argument-principle count of zeros of ``fn`` inside the small circle."""
    theta = 2.0 * np.pi * np.arange(M + 1) / M
    vals = fn(center + radius * np.exp(1j * theta))
    return int(round(np.sum(np.diff(np.unwrap(np.angle(vals)))) / (2.0 * np.pi)))


def zero_certificate(psi, M=512):
    """Residual ``|psi(w)|`` and winding count around each distinct zero."""
    zeros = np.asarray(psi.spec.zeros)
    out = []
    for w in np.unique(zeros):
        mult = int(np.sum(np.abs(zeros - w) < 1e-14))
        others = zeros[np.abs(zeros - w) >= 1e-14]
        gaps = [abs(w) - psi.q, 1.0 - abs(w)] + list(np.abs(others - w))
        rad = 0.4 * min(gaps)
        out.append(
            {
                "zero": w,
                "multiplicity": mult,
                "residual": float(abs(psi(np.array([w]))[0])),
                "winding": winding_number(psi, w, rad, M),
            }
        )
    return out


def boundary_modulus_error(fn, q, samples=512):
    theta = 2.0 * np.pi * np.arange(samples) / samples
    u = np.exp(1j * theta)
    return {
        "outer": float(np.abs(np.abs(fn(u)) - 1.0).max()),
        "inner": float(np.abs(np.abs(fn(q * u)) - 1.0).max()),
    }


# ---------------------------------------------------------------- Tsikalas


@dataclass(frozen=True)
class TsikalasFunction:
    """``f_n(z) = (z^n + q^n z^-n) / (1 + q^n)``."""

    n: int
    q: float
    kind: str = field(default="tsikalas", init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        _q(self.q)

    @property
    def laurent(self):
        """Nonzero Laurent coefficients as ``{power: coefficient}``."""
        s = 1.0 + self.q ** self.n
        return {self.n: 1.0 / s, -self.n: self.q ** self.n / s}

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return (z ** self.n + self.q ** self.n * z ** (-self.n)) / (1.0 + self.q ** self.n)

    def descriptor(self):
        return f"f_{self.n}:q={self.q:g}"


def tsikalas_f(n, q):
    return TsikalasFunction(int(n), _q(q))


# ------------------------------------------------------ Laurent series


def laurent_coeffs(fn, radius, K, M=None, modes=None):
    """Coefficients ``c_{-K} .. c_K`` (or just ``modes``) by the trapezoid
    rule on ``|z| = radius``.

    Returns a dict ``{n: c_n}``.
    """
    if M is None:
        M = max(1024, 4 * K)
    if M < 2 * K + 1:
        raise ValueError("need M > 2K")
    if modes is None:
        modes = range(-K, K + 1)
    theta = 2.0 * np.pi * np.arange(M) / M
    c = np.fft.fft(fn(radius * np.exp(1j * theta))) / M
    return {n: c[n % M] * math.exp(-n * math.log(radius)) for n in modes}


def _max_modulus(fn, radius, M=4096):
    theta = 2.0 * np.pi * np.arange(M) / M
    return float(np.abs(fn(radius * np.exp(1j * theta))).max())


@dataclass
class LaurentExpansion:
    """Truncated Laurent series with a certified operator tail.

    ``coeffs[n]`` for ``-K_neg <= n <= K_pos``.  The bound ``tail`` covers
    the discarded terms of ``sum c_n J^n`` for any ``J`` with ``||J|| <= a``
    and ``||J^-1|| <= b``, plus the aliasing error of the coefficients.
    """

    coeffs: dict
    K_pos: int
    K_neg: int
    tail: float
    a: float
    b: float


SAFETY = 1.25  # inflates sampled maximum moduli


def certified_expansion(fn, q, r_in, r_out, a=1.0, b=None, tail_tol=1e-10, K_max=4000):
    """Laurent expansion of ``fn`` for use on operators with ``||J|| <= a``,
    ``||J^-1|| <= b``.  Cauchy estimates on the circles ``R_+ = sqrt(a r_out)``
    and ``R_- = sqrt(r_in / b)`` give the geometric tail bounds."""
    if b is None:
        b = 1.0 / q
    if not (a < r_out and b * r_in < 1.0):
        raise InnerError("operator norms reach the edge of the analyticity annulus")
    Rp = math.sqrt(a * r_out)
    Rm = math.sqrt(r_in / b)
    Mp = SAFETY * _max_modulus(fn, Rp)
    Mm = SAFETY * _max_modulus(fn, Rm)
    rho_p, rho_m = a / Rp, b * Rm  # both < 1

    def tail_bound(K, Mx, rho):
        return Mx * rho ** (K + 1) / (1.0 - rho)

    Kp = 0
    while tail_bound(Kp, Mp, rho_p) > tail_tol / 4:
        Kp += 1
        if Kp > K_max:
            raise InnerError(f"positive tail not below {tail_tol} within {K_max} terms (ratio {rho_p:.4f})")
    Km = 0
    while tail_bound(Km, Mm, rho_m) > tail_tol / 4:
        Km += 1
        if Km > K_max:
            raise InnerError(f"negative tail not below {tail_tol} within {K_max} terms (ratio {rho_m:.4f})")
    M = 1 << int(math.ceil(math.log2(4 * max(Kp, Km, 16))))
    # coefficients from the circle where each half decays: |z| = 1 for n >= 0,
    # |z| = q for n < 0
    coeffs = laurent_coeffs(fn, 1.0, Kp, M, modes=range(0, Kp + 1))
    coeffs.update(laurent_coeffs(fn, q, Km, M, modes=range(-Km, 0)))
    # aliasing: the computed c_n picks up c_{n + jM} rho^{jM}; bound those by
    # the same Cauchy estimates and weight by ||J^n|| <= a^n or b^|n|
    n = np.arange(Kp + 1)
    alias_p = 2.0 * np.sum(Mp * (a / Rp) ** n * Rp ** (-M) + Mm * np.exp((M - n) * np.log(Rm) + n * np.log(a)))
    p = np.arange(1, Km + 1)
    alias_m = 2.0 * np.sum(Mp * (q / Rp) ** (M - p) + Mm * (Rm / q) ** (M + p))
    tail = tail_bound(Kp, Mp, rho_p) + tail_bound(Km, Mm, rho_m) + alias_p + alias_m
    return LaurentExpansion(coeffs, Kp, Km, float(tail), a, b)


# ------------------------------------------------------------ samplers


def random_inner_spec(q, seed, max_zeros=3, margin=None, max_tries=1000):
    """Random zero set with ``2..max_zeros`` zeros at least ``margin`` from
    both circles and product modulus exactly ``q^k``."""
    q = _q(q)
    if margin is None:
        margin = default_margin(q)
    rng = rng_from_seed(seed)
    lo, hi = math.log(q + margin), math.log(1.0 - margin)
    for _ in range(max_tries):
        m = int(rng.integers(2, max_zeros + 1))
        k = int(rng.integers(1, m))
        logs = rng.uniform(lo, hi, m - 1)
        last = k * math.log(q) - logs.sum()
        if not (lo <= last <= hi):
            continue
        mods = np.exp(np.append(logs, last))
        phases = rng.uniform(0.0, 2.0 * np.pi, m)
        zeros = mods * np.exp(1j * phases)
        spec = validate_zero_set(zeros, q)
        if spec.boundary_margin >= margin:
            return spec
    raise InnerError("could not sample a zero set with the requested margin")
