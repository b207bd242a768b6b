"""Dilation of quantum-annulus elements to the boundary class.

For ``T = U P`` with ``P`` positive and spectrum in ``(r, 1/r)``,
``F(z) = U sum_lam pi_lam(z) E_lam`` is analytic on the disc, takes values
in QA_r, satisfies ``F(0) = T`` and on the circle obeys
``F^* F = r^2 P_+ + r^-2 P_-`` for projections built from the arcs of each
``pi_lam``.  Multiplication by ``F`` on ``L^2`` of the circle is the dilation;
here it is realized by a circulant on ``M`` boundary nodes and its
block-Toeplitz sections on modes ``[-N, N]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .annuli import in_QA
from .disc import AnalyticMatrixFunction, circle
from .geometry import LambdaMap, lambda_lift
from .linalg import (
    DEFAULT_TOL,
    LinalgError,
    adjoint,
    as_matrix,
    herm_eig,
    hermitian_norm,
    op_norm,
    polar,
)
from .params import AnnulusParam


class RegularizationRequired(LinalgError):
    """Raised when the spectrum of ``|T|`` touches the annulus boundary."""


# --------------------------------------------------------- regularization


@dataclass
class SimpleFunctionApprox:
    """``T_m = U s_m(P)`` where ``s_m`` clamps the spectrum of ``P`` into
    ``[r + 1/m, 1/r - 1/m]`` and leaves interior eigenvalues alone."""

    m: int
    source: np.ndarray = field(repr=False)
    unitary: np.ndarray = field(repr=False)
    values: np.ndarray
    clamped: np.ndarray
    projectors: list = field(repr=False)
    T_m: np.ndarray = field(repr=False)

    @property
    def perturbation(self):
        return float(np.abs(self.clamped - self.values).max()) if self.values.size else 0.0


def clamp_spectrum(values, param, m):
    lo, hi = param.r + 1.0 / m, 1.0 / param.r - 1.0 / m
    if lo >= hi:
        raise ValueError(f"m = {m} is too small for r = {param.r}")
    return np.clip(values, lo, hi)


def regularize(T, param, m=100, tol=DEFAULT_TOL):
    T = as_matrix(T, "T")
    if not in_QA(T, param, tol.algebraic_tol):
        raise LinalgError("T is not in QA_r")
    u, p = polar(T, tol)
    eig = herm_eig(p, tol=tol)
    values = eig.values
    clamped = clamp_spectrum(values, param, m)
    projectors = [c.projector for c in eig.clusters]
    Tm = u @ sum(v * E for v, E in zip(clamped, projectors))
    return SimpleFunctionApprox(m, T, u, values, clamped, projectors, Tm)


# ------------------------------------------------------------ the model


@dataclass
class QADilationModel:
    source: np.ndarray = field(repr=False)
    param: AnnulusParam
    unitary: np.ndarray = field(repr=False)
    frame: np.ndarray = field(repr=False)  # columns: eigenvectors of P
    lambdas: np.ndarray  # eigenvalue per column of frame
    lambda_maps: list = field(repr=False)  # one per column

    @property
    def n(self):
        return self.source.shape[0]

    @property
    def F(self):
        return AnalyticMatrixFunction(self.unitary @ self.frame, list(self.lambda_maps), adjoint(self.frame))

    @property
    def spectral_values(self):
        return np.unique(self.lambdas)

    def boundary_target(self, theta):
        """``sum_lam (r^2 chi_+^lam + r^-2 chi_-^lam) E_lam`` at each angle,
        with the arcs read off the lambda maps, not off |F|."""
        r = self.param.r
        d = np.stack([np.where(lm.on_inner_arc(theta), r ** 2, r ** -2) for lm in self.lambda_maps], axis=-1)
        return self.frame @ (d[..., :, None] * adjoint(self.frame))

    def endpoint_distance(self, theta):
        return np.min([lm.endpoint_distance(theta) for lm in self.lambda_maps], axis=0)


def build_F(T, param, delta=1e-9, tol=DEFAULT_TOL):
    T = as_matrix(T, "T")
    u, p = polar(T, tol)
    eig = herm_eig(p, tol=tol)
    q, lam = eig.frame()
    bad = (lam <= param.r + delta) | (lam >= 1.0 / param.r - delta)
    if np.any(bad):
        raise RegularizationRequired(
            f"spectrum of |T| touches the boundary of ({param.r}, {1 / param.r}): "
            f"{lam[bad].tolist()}; call regularize first"
        )
    maps = {v: lambda_lift(v, param, margin=delta) for v in np.unique(lam)}
    return QADilationModel(T, param, u, q, lam, [maps[v] for v in lam])


def pointwise_membership(model, points):
    """Largest ``max(||F(z)||, ||F(z)^-1||)`` over the given points."""
    F = model.F
    vals, invs = F(points), F.inverse(points)
    return max(max(op_norm(a), op_norm(b)) for a, b in zip(vals, invs))


# -------------------------------------------------------- compression


@dataclass
class CompressionReport:
    n_max: int
    rho: float
    M: int
    errors: dict  # power -> ||c0(F^n) - T^n||

    @property
    def max_error(self):
        return max(self.errors.values()) if self.errors else 0.0


def interior_powers(model, n_max, rho, M):
    """Means over ``|z| = rho`` of ``F^n`` and ``F^-n`` for ``n = 1..n_max``."""
    _, z = circle(M, rho)
    F = model.F
    A, B = F(z), F.inverse(z)
    Pa, Pb = A.copy(), B.copy()
    out = {}
    for n in range(1, n_max + 1):
        if n > 1:
            Pa, Pb = Pa @ A, Pb @ B
        out[n] = Pa.mean(axis=0)
        out[-n] = Pb.mean(axis=0)
    out[0] = np.eye(model.n, dtype=np.complex128)
    return out


def verify_compression(model, n_max=5, rho=0.9, M=4096, reference=None):
    """Compare ``c0(F^n)`` with ``T^n`` for ``0 < |n| <= n_max``."""
    T = model.source if reference is None else as_matrix(reference)
    means = interior_powers(model, n_max, rho, M)
    Ti = np.linalg.inv(T)
    errors = {}
    P, Pi = np.eye(T.shape[0]), np.eye(T.shape[0])
    for n in range(1, n_max + 1):
        P, Pi = P @ T, Pi @ Ti
        errors[n] = op_norm(means[n] - P)
        errors[-n] = op_norm(means[-n] - Pi)
    return CompressionReport(n_max, rho, M, errors)


# ---------------------------------------------------- Laurent multiplier


@dataclass
class LaurentSamples:
    theta: np.ndarray
    values: np.ndarray  # F at the (clamped) nodes
    clamped: np.ndarray  # True where the node fell in an endpoint window
    eps: float


def boundary_samples(model, M=4096, eps=1e-3):
    """``F`` at ``M`` uniform nodes (half-step offset).  A node within ``eps``
    of an arc endpoint of some ``pi_lam`` is evaluated at the window edge on
    its own side for that ``pi_lam``, which keeps its modulus class."""
    if M % 2:
        raise ValueError("M must be even")
    theta = 2.0 * np.pi * (np.arange(M) + 0.5) / M
    diag = np.empty((M, len(model.lambda_maps)), dtype=np.complex128)
    clamped = np.zeros(M, dtype=bool)
    cache = {}
    for i, lm in enumerate(model.lambda_maps):
        if lm.lam not in cache:
            t = theta.copy()
            lo, hi = lm.inner_arc_angles()
            for e in (lo, hi):
                off = np.angle(np.exp(1j * (theta - e)))
                near = np.abs(off) < eps
                t[near] = e + np.where(off[near] >= 0, eps, -eps)
                clamped |= near
            cache[lm.lam] = lm(np.exp(1j * t))
        diag[:, i] = cache[lm.lam]
    left = model.unitary @ model.frame
    values = left @ (diag[:, :, None] * adjoint(model.frame))
    return LaurentSamples(theta, values, clamped, eps)


@dataclass
class LaurentMultiplier:
    """Sections of the circulant ``C`` that multiplies by the sampled ``F``.

    ``coeff(k)`` is the discrete Fourier coefficient of the samples; the
    block ``(j, k)`` of any section is ``coeff(j - k)``, which agrees with
    ``C`` as long as ``|j - k| < M/2``.
    """

    samples: LaurentSamples = field(repr=False)
    coeffs: np.ndarray = field(repr=False)  # index k mod M
    M: int

    @property
    def block_dim(self):
        return self.coeffs.shape[1]

    def coeff(self, k):
        return self.coeffs[np.mod(k, self.M)]

    def section(self, row_modes, col_modes):
        rows, cols = np.asarray(row_modes), np.asarray(col_modes)
        diff = rows[:, None] - cols[None, :]
        if np.abs(diff).max() >= self.M // 2:
            raise ValueError("section too wide for the sampling grid; need N < M/4")
        n = self.block_dim
        blocks = self.coeffs[np.mod(diff, self.M)]
        return blocks.transpose(0, 2, 1, 3).reshape(len(rows) * n, len(cols) * n)

    def truncation(self, N):
        modes = np.arange(-N, N + 1)
        return self.section(modes, modes)


def _fourier(values, theta0, M):
    """Discrete Fourier coefficients ``(1/M) sum_j v_j e^{-ik theta_j}`` for
    nodes ``theta_j = theta0 + 2 pi j / M``."""
    c = np.fft.fft(values, axis=0) / M
    k = np.fft.fftfreq(M, 1.0 / M)
    return c * np.exp(-1j * k * theta0)[:, None, None]


def laurent_multiplier(model, N, M=4096, eps=1e-3):
    if N >= M // 4:
        raise ValueError(f"need N < M/4, got N = {N}, M = {M}")
    s = boundary_samples(model, M, eps)
    return LaurentMultiplier(s, _fourier(s.values, s.theta[0], M), M)


def boundary_law_residual(model, samples):
    """Pointwise ``||F^* F - target||`` over nodes not clamped."""
    keep = ~samples.clamped
    V = samples.values[keep]
    target = model.boundary_target(samples.theta[keep])
    return float(np.abs(adjoint(V) @ V - target).max()) if np.any(keep) else 0.0


@dataclass
class DefectTrend:
    N_list: list
    defects: list
    boundary_law: float
    section_norm: float  # ||J_N|| at the smallest N
    slack: float = 0.10

    @property
    def non_increasing(self):
        return all(b <= (1.0 + self.slack) * a for a, b in zip(self.defects, self.defects[1:]))

    def to_dict(self):
        return {
            "N": list(self.N_list),
            "defect": list(self.defects),
            "non_increasing": self.non_increasing,
            "boundary_law": self.boundary_law,
            "section_norm": self.section_norm,
        }


def central_defect(mult, target, N):
    """``||P_c (J_N^* J_N - G_N) P_c||`` over central modes ``[-N/2, N/2]``,
    where ``G`` is the multiplier by the sampled ``F^* F`` (the discretized
    ``r^2 P_+ + r^-2 P_-``)."""
    modes = np.arange(-N, N + 1)
    central = np.arange(-(N // 2), N // 2 + 1)
    Jc = mult.section(modes, central)
    G = target.section(central, central)
    return hermitian_norm(adjoint(Jc) @ Jc - G)


def verify_scriptQA_defect(model, N_list=(64, 128, 256), M=4096, eps=1e-3, slack=0.10):
    N_list = sorted(N_list)
    mult = laurent_multiplier(model, N_list[-1], M, eps)
    vals = mult.samples.values
    gram = adjoint(vals) @ vals
    target = LaurentMultiplier(mult.samples, _fourier(gram, mult.samples.theta[0], M), M)
    defects = [central_defect(mult, target, N) for N in N_list]
    return DefectTrend(
        N_list=N_list,
        defects=defects,
        boundary_law=boundary_law_residual(model, mult.samples),
        section_norm=op_norm(mult.truncation(N_list[0])),
        slack=slack,
    )


# ----------------------------------------------- finite exact dilations


def interior_circulant(model, rho=0.5, M=64):
    """``J = diag(F(rho w_j))`` with ``V`` the normalized diagonal embedding;
    then ``V^* J^n V`` is the ``M``-point mean of ``F^n`` on ``|z| = rho``."""
    _, z = circle(M, rho)
    vals = model.F(z)
    n = model.n
    J = np.zeros((M * n, M * n), dtype=np.complex128)
    for j in range(M):
        J[j * n:(j + 1) * n, j * n:(j + 1) * n] = vals[j]
    V = np.tile(np.eye(n), (M, 1)) / np.sqrt(M)
    return J, V


# ------------------------------------------------------------ pipeline


@dataclass
class DilationReport:
    m: int
    regularization: float
    F0_error: float
    compression: CompressionReport
    trend: DefectTrend
    consistency: dict

    def to_dict(self):
        return {
            "m": self.m,
            "regularization_perturbation": self.regularization,
            "F0_error": self.F0_error,
            "compression": {str(k): v for k, v in sorted(self.compression.errors.items())},
            "compression_max": self.compression.max_error,
            "trend": self.trend.to_dict(),
            "consistency": self.consistency,
        }


def regularization_consistency(T, model, m, n_max=5, rho=0.9, M=4096):
    """Errors ``||c0(F_m^n) - T^n||`` against the unregularized ``T`` and the
    observed constant ``C`` in ``err <= |n| C / m + quadrature``."""
    quad = verify_compression(model, n_max, rho, M)
    vs_T = verify_compression(model, n_max, rho, M, reference=T)
    C = 0.0
    for n, e in vs_T.errors.items():
        C = max(C, (e - quad.errors[n]) * m / abs(n))
    return {"errors_vs_T": {str(k): v for k, v in sorted(vs_T.errors.items())}, "C": C}


def dilate(T, param, m=100, N_list=(64, 128, 256), M=4096, rho=0.9, n_max=5, eps=1e-3, tol=DEFAULT_TOL):
    T = as_matrix(T, "T")
    reg = regularize(T, param, m, tol)
    model = build_F(reg.T_m, param, tol=tol)
    F0 = float(np.abs(model.F(0.0) - reg.T_m).max())
    comp = verify_compression(model, n_max, rho, M)
    trend = verify_scriptQA_defect(model, N_list, M, eps)
    cons = regularization_consistency(T, model, m, n_max, rho, M)
    return model, DilationReport(m, reg.perturbation, F0, comp, trend, cons)
