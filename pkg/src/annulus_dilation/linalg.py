"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` complex128 arrays. SVD and Hermitian
eigendecomposition run on the Jacobi kernels from :mod:`._backend`;
everything here is a pure function of its inputs.

Conventions
-----------
The SVD follows ``A = left @ diag(singulars) @ right`` with ``right`` *not*
adjointed, so a square ``T`` factors as ``T = U D W`` with ``U``, ``W``
unitary and ``D`` diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend


class LinalgError(ValueError):
    """Raised for inputs outside an operation's contract."""


class ConvergenceError(LinalgError):
    """A Jacobi iteration exhausted its sweep budget."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class TolerancePolicy:
    algebraic_tol: float = 1e-10
    cluster_tol: float = 1e-8
    quadrature_tol: float = 1e-6

    def __post_init__(self):
        for name in ("algebraic_tol", "cluster_tol", "quadrature_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


DEFAULT_TOL = TolerancePolicy()


@dataclass(frozen=True)
class SvdFactors:
    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def reassemble(self):
        m, n = self.left.shape[1], self.right.shape[0]
        s = np.zeros((m, n))
        k = len(self.singulars)
        s[:k, :k] = np.diag(self.singulars)
        return self.left @ s @ self.right


@dataclass(frozen=True)
class Cluster:
    value: float
    projector: np.ndarray
    basis: np.ndarray = field(repr=False)

    @property
    def rank(self):
        return self.basis.shape[1]


@dataclass(frozen=True)
class HermEig:
    """Spectral clusters of a Hermitian matrix, ascending by value."""

    clusters: tuple

    @property
    def values(self):
        return np.array([c.value for c in self.clusters])

    def reassemble(self):
        return sum(c.value * c.projector for c in self.clusters)

    def frame(self):
        """Unitary whose columns are the cluster bases, in cluster order,
        together with the eigenvalue attached to each column."""
        q = np.hstack([c.basis for c in self.clusters])
        lam = np.concatenate([np.full(c.rank, c.value) for c in self.clusters])
        return q, lam


def as_matrix(a, name="matrix"):
    """Validate and return ``a`` as a finite 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise LinalgError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinalgError(f"{name} has non-finite entries")
    return arr


def adjoint(a):
    return np.conj(np.swapaxes(a, -1, -2))


def _complete_orthonormal(cols, m):
    """Extend orthonormal columns ``cols`` (m x k) to an m x m unitary."""
    k = cols.shape[1]
    if k == m:
        return cols
    q, _ = np.linalg.qr(np.hstack([cols, np.eye(m, dtype=np.complex128)]), mode="complete")
    return np.hstack([cols, q[:, k:m]])


def svd(a, tol=DEFAULT_TOL, max_sweeps=100):
    """Full SVD ``a = left @ diag(s) @ right`` via one-sided Jacobi.

    ``left`` is m x m and ``right`` is n x n; ``s`` has ``min(m, n)``
    entries in descending order.
    """
    a = as_matrix(a)
    m, n = a.shape
    wide = m < n
    work = adjoint(a) if wide else a
    g, v, sweeps = _backend.jacobi_svd(work, 1e-15, max_sweeps)
    s = np.linalg.norm(g, axis=0)
    if sweeps >= max_sweeps:
        gram = adjoint(g) @ g
        off = np.abs(gram - np.diag(np.diag(gram))).max()
        raise ConvergenceError("Jacobi SVD did not converge", off)
    order = np.argsort(-s, kind="stable")
    s, g, v = s[order], g[:, order], v[:, order]
    scale = s[0] if s.size and s[0] > 0 else 1.0
    keep = s > 1e-300 + 1e-15 * scale * max(work.shape)
    u = np.zeros_like(g)
    u[:, keep] = g[:, keep] / s[keep]
    u = _complete_orthonormal(u[:, keep], work.shape[0])
    if wide:
        # a^* = u diag(s) v^*  =>  a = v diag(s) u^*
        return SvdFactors(left=v, singulars=s, right=adjoint(u))
    return SvdFactors(left=u, singulars=s, right=adjoint(v))


def singular_values(a):
    a = as_matrix(a)
    work = adjoint(a) if a.shape[0] < a.shape[1] else a
    g, _, _ = _backend.jacobi_svd(work, 1e-15, 100)
    return np.sort(np.linalg.norm(g, axis=0))[::-1]


# Above this size the Jacobi kernels are too slow for the truncated
# multiplication operators; LAPACK takes over for norms only.
JACOBI_MAX_DIM = 200


def op_norm(a):
    """Operator 2-norm (largest singular value)."""
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    if min(a.shape) > JACOBI_MAX_DIM:
        return float(np.linalg.norm(a, 2))
    return float(singular_values(a)[0])


def hermitian_norm(h):
    """Spectral radius of a Hermitian matrix (equals its operator norm)."""
    h = as_matrix(h)
    if h.shape[0] > JACOBI_MAX_DIM:
        w = np.linalg.eigvalsh(0.5 * (h + adjoint(h)))
    else:
        w, _ = _eigh_hermitian(0.5 * (h + adjoint(h)))
    return float(np.abs(w).max()) if w.size else 0.0


def min_singular(a):
    a = as_matrix(a)
    return float(singular_values(a)[-1])


def polar(a, tol=DEFAULT_TOL):
    """Right polar decomposition ``a = unitary @ positive``."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError("polar decomposition needs a square matrix")
    f = svd(a, tol)
    smin = f.singulars[-1]
    if smin <= tol.algebraic_tol:
        raise LinalgError(f"matrix is singular: smallest singular value {smin:.3e}")
    positive = adjoint(f.right) @ (f.singulars[:, None] * f.right)
    positive = 0.5 * (positive + adjoint(positive))
    return f.left @ f.right, positive


def hermitian_residual(a):
    a = as_matrix(a)
    return float(np.abs(a - adjoint(a)).max()) if a.size else 0.0


def _eigh_hermitian(h, max_sweeps=100):
    w, v, sweeps = _backend.jacobi_eigh(h, 1e-15, max_sweeps)
    if sweeps >= max_sweeps:
        off = h - v @ np.diag(w) @ adjoint(v)
        raise ConvergenceError("Jacobi eigensolver did not converge", np.abs(off).max())
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigh(a, tol=DEFAULT_TOL):
    """Ascending eigenvalues and eigenvectors of a Hermitian matrix."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise LinalgError("Hermitian eigendecomposition needs a square matrix")
    asym = hermitian_residual(a)
    scale = max(1.0, np.abs(a).max())
    if asym > tol.algebraic_tol * scale:
        raise LinalgError(f"matrix is not Hermitian: asymmetry {asym:.3e}")
    return _eigh_hermitian(0.5 * (a + adjoint(a)))


def herm_eig(a, cluster_tol=None, tol=DEFAULT_TOL):
    """Cluster the spectrum of a Hermitian matrix into projectors.

    Sorted eigenvalues are merged agglomeratively whenever consecutive
    gaps are at most ``cluster_tol``; each cluster's value is the mean of
    its members.
    """
    if cluster_tol is None:
        cluster_tol = tol.cluster_tol
    w, v = eigh(a, tol)
    if w.size == 0:
        return HermEig(clusters=())
    breaks = np.flatnonzero(np.diff(w) > cluster_tol) + 1
    clusters = []
    for idx in np.split(np.arange(w.size), breaks):
        basis = v[:, idx]
        clusters.append(Cluster(value=float(w[idx].mean()), projector=basis @ adjoint(basis), basis=basis))
    return HermEig(clusters=tuple(clusters))


def min_eigenvalue(a):
    """Smallest eigenvalue of the Hermitian part of ``a``."""
    a = as_matrix(a)
    w, _ = _eigh_hermitian(0.5 * (a + adjoint(a)))
    return float(w[0])


def is_psd(a, tol=1e-10):
    a = as_matrix(a)
    if hermitian_residual(a) > tol:
        return False
    return min_eigenvalue(a) >= -tol


def inv(a, tol=DEFAULT_TOL):
    a = as_matrix(a)
    smin = min_singular(a)
    if smin <= tol.algebraic_tol:
        raise LinalgError(f"matrix is singular: smallest singular value {smin:.3e}")
    return np.linalg.inv(a)


def is_unitary(a, tol=1e-10):
    a = as_matrix(a)
    return a.shape[0] == a.shape[1] and np.abs(adjoint(a) @ a - np.eye(a.shape[0])).max() <= tol


def rng_from_seed(seed):
    """Counter-based Philox generator; identical streams on every platform."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(n, seed):
    """Haar-distributed n x n unitary from QR of a Ginibre matrix with the
    phases of R's diagonal absorbed into Q."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng_from_seed(seed)
    z = complex_gaussian(rng, (n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]
