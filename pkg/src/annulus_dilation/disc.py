"""Nelson-trick dilations over the unit disc.

The diagonal of singular values of a strict contraction is replaced by
Blaschke factors ``b_lam(z) = (lam - z) / (1 - lam z)``, giving an analytic
matrix function ``F(z) = U D(z) W`` with ``F(0) = T`` that is unitary on the
circle. Multiplication by ``F`` on a truncated Hardy space realizes the
isometric lift numerically; row contractions and doubly commuting tuples
follow the same pattern.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import (
    DEFAULT_TOL,
    LinalgError,
    adjoint,
    as_matrix,
    eigh,
    haar_unitary,
    herm_eig,
    min_singular,
    op_norm,
    polar,
    rng_from_seed,
    svd,
)


class DilationError(LinalgError):
    pass


# ------------------------------------------------------------ scalar maps


class Blaschke:
    """Disc automorphism ``z -> (lam - z) / (1 - conj(lam) z)`` for ``|lam| < 1``."""

    kind = "blaschke"

    def __init__(self, lam):
        lam = complex(lam)
        if not abs(lam) < 1.0:
            raise ValueError(f"Blaschke parameter must lie in the open disc, got {lam!r}")
        self.lam = lam

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return (self.lam - z) / (1.0 - np.conj(self.lam) * z)

    def __repr__(self):
        return f"Blaschke({self.lam:.6g})"


def blaschke(lam):
    return Blaschke(lam)


# -------------------------------------------------------- matrix functions


@dataclass
class AnalyticMatrixFunction:
    """``F(z) = left_frame @ diag(fn_i(z)) @ right_frame``.

    ``right_frame`` may be a block of a unitary (row lifts), so only
    ``left_frame`` is required to be unitary.
    """

    left_frame: np.ndarray
    diagonal_fns: list
    right_frame: np.ndarray

    def __post_init__(self):
        self.left_frame = as_matrix(self.left_frame, "left_frame")
        self.right_frame = as_matrix(self.right_frame, "right_frame")
        k = len(self.diagonal_fns)
        if self.left_frame.shape[1] != k or self.right_frame.shape[0] != k:
            raise ValueError("frame shapes do not match the number of diagonal functions")

    @property
    def shape(self):
        return self.left_frame.shape[0], self.right_frame.shape[1]

    def diagonal(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return np.stack([np.broadcast_to(f(z), z.shape) for f in self.diagonal_fns], axis=-1)

    def __call__(self, z):
        """Evaluate at a scalar (returns a matrix) or an array of points
        (returns a stack with the matrix axes last)."""
        d = self.diagonal(z)
        return self.left_frame @ (d[..., :, None] * self.right_frame)

    def inverse(self, z):
        """``F(z)^-1`` for square ``F`` with unitary frames."""
        d = self.diagonal(z)
        return adjoint(self.right_frame) @ ((1.0 / d)[..., :, None] * adjoint(self.left_frame))


def circle(M, radius=1.0, offset=0.0):
    theta = 2.0 * np.pi * (np.arange(M) + offset) / M
    return theta, radius * np.exp(1j * theta)


def taylor_coeffs(F, K, rho=0.95, M=None):
    """Taylor coefficients ``c_0 .. c_K`` of an analytic matrix function by
    the trapezoid rule on ``|z| = rho``.

    Returns an array of shape ``(K + 1, n, m)``.
    """
    if M is None:
        M = max(2048, 4 * K)
    if M < 4 * K:
        raise ValueError(f"need at least 4K = {4 * K} quadrature points, got {M}")
    if not (0.0 < rho < 1.0):
        raise ValueError("rho must lie in (0, 1)")
    _, z = circle(M, rho)
    vals = F(z)
    c = np.fft.fft(vals, axis=0)[: K + 1] / M
    return c / (rho ** np.arange(K + 1))[:, None, None]


@dataclass
class TruncatedMultiplier:
    """Block-Toeplitz section ``block(j, k) = coeff(j - k)`` on modes
    ``mode_lo .. mode_hi``; ``coeffs[i]`` holds ``coeff(coeff_lo + i)``."""

    mode_lo: int
    mode_hi: int
    coeff_lo: int
    coeffs: np.ndarray = field(repr=False)
    embed_index: int = 0

    @property
    def block_dim(self):
        return self.coeffs.shape[1]

    @property
    def modes(self):
        return np.arange(self.mode_lo, self.mode_hi + 1)

    def coeff(self, k):
        i = k - self.coeff_lo
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return np.zeros(self.coeffs.shape[1:], dtype=np.complex128)

    def assemble(self, row_modes=None, col_modes=None):
        rows = self.modes if row_modes is None else np.asarray(row_modes)
        cols = self.modes if col_modes is None else np.asarray(col_modes)
        n, m = self.coeffs.shape[1:]
        idx = rows[:, None] - cols[None, :] - self.coeff_lo
        valid = (idx >= 0) & (idx < len(self.coeffs))
        blocks = np.zeros((len(rows), len(cols), n, m), dtype=np.complex128)
        blocks[valid] = self.coeffs[idx[valid]]
        return blocks.transpose(0, 2, 1, 3).reshape(len(rows) * n, len(cols) * m)

    def embedding(self):
        """Isometry placing ``C^m`` at the embed mode."""
        m = self.coeffs.shape[2]
        V = np.zeros((len(self.modes) * m, m), dtype=np.complex128)
        k = self.embed_index - self.mode_lo
        V[k * m:(k + 1) * m] = np.eye(m)
        return V

    def mode_slice(self, lo, hi):
        """Index range of modes ``lo .. hi`` in the assembled matrix."""
        n = self.coeffs.shape[1]
        return slice((lo - self.mode_lo) * n, (hi - self.mode_lo + 1) * n)


def hardy_multiplier(F, N, rho=0.95, M=None):
    """Lower block-triangular Toeplitz section of ``M_F`` on modes ``0..N``."""
    return TruncatedMultiplier(0, N, 0, taylor_coeffs(F, N, rho, M))


def boundary_unitarity(F, points=64):
    _, z = circle(points)
    vals = F(z)
    n = vals.shape[-1]
    return float(np.abs(adjoint(vals) @ vals - np.eye(n)).max())


def max_interior_norm(F, count=200, seed=0):
    rng = rng_from_seed(seed)
    z = np.sqrt(rng.uniform(0, 1, count)) * np.exp(2j * np.pi * rng.uniform(0, 1, count))
    return float(max(op_norm(m) for m in F(z)))


# ------------------------------------------------------------ Sz.-Nagy


def nelson_disc(T, margin=1e-8, tol=DEFAULT_TOL):
    """``F(z) = U diag(b_{lam_j}(z)) W`` from the SVD ``T = U diag(lam) W``."""
    T = as_matrix(T, "T")
    if T.shape[0] != T.shape[1]:
        raise DilationError("nelson_disc needs a square matrix")
    f = svd(T, tol)
    if f.singulars[0] >= 1.0 - margin:
        raise DilationError(f"T is not a strict contraction: ||T|| = {f.singulars[0]:.12g}")
    return AnalyticMatrixFunction(f.left, [Blaschke(s) for s in f.singulars], f.right)


@dataclass
class SzNagyReport:
    n: int
    N: int
    M: int
    F0_error: float
    boundary_unitarity: float
    intertwining: float
    low_mode_isometry: float
    low_modes: int
    max_interior_norm: float

    def passed(self, tol=1e-8):
        return (
            self.F0_error <= 1e-12
            and self.boundary_unitarity <= 1e-10
            and self.intertwining <= tol
            and self.max_interior_norm <= 1.0 + 1e-12
        )


def verify_sznagy(T, N=64, M=2048, rho=0.95, low_modes=None, interior_points=200):
    """Build ``M_F`` on modes ``0..N`` and check ``M_F^* V = V T^*``."""
    T = as_matrix(T, "T")
    F = nelson_disc(T)
    mult = hardy_multiplier(F, N, rho, M)
    A = mult.assemble()
    V = mult.embedding()
    inter = np.abs(adjoint(A) @ V - V @ adjoint(T)).max()
    if low_modes is None:
        low_modes = N // 2
    cols = mult.mode_slice(0, low_modes)
    gram = adjoint(A[:, cols]) @ A[:, cols]
    iso = np.abs(gram - np.eye(gram.shape[0])).max()
    return SzNagyReport(
        n=T.shape[0],
        N=N,
        M=M,
        F0_error=float(np.abs(F(0.0) - T).max()),
        boundary_unitarity=boundary_unitarity(F),
        intertwining=float(inter),
        low_mode_isometry=float(iso),
        low_modes=low_modes,
        max_interior_norm=max_interior_norm(F, interior_points),
    )


# ------------------------------------------------------------ row lifts


@dataclass(frozen=True)
class FockTruncation:
    """Words in ``g`` letters of length at most ``max_word_length``,
    ordered by length then lexicographically."""

    letters: int
    max_word_length: int

    @property
    def words(self):
        out = []
        for length in range(self.max_word_length + 1):
            out.extend(itertools.product(range(self.letters), repeat=length))
        return out

    @property
    def size(self):
        g, ell = self.letters, self.max_word_length
        return ell + 1 if g == 1 else (g ** (ell + 1) - 1) // (g - 1)

    def index(self):
        return {w: i for i, w in enumerate(self.words)}

    def shift(self, j):
        """Truncated creation operator ``w -> x_j w`` (words of maximal
        length are sent out of the truncation)."""
        idx = self.index()
        rows, cols = [], []
        for w, i in idx.items():
            if len(w) < self.max_word_length:
                rows.append(idx[(j,) + w])
                cols.append(i)
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.size, self.size))

    def short_word_mask(self):
        return np.array([len(w) < self.max_word_length for w in self.words])


@dataclass
class RowLiftReport:
    g: int
    n: int
    ell: int
    N: int
    dim: int
    F0_errors: list
    boundary_unitarity: float
    fock_isometry: float
    hardy_isometry: float  # quadrature-limited, low modes only; diagnostic
    intertwining: float

    def passed(self, iso_tol=1e-12, tol=1e-8):
        return (
            max(self.F0_errors) <= 1e-12
            and self.fock_isometry <= iso_tol
            and self.intertwining <= tol
        )


def row_functions(Ts, tol=DEFAULT_TOL):
    """``F_j(z) = U D(z) W_{1,j}`` from the SVD of the row ``[T_1 ... T_g]``,
    together with ``U`` and the block-partitioned ``W``."""
    Ts = [as_matrix(t, "T_j") for t in Ts]
    n = Ts[0].shape[0]
    if any(t.shape != (n, n) for t in Ts):
        raise DilationError("row entries must all be n x n")
    row = np.hstack(Ts)
    f = svd(row, tol)
    if f.singulars[0] >= 1.0 - 1e-8:
        raise DilationError(f"row is not a strict contraction: norm {f.singulars[0]:.12g}")
    g = len(Ts)
    W = f.right
    blocks = [[W[i * n:(i + 1) * n, j * n:(j + 1) * n] for j in range(g)] for i in range(g)]
    Fs = [AnalyticMatrixFunction(f.left, [Blaschke(s) for s in f.singulars], blocks[0][j]) for j in range(g)]
    return Fs, f.left, blocks


def assemble_row_lift(Ts, ell=4, N=64, rho=0.95, M=2048):
    """Sparse truncations of the isometries ``J_1 .. J_g``.

    The space is ``H^2 (x) C^n`` followed by ``g - 1`` copies of
    ``F^2_g (x) H^2 (x) C^n`` (index order word, mode, vector).  Column ``j``
    of ``J_j`` on the first summand carries ``M_j`` together with
    ``vacuum (x) U W_{i,j}`` into copy ``i``; the Fock copies carry the
    left creation operator ``S_j``.
    """
    Fs, U, blocks = row_functions(Ts)
    g, n = len(Ts), U.shape[0]
    fock = FockTruncation(g, ell)
    H = N + 1
    d0 = H * n
    dcopy = fock.size * H * n
    dim = d0 + (g - 1) * dcopy
    eye_hn = sp.identity(H * n, format="csr")
    mults = []
    Js = []
    for j in range(g):
        mult = hardy_multiplier(Fs[j], N, rho, M)
        mults.append(mult)
        parts = [[None] * g for _ in range(g)]
        parts[0][0] = sp.csr_matrix(mult.assemble())
        shift = sp.kron(fock.shift(j), eye_hn, format="csr")
        for i in range(1, g):
            emb = sp.csr_matrix(
                (np.ones(H), (np.arange(H), np.arange(H))), shape=(fock.size * H, H)
            )  # vacuum (x) h, vacuum is word 0
            parts[i][0] = sp.kron(emb, sp.csr_matrix(U @ blocks[i][j]), format="csr")
            parts[i][i] = shift
        Js.append(sp.bmat(parts, format="csr"))
    return Js, mults, fock, (d0, dcopy, dim)


def _sparse_absmax(a):
    a = a.tocoo()
    return float(np.abs(a.data).max()) if a.nnz else 0.0


def nelson_row(Ts, ell=4, N=64, rho=0.95, M=2048, low_modes=None):
    Ts = [as_matrix(t, "T_j") for t in Ts]
    Js, mults, fock, (d0, dcopy, dim) = assemble_row_lift(Ts, ell, N, rho, M)
    g, n = len(Ts), Ts[0].shape[0]
    H = N + 1
    if low_modes is None:
        low_modes = N // 2
    short = np.repeat(fock.short_word_mask(), H * n)
    fock_cols = np.concatenate([d0 + i * dcopy + np.flatnonzero(short) for i in range(g - 1)]) if g > 1 else np.array([], int)
    hardy_cols = np.arange((low_modes + 1) * n)
    fock_iso = 0.0
    hardy_iso = 0.0
    for j in range(g):
        for k in range(g):
            G = (Js[j].conj().T @ Js[k]).tocsc()
            if j == k:
                G = G - sp.identity(dim, format="csc")
            if len(fock_cols):
                fock_iso = max(fock_iso, _sparse_absmax(G[:, fock_cols]))
            hardy_iso = max(hardy_iso, _sparse_absmax(G[:, hardy_cols]))
    V = np.zeros((dim, n), dtype=np.complex128)
    V[:n] = np.eye(n)
    inter = max(np.abs(Js[j].conj().T @ V - V @ adjoint(Ts[j])).max() for j in range(g))
    Fs = row_functions(Ts)[0]
    _, z = circle(64)
    # boundary: the stacked column [F_1 ... F_g] over the full W is unitary, so
    # check sum_j F_j F_j^* = I together with F_j^* F_k = W_{1,j}^* W_{1,k}
    vals = [F(z) for F in Fs]
    row_unit = np.abs(sum(v @ adjoint(v) for v in vals) - np.eye(n)).max()
    return RowLiftReport(
        g=g,
        n=n,
        ell=ell,
        N=N,
        dim=dim,
        F0_errors=[float(np.abs(F(0.0) - T).max()) for F, T in zip(Fs, Ts)],
        boundary_unitarity=float(row_unit),
        fock_isometry=float(fock_iso),
        hardy_isometry=float(hardy_iso),
        intertwining=float(inter),
    )


# ------------------------------------------------------ doubly commuting


def commutator_norms(Ts):
    out = {}
    for j, k in itertools.combinations(range(len(Ts)), 2):
        a, b = Ts[j], Ts[k]
        out[f"{j},{k}"] = {
            "commute": op_norm(a @ b - b @ a),
            "double": max(op_norm(adjoint(a) @ b - b @ adjoint(a)), op_norm(adjoint(b) @ a - a @ adjoint(b))),
        }
    return out


@dataclass
class DoublyCommutingReport:
    d: int
    n: int
    F0_errors: list
    double_commutation: float
    commutation: float
    boundary_unitarity: float
    intertwining: float
    simultaneous_diag_residual: float
    cluster_counts: list

    def passed(self, tol=1e-12, quad_tol=1e-8):
        return (
            max(self.F0_errors) <= 1e-10
            and self.double_commutation <= tol
            and self.commutation <= tol
            and self.boundary_unitarity <= 1e-10
            and self.intertwining <= quad_tol
        )


def doubly_commuting_functions(Ts, tol=1e-10, cluster_tol=1e-8, tols=DEFAULT_TOL):
    """``F_j(z) = U_j sum_a b_{j,a}(z) P_{j,a}`` from the polar factors
    ``T_j = U_j D_j`` and the spectral clusters of each ``D_j``."""
    Ts = [as_matrix(t, "T_j") for t in Ts]
    for j, t in enumerate(Ts):
        if op_norm(t) >= 1.0 - 1e-8:
            raise DilationError(f"T_{j} is not a strict contraction: norm {op_norm(t):.12g}")
        if min_singular(t) <= tols.algebraic_tol:
            raise DilationError(f"T_{j} is singular")
    norms = commutator_norms(Ts)
    worst = max([max(v.values()) for v in norms.values()], default=0.0)
    if worst > tol:
        raise DilationError(f"tuple does not doubly commute (commutator norms {norms})")
    Fs, polars = [], []
    for t in Ts:
        u, d = polar(t, tols)
        clusters = herm_eig(d, cluster_tol)
        q, lam = clusters.frame()
        Fs.append(AnalyticMatrixFunction(u @ q, [Blaschke(x) for x in lam], adjoint(q)))
        polars.append((u, d, clusters))
    return Fs, polars


def simultaneous_diagonalization(Ds, seed=0):
    """Joint eigenbasis of commuting Hermitian matrices from a seeded
    random combination; returns the basis and the worst off-diagonal norm."""
    rng = rng_from_seed(seed)
    c = rng.uniform(0.5, 1.5, len(Ds))
    _, q = eigh(sum(ci * d for ci, d in zip(c, Ds)))
    worst = 0.0
    for d in Ds:
        x = adjoint(q) @ d @ q
        worst = max(worst, float(np.abs(x - np.diag(np.diag(x))).max()))
    return q, worst


def nelson_doubly_commuting(Ts, N=64, rho=0.95, M=2048, points=20, seed=0, tol=1e-10):
    Ts = [as_matrix(t, "T_j") for t in Ts]
    Fs, polars = doubly_commuting_functions(Ts, tol)
    d, n = len(Ts), Ts[0].shape[0]
    _, joint_res = simultaneous_diagonalization([p[1] for p in polars], seed)
    rng = rng_from_seed(seed)
    zs = np.sqrt(rng.uniform(0, 1, (points, 2))) * np.exp(2j * np.pi * rng.uniform(0, 1, (points, 2)))
    dc = cm = 0.0
    for j, k in itertools.permutations(range(d), 2):
        for z, w in zs:
            a, b = Fs[j](z), Fs[k](w)
            cm = max(cm, np.abs(a @ b - b @ a).max())
            dc = max(dc, np.abs(adjoint(a) @ b - b @ adjoint(a)).max())
    inter = 0.0
    for F, T in zip(Fs, Ts):
        mult = hardy_multiplier(F, N, rho, M)
        A = mult.assemble()
        V = mult.embedding()
        inter = max(inter, np.abs(adjoint(A) @ V - V @ adjoint(T)).max())
    return DoublyCommutingReport(
        d=d,
        n=n,
        F0_errors=[float(np.abs(F(0.0) - T).max()) for F, T in zip(Fs, Ts)],
        double_commutation=float(dc),
        commutation=float(cm),
        boundary_unitarity=max(boundary_unitarity(F) for F in Fs),
        intertwining=float(inter),
        simultaneous_diag_residual=joint_res,
        cluster_counts=[len(p[2].clusters) for p in polars],
    )


# ------------------------------------------------------------- samplers


def random_contraction(n, norm, seed):
    """``U diag(s) W`` with ``max(s) = norm`` and the rest uniform below it."""
    rng = rng_from_seed(seed)
    s = np.sort(rng.uniform(0, norm, n))[::-1]
    s[0] = norm
    return haar_unitary(n, rng) @ np.diag(s) @ haar_unitary(n, rng)


def _separated_singulars(n, rng, lo=0.1, hi=0.9, gap=0.05):
    grid = np.arange(lo, hi + 1e-12, gap)
    picks = np.sort(rng.choice(len(grid), size=n, replace=False))
    return grid[picks][::-1] + rng.uniform(0, gap / 4, n)


def gen_doubly_commuting(seed, dims):
    """``T_j = I (x) .. (x) A_j (x) .. (x) I`` with random invertible strict
    contractions ``A_j`` whose singular values are separated by at least
    ``0.025``."""
    rng = rng_from_seed(seed)
    mats = []
    for a in dims:
        s = _separated_singulars(a, rng)
        mats.append(haar_unitary(a, rng) @ np.diag(s) @ haar_unitary(a, rng))
    out = []
    for j, a in enumerate(mats):
        factors = [np.eye(dd) for dd in dims]
        factors[j] = a
        t = factors[0]
        for f in factors[1:]:
            t = np.kron(t, f)
        out.append(t)
    return tuple(out)
