# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: complex Jacobi rotations and the bilateral
Jordan-Kronecker series.

Signatures mirror :mod:`annulus_dilation._pykernels` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot

cnp.import_array()

ctypedef double complex cplx


cdef inline double cabs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline double cabs(cplx z) nogil:
    return hypot(z.real, z.imag)


def jacobi_svd(a, double tol=1e-15, int max_sweeps=100):
    """One-sided (Hestenes) Jacobi on the columns of ``a`` (m >= n).

    Returns ``(g, v, sweeps)`` with ``a @ v == g`` and the columns of ``g``
    mutually orthogonal.
    """
    cdef cnp.ndarray[cplx, ndim=2] g = np.array(a, dtype=np.complex128, order="F", copy=True)
    cdef Py_ssize_t m = g.shape[0], n = g.shape[1]
    cdef cnp.ndarray[cplx, ndim=2] v = np.eye(n, dtype=np.complex128, order="F")
    cdef Py_ssize_t i, p, q
    cdef int sweep, rotated = 1
    cdef double alpha, beta, ag, zeta, t, c, s
    cdef cplx gamma, e, gp, gq
    sweep = 0
    with nogil:
        while rotated and sweep < max_sweeps:
            rotated = 0
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for i in range(m):
                        alpha = alpha + cabs2(g[i, p])
                        beta = beta + cabs2(g[i, q])
                        gamma = gamma + g[i, p].conjugate() * g[i, q]
                    ag = cabs(gamma)
                    if ag == 0.0 or ag <= tol * sqrt(alpha * beta):
                        continue
                    rotated = 1
                    e = gamma.conjugate() / ag
                    zeta = (beta - alpha) / (2.0 * ag)
                    if zeta >= 0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    for i in range(m):
                        gp = g[i, p]
                        gq = g[i, q]
                        g[i, p] = c * gp - s * e * gq
                        g[i, q] = s * gp + c * e * gq
                    for i in range(n):
                        gp = v[i, p]
                        gq = v[i, q]
                        v[i, p] = c * gp - s * e * gq
                        v[i, q] = s * gp + c * e * gq
    return np.ascontiguousarray(g), np.ascontiguousarray(v), sweep


def jacobi_eigh(a, double tol=1e-15, int max_sweeps=100):
    """Cyclic two-sided Jacobi for a Hermitian matrix.

    Returns ``(w, v, sweeps)`` with ``a @ v == v @ diag(w)`` (unsorted).
    """
    cdef cnp.ndarray[cplx, ndim=2] h = np.array(a, dtype=np.complex128, order="F", copy=True)
    cdef Py_ssize_t n = h.shape[0]
    cdef cnp.ndarray[cplx, ndim=2] v = np.eye(n, dtype=np.complex128, order="F")
    cdef Py_ssize_t k, p, q
    cdef int sweep, rotated = 1
    cdef double app, aqq, ag, zeta, t, c, s, fro = 0.0
    cdef cplx apq, e, x, y
    for p in range(n):
        for q in range(n):
            fro += cabs2(h[p, q])
    fro = sqrt(fro)
    sweep = 0
    with nogil:
        while rotated and sweep < max_sweeps:
            rotated = 0
            sweep += 1
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = h[p, q]
                    ag = cabs(apq)
                    if ag == 0.0 or ag <= tol * fro:
                        continue
                    rotated = 1
                    app = h[p, p].real
                    aqq = h[q, q].real
                    e = apq.conjugate() / ag
                    zeta = (aqq - app) / (2.0 * ag)
                    if zeta >= 0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    for k in range(n):
                        x = h[k, p]
                        y = h[k, q]
                        h[k, p] = c * x - s * e * y
                        h[k, q] = s * x + c * e * y
                    for k in range(n):
                        x = h[p, k]
                        y = h[q, k]
                        h[p, k] = c * x - s * e.conjugate() * y
                        h[q, k] = s * x + c * e.conjugate() * y
                    h[p, q] = 0.0
                    h[q, p] = 0.0
                    h[p, p] = h[p, p].real
                    h[q, q] = h[q, q].real
                    for k in range(n):
                        x = v[k, p]
                        y = v[k, q]
                        v[k, p] = c * x - s * e * y
                        v[k, q] = s * x + c * e * y
    w = np.array([h[k, k].real for k in range(n)])
    return w, np.ascontiguousarray(v), sweep


def jk_series(alpha, double t, double q, int n_pos, int n_neg):
    """Sum ``alpha**n / (1 - t q**(2n))`` for ``-n_neg <= n <= n_pos``."""
    cdef cnp.ndarray[cplx, ndim=1] al = np.ascontiguousarray(np.ravel(alpha), dtype=np.complex128)
    cdef Py_ssize_t npts = al.shape[0], i, n
    cdef cnp.ndarray[cplx, ndim=1] out = np.empty(npts, dtype=np.complex128)
    cdef cnp.ndarray[double, ndim=1] wpos = np.empty(n_pos + 1)
    cdef cnp.ndarray[double, ndim=1] wneg = np.empty(n_neg + 1)
    cdef double q2 = q * q
    cdef double pw, d, w, tmp
    cdef cnp.ndarray[double, ndim=1] ar = np.ascontiguousarray(al.real)
    cdef cnp.ndarray[double, ndim=1] ai = np.ascontiguousarray(al.imag)
    cdef cnp.ndarray[double, ndim=1] xr = np.empty(npts)
    cdef cnp.ndarray[double, ndim=1] xi = np.empty(npts)
    cdef cnp.ndarray[double, ndim=1] yr = np.empty(npts)
    cdef cnp.ndarray[double, ndim=1] yi = np.empty(npts)
    cdef cnp.ndarray[double, ndim=1] br = np.empty(npts)
    cdef cnp.ndarray[double, ndim=1] bi = np.empty(npts)
    pw = 1.0
    for n in range(n_pos + 1):
        wpos[n] = 1.0 / (1.0 - t * pw)
        pw *= q2
    # negative side: alpha^{-m} / (1 - t q^{-2m}) = (q^2/alpha)^m / (q^{2m} - t)
    pw = 1.0
    for n in range(n_neg + 1):
        wneg[n] = 1.0 / (pw - t)
        pw *= q2
    # Horner in split real arithmetic with the point loop innermost, so the
    # per-point recurrences are independent and pipeline
    with nogil:
        for i in range(npts):
            xr[i] = wpos[n_pos]
            xi[i] = 0.0
            br[i] = 0.0
            bi[i] = 0.0
            if n_neg > 0:
                d = ar[i] * ar[i] + ai[i] * ai[i]
                br[i] = q2 * ar[i] / d
                bi[i] = -q2 * ai[i] / d
            yr[i] = wneg[n_neg] if n_neg > 0 else 0.0
            yi[i] = 0.0
        for n in range(n_pos - 1, -1, -1):
            w = wpos[n]
            for i in range(npts):
                tmp = xr[i] * ar[i] - xi[i] * ai[i] + w
                xi[i] = xr[i] * ai[i] + xi[i] * ar[i]
                xr[i] = tmp
        for n in range(n_neg - 1, -1, -1):
            w = wneg[n] if n > 0 else 0.0  # the m = 0 term belongs to the positive side
            for i in range(npts):
                tmp = yr[i] * br[i] - yi[i] * bi[i] + w
                yi[i] = yr[i] * bi[i] + yi[i] * br[i]
                yr[i] = tmp
        for i in range(npts):
            out[i].real = xr[i] + yr[i]
            out[i].imag = xi[i] + yi[i]
    return out.reshape(np.shape(alpha))
