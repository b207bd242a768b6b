"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same algorithms, same signatures, same rotation order; only slower.
"""
import numpy as np


def _rotation(alpha, beta, gamma):
    ag = abs(gamma)
    e = np.conj(gamma) / ag
    zeta = (beta - alpha) / (2.0 * ag)
    if zeta >= 0:
        t = 1.0 / (zeta + np.sqrt(1.0 + zeta * zeta))
    else:
        t = -1.0 / (-zeta + np.sqrt(1.0 + zeta * zeta))
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, c * t, e


def jacobi_svd(a, tol=1e-15, max_sweeps=100):
    g = np.array(a, dtype=np.complex128, copy=True)
    n = g.shape[1]
    v = np.eye(n, dtype=np.complex128)
    sweep = 0
    rotated = True
    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                gp, gq = g[:, p], g[:, q]
                alpha = np.vdot(gp, gp).real
                beta = np.vdot(gq, gq).real
                gamma = np.vdot(gp, gq)
                ag = abs(gamma)
                if ag == 0.0 or ag <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                c, s, e = _rotation(alpha, beta, gamma)
                rot = np.array([[c, s], [-s * e, c * e]])
                g[:, [p, q]] = g[:, [p, q]] @ rot
                v[:, [p, q]] = v[:, [p, q]] @ rot
    return g, v, sweep


def jacobi_eigh(a, tol=1e-15, max_sweeps=100):
    h = np.array(a, dtype=np.complex128, copy=True)
    n = h.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(h)
    sweep = 0
    rotated = True
    while rotated and sweep < max_sweeps:
        rotated = False
        sweep += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = h[p, q]
                ag = abs(apq)
                if ag == 0.0 or ag <= tol * fro:
                    continue
                rotated = True
                c, s, e = _rotation(h[p, p].real, h[q, q].real, apq)
                rot = np.array([[c, s], [-s * e, c * e]])
                h[:, [p, q]] = h[:, [p, q]] @ rot
                h[[p, q], :] = rot.conj().T @ h[[p, q], :]
                h[p, q] = h[q, p] = 0.0
                h[p, p] = h[p, p].real
                h[q, q] = h[q, q].real
                v[:, [p, q]] = v[:, [p, q]] @ rot
    return np.diag(h).real.copy(), v, sweep


def jk_series(alpha, t, q, n_pos, n_neg):
    alpha = np.asarray(alpha, dtype=np.complex128)
    flat = alpha.ravel()
    q2 = q * q
    wpos = 1.0 / (1.0 - t * q2 ** np.arange(n_pos + 1))
    wneg = 1.0 / (q2 ** np.arange(n_neg + 1) - t)
    polyval = np.polynomial.polynomial.polyval
    acc = polyval(flat, wpos)
    if n_neg:
        b = q2 / flat
        acc = acc + b * polyval(b, wneg[1:])
    return acc.reshape(alpha.shape)
