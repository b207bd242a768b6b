"""Explicit covering of the annulus ``r < |z| < 1/r`` by the unit disc.

The chart ``g(z) = i (2L/pi) Log((1 + z) / (1 - z))`` sends the disc onto
the vertical strip ``|Re w| < L`` with ``L = ln(1/r)``, and ``exp`` wraps the
strip onto the annulus.  Normalized maps ``pi_lam`` with ``pi_lam(0) = lam``
are obtained by precomposing with the disc automorphism
``phi_b(z) = (z + ib) / (1 - ibz)``; the arc of the circle carried to the
inner circle then depends on ``lam``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .linalg import rng_from_seed
from .params import AnnulusParam


class GeometryError(ValueError):
    pass


SINGULAR_GUARD = 1e-15


def _param(param):
    return param if isinstance(param, AnnulusParam) else AnnulusParam(float(param))


def strip_chart(z, param):
    """``g(z)``; real part in ``(-L, L)`` on the disc."""
    param = _param(param)
    z = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(1.0 - z) < SINGULAR_GUARD) or np.any(np.abs(1.0 + z) < SINGULAR_GUARD):
        raise GeometryError("strip chart is singular at z = +1 and z = -1")
    return 1j * (2.0 * param.L / np.pi) * np.log((1.0 + z) / (1.0 - z))


def strip_chart_inverse(w, param):
    """Inverse of :func:`strip_chart` on the strip ``|Re w| < L``."""
    param = _param(param)
    s = np.exp(-1j * np.pi * np.asarray(w, dtype=np.complex128) / (2.0 * param.L))
    return (s - 1.0) / (s + 1.0)


def covering(z, param):
    return np.exp(strip_chart(z, param))


def deck_partner(z, param, shift=1):
    """Point ``z'`` in the disc with ``g(z') = g(z) + 2 pi i * shift``."""
    return strip_chart_inverse(strip_chart(z, param) + 2j * np.pi * shift, param)


@dataclass(frozen=True)
class CoveringMap:
    """The base covering ``pi = exp(g)`` with ``pi(0) = 1``.

    ``inner_arc`` records which open half-circle is sent to ``|z| = r``;
    it is measured at construction rather than assumed.
    """

    param: AnnulusParam

    @cached_property
    def inner_arc(self):
        probe = 0.5 * np.pi
        mod = abs(covering(np.exp(1j * probe), self.param))
        if abs(mod - self.param.r) < 1e-12:
            return "upper"
        if abs(mod - 1.0 / self.param.r) < 1e-12:
            return "lower"
        raise GeometryError(f"unexpected boundary modulus {mod!r}")

    def __call__(self, z):
        return covering(z, self.param)


def phi(z, b):
    z = np.asarray(z, dtype=np.complex128)
    return (z + 1j * b) / (1.0 - 1j * b * z)


def phi_inverse(w, b):
    w = np.asarray(w, dtype=np.complex128)
    return (w - 1j * b) / (1.0 + 1j * b * w)


def lambda_parameter(lam, param):
    """``b`` with ``pi(phi_b(0)) = lam``; ``g(ib) = -(4L/pi) arctan(b)``."""
    return -np.tan(np.pi * np.log(lam) / (4.0 * param.L))


@dataclass(frozen=True)
class LambdaMap:
    """``pi_lam = pi o phi_b``, sending 0 to ``lam``.

    The arc sent to modulus ``r`` runs counterclockwise from angle
    ``-2 arctan b`` to ``pi + 2 arctan b`` (for the upper orientation).
    """

    lam: float
    param: AnnulusParam

    @property
    def b(self):
        return float(lambda_parameter(self.lam, self.param))

    @property
    def beta(self):
        return float(np.arctan(self.b))

    @property
    def endpoints(self):
        return phi_inverse(np.array([1.0, -1.0]), self.b)

    def inner_arc_angles(self):
        """(start, end) of the open arc mapped to ``|z| = r``, counterclockwise."""
        lo, hi = -2.0 * self.beta, np.pi + 2.0 * self.beta
        if CoveringMap(self.param).inner_arc == "lower":
            lo, hi = hi, lo + 2.0 * np.pi
        return lo, hi

    def arcs(self):
        lo, hi = self.inner_arc_angles()
        return {"inner": (lo, hi), "outer": (hi, lo + 2.0 * np.pi)}

    @property
    def harmonic_measure_inner(self):
        """Harmonic measure at 0 of the arc mapped to ``|z| = r``."""
        L = self.param.L
        return (L - np.log(self.lam)) / (2.0 * L)

    def __call__(self, z):
        return covering(phi(z, self.b), self.param)

    def on_inner_arc(self, theta):
        lo, hi = self.inner_arc_angles()
        return np.mod(np.asarray(theta) - lo, 2.0 * np.pi) < (hi - lo)

    def endpoint_distance(self, theta):
        """Angular distance from each ``theta`` to the nearer arc endpoint."""
        lo, hi = self.inner_arc_angles()
        theta = np.asarray(theta, dtype=float)
        d = [np.abs(np.angle(np.exp(1j * (theta - e)))) for e in (lo, hi)]
        return np.minimum(*d)


def lambda_lift(lam, param, margin=1e-9):
    param = _param(param)
    lam = float(lam)
    if not (param.r + margin < lam < 1.0 / param.r - margin):
        raise GeometryError(
            f"lambda = {lam!r} must lie in ({param.r} + {margin}, {1 / param.r} - {margin})"
        )
    return LambdaMap(lam, param)


@dataclass
class BoundaryPartition:
    theta: np.ndarray
    values: np.ndarray
    arc_class: np.ndarray  # +1 inner (modulus r), -1 outer, 0 excluded
    arcs: dict
    eps: float
    r: float

    @property
    def classification_error(self):
        """Largest deviation of ``|pi_lam|`` from the modulus of its arc."""
        keep = self.arc_class != 0
        if not np.any(keep):
            return 0.0
        target = self.r ** self.arc_class[keep].astype(float)
        return float(np.abs(np.abs(self.values[keep]) - target).max())

    @property
    def arc_measure_total(self):
        return sum(hi - lo for lo, hi in self.arcs.values())


def boundary_partition(lmap, M=1024, eps=1e-3, offset=0.5):
    """Sample ``pi_lam`` at ``M`` uniform boundary points and classify each by
    the arc it lies on; samples within ``eps`` of an endpoint are excluded."""
    theta = 2.0 * np.pi * (np.arange(M) + offset) / M
    vals = lmap(np.exp(1j * theta))
    cls = np.where(lmap.on_inner_arc(theta), 1, -1)
    cls[lmap.endpoint_distance(theta) < eps] = 0
    return BoundaryPartition(theta, vals, cls, lmap.arcs(), eps, lmap.param.r)


def boundary_log_mean(lmap, order=64, panels=8):
    """``(1/2pi) int ln|pi_lam(e^{it})| dt`` by composite Gauss-Legendre on each
    arc, panels graded geometrically toward the endpoints."""
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for lo, hi in lmap.arcs().values():
        # geometric grading: panel breaks at lo + (hi - lo) * s with s dense near 0 and 1
        half = 0.5 ** np.arange(panels, 0, -1)
        s = np.concatenate([[0.0], half * 0.5, 1.0 - half[::-1] * 0.5, [1.0]])
        s = np.unique(s)
        breaks = lo + (hi - lo) * s
        for a, b in zip(breaks[:-1], breaks[1:]):
            t = 0.5 * (b - a) * x + 0.5 * (a + b)
            total += 0.5 * (b - a) * np.sum(w * np.log(np.abs(lmap(np.exp(1j * t)))))
    return total / (2.0 * np.pi)


def interior_log_mean(lmap, rho=0.9, M=1024):
    """Trapezoid mean of ``ln|pi_lam|`` on ``|z| = rho``; equals ``ln lam``
    because ``pi_lam`` has no zeros."""
    theta = 2.0 * np.pi * np.arange(M) / M
    return float(np.mean(np.log(np.abs(lmap(rho * np.exp(1j * theta))))))


def random_disc_points(count, seed, radius=1.0):
    rng = rng_from_seed(seed)
    return radius * np.sqrt(rng.uniform(0, 1, count)) * np.exp(2j * np.pi * rng.uniform(0, 1, count))
