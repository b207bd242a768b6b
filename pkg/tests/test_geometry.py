import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_dilation import geometry as geo
from annulus_dilation.params import AnnulusParam

P = AnnulusParam(0.5)


def test_strip_chart_examples():
    assert geo.strip_chart(0.0, P) == 0
    t = np.linspace(-3, 3, 13)
    ref = -(4 * P.L / np.pi) * np.arctan(t)
    assert np.allclose(geo.strip_chart(1j * t, P), ref, atol=1e-13)
    x = np.linspace(-0.95, 0.95, 11)
    assert np.abs(geo.strip_chart(x, P).real).max() <= 1e-15
    with pytest.raises(geo.GeometryError):
        geo.strip_chart(1.0, P)


def test_strip_chart_inverse():
    z = geo.random_disc_points(50, 1, radius=0.95)
    assert np.abs(geo.strip_chart_inverse(geo.strip_chart(z, P), P) - z).max() <= 1e-12


def test_covering_examples():
    cov = geo.CoveringMap(P)
    assert cov(0.0) == pytest.approx(1.0)
    x = np.linspace(-0.9, 0.9, 9)
    assert np.allclose(np.abs(cov(x)), 1.0, atol=1e-14)
    up = abs(cov(0.999999j))
    down = abs(cov(-0.999999j))
    assert {round(up, 4), round(down, 4)} == {P.r, 1 / P.r}
    assert cov.inner_arc in ("upper", "lower")
    assert (cov.inner_arc == "upper") == (abs(up - P.r) < 1e-3)


def test_covering_maps_into_annulus():
    z = geo.random_disc_points(500, 2, radius=0.999)
    m = np.abs(geo.covering(z, P))
    assert m.min() > P.r and m.max() < 1 / P.r


def test_deck_periodicity():
    z = geo.random_disc_points(40, 3, radius=0.7)
    for shift in (1, -1):
        zp = geo.deck_partner(z, P, shift)
        assert np.abs(zp).max() < 1
        assert np.abs(geo.covering(zp, P) - geo.covering(z, P)).max() <= 1e-9


def test_lambda_map_examples():
    lm = geo.lambda_lift(1.0, P)
    assert lm.b == 0.0
    assert lm(0.0) == pytest.approx(1.0)
    assert np.allclose(lm.endpoints, [1.0, -1.0])
    lo, hi = lm.inner_arc_angles()
    assert (lo, hi) in ((0.0, np.pi), (np.pi, 2 * np.pi))
    lam = np.sqrt(0.5)
    assert abs(geo.lambda_lift(lam, P)(0.0) - lam) <= 1e-10
    with pytest.raises(geo.GeometryError):
        geo.lambda_lift(P.r, P)


def test_harmonic_measure_by_quadrature():
    lm = geo.lambda_lift(1.0, P)
    assert lm.harmonic_measure_inner == pytest.approx(0.5, abs=1e-10)
    # mean of ln|pi| on the circle = omega ln r + (1 - omega) ln(1/r) = ln lam
    for lam in (0.6, 1.0, 1.7):
        lm = geo.lambda_lift(lam, P)
        mean = geo.boundary_log_mean(lm)
        assert mean == pytest.approx(np.log(lam), abs=1e-10)
        omega = (np.log(1 / P.r) - mean) / (2 * np.log(1 / P.r))
        assert omega == pytest.approx(lm.harmonic_measure_inner, abs=1e-10)
        assert geo.interior_log_mean(lm) == pytest.approx(np.log(lam), abs=1e-12)


def test_boundary_partition():
    for lam in (0.7, 1.0, 1.4):
        lm = geo.lambda_lift(lam, P)
        part = geo.boundary_partition(lm, M=1024, eps=1e-3)
        assert part.classification_error <= 1e-8
        assert part.arc_measure_total == pytest.approx(2 * np.pi)
        assert np.all(part.arc_class[lm.endpoint_distance(part.theta) < 1e-3] == 0)


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.51, 1.99), r=st.floats(0.1, 0.9))
def test_lambda_map_properties(lam, r):
    p = AnnulusParam(r)
    if not (r + 1e-6 < lam < 1 / r - 1e-6):
        return
    lm = geo.lambda_lift(lam, p)
    assert abs(lm(0.0) - lam) <= 1e-10 * lam
    z = geo.random_disc_points(20, 0, radius=0.99)
    m = np.abs(lm(z))
    assert m.min() >= r * (1 - 1e-12) and m.max() <= (1 + 1e-12) / r
    assert 0.0 < lm.harmonic_measure_inner < 1.0
