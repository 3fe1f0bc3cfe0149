import math

import numpy as np
import pytest

from cliffsurf.algebra import Multivector
from cliffsurf.calculus import gauss_map, phi_fields
from cliffsurf.connections import (
    TT_STAR_XY,
    VARIANTS,
    flatness_sweep,
    lambda_connection_curvature,
    sigma_connection_curvature,
    sigma_samples,
    theta_samples,
    tt_star_form,
    tt_star_sweep,
    unit_circle_samples,
)
from cliffsurf.errors import NotSphereValued, SigmaZero
from cliffsurf.zoo import surface
from oracle import LAMBDA_CONTROL_RATIO


def bumpy_torus(n=48):
    """A unit-sphere map that is not harmonic."""
    t = surface("clifford_torus", n)
    U, V = t.coords()
    c = [np.cos(U) * (1 + 0.3 * np.sin(V)), np.sin(U) * (1 + 0.3 * np.sin(V)), np.cos(V), np.sin(V)]
    nrm = np.sqrt(sum(x * x for x in c))
    return t.with_values(Multivector(4, {1: c[0] / nrm, 2: c[1] / nrm, 4: c[2] / nrm, 8: c[3] / nrm}))


def _form_gap(a, b):
    d = a - b
    return max(d.comp_u.max_abs(), d.comp_v.max_abs())


@pytest.mark.parametrize("variant", VARIANTS)
@pytest.mark.parametrize("theta", [0.3, 1.9, 4.4])
def test_tt_star_calibration(variant, theta):
    p = bumpy_torus()
    phi, phit = phi_fields(p)
    base, shift = (phi, -1.0) if variant == "Phi" else (phit, 1.0)
    x, y = TT_STAR_XY[variant](theta)
    tt = tt_star_form(p, theta, variant)
    assert _form_gap(tt, base.lmul(p.values * y + (x + shift))) < 1e-12
    # the mirrored assignment is a different connection
    assert _form_gap(tt, base.lmul(p.values * (-y) + (x + shift))) > 1e-2


def test_trivial_member_is_flat_on_any_map():
    p = bumpy_torus()
    assert lambda_connection_curvature(p, 1.0, 0.0).curvature.max < 1e-12


def test_bumpy_torus_is_not_flat_on_the_circle():
    assert lambda_connection_curvature(bumpy_torus(), 0.0, 1.0).curvature.max > 0.1


def test_sigma_e1_matches_lambda_f():
    p = bumpy_torus()
    a = sigma_connection_curvature(p, (0.0, 1.0)).curvature
    b = lambda_connection_curvature(p, 0.0, 1.0).curvature
    assert np.max(np.abs(a.per_node - b.per_node)) < 1e-12


def test_sigma_zero_is_rejected():
    with pytest.raises(SigmaZero):
        sigma_connection_curvature(surface("clifford_torus", 16), (0.0, 0.0))


def test_non_sphere_input_is_rejected():
    with pytest.raises(NotSphereValued):
        lambda_connection_curvature(surface("catenoid", 16), 0.0, 1.0)


def test_control_ratio_off_the_circle():
    f = surface("clifford_torus", 64)
    a, b = (lambda_connection_curvature(f, x, 0.0).curvature.max for x in (1.2, 1.5))
    assert abs(a / b - LAMBDA_CONTROL_RATIO) < 1e-3


def _tori():
    return [surface("clifford_torus", n, 3 * n // 4) for n in (32, 64, 128)]


@pytest.mark.parametrize("variant", VARIANTS)
def test_torus_families_are_flat(variant):
    grids = _tori()
    for samples in (unit_circle_samples(), sigma_samples(), theta_samples()):
        rep = flatness_sweep(grids, samples, variant)
        assert rep.passed, rep.to_json()


def test_catenoid_gauss_map_is_harmonic_compatible():
    grids = [gauss_map(surface("catenoid", n)) for n in (32, 64, 128)]
    rep = flatness_sweep(grids, unit_circle_samples(), "PhiTilde", margin=0.15)
    assert rep.passed, rep.to_json()
    assert rep.to_csv_rows()[0][0] == "kind"


def test_sweep_flags_non_harmonic_maps():
    grids = [bumpy_torus(n) for n in (32, 64)]
    rep = flatness_sweep(grids, unit_circle_samples(4))
    assert rep.verdict == "not harmonic-compatible"


def test_tt_star_sweep_size():
    assert len(tt_star_sweep(surface("clifford_torus", 16), 4)) == 4
    with pytest.raises(ValueError):
        tt_star_sweep(surface("clifford_torus", 16), 3)
    assert math.isclose(sum(TT_STAR_XY["Phi"](0.4)[i] ** 2 for i in range(2)), 1.0)
