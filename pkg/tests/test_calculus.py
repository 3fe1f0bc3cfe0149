import numpy as np
import pytest

from cliffsurf.algebra import Multivector, basis_blade, quad_form
from cliffsurf.calculus import (
    conformality_residual,
    default_closed_threshold,
    differential,
    gauss_map,
    harmonicity_residual,
    hopf_report,
    integrate_potential,
    mcv_identity_residual,
    mean_curvature,
    star,
)
from cliffsurf.convergence import ratio_pass, ratios
from cliffsurf.errors import NotClosed, NotSphereValued
from cliffsurf.grid import OneFormField
from cliffsurf.transforms import conjugate_surface
from cliffsurf.zoo import surface
from oracle import CATENOID_CONJUGATE_PERIOD, SPHERE_HOPF_MAX


def _deriv_error(n):
    f = surface("graph", n)
    df = differential(f)
    U, V = f.coords()
    exact = 0.5 * U + 0.3 * V + 0.4 * U  # z_u for a=0.5, b=0.3, c=0.2
    return float(np.max(np.abs(df.comp_u.coeff(4) - exact)))


def test_derivatives_are_exact_on_quadratics():
    # central and one-sided second-order stencils differentiate quadratics exactly
    assert _deriv_error(16) < 1e-12


def test_star_squares_to_minus_one_with_metric():
    f = surface("graph", 12)
    df = differential(f)
    ss = star(star(df, f), f)
    assert (ss + df).comp_u.max_abs() < 1e-12 and (ss + df).comp_v.max_abs() < 1e-12


def test_gauss_map_of_plane_is_e1e2():
    N = gauss_map(surface("plane", 10))
    assert N.values.allclose(basis_blade(3, 1, 2) * np.ones((10, 10)))


@pytest.mark.parametrize("name", ["catenoid", "round_sphere", "helicoid"])
def test_conformality_decays(name):
    vals = [conformality_residual(f := surface(name, n), gauss_map(f), 0.15).max for n in (32, 64, 128)]
    assert ratio_pass(vals), ratios(vals)


def test_hopf_field_of_sphere_tends_to_half():
    f = surface("round_sphere", 128)
    assert abs(hopf_report(f, gauss_map(f)).max - SPHERE_HOPF_MAX) < 5e-3


def test_sphere_mean_curvature_is_unit_and_radial():
    f = surface("round_sphere", 128)
    H = mean_curvature(f)
    q = quad_form(H.values)[f.node_mask(0.15)]
    assert np.all(np.abs(q - 1.0) < 5e-2)
    radial = (H.values * f.values).grade(2)
    assert radial.max_abs() < 5e-2


def test_mean_curvature_identity_holds_on_graph():
    vals = [mcv_identity_residual(f := surface("graph", n), gauss_map(f), margin=0.15).max for n in (32, 64, 128)]
    assert ratio_pass(vals), ratios(vals)


def test_harmonicity_rejects_non_sphere_maps():
    with pytest.raises(NotSphereValued):
        harmonicity_residual(surface("plane", 16))


def test_integrate_exact_form_recovers_potential():
    f = surface("graph", 33)
    g, rep = integrate_potential(differential(f), f)
    shifted = f.values - f.values.at((0, 0))
    assert (g.values - shifted).max_abs() < 5e-3
    assert not rep.cut


def test_integrate_rejects_non_closed_form():
    f = surface("plane", 32)
    U, V = f.coords()
    e1 = basis_blade(3, 1)
    # u dv is not closed
    omega = OneFormField(Multivector.zeros(3), e1 * U)
    with pytest.raises(NotClosed):
        integrate_potential(omega, f)
    assert default_closed_threshold(f) < 1e-1


def test_catenoid_conjugate_has_the_waist_period():
    res = conjugate_surface(surface("catenoid", 64))
    assert res.periods.cut
    assert abs(res.periods.period_norms["u"] - CATENOID_CONJUGATE_PERIOD) < 1e-2
    assert res.construction.max < 1e-12
