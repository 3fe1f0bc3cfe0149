import numpy as np
import pytest

from cliffsurf.algebra import Multivector, basis_blade
from cliffsurf.calculus import gauss_map
from cliffsurf.convergence import ratio_pass, ratios
from cliffsurf.errors import NotHolomorphic, NotMinimal, SigmaZero, WedgeNotZero
from cliffsurf.transforms import (
    conjugate_surface,
    darboux,
    darboux_connection_residual,
    darboux_two_sided,
    g_sharp_residual,
    lambda_recipe,
    permutability_check,
    solve_chi,
    spin_transform,
)
from cliffsurf.calculus import differential
from cliffsurf.zoo import surface

SIZES = (32, 64, 128)
M = 0.15


def _right_N(n):
    f = surface("catenoid", n)
    return darboux(f, gauss_map(f), "right", g_base=basis_blade(3, 1, coeff=-2.0), margin=M)


def test_conjugate_of_catenoid_is_the_helicoid():
    f = surface("catenoid", 64)
    h = conjugate_surface(f).h
    # the catenoid drops the u = 2pi node, so sample the helicoid on the same nodes
    ref = surface("helicoid", 64, domain=(0, 2 * np.pi * 63 / 64, -1, 1)).values
    # the helicoid in the zoo satisfies dh = -*df and vanishes where the conjugate does
    shift = ref.at((0, 0))
    assert (h.values - (ref - shift)).max_abs() < 5e-3


def test_conjugate_requires_minimal_input():
    with pytest.raises(NotMinimal):
        conjugate_surface(surface("round_sphere", 32))


def test_right_darboux_defining_residual_decays():
    vals = [_right_N(n).defining_residual.max for n in SIZES]
    assert ratio_pass(vals), ratios(vals)


def test_left_darboux_defining_residual_decays():
    vals = []
    for n in SIZES:
        f = surface("catenoid", n)
        vals.append(darboux(f, gauss_map(f), "left", g_base=basis_blade(3, 1, coeff=-2.0),
                            margin=M).defining_residual.max)
    assert ratio_pass(vals), ratios(vals)


def test_g_sharp_is_a_darboux_transform_of_g():
    vals = [g_sharp_residual(_right_N(n), M).max for n in SIZES]
    assert ratio_pass(vals), ratios(vals)


def test_darboux_connection_is_flat():
    vals = []
    for n in SIZES:
        res = _right_N(n)
        vals.append(darboux_connection_residual(res.f_sharp, res.T, "right", M).max)
    assert ratio_pass(vals), ratios(vals)


def test_wedge_condition_is_enforced():
    f = surface("catenoid", 64)
    U, V = f.coords()
    bad = f.with_values(Multivector(3, {1: np.sin(3 * V) * np.cos(U), 2: U * 0 + 1.0}))
    with pytest.raises(WedgeNotZero):
        darboux(f, bad, "right")


def test_two_sided_on_plane_with_in_plane_offset():
    f = surface("plane", 32)
    res = darboux_two_sided(f, offset=basis_blade(3, 1, coeff=3.0))
    assert res.defining_residual.max < 1e-10


def test_two_sided_relation_fails_on_catenoid():
    # f + hN is a right transform only: h + c does not commute with N
    res = darboux_two_sided(surface("catenoid", 64), margin=M)
    assert res.defining_residual.extra["right"]["max"] < 1e-2
    assert res.defining_residual.extra["left"]["max"] > 0.5


def test_chi_is_minus_one_for_shifted_structures():
    f = surface("catenoid", 32)
    l0, l1 = lambda_recipe(f, "N"), lambda_recipe(f, "N_plus_c")
    chi, cond, relres = solve_chi(differential(l0), differential(l1))
    assert (chi + 1.0).max_abs() < 1e-12 and np.max(relres) < 1e-12


def test_permutability_decays():
    vals = []
    for n in SIZES:
        f = surface("catenoid", n)
        base = basis_blade(3, 1, coeff=-2.0)
        rep = permutability_check(f, lambda_recipe(f, "N"), lambda_recipe(f, "N_plus_c"),
                                  g0_base=base, g1_base=base, margin=M)
        vals.append(rep.max)
        assert rep.extra["relation"]["max"] < 1e-10
    assert ratio_pass(vals), ratios(vals)


def test_constant_pin_spin_transform_is_isometric():
    f = surface("catenoid", 64)
    res = spin_transform(f, lambda_recipe(f, "const_pin"))
    assert res.pairing_metric.max < 1e-10
    assert res.grade1_leak < 1e-12


def test_spin_transform_by_darboux_partner_is_conformal():
    vals = []
    for n in SIZES:
        f = surface("catenoid", n)
        res = spin_transform(f, lambda_recipe(f, "f_sharp"), margin=M)
        assert res.grade1_leak < 1e-8
        vals.append(res.conformality.max)
    assert ratio_pass(vals), ratios(vals)


def test_spin_transform_rejects_non_holomorphic_lambda():
    f = surface("catenoid", 64)
    U, V = f.coords()
    lam = f.with_values(Multivector(3, {0: 2.0 + np.cos(U) * V, 3: 0.1 * V**2}))
    with pytest.raises(NotHolomorphic):
        spin_transform(f, lam)


def test_unknown_recipe():
    with pytest.raises(ValueError):
        lambda_recipe(surface("plane", 8), "nope")
    assert SigmaZero.__mro__[1].__name__ == "CliffsurfError"
