import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cliffsurf.algebra import Multivector, basis_blade, quad_form
from cliffsurf.calculus import gauss_map
from cliffsurf.convergence import ratio_pass, ratios
from cliffsurf.duality import (
    bipolar_energy_residual,
    bipolar_reindex,
    minimal_sequence,
    pair_order,
    polar_dual,
    sequence_darboux_relation,
    span_rank,
    spinor_degree,
)
from cliffsurf.errors import NotGrade2, NotMinimal, NotSphereValued, RCapExceeded
from cliffsurf.zoo import surface
from oracle import DEGREE_TABLE, LAWSON_SPAN_RANK


def test_reindex_known_pairs():
    assert bipolar_reindex(basis_blade(4, 1, 2)).coeffs == {1: 1.0}
    out = bipolar_reindex(basis_blade(4, 3, 4))
    assert out.r == 6 and out.coeffs == {1 << 5: 1.0}
    assert pair_order(4)[3] == (2, 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=6, max_size=6))
def test_reindex_is_an_isometry(c):
    mv = Multivector(4, {(1 << (i - 1)) | (1 << (j - 1)): x for (i, j), x in zip(pair_order(4), c)})
    assert np.isclose(quad_form(bipolar_reindex(mv)), quad_form(mv))


def test_reindex_rejects_other_grades():
    with pytest.raises(NotGrade2):
        bipolar_reindex(basis_blade(4, 1) + basis_blade(4, 1, 2))


def test_reindex_grid_records_ordering():
    N = gauss_map(surface("clifford_torus", 16))
    out = bipolar_reindex(N)
    assert out.r == 6 and out.meta["reindex"]["order"] == "lexicographic"


def test_polar_dual_of_torus():
    res = polar_dual(surface("clifford_torus", 64))
    assert res.grade3_leak < 1e-12
    assert res.unit_error < 1e-2 and res.commutator < 1e-2


def test_polar_requires_sphere_values():
    with pytest.raises(NotSphereValued):
        polar_dual(surface("plane", 16))


@pytest.mark.parametrize("name", ["clifford_torus", "lawson"])
def test_polar_conformality_decays(name):
    vals = [polar_dual(surface(name, n)).conformality.max for n in (32, 64, 128)]
    assert ratio_pass(vals), ratios(vals)


def test_bipolar_energy_identity():
    f = surface("lawson", 64)
    assert bipolar_energy_residual(f, gauss_map(f)).max < 1e-2


def test_degree_table():
    for (g, r), d in DEGREE_TABLE.items():
        assert spinor_degree(g, r) == d
    assert spinor_degree(2, 4) == 4
    for bad in ((-1, 4), (2, 1), (1.5, 4)):
        with pytest.raises(ValueError):
            spinor_degree(*bad)


def test_sequence_caps():
    with pytest.raises(RCapExceeded):
        minimal_sequence(surface("round_sphere", 16).with_values(
            Multivector(5, {1 << i: c for i, c in enumerate([1.0, 0, 0, 0, 0])})), steps=2)
    with pytest.raises(RCapExceeded):
        minimal_sequence(surface("clifford_torus", 16), steps=3)


def test_sequence_rejects_non_harmonic_start():
    f = surface("clifford_torus", 48)
    U, V = f.coords()
    c = [np.cos(U) * (1 + 0.3 * np.sin(V)), np.sin(U) * (1 + 0.3 * np.sin(V)), np.cos(V), np.sin(V)]
    nrm = np.sqrt(sum(x * x for x in c))
    bumpy = f.with_values(Multivector(4, {1 << i: x / nrm for i, x in enumerate(c)}))
    with pytest.raises(NotMinimal):
        minimal_sequence(bumpy, steps=1)


def test_lawson_first_step_spans_five_dimensions():
    steps = minimal_sequence(surface("lawson", 64), steps=1)
    assert [s.r_n for s in steps] == [4, 6]
    assert steps[1].span_rank == LAWSON_SPAN_RANK and steps[1].gap >= 1e3
    assert steps[1].surface.values.grades() == {1}


def test_torus_first_step_spans_four_dimensions():
    steps = minimal_sequence(surface("clifford_torus", 32), steps=1)
    assert steps[1].span_rank == 4


def test_lawson_first_step_is_harmonic_at_second_order():
    vals = [minimal_sequence(surface("lawson", n), steps=1)[1].reports["harmonicity"].max
            for n in (64, 128, 256)]
    assert ratio_pass(vals), ratios(vals)


def test_span_rank_of_plane_like_data():
    rank, gap, _ = span_rank(surface("clifford_torus", 16))
    assert rank == 4 and gap > 1e3


@pytest.mark.parametrize("name", ["clifford_torus", "lawson"])
def test_darboux_ladder_decays(name):
    vals = [sequence_darboux_relation(surface(name, n), n_max=1).max for n in (32, 64, 128)]
    assert ratio_pass(vals), ratios(vals)


def test_ladder_rejects_negative_depth():
    with pytest.raises(ValueError):
        sequence_darboux_relation(surface("clifford_torus", 16), n_max=-1)
