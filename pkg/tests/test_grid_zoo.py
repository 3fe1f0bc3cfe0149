import csv

import numpy as np
import pytest

from cliffsurf.algebra import Multivector, quad_form
from cliffsurf.errors import DimensionMismatch
from cliffsurf.grid import OneFormField, ResidualReport, SurfaceGrid, make_report, wedge
from cliffsurf.zoo import SURFACE_NAMES, SurfaceSpec, surface


def test_json_roundtrip_keeps_values_metric_and_flags(tmp_path):
    f = surface("lawson", 12, 10, m=3, k=2)
    path = tmp_path / "g.json"
    f.save(path)
    g = SurfaceGrid.load(path)
    assert (g.nu, g.nv, g.periodic_u, g.periodic_v, g.r) == (12, 10, True, True, 4)
    assert np.allclose(g.values.dense(), f.values.dense())
    assert np.allclose(g.metric.E, f.metric.E)


def test_from_json_rejects_bad_layouts():
    f = surface("plane", 8)
    data = f.to_json()
    data["values"] = data["values"][:-1]
    with pytest.raises(DimensionMismatch):
        SurfaceGrid.from_json(data)
    data = f.to_json()
    data["values"][3] = list(reversed(data["values"][3]))
    with pytest.raises(ValueError):
        SurfaceGrid.from_json(data)


def test_constant_values_broadcast_to_grid():
    g = SurfaceGrid(Multivector.scalar(3, 2.0), 9, 8, 0.1, 0.1)
    assert g.values.coeff(0).shape == (9, 8)


def test_node_mask_respects_periodic_axes():
    f = surface("catenoid", 21, 21)
    mask = f.node_mask(0.15)
    assert mask[:, 0].sum() == 0 and mask[0, :].sum() > 0
    assert mask.all(axis=0).sum() == mask[0].sum()


def test_one_form_algebra_and_wedge():
    a = Multivector.vector(3, [1.0, 0.0, 0.0])
    b = Multivector.vector(3, [0.0, 1.0, 0.0])
    w = OneFormField(a, b)
    assert (w + w).comp_u.allclose(a * 2.0)
    assert wedge(w, w).density.allclose(a * b - b * a)
    assert w.lmul(b).comp_u.allclose(b * a) and w.rmul(b).comp_u.allclose(a * b)


def test_report_normalisation_margin_and_csv(tmp_path):
    f = surface("plane", 11, 11)
    node = np.arange(121, dtype=float).reshape(11, 11)
    rep = make_report("x", node, 120.0, f)
    assert rep.max == 1.0
    inner_rep = make_report("x", node, 120.0, f, margin=0.2)
    assert inner_rep.max < 1.0 and "margin" in inner_rep.notes
    rep.write_csv(tmp_path / "r.csv", f)
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["i", "j", "u", "v", "residual"] and len(rows) == 122
    assert ResidualReport.from_json(rep.to_json()).max == rep.max


@pytest.mark.parametrize("name", SURFACE_NAMES)
def test_every_surface_generates(name):
    f = surface(name, 16)
    assert f.shape == (16, 16) and f.values.grades() == {1}


@pytest.mark.parametrize("name", ["round_sphere", "clifford_torus", "lawson"])
def test_sphere_valued_surfaces_are_unit(name):
    f = surface(name, 16)
    assert np.allclose(quad_form(f.values), 1.0)


def test_lawson_parameters_validated():
    with pytest.raises(ValueError):
        SurfaceSpec("lawson", 16, 16, {"m": 1, "k": 2})
    with pytest.raises(ValueError):
        SurfaceSpec("lawson", 16, 16, {"m": 2.5, "k": 1})
    with pytest.raises(ValueError):
        SurfaceSpec("torus_of_doom")
    with pytest.raises(ValueError):
        SurfaceSpec("plane", 4, 16)


def test_periodic_axis_excludes_endpoint():
    f = surface("catenoid", 16)
    U, _ = f.coords()
    assert np.isclose(U[-1, 0] + f.du, 2 * np.pi)
