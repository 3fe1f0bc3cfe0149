"""Finite-difference exterior calculus on Clifford-valued grids.

All derivatives are second order: central differences at interior and
periodic nodes, one-sided three-point stencils at non-periodic edges.  Forms
are node-collocated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Multivector, inner, membership, quad_form
from .errors import DegenerateMetric, GridTooSmall, NotClosed, NotSphereValued
from .grid import (
    MetricField,
    OneFormField,
    ResidualReport,
    SurfaceGrid,
    TwoFormField,
    field_scale,
    make_report,
    wedge,
)

DEGENERATE_TOL = 1e-10


def _deriv(c, h: float, axis: int, periodic: bool) -> np.ndarray:
    c = np.asarray(c, float)
    if periodic:
        return (np.roll(c, -1, axis) - np.roll(c, 1, axis)) / (2 * h)
    n = c.shape[axis]
    if n < 3:
        raise GridTooSmall(f"need at least 3 nodes along a non-periodic axis, got {n}")
    c = np.moveaxis(c, axis, 0)
    out = np.empty_like(c)
    out[1:-1] = (c[2:] - c[:-2]) / (2 * h)
    out[0] = (-3 * c[0] + 4 * c[1] - c[2]) / (2 * h)
    out[-1] = (3 * c[-1] - 4 * c[-2] + c[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def partial(grid: SurfaceGrid, mv: Multivector, axis: int) -> Multivector:
    """Derivative of a grid-shaped multivector along ``axis`` (0 = u, 1 = v)."""
    h, periodic = (grid.du, grid.periodic_u) if axis == 0 else (grid.dv, grid.periodic_v)
    shape = grid.shape
    return Multivector(mv.r, {m: _deriv(np.broadcast_to(c, shape), h, axis, periodic) for m, c in mv.coeffs.items()}, mv.tol)


def differential(f: SurfaceGrid) -> OneFormField:
    return OneFormField(partial(f, f.values, 0), partial(f, f.values, 1))


def exterior_derivative(omega: OneFormField, grid: SurfaceGrid) -> TwoFormField:
    """``d omega`` as the ``du ^ dv`` density ``d_u omega_v - d_v omega_u``."""
    return TwoFormField(partial(grid, omega.comp_v, 0) - partial(grid, omega.comp_u, 1))


def induced_metric(f: SurfaceGrid, df: OneFormField | None = None) -> MetricField:
    df = df or differential(f)
    shape = f.shape
    E = np.broadcast_to(quad_form(df.comp_u), shape)
    F = np.broadcast_to(inner(df.comp_u, df.comp_v), shape)
    G = np.broadcast_to(quad_form(df.comp_v), shape)
    return MetricField.from_efg(E, F, G)


def hodge_star(omega: OneFormField, g: MetricField, tol: float = DEGENERATE_TOL) -> OneFormField:
    """Rotation of 1-forms by the conformal structure of ``g``; ``** = -1``."""
    if np.any(g.W <= tol):
        raise DegenerateMetric(f"area density vanishes at {int(np.count_nonzero(g.W <= tol))} nodes")
    wu, wv = omega.comp_u, omega.comp_v
    return OneFormField((wv * g.E - wu * g.F) / g.W, (wv * g.F - wu * g.G) / g.W)


def star(omega: OneFormField, grid: SurfaceGrid) -> OneFormField:
    """Hodge star using the conformal structure carried by ``grid``."""
    if grid.metric is None:
        return OneFormField(omega.comp_v, -omega.comp_u)
    return hodge_star(omega, grid.metric)


def form_node_norm(omega: OneFormField) -> np.ndarray:
    """Per-node max over the two components of ``Q~^(1/2)``."""
    return np.maximum(np.sqrt(quad_form(omega.comp_u)), np.sqrt(quad_form(omega.comp_v)))


def _node(x, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(x, float), shape)


def _is_vector_valued(f: SurfaceGrid) -> bool:
    return all(bin(m).count("1") == 1 for m in f.values.coeffs)


def gauss_map(f: SurfaceGrid, tol: float = DEGENERATE_TOL, mask_degenerate: bool = False) -> SurfaceGrid:
    """Unit tangent bivector ``e_u e_v`` from the Gram-Schmidt frame of ``(f_u, f_v)``.

    With ``mask_degenerate`` nodes where the frame collapses get the value 0
    and are listed in ``meta['degenerate']``; otherwise they raise.
    """
    if not _is_vector_valued(f):
        raise ValueError("gauss_map needs a V_r-valued grid")
    df = differential(f)
    fu, fv = df.comp_u, df.comp_v
    lu = np.sqrt(_node(quad_form(fu), f.shape))
    bad = lu <= tol
    safe_lu = np.where(bad, 1.0, lu)
    eu = fu / safe_lu
    perp = fv - eu * _node(inner(eu, fv), f.shape)
    lp = np.sqrt(_node(quad_form(perp), f.shape))
    bad |= lp <= tol * np.maximum(1.0, np.sqrt(_node(quad_form(fv), f.shape)))
    n_bad = int(np.count_nonzero(bad))
    if n_bad and not mask_degenerate:
        raise DegenerateMetric(f"Gauss map undefined at {n_bad} nodes")
    ev = perp / np.where(bad, 1.0, lp)
    N = (eu * ev).grade(2) * np.where(bad, 0.0, 1.0)
    meta = {"degenerate": n_bad} if n_bad else {}
    return f.with_values(N, name=(f.name + ":N").lstrip(":"), meta=meta)


# residuals -------------------------------------------------------------
def conformality_residual(f: SurfaceGrid, N: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    df = differential(f)
    sdf = star(df, f)
    r1 = sdf - df.lmul(N.values)
    r2 = sdf + df.rmul(N.values)
    node = np.maximum(form_node_norm(r1), form_node_norm(r2))
    scale = field_scale(form_node_norm(df), f, margin)
    return make_report("conformality", node, scale, f, margin, notes="|*df - N df|, |*df + df N| over max|df|")


def hopf_field(f: SurfaceGrid, N: SurfaceGrid) -> OneFormField:
    dN = differential(N)
    return (star(dN, f) + dN.lmul(N.values)).scale(0.25)


def hopf_report(f: SurfaceGrid, N: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """Sup norm of the Hopf field, unnormalised since it is already a curvature quantity."""
    A = hopf_field(f, N)
    return make_report("hopf", form_node_norm(A), 1.0, f, margin, notes="max |A_N|")


def laplace_beltrami(f: SurfaceGrid, g: MetricField | None = None) -> Multivector:
    df = differential(f)
    g = g or induced_metric(f, df)
    if np.any(g.W <= DEGENERATE_TOL):
        raise DegenerateMetric("area density vanishes")
    fu, fv = df.comp_u, df.comp_v
    a = (fu * g.G - fv * g.F) / g.W
    b = (fv * g.E - fu * g.F) / g.W
    return (partial(f, a, 0) + partial(f, b, 1)) / g.W


def mean_curvature(f: SurfaceGrid) -> SurfaceGrid:
    """Mean curvature vector ``H = (1/2) Lap f`` (sign fixed by the mean-curvature identity)."""
    return f.with_values(laplace_beltrami(f) * 0.5, name=(f.name + ":H").lstrip(":"))


def mcv_identity_residual(f: SurfaceGrid, N: SurfaceGrid, H: SurfaceGrid | None = None,
                          margin: float = 0.0) -> ResidualReport:
    """Residual of ``*dN + N dN = -2 H df = 2 df H``."""
    H = H or mean_curvature(f)
    df = differential(f)
    dN = differential(N)
    lhs = star(dN, f) + dN.lmul(N.values)
    r1 = lhs + df.lmul(H.values).scale(2.0)
    r2 = lhs - df.rmul(H.values).scale(2.0)
    node = np.maximum(form_node_norm(r1), form_node_norm(r2))
    scale = max(field_scale(form_node_norm(lhs), f, margin), field_scale(form_node_norm(dN), f, margin))
    return make_report("mcv_identity", node, scale, f, margin, notes="normalised by max(|*dN + N dN|, |dN|)")


def check_sphere_valued(f: SurfaceGrid, tol: float = 1e-8) -> None:
    q = _node(quad_form(f.values), f.shape)
    if np.max(np.abs(q - 1.0)) > tol or not np.all(membership(f.values.with_tol(tol), "E")):
        raise NotSphereValued("values are not unit elements of E(V_r)")


def harmonicity_residual(f: SurfaceGrid, margin: float = 0.0, tol: float = 1e-8) -> ResidualReport:
    """Plaquette norms of ``d(f *df)`` and ``d(*df f)`` over the peak energy density."""
    check_sphere_valued(f, tol)
    df = differential(f)
    sdf = star(df, f)
    a = exterior_derivative(sdf.lmul(f.values), f).norm()
    b = exterior_derivative(sdf.rmul(f.values), f).norm()
    energy = _node(quad_form(df.comp_u) + quad_form(df.comp_v), f.shape)
    scale = float(np.max(energy[f.node_mask(margin)]))
    return make_report("harmonicity", np.maximum(a, b), scale, f, margin, notes="|d(f*df)| over max energy density")


def phi_fields(f: SurfaceGrid, tol: float = 1e-8) -> tuple[OneFormField, OneFormField]:
    """``Phi = (*df + f df)/4`` and ``Phi~ = (*df - f df)/4``."""
    check_sphere_valued(f, tol)
    df = differential(f)
    sdf = star(df, f)
    fdf = df.lmul(f.values)
    return (sdf + fdf).scale(0.25), (sdf - fdf).scale(0.25)


def holomorphic_residual(phi: SurfaceGrid, N: SurfaceGrid, side: str = "left", margin: float = 0.0,
                         tol: float = 1e-8) -> ResidualReport:
    """``(d phi + N *d phi)/2`` (left) or ``(d phi + *d phi N)/2`` (right), over max |d phi|."""
    if not np.all(membership(N.values.with_tol(tol), "J")):
        raise ValueError("N must be J(V_r)-valued")
    dphi = differential(phi)
    sd = star(dphi, phi)
    if side == "left":
        op = (dphi + sd.lmul(N.values)).scale(0.5)
    elif side == "right":
        op = (dphi + sd.rmul(N.values)).scale(0.5)
    else:
        raise ValueError(f"side must be left or right, got {side!r}")
    scale = field_scale(form_node_norm(dphi), phi, margin)
    return make_report(f"holomorphic_{side}", form_node_norm(op), scale, phi, margin)


def wedge_residual(name: str, a: OneFormField, b: OneFormField, grid: SurfaceGrid,
                   margin: float = 0.0, b_floor: float = 0.0) -> ResidualReport:
    """Max of ``|a ^ b|`` and ``|b ^ a|`` over ``max|a| * max(max|b|, b_floor)``.

    ``b_floor`` keeps the ratio meaningful when ``b`` is roundoff-sized, e.g.
    the differential of a constant.
    """
    node = np.maximum(wedge(a, b).norm(), wedge(b, a).norm())
    scale = field_scale(form_node_norm(a), grid, margin) * max(field_scale(form_node_norm(b), grid, margin), b_floor)
    return make_report(name, node, scale, grid, margin)


# integration -----------------------------------------------------------
@dataclass
class PeriodReport:
    closedness: ResidualReport
    periods: dict = field(default_factory=dict)
    period_norms: dict = field(default_factory=dict)
    cut: bool = False

    def to_json(self) -> dict:
        return {
            "closedness": self.closedness.to_json(),
            "periods": {k: v.to_json() for k, v in self.periods.items()},
            "period_norms": self.period_norms,
            "cut": self.cut,
        }


def closedness_report(omega: OneFormField, grid: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """``|d omega|`` relative to ``max|omega|`` divided by the shorter axis length.

    The length factor makes the number dimensionless, so it compares directly
    with ``h^2``.
    """
    dens = exterior_derivative(omega, grid).norm()
    L = min(grid.du * grid.nu, grid.dv * grid.nv)
    scale = field_scale(form_node_norm(omega), grid, margin) / L
    return make_report("closedness", dens, scale, grid, margin)


def default_closed_threshold(grid: SurfaceGrid) -> float:
    """``50 (h/L)^2``; compared against the mean closedness residual."""
    L = min(grid.du * grid.nu, grid.dv * grid.nv)
    return 50.0 * (grid.h / L) ** 2


def integrate_potential(omega: OneFormField, grid: SurfaceGrid, base: tuple[int, int] = (0, 0),
                        closed_threshold: float | None = None, margin: float = 0.0,
                        period_tol: float = 1e-9) -> tuple[SurfaceGrid, PeriodReport]:
    """Trapezoidal path integration of a closed 1-form.

    Sweep: along the row ``j = base_j`` in ``u``, then up each column in ``v``.
    The result vanishes at ``base``.  Period integrals over periodic axes are
    reported; if any is non-zero the potential lives on the cut domain and the
    returned grid has its periodic flags cleared.
    """
    closed = closedness_report(omega, grid, margin)
    thr = default_closed_threshold(grid) if closed_threshold is None else closed_threshold
    closed.extra["threshold"] = thr
    # the mean is gated: one-sided edge stencils put O(h) errors on an O(h) fraction of nodes
    if closed.mean > thr:
        raise NotClosed(f"mean closedness residual {closed.mean:.3e} exceeds threshold {thr:.3e}")

    shape = grid.shape
    bi, bj = base
    masks = sorted(set(omega.comp_u.coeffs) | set(omega.comp_v.coeffs))
    out: dict[int, np.ndarray] = {}
    periods_u: dict[int, float] = {}
    periods_v: dict[int, float] = {}
    for m in masks:
        wu = _node(omega.comp_u.coeff(m), shape)
        wv = _node(omega.comp_v.coeff(m), shape)
        row = np.concatenate([[0.0], np.cumsum(0.5 * grid.du * (wu[1:, bj] + wu[:-1, bj]))])
        row -= row[bi]
        col = np.concatenate([np.zeros((shape[0], 1)), np.cumsum(0.5 * grid.dv * (wv[:, 1:] + wv[:, :-1]), axis=1)], axis=1)
        col -= col[:, [bj]]
        out[m] = row[:, None] + col
        if grid.periodic_u:
            periods_u[m] = float(grid.du * np.sum(wu[:, bj]))
        if grid.periodic_v:
            periods_v[m] = float(grid.dv * np.sum(wv[bi, :]))

    r = omega.r
    periods = {}
    norms = {}
    if grid.periodic_u:
        periods["u"] = Multivector(r, periods_u)
        norms["u"] = float(np.sqrt(quad_form(periods["u"])))
    if grid.periodic_v:
        periods["v"] = Multivector(r, periods_v)
        norms["v"] = float(np.sqrt(quad_form(periods["v"])))
    scale = max(1.0, field_scale(form_node_norm(omega), grid) * max(grid.du * grid.nu, grid.dv * grid.nv))
    cut = any(n > period_tol * scale for n in norms.values())
    g = grid.with_values(Multivector(r, out), name="potential", meta={})
    if cut:
        g = g.cut()
    return g, PeriodReport(closed, periods, norms, cut)
