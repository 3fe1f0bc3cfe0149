"""Spin transforms, conjugate surfaces, Darboux transforms and their checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Multivector, basis_blade, inner, inverse, left_matrix, quad_form
from .calculus import (
    PeriodReport,
    differential,
    form_node_norm,
    gauss_map,
    holomorphic_residual,
    hopf_field,
    integrate_potential,
    star,
    wedge_residual,
)
from .errors import IllConditionedChi, NotHolomorphic, NotInvertible, NotMinimal, WedgeNotZero
from .grid import OneFormField, ResidualReport, SurfaceGrid, field_scale, make_report


def _ad(x: Multivector, phi: Multivector) -> Multivector:
    return x * phi * inverse(x)


def _length(grid: SurfaceGrid) -> float:
    return min(grid.du * grid.nu, grid.dv * grid.nv)


def _const(grid: SurfaceGrid, mv: Multivector) -> SurfaceGrid:
    return grid.with_values(mv, name="const", meta={})


# spinor pairing and spin transforms -----------------------------------
def spinor_pairing(lam: SurfaceGrid | Multivector, df: OneFormField, gamma: SurfaceGrid | Multivector) -> OneFormField:
    """``lam * df * alpha(gamma)^T`` componentwise."""
    lv = lam.values if isinstance(lam, SurfaceGrid) else lam
    gv = gamma.values if isinstance(gamma, SurfaceGrid) else gamma
    if lv.r != df.r or gv.r != df.r:
        raise ValueError("r mismatch in spinor pairing")
    return df.lmul(lv).rmul(gv.conj())


@dataclass
class SpinTransformResult:
    f_new: SurfaceGrid
    closedness: ResidualReport
    gauss_old: SurfaceGrid
    gauss_new: SurfaceGrid
    periods: PeriodReport
    holomorphic: ResidualReport | None = None
    conformality: ResidualReport | None = None
    grade1_leak: float = 0.0
    pairing_metric: ResidualReport | None = None

    def to_json(self) -> dict:
        out = {"closedness": self.closedness.to_json(), "periods": self.periods.to_json(),
               "grade1_leak": self.grade1_leak}
        for k in ("holomorphic", "conformality", "pairing_metric"):
            rep = getattr(self, k)
            if rep is not None:
                out[k] = rep.to_json()
        return out


def spin_transform(f: SurfaceGrid, lam: SurfaceGrid, holo_threshold: float | None = None,
                   closed_threshold: float | None = None, margin: float = 0.0) -> SpinTransformResult:
    """Integrate ``lam df alpha(lam)^T`` to a new conformal map.

    ``lam`` must satisfy ``*d lam = d lam N``, the right holomorphic structure
    for the Gauss map ``N`` of ``f``.
    """
    if (lam.periodic_u, lam.periodic_v) != (f.periodic_u, f.periodic_v):
        f, lam = f.cut(), lam.cut()
    N = gauss_map(f)
    holo = None
    if lam.values.shape == () or all(not np.any(np.ptp(c)) for c in lam.values.coeffs.values()):
        pass  # constant sections are trivially holomorphic
    else:
        holo = holomorphic_residual(lam, N, side="right", margin=margin)
        thr = 50.0 * (lam.h / _length(lam)) ** 2 if holo_threshold is None else holo_threshold
        holo.extra["threshold"] = thr
        if holo.mean > thr:
            raise NotHolomorphic(f"right holomorphic residual {holo.mean:.3e} exceeds {thr:.3e}")
    lam_inv = inverse(lam.values)  # raises NotInvertible
    df = differential(f)
    omega = spinor_pairing(lam, df, lam)
    f_new, periods = integrate_potential(omega, f, closed_threshold=closed_threshold, margin=margin)
    N_new = f.with_values(lam.values * N.values * lam_inv, name="Ad_lam N")
    leak = 0.0
    grades = f_new.values.grades() - {1}
    if grades:
        scale = max(f_new.values.max_abs(), 1e-300)
        leak = max(float(np.max(np.abs(c))) for m, c in f_new.values.coeffs.items() if bin(m).count("1") != 1) / scale
    f_new = f_new.with_values(f_new.values, name="spin_transform", metric=f.metric)
    conf = _conformality_with(f_new, N_new, f, margin)
    pm = pairing_metric_residual(omega, df, lam.values, f, margin)
    return SpinTransformResult(f_new, periods.closedness, N, N_new, periods, holo, conf, leak, pm)


def pairing_metric_residual(omega: OneFormField, df: OneFormField, lam: Multivector, grid: SurfaceGrid,
                            margin: float = 0.0) -> ResidualReport:
    """Metric of ``omega`` against ``|lam|^4`` times the metric of ``df``, node by node.

    This compares first fundamental forms before any integration, so for a
    constant unit ``lam`` it is exact up to roundoff.
    """
    s = quad_form(lam) ** 2
    shape = grid.shape
    diffs = [
        quad_form(omega.comp_u) - s * quad_form(df.comp_u),
        inner(omega.comp_u, omega.comp_v) - s * inner(df.comp_u, df.comp_v),
        quad_form(omega.comp_v) - s * quad_form(df.comp_v),
    ]
    node = np.max([np.abs(np.broadcast_to(d, shape)) for d in diffs], axis=0)
    ref = np.broadcast_to(s * (quad_form(df.comp_u) + quad_form(df.comp_v)), shape)
    return make_report("pairing_metric", node, field_scale(ref, grid, margin), grid, margin)


def _conformality_with(g: SurfaceGrid, N: SurfaceGrid, structure: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """``|*dg - N dg|`` and ``|*dg + dg N|`` using ``structure``'s Hodge star."""
    dg = differential(g)
    sdg = star(dg, structure)
    node = np.maximum(form_node_norm(sdg - dg.lmul(N.values)), form_node_norm(sdg + dg.rmul(N.values)))
    return make_report("conformality", node, field_scale(form_node_norm(dg), g, margin), g, margin)


# conjugate surface ----------------------------------------------------
@dataclass
class ConjugateResult:
    h: SurfaceGrid
    periods: PeriodReport
    construction: ResidualReport
    derivative: ResidualReport
    hopf: ResidualReport

    def to_json(self) -> dict:
        return {"periods": self.periods.to_json(), "construction": self.construction.to_json(),
                "derivative": self.derivative.to_json(), "hopf": self.hopf.to_json()}


def minimality_report(f: SurfaceGrid, N: SurfaceGrid | None = None) -> ResidualReport:
    """Hopf field relative to ``max|dN|``; gated on its mean like closedness."""
    N = N or gauss_map(f)
    A = hopf_field(f, N)
    dN = differential(N)
    scale = field_scale(form_node_norm(dN), f)
    return make_report("minimality", form_node_norm(A), scale if scale > 0 else 1.0, f)


def conjugate_surface(f: SurfaceGrid, minimal_threshold: float | None = None,
                      closed_threshold: float | None = None, margin: float = 0.0) -> ConjugateResult:
    """``h`` with ``dh = -*df``, integrated on the cut domain from node (0, 0)."""
    N = gauss_map(f)
    mini = minimality_report(f, N)
    thr = 50.0 * (f.h / _length(f)) ** 2 if minimal_threshold is None else minimal_threshold
    mini.extra["threshold"] = thr
    if mini.mean > thr:
        raise NotMinimal(f"mean Hopf field {mini.mean:.3e} exceeds {thr:.3e}")
    df = differential(f)
    omega = -star(df, f)
    h, periods = integrate_potential(omega, f, closed_threshold=closed_threshold, margin=margin)
    h = h.with_values(h.values, name="conjugate")
    construction = sweep_consistency(h, omega)
    dh = differential(h)
    node = form_node_norm(dh - omega)
    deriv = make_report("dh_plus_star_df", node, field_scale(form_node_norm(omega), h, margin), h, margin)
    return ConjugateResult(h, periods, construction, deriv, mini)


def sweep_consistency(g: SurfaceGrid, omega: OneFormField) -> ResidualReport:
    """Edge check of a potential against the trapezoid rule along the sweep path.

    Along the base row and every column, ``g[k+1] - g[k]`` must equal the
    trapezoid average of ``omega`` times the spacing.  This is the discrete
    statement that ``dg = omega`` holds by construction.
    """
    shape = g.shape
    worst = np.zeros(shape)
    scale = field_scale(form_node_norm(omega), g) * max(g.du, g.dv)
    for m in set(g.values.coeffs) | set(omega.comp_u.coeffs) | set(omega.comp_v.coeffs):
        gv = np.broadcast_to(g.values.coeff(m), shape)
        wu = np.broadcast_to(omega.comp_u.coeff(m), shape)
        wv = np.broadcast_to(omega.comp_v.coeff(m), shape)
        eu = np.abs(np.diff(gv[:, 0]) - 0.5 * g.du * (wu[1:, 0] + wu[:-1, 0]))
        ev = np.abs(np.diff(gv, axis=1) - 0.5 * g.dv * (wv[:, 1:] + wv[:, :-1]))
        worst[1:, 0] = np.maximum(worst[1:, 0], eu)
        worst[:, 1:] = np.maximum(worst[:, 1:], ev)
    return make_report("sweep_consistency", worst, scale, g, notes="edge-wise trapezoid identity")


# Darboux transforms ----------------------------------------------------
@dataclass
class DarbouxResult:
    f_sharp: SurfaceGrid
    T: SurfaceGrid
    N_sharp: SurfaceGrid
    defining_residual: ResidualReport
    side: str
    g: SurfaceGrid | None = None
    lam: SurfaceGrid | None = None
    closedness: ResidualReport | None = None
    wedge: ResidualReport | None = None
    periods: PeriodReport | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"side": self.side, "defining_residual": self.defining_residual.to_json()}
        for k in ("closedness", "wedge"):
            rep = getattr(self, k)
            if rep is not None:
                out[k] = rep.to_json()
        if self.periods is not None:
            out["periods"] = self.periods.to_json()
        for k, v in self.extra.items():
            out[k] = v.to_json() if hasattr(v, "to_json") else v
        return out


def _map_scale(g: SurfaceGrid, dg: OneFormField, margin: float) -> float:
    """``max(max|dg|, max|g| / L)``; the second term only matters for (near) constant maps."""
    size = field_scale(np.sqrt(np.broadcast_to(quad_form(g.values), g.shape)), g, margin) / _length(g)
    return max(field_scale(form_node_norm(dg), g, margin), size)


def right_darboux_residual(f_sharp: SurfaceGrid, T: Multivector, N_tilde: Multivector,
                           structure: SurfaceGrid, margin: float = 0.0) -> tuple[ResidualReport, Multivector]:
    """``*df# = N# df#`` with ``N# = -Ad_T N~``."""
    N_sharp = -_ad(T, N_tilde)
    df = differential(f_sharp)
    sdf = star(df, structure)
    node = form_node_norm(sdf - df.lmul(N_sharp))
    return make_report("right_darboux", node, _map_scale(f_sharp, df, margin), f_sharp, margin), N_sharp


def left_darboux_residual(f_sharp: SurfaceGrid, T: Multivector, N: Multivector,
                          structure: SurfaceGrid, margin: float = 0.0) -> tuple[ResidualReport, Multivector]:
    """``*df_# = -df_# N~_#`` with ``N~_# = -Ad_{T^-1} N``."""
    T_inv = inverse(T)
    N_sharp = -(T_inv * N * T)
    df = differential(f_sharp)
    sdf = star(df, structure)
    node = form_node_norm(sdf + df.rmul(N_sharp))
    return make_report("left_darboux", node, _map_scale(f_sharp, df, margin), f_sharp, margin), N_sharp


def wedge_threshold(grid: SurfaceGrid) -> float:
    return 50.0 * (grid.h / _length(grid)) ** 2


def darboux(f: SurfaceGrid, lam: SurfaceGrid, side: str = "right", g_base: Multivector | None = None,
            N_tilde: SurfaceGrid | None = None, wedge_tol: float | None = None,
            closed_threshold: float | None = None, margin: float = 0.0) -> DarbouxResult:
    """Quotient construction of a one-sided Darboux transform.

    right: ``dg = -df lam``, ``f# = f + g lam^-1``;
    left:  ``dg = -lam df``, ``f_# = f + lam^-1 g``.
    ``g`` takes the value ``g_base`` (default 0) at node (0, 0).  ``N_tilde``
    is the complex structure with ``*df = -df N~`` (right) or ``*df = N df``
    (left); it defaults to the Gauss map of a V_r-valued ``f``.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be left or right, got {side!r}")
    f = f.cut()
    lam = lam.cut()
    Nt = (N_tilde.values if N_tilde is not None else gauss_map(f).values)
    df = differential(f)
    dlam = differential(lam)
    lam_floor = field_scale(np.sqrt(np.broadcast_to(quad_form(lam.values), f.shape)), f) / _length(f)
    pair = (df, dlam) if side == "right" else (dlam, df)
    wed = wedge_residual("wedge", *pair, f, margin, b_floor=lam_floor)
    thr = wedge_threshold(f) if wedge_tol is None else wedge_tol
    wed.extra["threshold"] = thr
    if wed.mean > thr:
        raise WedgeNotZero(f"mean wedge residual {wed.mean:.3e} exceeds {thr:.3e}")
    lam_inv = inverse(lam.values)
    omega = -df.rmul(lam.values) if side == "right" else -df.lmul(lam.values)
    g, periods = integrate_potential(omega, f, closed_threshold=closed_threshold, margin=margin)
    if g_base is not None:
        g = g.with_values(g.values + g_base)
    T = g.values * lam_inv if side == "right" else lam_inv * g.values
    if np.any(quad_form(T) <= 1e-12):
        raise NotInvertible("T vanishes at some node")
    inverse(T)
    f_sharp = f.with_values(f.values + T, name=f"darboux_{side}")
    if side == "right":
        res, N_sharp = right_darboux_residual(f_sharp, T, Nt, f, margin)
    else:
        res, N_sharp = left_darboux_residual(f_sharp, T, Nt, f, margin)
    return DarbouxResult(f_sharp, f.with_values(T, name="T"), f.with_values(N_sharp, name="N_sharp"), res, side,
                         g, lam, periods.closedness, wed, periods)


def g_sharp_residual(res: DarbouxResult, margin: float = 0.0) -> ResidualReport:
    """``g# = f# lam = g + f lam`` is a right Darboux transform of ``g``.

    ``g`` has ``*dg = -dg Ad_{lam^-1} N~`` and the transform offset is ``f lam``.
    """
    lam = res.lam.values
    f = res.f_sharp.values - res.T.values
    N_tilde_f = -(inverse(res.T.values) * res.N_sharp.values * res.T.values)
    N_tilde_g = inverse(lam) * N_tilde_f * lam
    g_sharp = res.g.with_values(res.g.values + f * lam, name="g_sharp")
    rep, _ = right_darboux_residual(g_sharp, f * lam, N_tilde_g, res.f_sharp, margin)
    rep.name = "g_sharp_right_darboux"
    return rep


def darboux_two_sided(f: SurfaceGrid, T: SurfaceGrid | None = None, offset: Multivector | None = None,
                      margin: float = 0.0) -> DarbouxResult:
    """Two-sided transform ``f# = f + T`` with both defining relations checked.

    The default ``T = (h + offset) N`` comes from the conjugate surface ``h``
    of a minimal ``f``; ``offset`` (default ``2 e1``) shifts ``h`` so that
    ``T`` has no zeros.
    """
    f = f.cut()
    N = gauss_map(f)
    extra = {}
    if T is None:
        conj = conjugate_surface(f, margin=margin)
        off = offset if offset is not None else basis_blade(f.r, 1, coeff=2.0)
        Tv = (conj.h.values + off) * N.values
        extra["conjugate"] = conj.periods.to_json()
    else:
        Tv = T.values
    inverse(Tv)
    f_sharp = f.with_values(f.values + Tv, name="darboux_two_sided")
    right, N_sharp = right_darboux_residual(f_sharp, Tv, N.values, f, margin)
    left, _ = left_darboux_residual(f_sharp, Tv, N.values, f, margin)
    worst = right if right.max >= left.max else left
    combined = ResidualReport("two_sided_darboux", max(right.max, left.max), max(right.mean, left.mean),
                              f.nu, f.nv, worst.notes, per_node=np.fmax(right.per_node, left.per_node),
                              extra={"right": right.to_json(), "left": left.to_json()})
    return DarbouxResult(f_sharp, f.with_values(Tv, name="T"), f.with_values(N_sharp, name="N_sharp"), combined,
                         "two_sided", extra=extra)


def isothermic_dual_residual(f: SurfaceGrid, fc: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """``df ^ dfc`` and ``dfc ^ df`` over ``max|df| max|dfc|``."""
    rep = wedge_residual("isothermic_dual", differential(f), differential(fc), f, margin)
    return rep


def _section_basis(r: int, full: bool = False) -> list[Multivector]:
    if full:
        return [Multivector(r, {m: 1.0}) for m in range(1 << r)]
    return [Multivector.scalar(r), basis_blade(r, 1), basis_blade(r, 1, 2)]


def connection_curvature(grid: SurfaceGrid, act_u, act_v, sections, scale: float, name: str,
                         margin: float = 0.0) -> ResidualReport:
    """Plaquette curvature ``d_u(A_v p) - d_v(A_u p) + A_u(A_v p) - A_v(A_u p)``.

    ``act_u``/``act_v`` map a constant or grid section to ``A_u p``/``A_v p``.
    The node norm is the max over the test sections.
    """
    from .calculus import partial

    worst = np.zeros(grid.shape)
    for phi in sections:
        av = act_v(phi)
        au = act_u(phi)
        curv = partial(grid, av, 0) - partial(grid, au, 1) + act_u(av) - act_v(au)
        worst = np.maximum(worst, np.sqrt(np.broadcast_to(quad_form(curv), grid.shape)))
    return make_report(name, worst, scale, grid, margin)


def darboux_connection_residual(f_sharp: SurfaceGrid, T: SurfaceGrid, side: str = "right",
                                margin: float = 0.0, full_basis: bool = False) -> ResidualReport:
    """Curvature of ``d + T^-1 df#`` (right, acting on the left) or ``d + . df_# T^-1`` (left)."""
    df = differential(f_sharp)
    T_inv = inverse(T.values)
    if side == "right":
        Au, Av = T_inv * df.comp_u, T_inv * df.comp_v
        act_u, act_v = (lambda p: Au * p), (lambda p: Av * p)
    elif side == "left":
        Au, Av = df.comp_u * T_inv, df.comp_v * T_inv
        act_u, act_v = (lambda p: p * Au), (lambda p: p * Av)
    else:
        raise ValueError(f"side must be left or right, got {side!r}")
    a2 = np.broadcast_to(quad_form(Au) + quad_form(Av), f_sharp.shape)
    scale = float(np.max(a2[f_sharp.node_mask(margin)]))
    return connection_curvature(f_sharp, act_u, act_v, _section_basis(f_sharp.r, full_basis), scale,
                                f"darboux_connection_{side}", margin)


# permutability ---------------------------------------------------------
def solve_chi(dl0: OneFormField, dl1: OneFormField, side: str = "right") -> tuple[Multivector, np.ndarray, np.ndarray]:
    """Nodewise least squares for ``d lam0 = -d lam1 chi`` (right) or ``-chi d lam1`` (left).

    Returns ``(chi, cond, relres)`` with the normal-matrix condition number and
    the relative residual of the fit.
    """
    from .algebra import right_matrix

    r = dl0.r
    mat = left_matrix if side == "right" else right_matrix
    Mu, Mv = mat(dl1.comp_u), mat(dl1.comp_v)
    shape = np.broadcast_shapes(Mu.shape[:-2], Mv.shape[:-2])
    Mu, Mv = np.broadcast_to(Mu, shape + Mu.shape[-2:]), np.broadcast_to(Mv, shape + Mv.shape[-2:])
    bu = -np.broadcast_to(dl0.comp_u.dense(), shape + (1 << r,))
    bv = -np.broadcast_to(dl0.comp_v.dense(), shape + (1 << r,))
    A = np.concatenate([Mu, Mv], axis=-2)
    b = np.concatenate([bu, bv], axis=-1)
    AtA = np.swapaxes(A, -1, -2) @ A
    Atb = (np.swapaxes(A, -1, -2) @ b[..., None])[..., 0]
    sv = np.linalg.svd(AtA, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(sv[..., -1] > 0, sv[..., 0] / sv[..., -1], np.inf)
    safe = np.where(np.isfinite(cond)[..., None, None], AtA, np.eye(AtA.shape[-1]))
    x = np.linalg.solve(safe, Atb[..., None])[..., 0]
    fit = (A @ x[..., None])[..., 0] - b
    with np.errstate(divide="ignore", invalid="ignore"):
        relres = np.linalg.norm(fit, axis=-1) / np.maximum(np.linalg.norm(b, axis=-1), 1e-300)
    return Multivector.from_dense(r, x).prune(0.0), cond, relres


def permutability_check(f: SurfaceGrid, lam0: SurfaceGrid, lam1: SurfaceGrid, side: str = "right",
                        structure: SurfaceGrid | None = None, g0_base: Multivector | None = None,
                        g1_base: Multivector | None = None, chi_tol: float = 1e-6,
                        margin: float = 0.0) -> ResidualReport:
    """Two-step Darboux construction and its relation residual.

    The relation is ``(g0#)^-1 (f0## - f0#) = chi (g1#)^-1 (f1## - f1#)`` on
    the right and ``(f0## - f0#)(g0#)^-1 = (f1## - f1#)(g1#)^-1 chi`` on the
    left.

    ``structure`` is ``Y`` with ``*d lam_n = d lam_n Y`` (right) or
    ``*d lam_n = Y d lam_n`` (left).  It fixes the complex structure the
    first-step transforms carry on their other side, which the second step
    needs.  The default ``N`` (right) or ``-N`` (left) is correct for the
    minimal-surface recipes ``lam = N + const``.

    Second-step potentials are anchored at ``-(f_n# - a) mu_n`` (right) or
    ``-mu_n (f_n# - a)`` (left) with the scalar ``a = max|f|``.  For a
    constant ``mu_n`` this makes ``f_n##`` the constant ``a`` instead of zero,
    and keeps ``g_n#`` invertible at the base node.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be left or right, got {side!r}")
    f = f.cut()
    first0 = darboux(f, lam0, side, g_base=g0_base, margin=margin)
    first1 = darboux(f, lam1, side, g_base=g1_base, margin=margin)
    l0, l1 = lam0.cut(), lam1.cut()
    chi, cond, relres = solve_chi(differential(l0), differential(l1), side)
    if np.any(relres[f.node_mask(margin)] > chi_tol):
        raise IllConditionedChi(f"chi fit residual {float(np.max(relres)):.3e} exceeds {chi_tol:.1e}")
    chi_inv = inverse(chi)
    if side == "right":
        mu0 = l1.values + l0.values * chi_inv
        mu1 = l0.values + l1.values * chi
    else:
        mu0 = l1.values + chi_inv * l0.values
        mu1 = l0.values + chi * l1.values
    if np.any(quad_form(mu0) <= 1e-12) or np.any(quad_form(mu1) <= 1e-12):
        raise NotInvertible("second-step spectral parameter vanishes")
    if structure is None:
        N = gauss_map(f).values
        Y = N if side == "right" else -N
    else:
        Y = structure.values

    anchor = float(np.sqrt(np.max(quad_form(f.values))))

    def second(first: DarbouxResult, lam: Multivector, mu: Multivector) -> DarbouxResult:
        fs = first.f_sharp
        shifted = fs.values.at((0, 0)) - anchor
        if side == "right":
            Nt = -(lam * Y * inverse(lam))
            base = -(shifted * mu.at((0, 0)))
        else:
            Nt = inverse(lam) * Y * lam
            base = -(mu.at((0, 0)) * shifted)
        return darboux(fs, fs.with_values(mu, name="mu"), side, g_base=base,
                       N_tilde=fs.with_values(Nt), margin=margin)

    s0 = second(first0, l0.values, mu0)
    s1 = second(first1, l1.values, mu1)
    d0 = s0.f_sharp.values - first0.f_sharp.values
    d1 = s1.f_sharp.values - first1.f_sharp.values
    if side == "right":
        lhs = inverse(s0.g.values) * d0
        rhs = chi * inverse(s1.g.values) * d1
    else:
        lhs = d0 * inverse(s0.g.values)
        rhs = d1 * inverse(s1.g.values) * chi
    diff = np.sqrt(np.broadcast_to(quad_form(lhs - rhs), f.shape))
    scale = field_scale(np.sqrt(np.broadcast_to(quad_form(lhs), f.shape)), f, margin)
    relation = make_report("permutability_relation", diff, scale, f, margin)
    steps = {
        "first0": first0.defining_residual.to_json(), "first1": first1.defining_residual.to_json(),
        "second0": s0.defining_residual.to_json(), "second1": s1.defining_residual.to_json(),
        "relation": relation.to_json(),
        "chi_cond_max": float(np.max(cond)), "chi_fit_max": float(np.max(relres)),
        "chi_plus_one_max": float(np.sqrt(np.max(quad_form(chi + 1.0)))),
    }
    reps = (first0.defining_residual, first1.defining_residual, relation)
    return ResidualReport("permutability", max(r.max for r in reps), max(r.mean for r in reps), f.nu, f.nv,
                          "max of first-step defining residuals and the relation residual",
                          per_node=np.fmax(np.fmax(reps[0].per_node, reps[1].per_node), reps[2].per_node),
                          extra=steps)


# lambda recipes --------------------------------------------------------
LAMBDA_RECIPES = ("const_pin", "N", "N_plus_c", "fN", "f_sharp")


def lambda_recipe(f: SurfaceGrid, name: str, c: float = 0.5, offset: Multivector | None = None) -> SurfaceGrid:
    """Named spectral parameters for the Darboux and spin pipelines.

    const_pin: ``e1`` everywhere.  N: the Gauss map, whose right transform is
    ``f + hN``.  N_plus_c: ``N + c`` with scalar ``c``.  fN: the polar dual,
    for sphere-valued ``f``.  f_sharp: ``f + (h + offset) N``.
    """
    if name == "const_pin":
        return _const(f, basis_blade(f.r, 1))
    N = gauss_map(f)
    if name == "N":
        return N
    if name == "N_plus_c":
        return N.with_values(N.values + c, name="N+c")
    if name == "fN":
        return f.with_values(f.values * N.values, name="fN")
    if name == "f_sharp":
        return darboux_two_sided(f, offset=offset).f_sharp
    raise ValueError(f"unknown recipe {name!r}; choose from {', '.join(LAMBDA_RECIPES)}")
