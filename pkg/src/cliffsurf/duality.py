"""Polar and bipolar duals of minimal sphere maps and the resulting sequence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .algebra import R_MAX, Multivector, binomial, general_inverse, quad_form
from .calculus import (
    check_sphere_valued,
    conformality_residual,
    default_closed_threshold,
    differential,
    form_node_norm,
    gauss_map,
    harmonicity_residual,
    integrate_potential,
    star,
)
from .errors import (
    CommutatorNonzero,
    DegenerateStep,
    NotGrade2,
    NotInvertible,
    NotMinimal,
    NotSphereValued,
    RCapExceeded,
)
from .grid import ResidualReport, SurfaceGrid, field_scale, make_report

POLAR_TOL = 1e-2
SPAN_REL = 1e-6
MAX_STEPS = 2
MASK_FRACTION = 0.01
# the ladder forms and harmonicity residuals carry second derivatives, which grow
# with the surface's frequency content, so these gates use 400 (h/L)^2 rather
# than the generic 50 (h/L)^2
GATE_FACTOR = 400.0


def _vector_valued(f: SurfaceGrid) -> bool:
    return f.values.grades() <= {1}


# polar dual -------------------------------------------------------------
@dataclass
class PolarResult:
    fN: SurfaceGrid
    commutator: float
    grade3_leak: float
    unit_error: float
    conformality: ResidualReport

    def to_json(self) -> dict:
        return {"commutator": self.commutator, "grade3_leak": self.grade3_leak,
                "unit_error": self.unit_error, "conformality": self.conformality.to_json()}


def _leak(a: Multivector, keep: int) -> float:
    out = 0.0
    for m, c in a.coeffs.items():
        if bin(m).count("1") != keep:
            out = max(out, float(np.max(np.abs(c))))
    return out


def polar_conformality(fN: SurfaceGrid, N: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """``|*d(fN) + N d(fN)|`` and ``|*d(fN) - d(fN) N|`` over ``max|d(fN)|``."""
    d = differential(fN)
    sd = star(d, fN)
    node = np.maximum(form_node_norm(sd + d.lmul(N.values)), form_node_norm(sd - d.rmul(N.values)))
    return make_report("polar_conformality", node, field_scale(form_node_norm(d), fN, margin), fN, margin)


def polar_dual(f: SurfaceGrid, N: SurfaceGrid | None = None, tol: float = POLAR_TOL,
               margin: float = 0.0) -> PolarResult:
    """The grade-3 map ``fN`` and its conformality residuals.

    ``tol`` bounds the commutator ``|fN - Nf|`` and the unit and grade
    errors; these are all ``O(h^2)`` discretisation errors, hence the loose
    default.
    """
    if not _vector_valued(f):
        raise NotSphereValued("f must be V_r-valued")
    check_sphere_valued(f, 1e-8)
    N = gauss_map(f) if N is None else N
    fN = f.values * N.values
    comm = float(np.sqrt(np.max(quad_form(fN - N.values * f.values))))
    if comm > tol:
        raise CommutatorNonzero(f"|fN - Nf| = {comm:.3e} exceeds {tol:.1e}")
    g = f.with_values(fN, name=(f.name + ":fN").lstrip(":"), meta={})
    leak = _leak(fN, 3)
    unit = float(np.max(np.abs(quad_form(fN) - 1.0)))
    if leak > tol or unit > tol:
        raise CommutatorNonzero(f"fN is not a unit grade-3 map (leak {leak:.2e}, unit error {unit:.2e})")
    return PolarResult(g, comm, leak, unit, polar_conformality(g, N, margin))


# bipolar reindexing ------------------------------------------------------
def pair_order(r: int) -> list[tuple[int, int]]:
    """Blade pairs ``(i, j)``, ``1 <= i < j <= r``, in lexicographic order."""
    return list(combinations(range(1, r + 1), 2))


def bipolar_reindex(N: SurfaceGrid | Multivector, tol: float = 1e-9) -> SurfaceGrid | Multivector:
    """Copy grade-2 coefficients onto the basis of ``V_{r(r-1)/2}``.

    ``e_i e_j`` goes to ``e_k`` where ``k`` is the 1-based position of
    ``(i, j)`` in :func:`pair_order`.  This is a coefficient copy, so it is an
    exact isometry.
    """
    mv = N.values if isinstance(N, SurfaceGrid) else N
    if _leak(mv, 2) > tol:
        raise NotGrade2("input has components outside grade 2")
    r = mv.r
    r_new = binomial(r, 2)
    if r_new > R_MAX:
        raise RCapExceeded(f"reindexing r={r} needs r={r_new} > {R_MAX}")
    coeffs = {}
    for k, (i, j) in enumerate(pair_order(r)):
        m = (1 << (i - 1)) | (1 << (j - 1))
        if m in mv.coeffs:
            coeffs[1 << k] = mv.coeffs[m]
    out = Multivector(r_new, coeffs, mv.tol)
    if not isinstance(N, SurfaceGrid):
        return out
    meta = {"reindex": {"from_r": r, "order": "lexicographic", "pairs": [list(p) for p in pair_order(r)]}}
    return N.with_values(out, name=(N.name + ":bipolar").lstrip(":"), meta=meta)


def bipolar_energy_residual(f: SurfaceGrid, N: SurfaceGrid, margin: float = 0.0) -> ResidualReport:
    """``Q~(dN) - Q(df) - Q~(d(fN))`` per direction, over ``max Q~(dN)``."""
    df, dN, dP = differential(f), differential(N), differential(f.with_values(f.values * N.values))
    node = np.zeros(f.shape)
    for a, b, c in ((dN.comp_u, df.comp_u, dP.comp_u), (dN.comp_v, df.comp_v, dP.comp_v)):
        node = np.maximum(node, np.abs(np.broadcast_to(quad_form(a) - quad_form(b) - quad_form(c), f.shape)))
    ref = np.broadcast_to(quad_form(dN.comp_u) + quad_form(dN.comp_v), f.shape)
    return make_report("bipolar_energy", node, field_scale(ref, f, margin), f, margin)


# the sequence --------------------------------------------------------------
@dataclass
class SequenceStep:
    level: int
    r_n: int
    surface: SurfaceGrid
    reports: dict = field(default_factory=dict)
    span_rank: int = 0
    gap: float = float("inf")
    singular_values: list = field(default_factory=list)

    def to_json(self, embed: bool = True) -> dict:
        out = {"level": self.level, "r_n": self.r_n, "span_rank": self.span_rank, "gap": self.gap,
               "singular_values": self.singular_values,
               "reports": {k: v.to_json() for k, v in self.reports.items()}}
        if embed:
            out["surface"] = self.surface.to_json()
        return out


def span_rank(f: SurfaceGrid, rel: float = SPAN_REL) -> tuple[int, float, np.ndarray]:
    """Affine rank of the sampled values with the singular-value gap across the cut."""
    dense = f.values.dense().reshape(-1, 1 << f.r)
    cols = [1 << i for i in range(f.r)] if _vector_valued(f) else list(range(1 << f.r))
    X = dense[:, cols]
    X = X - X.mean(axis=0)
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0:
        return 0, float("inf"), s
    rank = int(np.count_nonzero(s > rel * s[0]))
    gap = float(s[rank - 1] / s[rank]) if rank < len(s) and s[rank] > 0 else float("inf")
    return rank, gap, s


def harmonic_gate(f: SurfaceGrid, threshold: float | None = None, margin: float = 0.0,
                  name: str = "harmonicity") -> ResidualReport:
    rep = harmonicity_residual(f, margin)
    rep.name = name
    thr = GATE_FACTOR * default_closed_threshold(f) / 50.0 if threshold is None else threshold
    rep.extra["threshold"] = thr
    if rep.mean > thr:
        raise NotMinimal(f"{name} residual {rep.mean:.3e} exceeds {thr:.3e}")
    return rep


def minimal_sequence(f0: SurfaceGrid, steps: int = 1, threshold: float | None = None,
                     degenerate_tol: float = 1e-10) -> list[SequenceStep]:
    """``f_0, f_1, ...`` with ``f_{n+1}`` the reindexed Gauss map of ``f_n``.

    ``f_0`` must pass the harmonicity gate.  At each level the Gauss map
    ``N_n`` must satisfy ``d(N *dN) = 0`` (report ``gauss_harmonicity``)
    before it is reindexed.  The harmonicity of ``f_n`` as a map into the
    round sphere of ``V_{r_n}`` is recorded at every level but only gated at
    level 0.  The ambient dimension ``r_{n+1} = C(r_n, 2)`` must stay within
    the algebra cap, which allows at most two steps from ``r = 4``.
    """
    if not 0 <= steps <= MAX_STEPS:
        raise RCapExceeded(f"steps must be between 0 and {MAX_STEPS}")
    if not _vector_valued(f0):
        raise NotSphereValued("f0 must be V_r-valued")
    r = f0.r
    for _ in range(steps):
        r = binomial(r, 2)
        if r > R_MAX:
            raise RCapExceeded(f"sequence needs r={r} > {R_MAX}")
    check_sphere_valued(f0, 1e-8)

    out = []
    f = f0
    for level in range(steps + 1):
        if level == 0:
            reports = {"harmonicity": harmonic_gate(f, threshold)}
        else:
            reports = {"harmonicity": harmonicity_residual(f)}
        if level < steps:
            N = gauss_map(f, tol=degenerate_tol, mask_degenerate=True)
            bad = N.meta.get("degenerate", 0)
            if bad > MASK_FRACTION * f.nu * f.nv:
                raise DegenerateStep(f"Gauss map degenerate at {bad} nodes; the sequence terminates")
            reports["conformality"] = conformality_residual(f, N)
            reports["bipolar_energy"] = bipolar_energy_residual(f, N)
            reports["gauss_harmonicity"] = harmonic_gate(N, threshold, name="gauss_harmonicity")
        rank, gap, s = span_rank(f)
        out.append(SequenceStep(level, f.r, f, reports, rank, gap, [float(x) for x in s]))
        if level < steps:
            f = bipolar_reindex(N)
            check_sphere_valued(f, 1e-6)
    return out


# degree -------------------------------------------------------------------
def spinor_degree(genus: int, r: int) -> int:
    """Degree ``2^(r-2) (g-1)`` of the spinor bundle of a genus-``g`` surface in ``V_r``."""
    if isinstance(genus, bool) or isinstance(r, bool) or int(genus) != genus or int(r) != r:
        raise ValueError("genus and r must be integers")
    genus, r = int(genus), int(r)
    if genus < 0 or r < 2:
        raise ValueError("need genus >= 0 and r >= 2")
    return (1 << (r - 2)) * (genus - 1)


# Darboux ladder --------------------------------------------------------------
@dataclass
class LadderResult:
    right: list[ResidualReport]
    left: list[ResidualReport]
    offsets: list[float]
    periods: list[dict]
    masked: list[int]

    @property
    def max(self) -> float:
        return max(rep.max for rep in self.right + self.left)

    def to_json(self) -> dict:
        return {"right": [r.to_json() for r in self.right], "left": [r.to_json() for r in self.left],
                "offsets": self.offsets, "periods": self.periods, "masked": self.masked, "max": self.max}


def _masked_inverse(a: Multivector, cond_max: float) -> tuple[Multivector, np.ndarray]:
    inv, cond = general_inverse(a, cond_max)
    ok = np.isfinite(cond) & (cond <= cond_max)
    filled = Multivector(inv.r, {m: np.where(ok, c, 0.0) for m, c in inv.coeffs.items()}, inv.tol)
    return filled, ok


def sequence_darboux_relation(f: SurfaceGrid, n_max: int = 2, margin: float = 0.0,
                              cond_max: float = 1e8, tol: float = POLAR_TOL,
                              closed_threshold: float | None = None) -> LadderResult:
    """Residuals of ``((fN)^#)_n = -f_n f_{n+1}^{-1}`` and its left mirror.

    The ladder ``d f_{n+1} = -d f_n fN`` is integrated from ``f_0 = f``.  Each
    ``f_{n+1}`` is shifted by a scalar so that it is comfortably invertible.
    The Darboux partners ``(f_n)_#`` and ``(f_n)^#`` are integrated from their
    own differentials ``d(fN) f_{n+1}`` and ``f_{n+1} d(fN)``, so the
    relation measures integration and differentiation error, ``O(h^2)``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    pol = polar_dual(f, tol=tol)
    P = pol.fN
    Nf = P.values  # fN = Nf within tol
    dP = differential(P)
    cut = f.cut()
    if closed_threshold is None:
        closed_threshold = GATE_FACTOR * default_closed_threshold(f) / 50.0

    forms = [differential(f)]
    fs = [f.values]
    offsets, periods, masked = [], [], []
    for _ in range(n_max + 1):
        w = forms[-1].rmul(-P.values)
        pot, rep = integrate_potential(w, f, closed_threshold=closed_threshold)
        c = 1.0 + math.ceil(float(np.sqrt(np.max(quad_form(pot.values)))))
        fs.append(pot.values + c)
        forms.append(w)
        offsets.append(c)
        periods.append({k: v for k, v in rep.period_norms.items()})

    right, left = [], []
    bi, bj = 0, 0
    for n in range(n_max + 1):
        fn, fn1 = fs[n], fs[n + 1]
        inv, ok = _masked_inverse(fn1, cond_max)
        bad = int(np.count_nonzero(~ok))
        if bad > MASK_FRACTION * f.nu * f.nv:
            raise NotInvertible(f"f_{n + 1} is singular at {bad} nodes")
        masked.append(bad)
        at = (lambda mv: Multivector(mv.r, {m: np.asarray(c)[bi, bj] for m, c in mv.coeffs.items()}))
        # (f_n)_# from d(fN) f_{n+1}, anchored at f_n + Nf f_{n+1}
        low, _ = integrate_potential(dP.rmul(fn1), cut, closed_threshold=closed_threshold)
        low_v = low.values + at(fn + Nf * fn1)
        # (f_n)^# from f_{n+1} d(fN), anchored at f_n + f_{n+1} fN
        up, _ = integrate_potential(dP.lmul(fn1), cut, closed_threshold=closed_threshold)
        up_v = up.values + at(fn + fn1 * P.values)

        target_r = -(fn * inv)
        target_l = -(inv * fn)
        res_r = P.values - low_v * inv - target_r
        res_l = P.values - inv * up_v - target_l
        for name, res, tgt, dst in (("right", res_r, target_r, right), ("left", res_l, target_l, left)):
            node = np.sqrt(np.broadcast_to(quad_form(res), f.shape))
            scale = field_scale(np.sqrt(np.broadcast_to(quad_form(tgt), f.shape)), cut, margin)
            dst.append(make_report(f"ladder_{name}_n{n}", node, scale, cut, margin, mask=ok))
    return LadderResult(right, left, offsets, periods, masked)

