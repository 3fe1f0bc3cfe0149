"""Named residual checks for refinement studies.

Each check maps a generated grid to one :class:`ResidualReport`; the study
runs it on doubling grids and looks for ratios near 4.
"""

from __future__ import annotations

from typing import Callable

from .algebra import basis_blade
from .calculus import (
    conformality_residual,
    gauss_map,
    harmonicity_residual,
    hopf_report,
    mcv_identity_residual,
)
from .convergence import RATIO_WINDOW, StudyResult, refinement_study
from .grid import ResidualReport, SurfaceGrid
from .zoo import SurfaceSpec, generate

# fraction of each non-periodic axis dropped at both ends; one-sided stencils
# make nested derivatives lose an order near the boundary
DEFAULT_MARGIN = 0.15


def default_margin(f: SurfaceGrid) -> float:
    return 0.0 if (f.periodic_u and f.periodic_v) else DEFAULT_MARGIN


def _conformality(f, m):
    return conformality_residual(f, gauss_map(f), m)


def _hopf(f, m):
    return hopf_report(f, gauss_map(f), m)


def _mcv(f, m):
    return mcv_identity_residual(f, gauss_map(f), margin=m)


def _harmonicity(f, m):
    return harmonicity_residual(f, m)


def _gauss_harmonicity(f, m):
    return harmonicity_residual(gauss_map(f), m)


def _polar(f, m):
    from .duality import polar_dual

    return polar_dual(f, margin=m).conformality


def _ladder(f, m):
    from .duality import sequence_darboux_relation

    res = sequence_darboux_relation(f, n_max=1, margin=m)
    worst = max(res.right + res.left, key=lambda r: r.max)
    return ResidualReport("ladder", res.max, max(r.mean for r in res.right + res.left), f.nu, f.nv,
                          worst.notes, extra=res.to_json())


def _darboux(f, m):
    from .transforms import darboux

    return darboux(f, gauss_map(f), "right", g_base=basis_blade(f.r, 1, coeff=-2.0), margin=m).defining_residual


def _darboux_connection(f, m):
    from .transforms import darboux, darboux_connection_residual

    res = darboux(f, gauss_map(f), "right", g_base=basis_blade(f.r, 1, coeff=-2.0), margin=m)
    return darboux_connection_residual(res.f_sharp, res.T, "right", m)


def _permutability(f, m):
    from .transforms import lambda_recipe, permutability_check

    base = basis_blade(f.r, 1, coeff=-2.0)
    return permutability_check(f, lambda_recipe(f, "N"), lambda_recipe(f, "N_plus_c"), "right",
                               g0_base=base, g1_base=base, margin=m)


def _spin(f, m):
    from .transforms import lambda_recipe, spin_transform

    return spin_transform(f, lambda_recipe(f, "f_sharp", offset=basis_blade(f.r, 1, coeff=2.0)),
                          margin=m).conformality


CHECKS: dict[str, Callable[[SurfaceGrid, float], ResidualReport]] = {
    "conformality": _conformality,
    "hopf": _hopf,
    "mcv": _mcv,
    "harmonicity": _harmonicity,
    "gauss_harmonicity": _gauss_harmonicity,
    "polar": _polar,
    "ladder": _ladder,
    "darboux": _darboux,
    "darboux_connection": _darboux_connection,
    "permutability": _permutability,
    "spin": _spin,
}


def grid_factory(name: str, params: dict | None = None, aspect: float | None = None):
    """``n -> grid`` for a zoo surface.

    The Clifford torus defaults to ``nv = 3n/4``: on a square grid its
    residuals cancel by symmetry and the study would only measure roundoff.
    """
    params = dict(params or {})
    if aspect is None:
        aspect = 0.75 if name == "clifford_torus" else 1.0

    def make(n: int) -> SurfaceGrid:
        return generate(SurfaceSpec(name, n, max(8, int(round(aspect * n))), params))

    return make


def run_study(surface: str, check: str, sizes: list[int], params: dict | None = None,
              margin: float | None = None, aspect: float | None = None,
              window: tuple[float, float] = RATIO_WINDOW) -> StudyResult:
    if check not in CHECKS:
        raise ValueError(f"unknown check {check!r}; choose from {', '.join(CHECKS)}")
    make = grid_factory(surface, params, aspect)
    m = default_margin(make(sizes[0])) if margin is None else margin
    res = refinement_study(make, lambda g: CHECKS[check](g, m), sizes, check, window=window)
    res.notes = f"surface={surface}; margin={m}"
    return res
