"""Flat-connection families attached to sphere-valued maps.

For ``f`` with ``f^2 = -1`` put ``Phi = (*df + f df)/4`` and
``Phi~ = (*df - f df)/4``.  The families checked here are

* ``d - Phi + (x + y f) Phi`` and ``d + Phi~ + (x + y f) Phi~``,
* the sigma family, where ``x + y f`` is replaced by right multiplication
  with ``sigma = a + b e1`` and its inverse,
* the tt* family ``D - cos(t) S + sin(t) *S``.

All of them are flat exactly when ``f`` is harmonic, so on a grid their
curvature is ``O(h^2)`` for harmonic inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import Multivector, basis_blade, membership, quad_form
from .calculus import check_sphere_valued, phi_fields, star
from .convergence import RATIO_WINDOW, ratio_pass, ratios
from .errors import NotSphereValued, SigmaZero
from .grid import OneFormField, ResidualReport, SurfaceGrid
from .transforms import connection_curvature

VARIANTS = ("Phi", "PhiTilde")


@dataclass
class ConnectionSample:
    """One member of a family and its curvature report."""

    param: dict
    curvature: ResidualReport

    def to_json(self) -> dict:
        return {"param": self.param, "max": self.curvature.max, "mean": self.curvature.mean,
                "nu": self.curvature.nu, "nv": self.curvature.nv}


def _sections(r: int, full: bool) -> list[Multivector]:
    if full:
        return [Multivector(r, {m: 1.0}) for m in range(1 << r)]
    return [Multivector.scalar(r), basis_blade(r, 1), basis_blade(r, 2), basis_blade(r, 1, 2)]


def _check_d1_sphere(f: SurfaceGrid, tol: float) -> None:
    check_sphere_valued(f, tol)
    if not np.all(membership(f.values.with_tol(tol), "D1")):
        raise NotSphereValued("f must be valued in S^E and D^1")


def _scale(grid: SurfaceGrid, phi: OneFormField, margin: float) -> float:
    e = np.broadcast_to(quad_form(phi.comp_u) + quad_form(phi.comp_v), grid.shape)
    s = float(np.max(e[grid.node_mask(margin)]))
    return s if s > 0 else 1.0


def _left_form(A: OneFormField):
    return (lambda p: A.comp_u * p), (lambda p: A.comp_v * p)


def lambda_connection_curvature(f: SurfaceGrid, x: float, y: float, variant: str = "Phi",
                                margin: float = 0.0, tol: float = 1e-8,
                                full_basis: bool = False) -> ConnectionSample:
    """Curvature of ``d - Phi + (x + y f) Phi`` (or ``d + Phi~ + (x + y f) Phi~``)."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    _check_d1_sphere(f, tol)
    phi, phit = phi_fields(f, tol)
    if variant == "Phi":
        coeff, base = f.values * y + (x - 1.0), phi
    else:
        coeff, base = f.values * y + (x + 1.0), phit
    A = base.lmul(coeff)
    rep = connection_curvature(f, *_left_form(A), _sections(f.r, full_basis), _scale(f, base, margin),
                               f"lambda_{variant}", margin)
    return ConnectionSample({"kind": "lambda_xy", "x": x, "y": y, "variant": variant}, rep)


def _sigma_actions(f: SurfaceGrid, variant: str, a: float, b: float, tol: float):
    s2 = a * a + b * b
    if s2 <= tol:
        raise SigmaZero("sigma must be non-zero")
    phi, phit = phi_fields(f, tol)
    # the Phi~ family is the Phi family of -f, since Phi~_f = -Phi_{-f}
    if variant == "Phi":
        g, base = f.values, phi
    else:
        g, base = -f.values, -phit
    r = f.r
    e1 = basis_blade(r, 1)
    sigma = Multivector(r, {0: a, 1: b})
    sigma_inv = Multivector(r, {0: a / s2, 1: -b / s2})

    def make(comp: Multivector):
        def act(p: Multivector) -> Multivector:
            q = comp * p
            gq = g * q * e1
            return -q + (q - gq) * sigma * 0.5 + (q + gq) * sigma_inv * 0.5
        return act

    return make(base.comp_u), make(base.comp_v), base


def sigma_connection_curvature(f: SurfaceGrid, sigma: tuple[float, float], variant: str = "Phi",
                               margin: float = 0.0, tol: float = 1e-8,
                               full_basis: bool = False) -> ConnectionSample:
    """Curvature of the sigma family, ``sigma = a + b e1`` acting by right multiplication."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    _check_d1_sphere(f, tol)
    a, b = float(sigma[0]), float(sigma[1])
    act_u, act_v, base = _sigma_actions(f, variant, a, b, tol)
    rep = connection_curvature(f, act_u, act_v, _sections(f.r, full_basis), _scale(f, base, margin),
                               f"sigma_{variant}", margin)
    return ConnectionSample({"kind": "sigma", "a": a, "b": b, "variant": variant}, rep)


# tt* -----------------------------------------------------------------------
# theta <-> (x, y) on the unit circle, frozen by test_connections::test_tt_star_calibration
TT_STAR_XY = {
    "Phi": lambda t: (-math.cos(t), math.sin(t)),
    "PhiTilde": lambda t: (-math.cos(t), -math.sin(t)),
}


def tt_star_form(f: SurfaceGrid, theta: float, variant: str = "Phi", tol: float = 1e-8) -> OneFormField:
    """Connection form of ``D - cos(t) S + sin(t) *S`` with ``*S`` taken by the Hodge star."""
    phi, phit = phi_fields(f, tol)
    if variant == "Phi":
        D, S = -phi, phi
    else:
        D, S = phit, phit
    return D - S.scale(math.cos(theta)) + star(S, f).scale(math.sin(theta))


def tt_star_curvature(f: SurfaceGrid, theta: float, variant: str = "Phi", margin: float = 0.0,
                      tol: float = 1e-8, full_basis: bool = False) -> ConnectionSample:
    _check_d1_sphere(f, tol)
    A = tt_star_form(f, theta, variant, tol)
    phi, phit = phi_fields(f, tol)
    base = phi if variant == "Phi" else phit
    rep = connection_curvature(f, *_left_form(A), _sections(f.r, full_basis), _scale(f, base, margin),
                               f"tt_star_{variant}", margin)
    x, y = TT_STAR_XY[variant](theta)
    return ConnectionSample({"kind": "theta", "theta": theta, "variant": variant, "x": x, "y": y}, rep)


def tt_star_sweep(f: SurfaceGrid, n_theta: int = 8, variant: str = "Phi", margin: float = 0.0,
                  tol: float = 1e-8) -> list[ConnectionSample]:
    if n_theta < 4:
        raise ValueError("n_theta must be at least 4")
    return [tt_star_curvature(f, 2 * math.pi * k / n_theta, variant, margin, tol) for k in range(n_theta)]


# sweeps --------------------------------------------------------------------
def unit_circle_samples(n: int = 8, phase: float = math.pi / 8) -> list[dict]:
    """``n`` points on the unit circle, offset so none is the trivial ``(1, 0)``."""
    return [{"kind": "lambda_xy", "x": math.cos(phase + 2 * math.pi * k / n),
             "y": math.sin(phase + 2 * math.pi * k / n)} for k in range(n)]


def sigma_samples(moduli=(0.5, 1.0, 2.0), n: int = 8) -> list[dict]:
    """``n`` sigma values cycling through ``moduli`` at evenly spaced phases."""
    out = []
    for k in range(n):
        rho = moduli[k % len(moduli)]
        t = math.pi / 8 + 2 * math.pi * k / n
        out.append({"kind": "sigma", "a": rho * math.cos(t), "b": rho * math.sin(t)})
    return out


def theta_samples(n: int = 8) -> list[dict]:
    return [{"kind": "theta", "theta": 2 * math.pi * k / n} for k in range(n)]


def evaluate_sample(f: SurfaceGrid, sample: dict, variant: str = "Phi", margin: float = 0.0,
                    tol: float = 1e-8) -> ConnectionSample:
    kind = sample["kind"]
    if kind == "lambda_xy":
        return lambda_connection_curvature(f, sample["x"], sample["y"], variant, margin, tol)
    if kind == "sigma":
        return sigma_connection_curvature(f, (sample["a"], sample["b"]), variant, margin, tol)
    if kind == "theta":
        return tt_star_curvature(f, sample["theta"], variant, margin, tol)
    raise ValueError(f"unknown sample kind {kind!r}")


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    verdict: str = ""
    window: tuple = RATIO_WINDOW

    @property
    def passed(self) -> bool:
        return self.verdict == "harmonic-compatible"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "window": list(self.window), "rows": self.rows}

    def to_csv_rows(self) -> list[list]:
        out = [["kind", "x", "y", "a", "b", "theta", "abs_sigma", "nu", "max"]]
        for row in self.rows:
            p = row["param"]
            ab = math.hypot(p.get("a", 0.0), p.get("b", 0.0)) if p["kind"] == "sigma" else ""
            for nu, m in zip(row["grids"], row["max"]):
                out.append([p["kind"], p.get("x", ""), p.get("y", ""), p.get("a", ""), p.get("b", ""),
                            p.get("theta", ""), ab, nu, m])
        return out


def flatness_sweep(grids: list[SurfaceGrid], samples: list[dict], variant: str = "Phi",
                   margin: float = 0.0, tol: float = 1e-8,
                   window: tuple[float, float] = RATIO_WINDOW) -> SweepReport:
    """Evaluate each sample on every grid (coarse to fine) and run the ratio test.

    A sample passes when every successive ratio of max curvature residuals
    lies in ``window``.  The verdict is ``harmonic-compatible`` when all
    samples pass.
    """
    rows = []
    all_pass = True
    for sample in samples:
        reps = [evaluate_sample(g, sample, variant, margin, tol) for g in grids]
        maxes = [s.curvature.max for s in reps]
        rs = ratios(maxes)
        ok = ratio_pass(maxes, window)
        all_pass &= ok
        rows.append({"param": reps[0].param, "grids": [g.nu for g in grids], "max": maxes,
                     "mean": [s.curvature.mean for s in reps], "ratios": rs, "pass": ok})
    return SweepReport(rows, "harmonic-compatible" if all_pass else "not harmonic-compatible", window)
