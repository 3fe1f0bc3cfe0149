"""Analytic test surfaces sampled onto parameter grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Multivector
from .grid import MetricField, SurfaceGrid

TWO_PI = 2 * np.pi

# name -> (r, default domain, default periodic flags)
_SURFACES = {
    "plane": (3, (-1.0, 1.0, -1.0, 1.0), (False, False)),
    "graph": (3, (-1.0, 1.0, -1.0, 1.0), (False, False)),
    "round_sphere": (3, (0.3, np.pi - 0.3, 0.0, TWO_PI), (False, True)),
    "catenoid": (3, (0.0, TWO_PI, -1.0, 1.0), (True, False)),
    "helicoid": (3, (0.0, TWO_PI, -1.0, 1.0), (False, False)),
    "clifford_torus": (4, (0.0, TWO_PI, 0.0, TWO_PI), (True, True)),
    "lawson": (4, (0.0, TWO_PI, 0.0, TWO_PI), (True, True)),
}
SURFACE_NAMES = tuple(_SURFACES)


@dataclass
class SurfaceSpec:
    """What to sample and where.

    ``domain`` is ``(u0, u1, v0, v1)``.  On a periodic axis the node at the far
    end is the first node again and is not stored.
    """

    name: str
    nu: int = 64
    nv: int = 64
    params: dict = field(default_factory=dict)
    domain: tuple[float, float, float, float] | None = None
    periodic_u: bool | None = None
    periodic_v: bool | None = None

    def __post_init__(self):
        if self.name not in _SURFACES:
            raise ValueError(f"unknown surface {self.name!r}; choose from {', '.join(SURFACE_NAMES)}")
        _, dom, (pu, pv) = _SURFACES[self.name]
        if self.domain is None:
            self.domain = dom
        if self.periodic_u is None:
            self.periodic_u = pu
        if self.periodic_v is None:
            self.periodic_v = pv
        if self.nu < 8 or self.nv < 8:
            raise ValueError("grid sizes must be at least 8")
        u0, u1, v0, v1 = self.domain
        if not (u1 > u0 and v1 > v0):
            raise ValueError("domain lengths must be positive")
        if self.name == "lawson":
            m, k = self.params.get("m", 2), self.params.get("k", 1)
            if int(m) != m or int(k) != k or not (m > k >= 1):
                raise ValueError("lawson needs integers m > k >= 1")
            self.params = {**self.params, "m": int(m), "k": int(k)}

    def to_json(self) -> dict:
        return {"name": self.name, "nu": self.nu, "nv": self.nv, "params": self.params,
                "domain": list(self.domain), "periodic_u": self.periodic_u, "periodic_v": self.periodic_v}


def _axis(a0: float, a1: float, n: int, periodic: bool) -> tuple[np.ndarray, float]:
    h = (a1 - a0) / (n if periodic else n - 1)
    return a0 + h * np.arange(n), h


def _vec(r: int, comps) -> Multivector:
    return Multivector(r, {1 << i: c for i, c in enumerate(comps)})


def generate(spec: SurfaceSpec) -> SurfaceGrid:
    r = _SURFACES[spec.name][0]
    u0, u1, v0, v1 = spec.domain
    u, du = _axis(u0, u1, spec.nu, spec.periodic_u)
    v, dv = _axis(v0, v1, spec.nv, spec.periodic_v)
    U, V = np.meshgrid(u, v, indexing="ij")
    zero = np.zeros_like(U)
    metric = None
    p = spec.params

    if spec.name == "plane":
        comps = (U, V, zero)
    elif spec.name == "graph":
        # z = a (u^2 - v^2) / 2 + b u v, a saddle with non-zero mean curvature
        # off the origin when b != 0
        a, b = p.get("a", 0.5), p.get("b", 0.3)
        z = a * (U**2 - V**2) / 2 + b * U * V + p.get("c", 0.2) * U**2
        zu = a * U + b * V + 2 * p.get("c", 0.2) * U
        zv = -a * V + b * U
        comps = (U, V, z)
        metric = MetricField.from_efg(1 + zu**2, zu * zv, 1 + zv**2)
    elif spec.name == "round_sphere":
        # u = polar angle, v = azimuth; E = 1, G = sin^2 u
        comps = (np.sin(U) * np.cos(V), np.sin(U) * np.sin(V), np.cos(U))
        metric = MetricField.from_efg(np.ones_like(U), zero, np.sin(U) ** 2)
    elif spec.name == "catenoid":
        comps = (np.cosh(V) * np.cos(U), np.cosh(V) * np.sin(U), V)
    elif spec.name == "helicoid":
        # conjugate of the catenoid above: dh = -*df
        comps = (-np.sinh(V) * np.sin(U), np.sinh(V) * np.cos(U), -U)
    elif spec.name == "clifford_torus":
        s = 1 / np.sqrt(2)
        comps = (s * np.cos(U), s * np.sin(U), s * np.cos(V), s * np.sin(V))
    else:  # lawson
        m, k = p["m"], p["k"]
        comps = (np.cos(m * U) * np.cos(V), np.sin(m * U) * np.cos(V),
                 np.cos(k * U) * np.sin(V), np.sin(k * U) * np.sin(V))
        metric = MetricField.from_efg(m**2 * np.cos(V) ** 2 + k**2 * np.sin(V) ** 2, zero, np.ones_like(U))

    return SurfaceGrid(
        _vec(r, comps), spec.nu, spec.nv, du, dv, spec.periodic_u, spec.periodic_v,
        u0, v0, metric, spec.name, {"spec": spec.to_json()},
    )


def surface(name: str, nu: int = 64, nv: int | None = None, **params) -> SurfaceGrid:
    """Shorthand for ``generate(SurfaceSpec(...))``."""
    domain = params.pop("domain", None)
    return generate(SurfaceSpec(name, nu, nv if nv is not None else nu, params, domain))
