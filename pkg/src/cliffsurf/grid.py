"""Grid-valued Clifford fields and their file formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .algebra import DEFAULT_TOL, Multivector, quad_form
from .errors import DimensionMismatch


@dataclass(frozen=True)
class MetricField:
    """First fundamental form ``E du^2 + 2F du dv + G dv^2`` and ``W = sqrt(EG - F^2)``."""

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    W: np.ndarray

    @classmethod
    def from_efg(cls, E, F, G) -> "MetricField":
        E, F, G = (np.asarray(x, dtype=float) for x in (E, F, G))
        W = np.sqrt(np.maximum(E * G - F * F, 0.0))
        return cls(E, F, G, W)

    @classmethod
    def flat(cls, shape) -> "MetricField":
        one = np.ones(shape)
        return cls(one, np.zeros(shape), one, one)

    def to_json(self) -> dict:
        return {"E": self.E.ravel().tolist(), "F": self.F.ravel().tolist(), "G": self.G.ravel().tolist()}

    @classmethod
    def from_json(cls, data: dict, shape) -> "MetricField":
        return cls.from_efg(*(np.asarray(data[k], dtype=float).reshape(shape) for k in "EFG"))


def _full(mv: Multivector, shape) -> Multivector:
    """Broadcast every coefficient to a full array of ``shape``."""
    return Multivector(mv.r, {m: np.broadcast_to(np.asarray(c, float), shape).copy() for m, c in mv.coeffs.items()}, mv.tol)


@dataclass(frozen=True)
class SurfaceGrid:
    """A map from a rectangular parameter grid into Cl(V_r).

    Node ``(i, j)`` sits at ``(u0 + i*du, v0 + j*dv)``.  On a periodic axis the
    node one period further is identified with node 0 and is not stored.

    ``metric`` fixes the conformal structure of the parameter domain.  ``None``
    means the coordinates are isothermal, so the Hodge star is the flat one.
    Derived grids inherit it so that every field on the same surface is read
    with the same Riemann surface structure.
    """

    values: Multivector
    nu: int
    nv: int
    du: float
    dv: float
    periodic_u: bool = False
    periodic_v: bool = False
    u0: float = 0.0
    v0: float = 0.0
    metric: MetricField | None = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.du <= 0 or self.dv <= 0:
            raise ValueError("grid spacings must be positive")
        if self.values.shape not in ((), (self.nu, self.nv)):
            raise DimensionMismatch(f"values shape {self.values.shape} != ({self.nu}, {self.nv})")
        object.__setattr__(self, "values", _full(self.values, (self.nu, self.nv)))

    @property
    def r(self) -> int:
        return self.values.r

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nu, self.nv)

    @property
    def h(self) -> float:
        return max(self.du, self.dv)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        u = self.u0 + self.du * np.arange(self.nu)
        v = self.v0 + self.dv * np.arange(self.nv)
        return np.meshgrid(u, v, indexing="ij")

    def with_values(self, values: Multivector, **changes) -> "SurfaceGrid":
        """Same parameter grid and conformal structure, new values."""
        return replace(self, values=values, **changes)

    def cut(self) -> "SurfaceGrid":
        """Forget periodicity: the simply-connected cut at i=0 / j=0."""
        return replace(self, periodic_u=False, periodic_v=False)

    def like(self, other: "SurfaceGrid") -> "SurfaceGrid":
        """Adopt ``other``'s periodicity flags (used after cutting)."""
        return replace(self, periodic_u=other.periodic_u, periodic_v=other.periodic_v)

    def domain_metric(self) -> MetricField:
        return self.metric if self.metric is not None else MetricField.flat(self.shape)

    def node_mask(self, margin: float = 0.0) -> np.ndarray:
        """Nodes farther than ``margin`` (fraction of axis length) from a non-periodic edge."""
        mask = np.ones(self.shape, bool)
        if margin <= 0:
            return mask
        for axis, (n, periodic) in enumerate(((self.nu, self.periodic_u), (self.nv, self.periodic_v))):
            if periodic:
                continue
            t = np.arange(n) / (n - 1)
            keep = (t >= margin - 1e-12) & (t <= 1 - margin + 1e-12)
            mask &= keep[:, None] if axis == 0 else keep[None, :]
        return mask

    # serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        vals = []
        masks = sorted(self.values.coeffs)
        for i in range(self.nu):
            for j in range(self.nv):
                vals.append([[m, float(self.values.coeffs[m][i, j])] for m in masks if self.values.coeffs[m][i, j] != 0])
        out = {
            "r": self.r, "nu": self.nu, "nv": self.nv, "du": self.du, "dv": self.dv,
            "periodic_u": self.periodic_u, "periodic_v": self.periodic_v,
            "u0": self.u0, "v0": self.v0, "name": self.name, "values": vals,
        }
        if self.metric is not None:
            out["metric"] = self.metric.to_json()
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, data: dict, tol: float = DEFAULT_TOL) -> "SurfaceGrid":
        r, nu, nv = int(data["r"]), int(data["nu"]), int(data["nv"])
        if len(data["values"]) != nu * nv:
            raise DimensionMismatch("values length does not match nu*nv")
        dense = np.zeros((nu * nv, 1 << r))
        for k, terms in enumerate(data["values"]):
            prev = -1
            for m, c in terms:
                if m <= prev:
                    raise ValueError("term masks must be strictly increasing")
                prev = m
                dense[k, m] = c
        dense = dense.reshape(nu, nv, 1 << r)
        present = {m: dense[..., m] for m in range(1 << r) if dense[..., m].any()}
        metric = MetricField.from_json(data["metric"], (nu, nv)) if "metric" in data else None
        return cls(
            Multivector(r, present, tol), nu, nv, float(data["du"]), float(data["dv"]),
            bool(data.get("periodic_u", False)), bool(data.get("periodic_v", False)),
            float(data.get("u0", 0.0)), float(data.get("v0", 0.0)), metric,
            data.get("name", ""), data.get("meta", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "SurfaceGrid":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class OneFormField:
    """``omega = comp_u du + comp_v dv`` with node-collocated components."""

    comp_u: Multivector
    comp_v: Multivector

    @property
    def r(self) -> int:
        return self.comp_u.r

    def __add__(self, other: "OneFormField") -> "OneFormField":
        return OneFormField(self.comp_u + other.comp_u, self.comp_v + other.comp_v)

    def __sub__(self, other: "OneFormField") -> "OneFormField":
        return OneFormField(self.comp_u - other.comp_u, self.comp_v - other.comp_v)

    def __neg__(self) -> "OneFormField":
        return OneFormField(-self.comp_u, -self.comp_v)

    def scale(self, c) -> "OneFormField":
        return OneFormField(self.comp_u * c, self.comp_v * c)

    def lmul(self, a: Multivector) -> "OneFormField":
        """``a * omega`` componentwise."""
        return OneFormField(a * self.comp_u, a * self.comp_v)

    def rmul(self, a: Multivector) -> "OneFormField":
        """``omega * a`` componentwise."""
        return OneFormField(self.comp_u * a, self.comp_v * a)

    def norm(self) -> np.ndarray:
        return np.sqrt(quad_form(self.comp_u) + quad_form(self.comp_v))


@dataclass(frozen=True)
class TwoFormField:
    """Coefficient of ``du ^ dv``."""

    density: Multivector

    def norm(self) -> np.ndarray:
        return np.sqrt(quad_form(self.density))


def wedge(a: OneFormField, b: OneFormField) -> TwoFormField:
    """``(a ^ b)(d_u, d_v) = a_u b_v - a_v b_u``, factor order kept."""
    return TwoFormField(a.comp_u * b.comp_v - a.comp_v * b.comp_u)


@dataclass
class ResidualReport:
    name: str
    max: float
    mean: float
    nu: int
    nv: int
    notes: str = ""
    masked: int = 0
    per_node: np.ndarray | None = field(default=None, repr=False, compare=False)
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.max < 0 or self.mean < 0:
            raise ValueError("residual norms are nonnegative")

    def to_json(self) -> dict:
        out = {"name": self.name, "max": self.max, "mean": self.mean, "nu": self.nu, "nv": self.nv, "notes": self.notes}
        if self.masked:
            out["masked"] = self.masked
        if self.extra:
            out["extra"] = self.extra
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ResidualReport":
        return cls(data["name"], float(data["max"]), float(data["mean"]), int(data["nu"]), int(data["nv"]),
                   data.get("notes", ""), int(data.get("masked", 0)), extra=data.get("extra", {}))

    def write_csv(self, path, grid: SurfaceGrid) -> None:
        """Per-node residual dump with columns ``i,j,u,v,residual``."""
        if self.per_node is None:
            raise ValueError("report has no per-node data")
        U, V = grid.coords()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "u", "v", "residual"])
            for i in range(grid.nu):
                for j in range(grid.nv):
                    w.writerow([i, j, repr(float(U[i, j])), repr(float(V[i, j])), repr(float(self.per_node[i, j]))])


def make_report(name: str, node_norm: np.ndarray, scale: float, grid: SurfaceGrid,
                margin: float = 0.0, mask: np.ndarray | None = None, notes: str = "", **extra) -> ResidualReport:
    """Normalise per-node norms by ``scale`` and summarise over the kept nodes."""
    keep = grid.node_mask(margin)
    masked = 0
    if mask is not None:
        masked = int(np.count_nonzero(keep & ~mask))
        keep = keep & mask
    vals = np.asarray(node_norm, float) / (scale if scale > 0 else 1.0)
    vals = np.broadcast_to(vals, grid.shape)
    sel = vals[keep]
    if sel.size == 0:
        raise ValueError("no nodes left after masking")
    if margin > 0:
        notes = (notes + f"; margin={margin}").lstrip("; ")
    return ResidualReport(name, float(np.max(sel)), float(np.mean(sel)), grid.nu, grid.nv, notes, masked,
                          per_node=np.where(keep, vals, np.nan), extra=extra)


def field_scale(norms: np.ndarray, grid: SurfaceGrid, margin: float = 0.0) -> float:
    """Max node norm of a reference field over the same nodes a report uses."""
    keep = grid.node_mask(margin)
    return float(np.max(np.broadcast_to(norms, grid.shape)[keep]))
