"""Clifford algebra Cl(V_r) of a positive definite Euclidean space.

Basis blades are indexed by bitmasks: bit ``i`` set means ``e_{i+1}`` is a
factor, factors in ascending order.  Generators square to ``-1`` (``v**2 =
-Q(v)``), so ``e1*e1 == -1``.

A :class:`Multivector` stores a sparse map ``mask -> coefficient``.  A
coefficient is either a float or a numpy array; in the latter case the
multivector is *batched* and every operation acts elementwise over the batch
shape.  Grid-valued maps are batched multivectors whose arrays have the grid
shape, which keeps per-node Clifford arithmetic vectorised.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import DimensionMismatch, NotInvertible

Coeff = Union[float, np.ndarray]

R_MAX = 16
DEFAULT_TOL = 1e-9
DEFAULT_PRUNE = 1e-14

KINDS = ("E", "S_E", "D0", "D1", "J", "Pin", "Spin", "M_n", "SphereTilde")


@dataclass(frozen=True)
class AlgebraContext:
    """Ambient dimension plus the tolerances used by predicates."""

    r: int
    tol: float = DEFAULT_TOL
    prune: float = DEFAULT_PRUNE

    def __post_init__(self):
        _check_r(self.r)
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.prune < 0:
            raise ValueError("prune must be nonnegative")

    def scalar(self, c: Coeff = 1.0) -> "Multivector":
        return Multivector.scalar(self.r, c, tol=self.tol)

    def e(self, *indices: int) -> "Multivector":
        return basis_blade(self.r, *indices, tol=self.tol)

    def vector(self, comps) -> "Multivector":
        return Multivector.vector(self.r, comps, tol=self.tol)


def _check_r(r: int) -> None:
    if not isinstance(r, (int, np.integer)) or not 1 <= r <= R_MAX:
        raise ValueError(f"ambient dimension r must be an integer in [1, {R_MAX}], got {r!r}")


def grade_of(mask: int) -> int:
    return int(mask).bit_count()


@lru_cache(maxsize=None)
def blade_sign(a: int, b: int) -> int:
    """Sign of ``e_a * e_b`` relative to ``e_{a^b}``.

    Counts the transpositions needed to sort the concatenated factor list,
    plus one factor of -1 for each repeated generator (``e_i**2 = -1``).
    """
    swaps = 0
    x = a >> 1
    while x:
        swaps += (x & b).bit_count()
        x >>= 1
    swaps += (a & b).bit_count()
    return -1 if swaps & 1 else 1


def _is_zero(c: Coeff) -> bool:
    if isinstance(c, np.ndarray):
        return not c.any()
    return c == 0


class Multivector:
    """Element (or batch of elements) of Cl(V_r)."""

    __slots__ = ("r", "coeffs", "tol")
    __array_priority__ = 1000  # so ndarray * Multivector defers to __rmul__

    def __init__(self, r: int, coeffs: Mapping[int, Coeff] | None = None, tol: float = DEFAULT_TOL):
        _check_r(r)
        self.r = int(r)
        self.tol = float(tol)
        limit = 1 << self.r
        clean: dict[int, Coeff] = {}
        for mask, c in (coeffs or {}).items():
            mask = int(mask)
            if not 0 <= mask < limit:
                raise ValueError(f"blade mask {mask} out of range for r={r}")
            if isinstance(c, np.ndarray):
                c = c.astype(float, copy=False)
            else:
                c = float(c)
            if not _is_zero(c):
                clean[mask] = c
        self.coeffs = clean

    # construction -----------------------------------------------------
    @classmethod
    def scalar(cls, r: int, c: Coeff = 1.0, tol: float = DEFAULT_TOL) -> "Multivector":
        return cls(r, {0: c}, tol)

    @classmethod
    def vector(cls, r: int, comps: Iterable[Coeff], tol: float = DEFAULT_TOL) -> "Multivector":
        comps = list(comps)
        if len(comps) > r:
            raise DimensionMismatch(f"{len(comps)} components for r={r}")
        return cls(r, {1 << i: c for i, c in enumerate(comps)}, tol)

    @classmethod
    def zeros(cls, r: int, tol: float = DEFAULT_TOL) -> "Multivector":
        return cls(r, {}, tol)

    def _new(self, coeffs: Mapping[int, Coeff]) -> "Multivector":
        return Multivector(self.r, coeffs, self.tol)

    def with_tol(self, tol: float) -> "Multivector":
        return Multivector(self.r, self.coeffs, tol)

    # inspection -------------------------------------------------------
    @property
    def shape(self) -> tuple:
        shapes = [np.shape(c) for c in self.coeffs.values()]
        return np.broadcast_shapes(*shapes) if shapes else ()

    def coeff(self, mask: int) -> Coeff:
        return self.coeffs.get(mask, 0.0)

    def grades(self) -> set[int]:
        return {grade_of(m) for m in self.coeffs}

    def at(self, index) -> "Multivector":
        """Scalar multivector at one batch index."""
        return self._new({m: float(np.broadcast_to(c, self.shape)[index]) for m, c in self.coeffs.items()})

    def dense(self) -> np.ndarray:
        """Coefficient array of shape ``batch + (2**r,)``."""
        out = np.zeros(self.shape + (1 << self.r,))
        for m, c in self.coeffs.items():
            out[..., m] = c
        return out

    @classmethod
    def from_dense(cls, r: int, arr: np.ndarray, tol: float = DEFAULT_TOL) -> "Multivector":
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-1] != 1 << r:
            raise DimensionMismatch("last axis must have length 2**r")
        if arr.ndim == 1:
            return cls(r, {m: arr[m] for m in range(1 << r)}, tol)
        return cls(r, {m: arr[..., m] for m in range(1 << r)}, tol)

    def scalar_part(self) -> Coeff:
        return self.coeffs.get(0, 0.0)

    def __repr__(self) -> str:
        if self.shape:
            return f"Multivector(r={self.r}, blades={sorted(self.coeffs)}, shape={self.shape})"
        if not self.coeffs:
            return "0"
        parts = []
        for m in sorted(self.coeffs):
            name = "".join(f"e{i + 1}" for i in range(self.r) if m >> i & 1) or "1"
            parts.append(f"{self.coeffs[m]:+.6g}*{name}")
        return " ".join(parts)

    # arithmetic -------------------------------------------------------
    def _check(self, other: "Multivector") -> None:
        if other.r != self.r:
            raise DimensionMismatch(f"r mismatch: {self.r} vs {other.r}")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            out = dict(self.coeffs)
            for m, c in other.coeffs.items():
                out[m] = out[m] + c if m in out else c
            return self._new(out)
        return self + Multivector.scalar(self.r, other, self.tol)

    __radd__ = __add__

    def __neg__(self):
        return self._new({m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return self._new({m: c * other for m, c in self.coeffs.items()})

    def __rmul__(self, other):
        # scalars and arrays commute with everything
        return self._new({m: other * c for m, c in self.coeffs.items()})

    def __truediv__(self, other):
        if isinstance(other, Multivector):
            return self * inverse(other)
        return self._new({m: c / other for m, c in self.coeffs.items()})

    def grade(self, k: int) -> "Multivector":
        return grade_project(self, k)

    def involute(self) -> "Multivector":
        return grade_involution(self)

    def reverse(self) -> "Multivector":
        return reversion(self)

    def conj(self) -> "Multivector":
        """``alpha(a)^T``, the Clifford conjugate."""
        return self._new({m: c * _conj_sign(m) for m, c in self.coeffs.items()})

    def norm(self) -> Coeff:
        return np.sqrt(quad_form(self))

    def max_abs(self) -> float:
        """Largest coefficient magnitude over all blades and batch entries."""
        return max((float(np.max(np.abs(c))) for c in self.coeffs.values()), default=0.0)

    def prune(self, threshold: float = DEFAULT_PRUNE) -> "Multivector":
        """Drop blades whose coefficients never exceed ``threshold`` in magnitude."""
        return self._new({m: c for m, c in self.coeffs.items() if np.max(np.abs(c)) > threshold})

    def allclose(self, other, atol: float = 1e-12) -> bool:
        if not isinstance(other, Multivector):
            other = Multivector.scalar(self.r, other)
        return (self - other).max_abs() <= atol

    # serialisation ----------------------------------------------------
    def to_json(self) -> dict:
        if self.shape:
            raise ValueError("only scalar multivectors serialise to the term format")
        return {"r": self.r, "terms": [[m, self.coeffs[m]] for m in sorted(self.coeffs)]}

    @classmethod
    def from_json(cls, data: dict | str, tol: float = DEFAULT_TOL) -> "Multivector":
        if isinstance(data, str):
            data = json.loads(data)
        masks = [int(m) for m, _ in data["terms"]]
        if any(b <= a for a, b in zip(masks, masks[1:])):
            raise ValueError("term masks must be strictly increasing")
        return cls(int(data["r"]), {int(m): float(c) for m, c in data["terms"]}, tol)


def basis_blade(r: int, *indices: int, coeff: Coeff = 1.0, tol: float = DEFAULT_TOL) -> Multivector:
    """Product ``e_{i1} e_{i2} ...`` (1-based indices, any order)."""
    out = Multivector.scalar(r, coeff, tol)
    for i in indices:
        if not 1 <= i <= r:
            raise ValueError(f"basis index {i} out of range for r={r}")
        out = out * Multivector(r, {1 << (i - 1): 1.0}, tol)
    return out


def _reverse_sign(mask: int) -> int:
    k = grade_of(mask)
    return -1 if (k * (k - 1) // 2) & 1 else 1


def _involution_sign(mask: int) -> int:
    return -1 if grade_of(mask) & 1 else 1


def _conj_sign(mask: int) -> int:
    return _reverse_sign(mask) * _involution_sign(mask)


def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    if a.r != b.r:
        raise DimensionMismatch(f"r mismatch: {a.r} vs {b.r}")
    out: dict[int, Coeff] = {}
    for ma, ca in a.coeffs.items():
        for mb, cb in b.coeffs.items():
            m = ma ^ mb
            term = ca * cb if blade_sign(ma, mb) > 0 else -(ca * cb)
            out[m] = out[m] + term if m in out else term
    return Multivector(a.r, out, a.tol)


def grade_project(a: Multivector, k: int) -> Multivector:
    if not 0 <= k <= a.r:
        raise ValueError(f"grade {k} out of range for r={a.r}")
    return a._new({m: c for m, c in a.coeffs.items() if grade_of(m) == k})


def grade_involution(a: Multivector) -> Multivector:
    return a._new({m: c * _involution_sign(m) for m, c in a.coeffs.items()})


def reversion(a: Multivector) -> Multivector:
    return a._new({m: c * _reverse_sign(m) for m, c in a.coeffs.items()})


def norm_map(a: Multivector) -> Multivector:
    """``alpha(a)^T a``."""
    return geometric_product(a.conj(), a)


def quad_form(a: Multivector) -> Coeff:
    # F_r is orthonormal for Q~, so the scalar part of N(a) is the coefficient sum of squares
    total = 0.0
    for c in a.coeffs.values():
        total = total + c * c
    return total


def inner(a: Multivector, b: Multivector) -> Coeff:
    if a.r != b.r:
        raise DimensionMismatch(f"r mismatch: {a.r} vs {b.r}")
    total = 0.0
    for m, c in a.coeffs.items():
        if m in b.coeffs:
            total = total + c * b.coeffs[m]
    return total


def _nonscalar_size(a: Multivector) -> Coeff:
    """Largest absolute non-scalar coefficient, per batch entry."""
    size = np.zeros(a.shape)
    for m, c in a.coeffs.items():
        if m:
            size = np.maximum(size, np.abs(c))
    return size if a.shape else float(size)


def inverse_in_E(a: Multivector) -> Multivector:
    """Inverse ``alpha(a)^T / Q~(a)`` for elements whose norm map is scalar."""
    n = norm_map(a)
    q = quad_form(a)
    if np.any(_nonscalar_size(n) > a.tol) or np.any(q <= a.tol):
        raise NotInvertible("element is not in E(V_r)^x within tolerance")
    return a.conj() / q


def left_matrix(a: Multivector) -> np.ndarray:
    """Matrix of ``phi -> a*phi`` on dense coefficients, shape ``batch + (2**r, 2**r)``."""
    n = 1 << a.r
    mat = np.zeros(a.shape + (n, n))
    for ma, ca in a.coeffs.items():
        for j in range(n):
            mat[..., ma ^ j, j] += blade_sign(ma, j) * ca
    return mat


def right_matrix(a: Multivector) -> np.ndarray:
    """Matrix of ``phi -> phi*a``."""
    n = 1 << a.r
    mat = np.zeros(a.shape + (n, n))
    for ma, ca in a.coeffs.items():
        for j in range(n):
            mat[..., j ^ ma, j] += blade_sign(j, ma) * ca
    return mat


def general_inverse(a: Multivector, cond_max: float = 1e10) -> tuple[Multivector, np.ndarray]:
    """Inverse in the full algebra by solving ``a x = 1`` per batch entry.

    Returns ``(x, cond)`` where ``cond`` is the 2-norm condition number of the
    left multiplication matrix.  Entries with ``cond > cond_max`` are left as
    NaN; callers decide whether to mask or raise.
    """
    mat = left_matrix(a)
    sv = np.linalg.svd(mat, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(sv[..., -1] > 0, sv[..., 0] / sv[..., -1], np.inf)
    bad = ~(cond <= cond_max)
    rhs = np.zeros(mat.shape[:-1])
    rhs[..., 0] = 1.0
    safe = np.where(bad[..., None, None], np.eye(mat.shape[-1]), mat)
    x = np.linalg.solve(safe, rhs[..., None])[..., 0]
    x[bad] = np.nan
    return Multivector.from_dense(a.r, x, a.tol), cond


def inverse(a: Multivector) -> Multivector:
    """Inverse via E(V_r) when possible, otherwise by a dense solve."""
    try:
        return inverse_in_E(a)
    except NotInvertible:
        x, cond = general_inverse(a)
        if np.any(~np.isfinite(cond)) or np.any(cond > 1e10):
            raise NotInvertible("element is singular in Cl(V_r)") from None
        return x


def twisted_adjoint(x: Multivector, phi: Multivector) -> Multivector:
    return grade_involution(x) * phi * inverse_in_E(x)


def adjoint(x: Multivector, phi: Multivector) -> Multivector:
    return x * phi * inverse_in_E(x)


def volume_form(n: int, r: int, tol: float = DEFAULT_TOL) -> Multivector:
    """The blade ``e1 ... en`` in Cl(V_r)."""
    _check_r(r)
    if not 1 <= n <= r:
        raise ValueError(f"volume_form needs 1 <= n <= r, got n={n}, r={r}")
    return Multivector(r, {(1 << n) - 1: 1.0}, tol)


def _grade_leak(a: Multivector, keep: set[int]) -> Coeff:
    """Largest coefficient outside the grades in ``keep``."""
    size = np.zeros(a.shape)
    for m, c in a.coeffs.items():
        if grade_of(m) not in keep:
            size = np.maximum(size, np.abs(c))
    return size if a.shape else float(size)


def _maps_vectors_to_vectors(a: Multivector) -> np.ndarray | bool:
    try:
        inv = inverse_in_E(a)
    except NotInvertible:
        return np.zeros(a.shape, bool) if a.shape else False
    alpha_a = grade_involution(a)
    ok = np.ones(a.shape, bool) if a.shape else True
    for i in range(a.r):
        image = alpha_a * Multivector(a.r, {1 << i: 1.0}) * inv
        ok = ok & (_grade_leak(image, {1}) <= a.tol)
    return ok


def membership(a: Multivector, kind: str, n: int | None = None):
    """Predicate for the named subset of Cl(V_r), evaluated within ``a.tol``.

    Batched input yields a boolean array.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown membership kind {kind!r}")
    tol = a.tol
    q = quad_form(a)
    unit = np.abs(q - 1.0) <= tol

    if kind == "SphereTilde":
        return unit
    in_E = _nonscalar_size(norm_map(a)) <= tol
    if kind == "E":
        return in_E
    s_e = in_E & unit
    if kind == "S_E":
        return s_e
    conj = a.conj()
    if kind in ("D0", "D1"):
        sign = 1.0 if kind == "D0" else -1.0
        return _leak_all(conj - sign * a) <= tol
    if kind == "J":
        return s_e & (_leak_all(conj + a) <= tol)
    if kind in ("Pin", "Spin"):
        pin = s_e & _maps_vectors_to_vectors(a)
        if kind == "Pin":
            return pin
        return pin & (_grade_leak(a, set(range(0, a.r + 1, 2))) <= tol)
    # M_n
    if n is None or not 1 <= n <= a.r - 1:
        raise ValueError(f"M_n needs 1 <= n <= r-1, got n={n}")
    ok = (_grade_leak(a, {n}) <= tol) & unit
    if n == 2:
        sq = geometric_product(a, a)
        four = grade_project(sq, 4) if a.r >= 4 else Multivector.zeros(a.r)
        return ok & (_leak_all(four) <= tol)
    if n == 1:
        return ok
    return ok & _maps_vectors_to_vectors(a)


def _leak_all(a: Multivector) -> Coeff:
    size = np.zeros(a.shape)
    for c in a.coeffs.values():
        size = np.maximum(size, np.abs(c))
    return size if a.shape else float(size)


def random_multivector(r: int, rng: np.random.Generator, grades: Iterable[int] | None = None) -> Multivector:
    """Dense random element, optionally restricted to some grades."""
    keep = set(range(r + 1)) if grades is None else set(grades)
    return Multivector(r, {m: rng.standard_normal() for m in range(1 << r) if grade_of(m) in keep})


def random_unit_vector(r: int, rng: np.random.Generator) -> Multivector:
    v = rng.standard_normal(r)
    return Multivector.vector(r, v / np.linalg.norm(v))


def orthogonal_matrix(x: Multivector, twisted: bool = True) -> np.ndarray:
    """Matrix of the (twisted) adjoint action of ``x`` restricted to V_r."""
    inv = inverse_in_E(x)
    left = grade_involution(x) if twisted else x
    cols = []
    for i in range(x.r):
        image = left * Multivector(x.r, {1 << i: 1.0}) * inv
        cols.append([float(image.coeff(1 << j)) for j in range(x.r)])
    return np.array(cols).T


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
