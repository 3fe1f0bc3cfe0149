"""Randomised identity checks for the algebra, shared by the CLI and the tests.

The reference product here is a brute-force one: blades are index lists,
concatenated and bubble-sorted while counting transpositions, and repeated
generators cancel to ``-1``.  It shares no code with the bitmask product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Multivector,
    geometric_product,
    grade_involution,
    inverse_in_E,
    norm_map,
    quad_form,
    reversion,
    volume_form,
)


def brute_blade_product(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Product of two ascending index tuples as ``(sign, indices)``."""
    seq = list(a) + list(b)
    sign = 1
    n = len(seq)
    for i in range(n):
        for j in range(n - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    out: list[int] = []
    for x in seq:
        if out and out[-1] == x:
            out.pop()
            sign = -sign  # e_i e_i = -1
        else:
            out.append(x)
    return sign, tuple(out)


def _indices(mask: int) -> tuple[int, ...]:
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def _mask(idx: tuple[int, ...]) -> int:
    m = 0
    for i in idx:
        m |= 1 << i
    return m


def brute_table(r: int) -> tuple[np.ndarray, np.ndarray]:
    """``(sign, target)`` tables over all blade pairs, from the brute-force product."""
    n = 1 << r
    sign = np.zeros((n, n))
    target = np.zeros((n, n), int)
    for a in range(n):
        ia = _indices(a)
        for b in range(n):
            s, idx = brute_blade_product(ia, _indices(b))
            sign[a, b] = s
            target[a, b] = _mask(idx)
    return sign, target


def brute_dense_product(r: int, A: np.ndarray, B: np.ndarray, table=None) -> np.ndarray:
    """Product of dense coefficient arrays ``(..., 2^r)`` with the brute-force table."""
    sign, target = table if table is not None else brute_table(r)
    n = 1 << r
    out = np.zeros(np.broadcast_shapes(A.shape, B.shape))
    for a in range(n):
        for b in range(n):
            out[..., target[a, b]] += sign[a, b] * A[..., a] * B[..., b]
    return out


@dataclass
class FamilyResult:
    name: str
    max_error: float
    tol: float
    trials: int
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol

    def to_json(self) -> dict:
        return {"name": self.name, "max_error": self.max_error, "tol": self.tol, "trials": self.trials,
                "pass": self.passed, **self.detail}


def _batch(r: int, rng: np.random.Generator, n: int, grades=None) -> Multivector:
    keep = set(range(r + 1)) if grades is None else set(grades)
    return Multivector(r, {m: rng.standard_normal(n) for m in range(1 << r) if bin(m).count("1") in keep})


def _unit_vectors(r: int, rng: np.random.Generator, n: int) -> tuple[Multivector, np.ndarray]:
    v = rng.standard_normal((n, r))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return Multivector(r, {1 << i: v[:, i] for i in range(r)}), v


def _err(a: Multivector, b: Multivector | float = 0.0) -> float:
    d = a - b
    out = 0.0
    for c in d.coeffs.values():
        out = max(out, float(np.max(np.abs(c))))
    return out


def _action_matrices(x: Multivector, twisted: bool) -> np.ndarray:
    """Batched matrices of the (twisted) adjoint action of ``x`` on V_r."""
    r = x.r
    inv = inverse_in_E(x)
    left = grade_involution(x) if twisted else x
    n = x.shape[0]
    M = np.zeros((n, r, r))
    for i in range(r):
        img = left * Multivector(r, {1 << i: 1.0}) * inv
        for j in range(r):
            M[:, j, i] = np.broadcast_to(img.coeff(1 << j), (n,))
    return M


def oracle_family(r: int, trials: int, rng: np.random.Generator, tol: float = 1e-12) -> list[FamilyResult]:
    table = brute_table(r)
    sign, target = table
    n = 1 << r
    bad = 0
    for a in range(n):
        for b in range(n):
            p = geometric_product(Multivector(r, {a: 1.0}), Multivector(r, {b: 1.0}))
            if p.coeffs != {int(target[a, b]): float(sign[a, b])}:
                bad += 1
    blades = FamilyResult("oracle_blade_pairs", float(bad), 0.0, n * n, {"mismatches": bad})
    A = rng.standard_normal((trials, n))
    B = rng.standard_normal((trials, n))
    ours = (Multivector.from_dense(r, A) * Multivector.from_dense(r, B)).dense()
    ref = brute_dense_product(r, A, B, table)
    dense = FamilyResult("oracle_dense_random", float(np.max(np.abs(ours - ref))), tol, trials)
    return [blades, dense]


def structural_families(r: int, trials: int, rng: np.random.Generator, tol: float = 1e-12) -> list[FamilyResult]:
    out = []
    # orthogonal vectors anticommute
    u, uv = _unit_vectors(r, rng, trials)
    w = rng.standard_normal((trials, r))
    w -= np.sum(w * uv, axis=1, keepdims=True) * uv
    wv = Multivector(r, {1 << i: w[:, i] for i in range(r)})
    out.append(FamilyResult("anticommute_orthogonal", _err(u * wv + wv * u), tol, trials))
    # v^2 = -Q(v)
    v = _batch(r, rng, trials, [1])
    out.append(FamilyResult("vector_square", _err(v * v, -quad_form(v)), tol, trials))
    a, b, c = _batch(r, rng, trials), _batch(r, rng, trials), _batch(r, rng, trials)
    ab = a * b
    out.append(FamilyResult("associativity", _err(ab * c, a * (b * c)), tol * 10, trials))
    out.append(FamilyResult("reversion_anti_automorphism", _err(reversion(ab), reversion(b) * reversion(a)),
                            tol, trials))
    out.append(FamilyResult("involution_automorphism",
                            _err(grade_involution(ab), grade_involution(a) * grade_involution(b)), tol, trials))
    out.append(FamilyResult("involution_squared", _err(grade_involution(grade_involution(a)), a), tol, trials))
    out.append(FamilyResult("norm_map_vectors", _err(norm_map(v), quad_form(v)), tol, trials))
    worst = 0.0
    for k in range(2, min(r, 4) + 1):
        om = volume_form(k, r)
        worst = max(worst, _err(om * om, float((-1) ** (k * (k + 1) // 2))))
    out.append(FamilyResult("volume_form_square", worst, tol, 1))
    return out


def reflection_families(r: int, trials: int, rng: np.random.Generator, tol: float = 1e-9) -> list[FamilyResult]:
    out = []
    u, _ = _unit_vectors(r, rng, trials)
    M = _action_matrices(u, twisted=True)
    eye = np.eye(r)
    orth = float(np.max(np.abs(np.einsum("nji,njk->nik", M, M) - eye)))
    eig = np.linalg.eigvalsh((M + np.transpose(M, (0, 2, 1))) / 2)
    fixed = np.count_nonzero(np.abs(eig - 1.0) <= 1e-8, axis=1)
    det = np.linalg.det(M)
    out.append(FamilyResult("reflection_isometry", orth, tol, trials))
    out.append(FamilyResult("reflection_fixed_space", float(np.max(np.abs(fixed - (r - 1)))), 0.0, trials,
                            {"expected_dim": r - 1}))
    out.append(FamilyResult("reflection_orientation", float(np.max(np.abs(det + 1.0))), tol, trials))
    # rotors: products of an even number of unit vectors
    x = Multivector.scalar(r, np.ones(trials))
    for _ in range(2 * (1 + int(rng.integers(0, 3)))):
        x = x * _unit_vectors(r, rng, trials)[0]
    R = _action_matrices(x, twisted=False)
    orth_r = float(np.max(np.abs(np.einsum("nji,njk->nik", R, R) - eye)))
    out.append(FamilyResult("rotor_isometry", orth_r, tol, trials))
    out.append(FamilyResult("rotor_orientation", float(np.max(np.abs(np.linalg.det(R) - 1.0))), tol, trials))
    return out


def algebra_check(r: int = 4, trials: int = 1000, seed: int = 0) -> list[FamilyResult]:
    """Run every identity family; the oracle sweep covers all blade pairs of ``Cl(V_r)``."""
    if not 1 <= r <= 8:
        raise ValueError("algebra-check supports 1 <= r <= 8")
    rng = np.random.default_rng(seed)
    return oracle_family(r, trials, rng) + structural_families(r, trials, rng) + reflection_families(r, trials, rng)
