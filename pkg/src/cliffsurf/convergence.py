"""Grid-refinement studies: residuals on doubling grids and their ratios."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import ResidualReport, SurfaceGrid

RATIO_WINDOW = (3.2, 4.8)
# residuals at or below this are exact up to roundoff and pass regardless of ratio
ROUNDOFF_FLOOR = 1e-12


def ratios(values: list[float]) -> list[float]:
    """Successive ratios ``v[k] / v[k+1]``; ``inf`` when the finer value is 0."""
    out = []
    for a, b in zip(values[:-1], values[1:]):
        out.append(float(a / b) if b > 0 else float("inf"))
    return out


def ratio_pass(values: list[float], window: tuple[float, float] = RATIO_WINDOW,
               floor: float = ROUNDOFF_FLOOR) -> bool:
    """Second-order check: every ratio in ``window``, or the finest values at roundoff."""
    if len(values) < 2:
        return False
    if max(values[1:]) <= floor:
        return True
    return all(window[0] <= r <= window[1] for r in ratios(values))


@dataclass
class StudyResult:
    check: str
    grids: list[int]
    values: list[float]
    ratios: list[float] = field(default_factory=list)
    window: tuple[float, float] = RATIO_WINDOW
    notes: str = ""

    @property
    def passed(self) -> bool:
        return ratio_pass(self.values, self.window)

    def to_json(self) -> dict:
        return {"check": self.check, "grids": self.grids, "values": self.values, "ratios": self.ratios,
                "window": list(self.window), "pass": self.passed, "notes": self.notes}

    def table(self) -> str:
        lines = [f"{'n':>6} {self.check:>16} {'ratio':>8}"]
        for k, (n, v) in enumerate(zip(self.grids, self.values)):
            r = f"{self.ratios[k - 1]:8.3f}" if k else " " * 8
            lines.append(f"{n:>6} {v:16.6e} {r}")
        return "\n".join(lines)


def refinement_study(make_grid: Callable[[int], SurfaceGrid], check: Callable[[SurfaceGrid], ResidualReport],
                     sizes: list[int], name: str = "", use: str = "max",
                     window: tuple[float, float] = RATIO_WINDOW) -> StudyResult:
    """Run ``check`` on ``make_grid(n)`` for each ``n`` and collect ratios."""
    values = []
    for n in sizes:
        rep = check(make_grid(n))
        values.append(float(getattr(rep, use)))
    return StudyResult(name or "residual", list(sizes), values, ratios(values), window)


def observed_order(values: list[float]) -> list[float]:
    """``log2`` of the successive ratios, the empirical convergence order."""
    return [float(np.log2(r)) if np.isfinite(r) and r > 0 else float("nan") for r in ratios(values)]
