"""Zero-or-infinity probe for r^-l sup g over shrinking balls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..jets import ball_points
from .decay import DIVERGES, VANISHES, DecayReport, VerdictConfig, decay_scan
from .deviation import sampling_gap

ZERO = "ZERO"
INFINITY = "INFINITY"
INTERMEDIATE = "INTERMEDIATE"


class SampledField:
    """sup over a ball of a vectorised g: R^m -> [0, inf), by sampling with a gap error bar."""

    def __init__(self, g, m: int, budget: int = 1024, seed: int = 0):
        self.g, self.m, self.budget, self.seed = g, m, budget, seed
        self._unit = ball_points(m, budget, seed)

    def sup_ball(self, a, r: float) -> tuple[float, float]:
        pts = np.asarray(a, dtype=float).reshape(1, self.m) + r * self._unit
        vals = np.asarray(self.g(pts), dtype=float).reshape(-1)
        return float(vals.max()), sampling_gap(pts, vals)


def power_field(p: float, m: int = 1, centre=None, budget: int = 1024) -> SampledField:
    c = np.zeros(m) if centre is None else np.asarray(centre, dtype=float)
    return SampledField(lambda x: np.linalg.norm(x - c, axis=1) ** p, m, budget)


@dataclass
class DichotomyResult:
    verdicts: list
    reports: list = field(repr=False)
    intermediate_fraction: float = 0.0

    def to_json(self) -> dict:
        return {"verdicts": self.verdicts, "intermediate_fraction": self.intermediate_fraction,
                "reports": [r.to_json() for r in self.reports]}


def dichotomy_verdict(report: DecayReport) -> str:
    if report.verdict == VANISHES:
        return ZERO
    if report.verdict == DIVERGES:
        return INFINITY
    return INTERMEDIATE


def dichotomy_probe(g, points, l: float, r0: float = 0.25, levels: int = 12,
                    config: VerdictConfig = VerdictConfig()) -> DichotomyResult:
    """Judge r^-l sup_{B(a, r)} g at each point; ``g`` needs a ``sup_ball(a, r)`` method."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not hasattr(g, "sup_ball"):
        raise TypeError("field must provide sup_ball(a, r); wrap plain callables in SampledField")
    verdicts, reports = [], []
    ones = np.ones(levels)
    for a in points:
        rep = decay_scan(lambda r, a=a: g.sup_ball(a, r), r0, levels, l, config, floors=ones)
        reports.append(rep)
        verdicts.append(dichotomy_verdict(rep))
    frac = float(np.mean([v == INTERMEDIATE for v in verdicts])) if verdicts else 0.0
    return DichotomyResult(verdicts, reports, frac)
