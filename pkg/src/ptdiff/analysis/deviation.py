"""One- and two-sided distance deviations between sets near a point."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..sets.oracles import EmptySampleError, SetOracle

MIN_BUDGET = 64


@dataclass(frozen=True)
class Deviation:
    value: float
    error: float
    samples: int

    def __iter__(self):
        yield self.value
        yield self.error


def sampling_gap(points: np.ndarray, values: np.ndarray) -> float:
    """Half the largest jump of ``values`` between nearest-neighbour samples."""
    if len(points) < 2:
        return 0.0
    nn = cKDTree(points).query(points, k=2)[1][:, 1]
    return 0.5 * float(np.max(np.abs(values - values[nn])))


def corrected_dist(B: SetOracle, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """dist(., B) with the resolution of finite surrogates removed."""
    d, e = B.dist(pts)
    if B.resolution:
        d = np.maximum(d - 0.5 * B.resolution, 0.0)
    return d, e


def one_sided_deviation(A: SetOracle, B: SetOracle, a, r: float, budget: int = 512, seed: int = 0) -> Deviation:
    """sup over sampled points of A in the closed ball B(a, r) of dist(., B)."""
    if r <= 0:
        raise ValueError("radius must be positive")
    if budget < MIN_BUDGET:
        raise ValueError(f"insufficient budget: {budget} < {MIN_BUDGET}")
    pts = A.sample_ball(np.asarray(a, dtype=float), r, budget, seed)
    if len(pts) == 0:
        raise EmptySampleError(f"set does not meet ball of radius {r:.3g}")
    d, e = corrected_dist(B, pts)
    j = int(np.argmax(d))
    gap = 0.0 if A.exact_samples else sampling_gap(pts, d)
    return Deviation(float(d[j]), float(e[j] + gap + A.sample_error), len(pts))


def two_sided_deviation(A: SetOracle, B: SetOracle, a, r: float, budget: int = 512, seed: int = 0) -> Deviation:
    """Upper bound for sup |dist(., A) - dist(., B)| over B(a, r) from both one-sided terms at 2r."""
    ab = _safe(A, B, a, 2 * r, budget, seed)
    ba = _safe(B, A, a, 2 * r, budget, seed + 1)
    if ab is None and ba is None:
        raise EmptySampleError(f"neither set meets ball of radius {2 * r:.3g}")
    terms = [t for t in (ab, ba) if t is not None]
    best = max(terms, key=lambda t: t.value)
    return Deviation(best.value, max(t.error for t in terms), sum(t.samples for t in terms))


def direct_two_sided(A: SetOracle, B: SetOracle, a, r: float, count: int = 64, seed: int = 0) -> Deviation:
    """sup |dist(., A) - dist(., B)| over uniform points of B(a, r); a lower estimate of the true sup."""
    a = np.asarray(a, dtype=float)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(count, len(a)))
    u *= (r * rng.uniform(size=(count, 1)) ** (1 / len(a))) / np.linalg.norm(u, axis=1, keepdims=True)
    da, ea = corrected_dist(A, a + u)
    db, eb = corrected_dist(B, a + u)
    gap = np.abs(da - db)
    j = int(np.argmax(gap))
    return Deviation(float(gap[j]), float(ea[j] + eb[j] + 0.5 * (A.resolution + B.resolution)), count)


def _safe(A, B, a, r, budget, seed):
    try:
        return one_sided_deviation(A, B, a, r, budget, seed)
    except EmptySampleError:
        return None
