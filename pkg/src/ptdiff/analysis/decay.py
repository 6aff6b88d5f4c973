"""Finite-scale verdicts for dyadic sequences v_j against r_j^q."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..sets.oracles import EmptySampleError

VANISHES = "VANISHES"
BOUNDED = "BOUNDED"
DIVERGES = "DIVERGES"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class VerdictConfig:
    """Hysteresis constants shared by every decay verdict."""

    factor: float = 1.2
    steps: int = 3
    window: int = 4
    zero_tol: float = 1e-9

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict | None) -> "VerdictConfig":
        return cls(**(obj or {}))


@dataclass
class DecayReport:
    radii: list
    values: list
    errors: list
    target_order: float
    normalized: list
    verdict: str
    fitted_slope: float | None
    config: dict = field(default_factory=dict)
    note: str = ""

    def to_json(self) -> dict:
        return {
            "radii": _clean(self.radii), "values": _clean(self.values), "errors": _clean(self.errors),
            "target_order": self.target_order, "normalized": _clean(self.normalized), "verdict": self.verdict,
            "fitted_slope": _clean([self.fitted_slope])[0], "config": self.config, "note": self.note,
        }

    def renormalized(self, q: float, floors=None) -> "DecayReport":
        """The same measurements judged against another exponent."""
        cfg = VerdictConfig.from_json(self.config)
        return decay_report(self.radii, self.values, self.errors, q, cfg, floors, self.note)


def _clean(seq):
    out = []
    for v in seq:
        if v is None or (isinstance(v, float) and not np.isfinite(v)):
            out.append(None)
        else:
            out.append(float(v))
    return out


def classify_sequence(radii, values, errors, q: float, config: VerdictConfig = VerdictConfig(),
                      floors=None) -> tuple[str, np.ndarray, float | None]:
    r = np.asarray(radii, dtype=float)
    v = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    floors = r if floors is None else np.asarray(floors, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        norm = v / r ** q
        upper = (v + e) / r ** q
        lower = np.maximum(v - e, 0.0) / r ** q
    slope = fitted_slope(r, v, config.window)
    tail = config.steps + 1
    if len(r) < tail or not np.all(np.isfinite(v[-tail:])):
        return INCONCLUSIVE, norm, slope
    up, lo = upper[-tail:], lower[-tail:]
    if np.all(v[-tail:] + e[-tail:] <= config.zero_tol * floors[-tail:]):
        return VANISHES, norm, slope
    if np.all(up[1:] * config.factor <= up[:-1]):
        return VANISHES, norm, slope
    if lo[0] > 0 and np.all(lo[1:] >= config.factor * lo[:-1]):
        return DIVERGES, norm, slope
    w = min(config.window, len(r))
    if np.all(np.isfinite(v[-w:])) and np.all(lower[-w:] > 0):
        if upper[-w:].max() <= config.factor ** config.steps * lower[-w:].min():
            return BOUNDED, norm, slope
    return INCONCLUSIVE, norm, slope


def fitted_slope(radii, values, window: int = 4) -> float | None:
    r = np.asarray(radii, dtype=float)[-window:]
    v = np.asarray(values, dtype=float)[-window:]
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(r[ok]), np.log(v[ok]), 1)[0])


def decay_report(radii, values, errors, q, config: VerdictConfig = VerdictConfig(), floors=None,
                 note: str = "") -> DecayReport:
    verdict, norm, slope = classify_sequence(radii, values, errors, q, config, floors)
    return DecayReport(list(map(float, radii)), [float(v) for v in values], [float(e) for e in errors], float(q),
                       [float(x) for x in norm], verdict, slope, config.to_json(), note)


def dyadic_radii(r0: float, levels: int) -> np.ndarray:
    return float(r0) * 2.0 ** -np.arange(int(levels))


def decay_scan(closure, r0: float, levels: int, q: float, config: VerdictConfig = VerdictConfig(),
               floors=None) -> DecayReport:
    """Evaluate ``closure(r) -> (value, error)`` on r_j = r0 2^-j and judge v_j / r_j^q."""
    if levels < 5:
        raise ValueError("decay scans need at least 5 levels")
    radii = dyadic_radii(r0, levels)
    vals, errs, notes = [], [], []
    for r in radii:
        try:
            v, e = closure(float(r))
        except EmptySampleError as exc:
            v, e = np.nan, np.nan
            notes.append(f"r={r:.3g}: {exc}")
        vals.append(float(v))
        errs.append(float(e))
    return decay_report(radii, vals, errs, q, config, floors, "; ".join(notes))
