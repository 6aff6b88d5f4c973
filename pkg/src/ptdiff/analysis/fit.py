"""Least-squares jets of a set over a reference plane."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grassmann import Plane
from ..jets import JetPolynomial, monomials, multi_indices
from ..sets.oracles import SetOracle
from .decay import INCONCLUSIVE, DecayReport, VerdictConfig, decay_report, dyadic_radii
from .deviation import sampling_gap

RANK_TOL = 1e-12
EPS = np.finfo(float).eps


@dataclass
class LevelFit:
    radius: float
    jet: JetPolynomial
    residual: float
    error: float
    cond: float
    samples: int


@dataclass
class JetFit:
    """Fitted jet with per-coefficient error bars and the residual decay report."""

    jet: JetPolynomial | None
    errors: np.ndarray | None
    report: DecayReport
    level: int | None
    conditions: list = field(default_factory=list)
    status: str = "ok"

    def to_json(self) -> dict:
        return {
            "jet": None if self.jet is None else self.jet.to_json(),
            "errors": None if self.errors is None else self.errors.tolist(),
            "report": self.report.to_json(), "level": self.level,
            "conditions": [None if not np.isfinite(c) else float(c) for c in self.conditions], "status": self.status,
        }


def fit_level(A: SetOracle, a, S: Plane, k: int, r: float, budget: int, seed: int = 0,
              anchored: bool | None = None) -> LevelFit | None:
    """Fit one radius; None when the scaled design matrix is rank deficient."""
    a = np.asarray(a, dtype=float)
    pts = A.sample_ball(a, r, budget, seed)
    m, q = S.dim, S.codim
    base = S.coords(a)
    if anchored is None:
        d, e = A.dist(a[None])
        anchored = bool(d[0] <= e[0] + 1e-12 * (1.0 + np.linalg.norm(a)))
    n_terms = len(multi_indices(m, k))
    first = 1 if anchored else 0
    if len(pts) < n_terms - first:
        return None
    chi = S.coords(pts) - base
    w = S.perp_coords(pts)
    u = chi / r
    design = monomials(u, m, k)
    c0 = S.perp_coords(a) if anchored else np.zeros(q)
    rhs = w - c0 if anchored else w
    sub = design[:, first:]
    svals = np.linalg.svd(sub, compute_uv=False)
    if len(svals) == 0 or svals[-1] <= RANK_TOL * svals[0] or sub.shape[0] < sub.shape[1]:
        return None
    sol = np.linalg.lstsq(sub, rhs, rcond=None)[0]
    coeffs = np.zeros((n_terms, q))
    if anchored:
        coeffs[0] = c0
    coeffs[first:] = sol
    degrees = np.array([sum(t) for t in multi_indices(m, k)])
    coeffs[first:] /= (r ** degrees[first:])[:, None]
    jet = JetPolynomial(S, k, coeffs, base)
    res = np.linalg.norm(w - jet.eval(chi + base), axis=1)
    gap = 0.0 if A.exact_samples else sampling_gap(pts, res)
    resid = res.max()
    if A.resolution:
        resid = max(resid - 0.5 * A.resolution, 0.0)
    return LevelFit(float(r), jet, float(resid), float(gap + A.sample_error), float(svals[0] / svals[-1]), len(pts))


def fit_jet(A: SetOracle, a, S: Plane, k: int, radii=None, budget: int = 512, seed: int = 0, q: float | None = None,
            config: VerdictConfig = VerdictConfig(), r0: float = 0.25, levels: int = 8) -> JetFit:
    """Per-radius least squares of pi_Sperp(x - a) on degree <= k monomials in pi_S(x - a).

    Each radius gets an error bar from the coefficient change against the next
    coarser radius and from unscaling roundoff; the smallest bar wins.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a = np.asarray(a, dtype=float)
    radii = dyadic_radii(r0, levels) if radii is None else np.asarray(radii, dtype=float)
    q = float(k) if q is None else float(q)
    fits = [fit_level(A, a, S, k, r, budget, seed + 31 * j) for j, r in enumerate(radii)]
    vals = [f.residual if f else np.nan for f in fits]
    errs = [f.error if f else np.nan for f in fits]
    conds = [f.cond if f else np.inf for f in fits]
    report = decay_report(radii, vals, errs, q, config)
    degrees = np.array([sum(t) for t in multi_indices(S.dim, k)])
    best, best_change, best_err = None, np.inf, None
    for j in range(1, len(fits)):
        if fits[j] is None or fits[j - 1] is None:
            continue
        delta = np.abs(fits[j].jet.coeffs - fits[j - 1].jet.coeffs)
        # roundoff carried by unscaling the coefficients
        noise = 1e3 * EPS * fits[j].cond * (1.0 + np.abs(fits[j].jet.coeffs)) / (radii[j] ** degrees)[:, None]
        bar = np.maximum(delta, noise)
        if float(bar.max()) <= best_change:
            best, best_change, best_err = j, float(bar.max()), bar
    if best is None:
        usable = [j for j, f in enumerate(fits) if f is not None]
        if not usable:
            report.verdict = INCONCLUSIVE
            report.note = (report.note + "; " if report.note else "") + "rank-deficient design at every radius"
            return JetFit(None, None, report, None, conds, "rank deficient")
        best = usable[-1]
        best_err = np.full_like(fits[best].jet.coeffs, np.inf)
    return JetFit(fits[best].jet, best_err, report, best, conds, "ok")
