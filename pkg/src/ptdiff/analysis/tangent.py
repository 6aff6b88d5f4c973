"""Tangent planes from local principal subspaces, and cone certificates."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ..grassmann import Plane, grass_distance
from ..sets.oracles import EmptySampleError, SetOracle, affine_plane
from .decay import (BOUNDED, DIVERGES, INCONCLUSIVE, VANISHES, DecayReport, VerdictConfig, decay_report,
                    dyadic_radii)
from .deviation import MIN_BUDGET, two_sided_deviation

STABLE_TOL = 0.25


@dataclass
class TangentResult:
    """Outcome of the tangent search; ``plane`` is None unless ``status == 'ok'``."""

    status: str
    plane: Plane | None
    dim: int | None
    report: DecayReport | None
    diagnostics: dict = field(default_factory=dict)
    warning: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> dict:
        return {
            "status": self.status, "dim": self.dim,
            "plane": None if self.plane is None else self.plane.to_json(),
            "report": None if self.report is None else self.report.to_json(),
            "diagnostics": {str(m): d for m, d in self.diagnostics.items()}, "warning": self.warning,
        }


def principal_plane(points: np.ndarray, a: np.ndarray, m: int) -> Plane:
    """Top-m principal subspace of the uncentred second moment of points - a."""
    n = len(a)
    if m == 0:
        return Plane.zero(n)
    if m == n:
        return Plane.full(n)
    x = points - a
    _, vecs = np.linalg.eigh(x.T @ x)
    return Plane(n, vecs[:, ::-1][:, :m].T).canonical()


def isolation_report(A: SetOracle, a, radii, budget: int, seed: int, config: VerdictConfig) -> DecayReport:
    """Largest sampled |x - a| over A in B(a, r) at each radius, judged at q = 1."""
    a = np.asarray(a, dtype=float)
    vals, errs = [], []
    for j, r in enumerate(radii):
        pts = A.sample_ball(a, r, budget, seed + j)
        far = np.linalg.norm(pts - a, axis=1) if len(pts) else np.zeros(0)
        far = far[far > max(A.resolution, 1e-12 * r)]
        vals.append(float(far.max()) if len(far) else 0.0)
        errs.append(float(A.sample_error))
    return decay_report(radii, vals, errs, 1.0, config, note="isolation")


def estimate_tangent(A: SetOracle, a, r0: float = 0.25, levels: int = 8, budget: int = 512, seed: int = 0,
                     config: VerdictConfig = VerdictConfig()) -> TangentResult:
    """Smallest m whose principal m-plane at a has a two-sided deviation of order o(r)."""
    a = np.asarray(a, dtype=float)
    n = A.ambient_dim
    if budget < MIN_BUDGET:
        return TangentResult(INCONCLUSIVE, None, None, None, {}, f"insufficient budget: {budget} < {MIN_BUDGET}")
    radii = dyadic_radii(r0, levels)
    samples = []
    for j, r in enumerate(radii):
        pts = A.sample_ball(a, r, budget, seed + 7919 * j)
        samples.append(pts)
    reports: dict[int, DecayReport] = {}
    planes: dict[int, Plane] = {}
    diags: dict[int, dict] = {}
    iso = isolation_report(A, a, radii, budget, seed, config)
    reports[0], planes[0] = iso, Plane.zero(n)
    diags[0] = {"verdict": iso.verdict}
    for m in range(1, n + 1):
        vals, errs, drift, plane_j, notes = [], [], [], [], []
        for j, r in enumerate(radii):
            pts = samples[j]
            if len(pts) < m + 1:
                vals.append(np.nan)
                errs.append(np.nan)
                plane_j.append(None)
                notes.append(f"r={r:.3g}: {len(pts)} samples")
                continue
            T = principal_plane(pts, a, m)
            plane_j.append(T)
            try:
                dev = two_sided_deviation(A, affine_plane(T, a), a, r, budget, seed + 104729 * j + m)
                vals.append(dev.value)
                errs.append(dev.error)
            except EmptySampleError as exc:
                vals.append(np.nan)
                errs.append(np.nan)
                notes.append(str(exc))
        for j in range(1, len(plane_j)):
            if plane_j[j] is not None and plane_j[j - 1] is not None:
                drift.append(grass_distance(plane_j[j], plane_j[j - 1]))
            else:
                drift.append(np.nan)
        rep = decay_report(radii, vals, errs, 1.0, config, note="; ".join(notes))
        stable = len(drift) > 0 and np.isfinite(drift[-1]) and drift[-1] <= STABLE_TOL
        reports[m], planes[m] = rep, plane_j[-1]
        diags[m] = {"verdict": rep.verdict, "stable": bool(stable), "drift": [float(d) for d in drift]}
    passing = [m for m in range(n + 1) if reports[m].verdict == VANISHES and (m == 0 or diags[m]["stable"])]
    if passing:
        m = passing[0]
        note = ""
        if len(passing) > 1:
            note = f"dimensions {passing} all pass; keeping the smallest"
            warnings.warn(note, RuntimeWarning, stacklevel=2)
        return TangentResult("ok", planes[m], m, reports[m], diags, note)
    definite = all(reports[m].verdict in (BOUNDED, DIVERGES) for m in range(n + 1))
    status = "not order-1" if definite else INCONCLUSIVE
    return TangentResult(status, None, None, None, diags, "")


def refine_tangent(A: SetOracle, a, plane: Plane, k: int, r: float, budget: int = 512, seed: int = 0,
                   iterations: int = 2) -> Plane:
    """Tilt ``plane`` by the linear part of a degree-k jet fit at radius r."""
    from .fit import fit_level

    a = np.asarray(a, dtype=float)
    if plane.dim in (0, plane.ambient_dim):
        return plane
    for it in range(iterations):
        lev = fit_level(A, a, plane, max(k, 1), r, budget, seed + it)
        if lev is None:
            break
        lin = np.array([lev.jet.coefficient(tuple(int(i == j) for i in range(plane.dim))) for j in range(plane.dim)])
        vectors = plane.basis + lin @ plane.perp_basis
        new = Plane(plane.ambient_dim, vectors).canonical()
        if grass_distance(new, plane) <= 1e-15:
            break
        plane = new
    return plane


@dataclass
class ConeCertificate:
    plane: Plane
    kappa: float
    radius: float
    violations: int
    tolerance: float = 1e-12

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.kappa))

    def to_json(self) -> dict:
        return {"plane": self.plane.to_json(), "kappa": self.kappa if self.ok else None, "radius": self.radius,
                "violations": self.violations, "tolerance": self.tolerance}


def cone_ratios(pts: np.ndarray, a: np.ndarray, S: Plane, tol: float) -> np.ndarray:
    x = pts - a
    along = np.linalg.norm(S.coords(x), axis=1) if S.dim else np.zeros(len(x))
    across = np.linalg.norm(S.perp_coords(x), axis=1) if S.codim else np.zeros(len(x))
    keep = np.hypot(along, across) > tol
    along, across = along[keep], across[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(across <= tol, 0.0, across / along)
    return ratio


def cone_certificate(A: SetOracle, a, S: Plane, r0: float = 0.5, budget: int = 512, seed: int = 0, levels: int = 8,
                     kappa_cap: float = 100.0) -> ConeCertificate:
    """Smallest kappa (two decimals) with A near a inside the cone about S, at the largest dyadic radius."""
    a = np.asarray(a, dtype=float)
    for j, r in enumerate(dyadic_radii(r0, levels)):
        pts = A.sample_ball(a, r, budget, seed + j)
        tol = 1e-12 * max(r, 1.0) + A.sample_error
        ratio = cone_ratios(pts, a, S, tol)
        worst = float(ratio.max()) if len(ratio) else 0.0
        if not np.isfinite(worst):
            continue
        kappa = np.ceil(100.0 * worst - 1e-9) / 100.0
        if kappa <= kappa_cap:
            violations = int(np.sum(ratio > kappa + 1e-12))
            return ConeCertificate(S, float(max(kappa, 0.0)), float(r), violations)
    return ConeCertificate(S, float("inf"), float(r0 * 2.0 ** -(levels - 1)), -1)
