"""Shear subtraction and the stage-by-stage inhomogeneous blow-up."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..grassmann import Plane
from ..jets import JetPolynomial, monomials, multi_indices
from ..sets.oracles import DilatedSet, GraphSet, PointCloud, SetOracle, ShearImage, translate
from .decay import DIVERGES, INCONCLUSIVE, VANISHES, DecayReport, VerdictConfig, decay_report
from .tangent import TangentResult, estimate_tangent, refine_tangent



def aitken_limit(x0: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Aitken delta-squared limit of three terms, entrywise; falls back to x2."""
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    scale = np.maximum.reduce([np.abs(x0), np.abs(x1), np.abs(x2), np.ones_like(x0)])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d2 / d1
        lim = x2 - d2 * d2 / den
    ok = (np.abs(den) > 1e-13 * scale) & (np.abs(d1) > 0) & (np.abs(ratio) < 0.95)
    return np.where(ok, lim, x2)


def shear_subtract(A: SetOracle, S: Plane, p: JetPolynomial) -> SetOracle:
    """{x - p(pi_S x) : x in A}."""
    return ShearImage(A, S, p)


@dataclass(frozen=True)
class BlowupConfig:
    s0: float = 0.1
    steps: int = 8
    budget: int = 512
    seed: int = 0
    grid_per_axis: int = 9
    tangent_r0: float = 0.25
    tangent_levels: int = 8
    verdict: VerdictConfig = field(default_factory=VerdictConfig)

    @property
    def schedule(self) -> np.ndarray:
        return self.s0 * 2.0 ** -np.arange(self.steps)

    def to_json(self) -> dict:
        return {"s0": self.s0, "steps": self.steps, "budget": self.budget, "seed": self.seed,
                "grid_per_axis": self.grid_per_axis, "tangent_r0": self.tangent_r0,
                "tangent_levels": self.tangent_levels, "verdict": self.verdict.to_json()}

    @classmethod
    def from_json(cls, obj: dict | None) -> "BlowupConfig":
        obj = dict(obj or {})
        obj["verdict"] = VerdictConfig.from_json(obj.get("verdict"))
        return cls(**obj)


@dataclass
class BlowupStage:
    order: int
    jet: JetPolynomial
    raw: list
    convergence: DecayReport
    residual: DecayReport
    passed: bool
    verdict: str
    field_rows: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {"order": self.order, "jet": self.jet.to_json(), "raw_fits": self.raw,
                "convergence": self.convergence.to_json(), "residual": self.residual.to_json(),
                "passed": self.passed, "verdict": self.verdict}


@dataclass
class BlowupResult:
    point: np.ndarray
    plane: Plane | None
    stages: list
    halted_at: int | None
    status: str
    precondition: TangentResult | None = None
    config: dict = field(default_factory=dict)

    @property
    def jets(self) -> list:
        return [st.jet for st in self.stages]

    def to_json(self) -> dict:
        return {"point": [float(v) for v in self.point], "plane": None if self.plane is None else self.plane.to_json(),
                "stages": [st.to_json() for st in self.stages], "halted_at": self.halted_at, "status": self.status,
                "precondition": None if self.precondition is None else self.precondition.to_json(),
                "config": self.config}


def probe_grid(n: int, per_axis: int = 9, half_width: float = 1.0) -> np.ndarray:
    g = np.linspace(-half_width, half_width, per_axis)
    return np.array(np.meshgrid(*([g] * n), indexing="ij")).reshape(n, -1).T


def sample_cylinder(D: SetOracle, S: Plane, radius: float, height: float, budget: int, seed: int) -> np.ndarray:
    """Points of D with |pi_S x| <= radius and |pi_Sperp x| <= height."""
    graph = getattr(D, "_delegate", None) if not isinstance(D, GraphSet) else D
    if isinstance(graph, GraphSet) and graph.plane.dim == S.dim:
        from ..sets.oracles import disk_points
        chi = radius * disk_points(S.dim, budget, seed)
        chi = chi[graph.in_domain(chi)]
        pts = graph.lift(chi)
    elif isinstance(graph, PointCloud):
        pts = graph.points
    else:
        pts = D.sample_ball(np.zeros(D.ambient_dim), float(np.hypot(radius, height)), budget, seed)
    if len(pts) == 0:
        return pts
    keep = (np.linalg.norm(S.coords(pts), axis=1) <= radius * (1 + 1e-12))
    keep &= np.linalg.norm(S.perp_coords(pts), axis=1) <= height
    return pts[keep]


def fit_homogeneous(pts: np.ndarray, S: Plane, i: int) -> np.ndarray | None:
    """Least-squares coefficients (n_terms, q) of a degree-i homogeneous map w = Q(u)."""
    idx = [t for t in multi_indices(S.dim, i) if sum(t) == i]
    if len(pts) < len(idx):
        return None
    u, w = S.coords(pts), S.perp_coords(pts)
    full = monomials(u, S.dim, i)
    cols = [multi_indices(S.dim, i).index(t) for t in idx]
    design = full[:, cols]
    return np.linalg.lstsq(design, w, rcond=None)[0]


def homogeneous_jet(S: Plane, i: int, coeffs: np.ndarray) -> JetPolynomial:
    idx = multi_indices(S.dim, i)
    full = np.zeros((len(idx), S.codim))
    hom = [j for j, t in enumerate(idx) if sum(t) == i]
    full[hom] = coeffs
    return JetPolynomial(S, i, full)


def _stage_set(A0: SetOracle, S: Plane, total: JetPolynomial | None) -> SetOracle:
    if total is None or not np.any(total.coeffs):
        return A0
    return shear_subtract(A0, S, total)


def inductive_blowup(A: SetOracle, a, k: int, grid=None, schedule=None, config: BlowupConfig = BlowupConfig(),
                     plane: Plane | None = None, supplied: dict | None = None) -> BlowupResult:
    """Recover homogeneous P_1..P_k at a by blowing up shear-subtracted copies of A.

    ``supplied`` maps stage orders to jets that replace the fitted ones, which
    lets callers check that a wrong polynomial breaks convergence.
    """
    a = np.asarray(a, dtype=float)
    vc = config.verdict
    schedule = config.schedule if schedule is None else np.sort(np.asarray(schedule, dtype=float))[::-1]
    echo = config.to_json()
    tan = None
    if plane is None:
        tan = estimate_tangent(A, a, config.tangent_r0, config.tangent_levels, config.budget, config.seed, vc)
        if not tan.ok or tan.dim == 0:
            status = "precondition failed: " + (tan.status if not tan.ok else "isolated point")
            return BlowupResult(a, None, [], 1, status, tan, echo)
        r_fine = config.tangent_r0 * 2.0 ** -(config.tangent_levels - 1)
        plane = refine_tangent(A, a, tan.plane, k, 8 * r_fine, config.budget, config.seed)
    S = plane
    grid = probe_grid(A.ambient_dim, config.grid_per_axis) if grid is None else np.asarray(grid, dtype=float)
    A0 = translate(A, a)
    supplied = supplied or {}
    stages: list[BlowupStage] = []
    total: JetPolynomial | None = None
    for i in range(1, k + 1):
        Ai = _stage_set(A0, S, total)
        raw, pts_by_s = [], []
        for j, s in enumerate(schedule):
            D = DilatedSet(Ai, S, i, float(s))
            pts = sample_cylinder(D, S, 1.0, 2.0 * float(s) ** (1 - i), config.budget, config.seed + j)
            pts_by_s.append(pts)
            raw.append(fit_homogeneous(pts, S, i))
        if i in supplied:
            P = supplied[i]
        else:
            tail = [c for c in raw[-3:] if c is not None]
            if len(tail) == 3:
                coeffs = aitken_limit(*tail)
            elif tail:
                coeffs = tail[-1]
            else:
                coeffs = np.zeros((len([t for t in multi_indices(S.dim, i) if sum(t) == i]), S.codim))
            P = homogeneous_jet(S, i, coeffs)
        graph = GraphSet(S, P)
        conv_v, conv_e, res_v, res_e, rows = [], [], [], [], []
        for j, s in enumerate(schedule):
            D = DilatedSet(Ai, S, i, float(s))
            d1, e1 = D.dist(grid)
            d2, e2 = graph.dist(grid)
            diff = np.abs(d1 - d2)
            conv_v.append(float(diff.max()))
            conv_e.append(float((e1 + e2)[int(np.argmax(diff))]))
            rows.extend((i, float(s), g, float(x), float(y)) for g, x, y in zip(range(len(grid)), d1, d2))
            pts = pts_by_s[j]
            if len(pts):
                r = np.linalg.norm(S.perp_coords(pts) - P.eval(S.coords(pts)), axis=1)
                res_v.append(float(r.max()))
                res_e.append(float(D.sample_error))
            else:
                res_v.append(np.nan)
                res_e.append(np.nan)
        ones = np.ones(len(schedule))
        conv = decay_report(schedule, conv_v, conv_e, 0.0, vc, ones, note=f"stage {i} distance fields")
        resid = decay_report(schedule, res_v, res_e, 0.0, vc, ones, note=f"stage {i} cylinder residual")
        passed = conv.verdict == VANISHES and resid.verdict == VANISHES
        if passed:
            verdict = VANISHES
        elif DIVERGES in (resid.verdict, conv.verdict):
            verdict = DIVERGES
        elif INCONCLUSIVE in (resid.verdict, conv.verdict):
            verdict = INCONCLUSIVE
        else:
            verdict = resid.verdict if resid.verdict != VANISHES else conv.verdict
        raw_json = [None if c is None else np.asarray(c).tolist() for c in raw]
        stages.append(BlowupStage(i, P, raw_json, conv, resid, passed, verdict, rows))
        if not passed:
            return BlowupResult(a, S, stages, i, f"halted at stage {i}", tan, echo)
        total = P if total is None else total.with_degree(i) + P
    return BlowupResult(a, S, stages, None, "ok", tan, echo)
