"""Pointwise and strong pointwise differentiability verdicts at sample points."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..grassmann import Plane
from ..jets import JetPolynomial, OrderSpec
from ..sets.oracles import EmptySampleError, GraphSet, SetOracle
from .decay import BOUNDED, INCONCLUSIVE, VANISHES, DecayReport, VerdictConfig, decay_report, dyadic_radii
from .deviation import MIN_BUDGET, direct_two_sided, two_sided_deviation
from .fit import JetFit, fit_jet
from .tangent import ConeCertificate, cone_certificate, estimate_tangent

GRID_CHECK = 64


@dataclass(frozen=True)
class ClassifyConfig:
    r0: float = 0.25
    levels: int = 8
    budget: int = 512
    seed: int = 0
    kappa_cap: float = 100.0
    verdict: VerdictConfig = field(default_factory=VerdictConfig)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict | None) -> "ClassifyConfig":
        obj = dict(obj or {})
        obj["verdict"] = VerdictConfig.from_json(obj.get("verdict"))
        return cls(**obj)

    def scaled(self, lam: float) -> "ClassifyConfig":
        return ClassifyConfig(self.r0 * lam, self.levels, self.budget, self.seed, self.kappa_cap, self.verdict)


@dataclass
class Classification:
    point: np.ndarray
    spec: OrderSpec
    tangent_dim: int | None
    tangent: Plane | None
    jets: list
    pointwise: bool | None
    strong: bool | None
    reports: dict
    status: str = "ok"
    cone: ConeCertificate | None = None
    jet_errors: np.ndarray | None = None
    config: dict = field(default_factory=dict)

    @property
    def jet(self) -> JetPolynomial | None:
        if not self.jets:
            return None
        total = self.jets[0]
        for extra in self.jets[1:]:
            total = total.with_degree(extra.degree) + extra
        return total

    def to_json(self) -> dict:
        return {
            "point": [float(v) for v in self.point], "order": str(self.spec), "m": self.tangent_dim,
            "tangent": None if self.tangent is None else self.tangent.to_json(),
            "jets": [j.to_json() for j in self.jets],
            "jet_errors": None if self.jet_errors is None else self.jet_errors.tolist(),
            "verdicts": {"pointwise": self.pointwise, "strong": self.strong}, "status": self.status,
            "cone": None if self.cone is None else self.cone.to_json(),
            "reports": {name: rep.to_json() for name, rep in sorted(self.reports.items())},
            "config": self.config, "seed": self.config.get("seed"),
        }


def combine(*flags) -> bool | None:
    """Three-valued AND: any False wins, then any None."""
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def _accept(verdict: str, alpha: float) -> bool | None:
    if verdict == INCONCLUSIVE:
        return None
    if alpha > 0:
        return verdict in (VANISHES, BOUNDED)
    return verdict == VANISHES


def cover_report(A: SetOracle, a, S: Plane, radii, budget: int, seed: int, config: VerdictConfig) -> DecayReport:
    vals, errs = [], []
    for j, r in enumerate(radii):
        v, e = A.cover_deviation(S, a, float(r), budget, seed + j)
        vals.append(v)
        errs.append(e)
    return decay_report(radii, vals, errs, 1.0, config, note="projection cover")


def graph_report(A: SetOracle, a, jet: JetPolynomial, radii, budget: int, seed: int, q: float,
                 config: VerdictConfig) -> DecayReport:
    graph = GraphSet(jet.domain, jet)
    vals, errs, flagged = [], [], []
    for j, r in enumerate(radii):
        try:
            dev = two_sided_deviation(A, graph, a, float(r), budget, seed + j)
            vals.append(dev.value)
            errs.append(dev.error)
        except EmptySampleError:
            vals.append(np.nan)
            errs.append(np.nan)
            continue
        # the bound must dominate a direct estimate; flag the radius when it does not
        direct = direct_two_sided(A, graph, a, float(r), GRID_CHECK, seed + j)
        if direct.value - direct.error > dev.value + dev.error:
            flagged.append(f"{r:.3g}")
    note = "two-sided from fitted graph"
    if flagged:
        note += "; bound below direct estimate at r=" + ",".join(flagged)
    return decay_report(radii, vals, errs, q, config, note=note)


def classify_point(A: SetOracle, a, spec: OrderSpec, config: ClassifyConfig = ClassifyConfig()) -> Classification:
    a = np.asarray(a, dtype=float)
    spec = spec if isinstance(spec, OrderSpec) else OrderSpec.parse(str(spec))
    k, alpha, q = spec.k, spec.alpha, spec.exponent
    vc = config.verdict
    echo = config.to_json()
    if config.budget < MIN_BUDGET:
        return Classification(a, spec, None, None, [], None, None, {}, f"insufficient budget: {config.budget}",
                              config=echo)
    radii = dyadic_radii(config.r0, config.levels)
    tan = estimate_tangent(A, a, config.r0, config.levels, config.budget, config.seed, vc)
    reports: dict[str, DecayReport] = {}
    if not tan.ok:
        flag = False if tan.status == "not order-1" else None
        return Classification(a, spec, None, None, [], flag, flag, reports, tan.status, config=echo)
    reports["order1"] = tan.report
    S = tan.plane
    if tan.dim == 0:
        # isolated points are differentiable of every order
        return Classification(a, spec, 0, S, [], True, True, reports, "isolated", config=echo)
    n = A.ambient_dim
    if tan.dim == n:
        cov = cover_report(A, a, S, radii, config.budget, config.seed, vc)
        reports["cover"] = cov
        flag = combine(_accept(cov.verdict, 0.0))
        strong = combine(flag, _accept(cov.renormalized(q).verdict, alpha))
        return Classification(a, spec, n, S, [], flag, strong, reports, "open", config=echo)
    cone = cone_certificate(A, a, S, config.r0, config.budget, config.seed, config.levels, config.kappa_cap)
    fit: JetFit = fit_jet(A, a, S, k, radii, config.budget, config.seed, q, vc)
    reports["residual"] = fit.report
    cov = cover_report(A, a, S, radii, config.budget, config.seed, vc)
    reports["cover"] = cov
    pointwise = combine(True, None if not cone.ok else True, _accept(fit.report.verdict, alpha),
                        _accept(cov.verdict, 0.0))
    jets: list = []
    strong: bool | None = None
    if fit.jet is not None:
        jets = [fit.jet.homogeneous_component(i) for i in range(k + 1)]
        cov_q = cov.renormalized(q)
        reports["cover_strong"] = cov_q
        gr = graph_report(A, a, fit.jet, radii, config.budget, config.seed + 1, q, vc)
        reports["graph"] = gr
        strong = combine(pointwise, _accept(cov_q.verdict, alpha), _accept(gr.verdict, alpha))
    else:
        strong = combine(pointwise, None)
    return Classification(a, spec, tan.dim, S, jets, pointwise, strong, reports, fit.status, cone, fit.errors,
                          config=echo)


def classify_points(A: SetOracle, points, spec: OrderSpec, config: ClassifyConfig = ClassifyConfig(),
                    workers: int = 1) -> list[Classification]:
    """Classify every point; results follow the input order whatever the completion order."""
    pts = [np.asarray(p, dtype=float) for p in points]
    if workers <= 1 or len(pts) <= 1:
        return [classify_point(A, p, spec, config) for p in pts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: classify_point(A, p, spec, config), pts))
