"""The ten acceptance checks, parameterised so the CLI can run them at reduced sizes."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analysis import (DIVERGES, INTERMEDIATE, VANISHES, BlowupConfig, ClassifyConfig, classify_point,
                       dichotomy_probe, fit_agreement, fit_jet, inductive_blowup, power_field, shear_subtract)
from .analysis.deviation import MIN_BUDGET
from .grassmann import Plane
from .jets import JetPolynomial, OrderSpec, empirical_gamma, multi_indices
from .sets import GraphSet, Modulus, PointCloud, convex_boundary, fat_cantor, hesitating_function

ALL_GAMMA = tuple((k, m) for m in (1, 2, 3) for k in (1, 2, 3, 4))


@dataclass(frozen=True)
class SuiteSettings:
    budget: int = 512
    seed: int = 0
    graphs: int = 50
    cloud_samples: int = 100_000
    shear_pairs: int = 100
    chains: int = 200
    cantor_depth: int = 16
    cantor_points: int = 100
    ellipse_points: int = 200
    edge_points: int = 200
    gamma_trials: int = 1000
    gamma_pairs: tuple = ALL_GAMMA
    time_limit: float = 300.0

    def to_json(self) -> dict:
        out = asdict(self)
        out["gamma_pairs"] = [list(p) for p in self.gamma_pairs]
        return out


FULL = SuiteSettings()
REDUCED = SuiteSettings(graphs=12, cloud_samples=40_000, shear_pairs=25, chains=60, cantor_points=25,
                        ellipse_points=40, edge_points=60, gamma_pairs=((4, 1), (3, 2), (2, 3)))


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _g(x: float) -> str:
    return f"{x:.3g}"


def random_plane(rng: np.random.Generator, n: int, m: int) -> Plane:
    return Plane(n, rng.normal(size=(m, n))).canonical()


def random_jet(rng: np.random.Generator, plane: Plane, degree: int, lowest: int = 0, scale: float = 1.0):
    idx = multi_indices(plane.dim, degree)
    c = rng.uniform(-scale, scale, size=(len(idx), plane.codim))
    for j, t in enumerate(idx):
        if sum(t) < lowest:
            c[j] = 0.0
    return JetPolynomial(plane, degree, c)


def _insufficient(number: int, name: str) -> CriterionResult:
    return CriterionResult(number, name, False, "INCONCLUSIVE: insufficient budget")


# 1

def criterion_jet_recovery(st: SuiteSettings) -> CriterionResult:
    name = "jet recovery on random polynomial graphs"
    if st.budget < MIN_BUDGET:
        return _insufficient(1, name)
    rng = np.random.default_rng(st.seed + 1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(st.graphs):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, n))
        S = random_plane(rng, n, m)
        truth = random_jet(rng, S, int(rng.integers(1, 5)))
        chi = _uniform_ball(rng, m, st.cloud_samples)
        chi[0] = 0.0
        cloud = PointCloud(S.lift(chi, truth.eval(chi)))
        fit = fit_jet(cloud, cloud.points[0], S, 4, budget=max(st.budget, 4096), seed=st.seed, r0=0.5, levels=5)
        if fit.jet is None:
            worst = np.inf
            break
        worst = max(worst, fit.jet.max_abs_diff(truth))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed <= 60.0
    return CriterionResult(1, name, bool(ok), f"{st.graphs} graphs, max coefficient error {_g(worst)} (<= 1e-5), "
                           f"{'within' if elapsed <= 60.0 else 'over'} 60 s",
                           {"max_error": worst, "seconds": elapsed})


def _uniform_ball(rng, m, count):
    x = rng.normal(size=(count, m))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x * rng.uniform(0, 1, size=(count, 1)) ** (1.0 / m)


# 2 and 3

def _blowup_config(st: SuiteSettings) -> BlowupConfig:
    return BlowupConfig(budget=st.budget, seed=st.seed)


def _strictly_decreasing_or_zero(values, floor=1e-9) -> bool:
    v = np.asarray(values[-4:], dtype=float)
    return bool(np.all(np.diff(v) < 0) or np.all(v <= floor))


def criterion_blowup(st: SuiteSettings) -> CriterionResult:
    name = "inductive blow-up of x^2 + x^3"
    if st.budget < MIN_BUDGET:
        return _insufficient(2, name)
    X = Plane.coordinate(2, [0])
    A = GraphSet(X, JetPolynomial.from_terms(X, 3, {(2,): 1.0, (3,): 1.0}))
    res = inductive_blowup(A, [0.0, 0.0], 3, config=_blowup_config(st))
    if len(res.stages) < 3:
        return CriterionResult(2, name, False, f"stopped early: {res.status}")
    p1 = float(np.abs(res.stages[0].jet.coeffs).max())
    p2 = float(res.stages[1].jet.coefficient((2,))[0])
    p3 = float(res.stages[2].jet.coefficient((3,))[0])
    trend = all(_strictly_decreasing_or_zero(st_.convergence.values) for st_ in res.stages)
    ok = res.status == "ok" and p1 < 1e-6 and abs(p2 - 1) <= 1e-3 and abs(p3 - 1) <= 1e-2 and trend
    return CriterionResult(2, name, bool(ok), f"|P1| {_g(p1)}, P2 {p2:.6f}, P3 {p3:.6f}, "
                           f"convergence trend {'ok' if trend else 'broken'}", {"p1": p1, "p2": p2, "p3": p3})


def criterion_blowup_failure(st: SuiteSettings) -> CriterionResult:
    name = "blow-up failure detection"
    if st.budget < MIN_BUDGET:
        return _insufficient(3, name)
    X = Plane.coordinate(2, [0])
    cfg = _blowup_config(st)
    rough = inductive_blowup(GraphSet(X, lambda c: np.abs(c) ** 2.5), [0.0, 0.0], 3, config=cfg)
    kink = inductive_blowup(GraphSet(X, np.abs), [0.0, 0.0], 3, config=cfg)
    last = rough.stages[-1].verdict if rough.stages else "none"
    ok = rough.halted_at == 3 and last == DIVERGES and kink.halted_at == 1 and kink.status.startswith("precondition")
    detail = f"|x|^2.5 halted at {rough.halted_at} ({last}); |x|: {kink.status}"
    return CriterionResult(3, name, bool(ok), detail)


# 4

def criterion_shear(st: SuiteSettings) -> CriterionResult:
    name = "shear covariance of fitted jets"
    if st.budget < MIN_BUDGET:
        return _insufficient(4, name)
    rng = np.random.default_rng(st.seed + 4)
    agree = 0
    for _ in range(st.shear_pairs):
        n = int(rng.integers(2, 4))
        m = int(rng.integers(1, n))
        S = random_plane(rng, n, m)
        gen = random_jet(rng, S, int(rng.integers(2, 5)), lowest=2)
        shear = random_jet(rng, S, int(rng.integers(1, 4)), scale=0.5)
        A = GraphSet(S, gen)
        a = S.lift(np.zeros(m), gen.eval(np.zeros(m)))
        B = shear_subtract(A, S, shear)
        b = B.forward(a)
        fa = fit_jet(A, a, S, 4, budget=st.budget, seed=st.seed)
        fb = fit_jet(B, b, S, 4, budget=st.budget, seed=st.seed + 1)
        if fb.jet is None or fa.jet is None:
            continue
        fb.jet = fb.jet + shear.with_degree(4)
        if fit_agreement(fa, fb).agree:
            agree += 1
    need = int(np.ceil(0.99 * st.shear_pairs))
    return CriterionResult(4, name, agree >= need, f"{agree}/{st.shear_pairs} pairs agree (need {need})",
                           {"agree": agree})


# 5

def cantor_instance(depth: int):
    omega = Modulus.log()
    cantor = fat_cantor(1, omega, depth)
    return cantor, hesitating_function(cantor, omega, 2)


def criterion_construction_audit(st: SuiteSettings) -> CriterionResult:
    name = "hesitating function audit"
    if st.budget < MIN_BUDGET:
        return _insufficient(5, name)
    cantor, f = cantor_instance(st.cantor_depth)
    pts = cantor.sample_points(st.chains, st.seed + 5)[:, 0]
    xs, monotone = [], 0
    for a in pts:
        rows = cantor.gap_chain(a)
        x, delta = rows[:, 1], rows[:, 2]
        xs.append(x)
        norm = f.value(x[:, None]) / delta ** 2.5
        if np.all(np.diff(norm[-8:]) > 0):
            monotone += 1
    audit = f.audit(np.concatenate(xs))
    ok = audit["all_ok"] and monotone == st.chains
    return CriterionResult(5, name, bool(ok), f"gamma_hat {_g(audit['gamma_hat'])}, bounds hold at "
                           f"{min(audit['lower_ok'], audit['upper_ok'])}/{audit['points']} points, "
                           f"{monotone}/{st.chains} chains increasing", audit)


# 6

def criterion_cantor_classification(st: SuiteSettings) -> CriterionResult:
    name = "classification on the hesitating graph"
    if st.budget < MIN_BUDGET:
        return _insufficient(6, name)
    cantor, f = cantor_instance(st.cantor_depth)
    X = Plane.coordinate(2, [0])
    A = GraphSet(X, f.graph_function())
    cfg = ClassifyConfig(budget=st.budget, seed=st.seed)
    pts = cantor.sample_points(st.cantor_points, st.seed + 6)[:, 0]
    hits, pointwise, diverges = 0, 0, 0
    for a in pts:
        c = classify_point(A, [a, 0.0], OrderSpec(2, 0), cfg)
        rough = c.reports.get("residual")
        div = rough is not None and rough.renormalized(2.5).verdict == DIVERGES
        pointwise += c.pointwise is True
        diverges += div
        hits += (c.pointwise is True) and div
    need = int(np.ceil(0.9 * st.cantor_points))
    return CriterionResult(6, name, hits >= need, f"{hits}/{st.cantor_points} points pointwise (2,0) and "
                           f"DIVERGES at 2.5 (pointwise {pointwise}, diverging {diverges}; need {need})",
                           {"hits": hits, "pointwise": pointwise, "diverges": diverges})


# 7

def criterion_convex(st: SuiteSettings) -> CriterionResult:
    name = "convex boundaries"
    if st.budget < MIN_BUDGET:
        return _insufficient(7, name)
    cfg = ClassifyConfig(budget=st.budget, seed=st.seed)
    ellipse = convex_boundary("ellipse", axes=[2.0, 1.0])
    strong = sum(classify_point(ellipse, p, OrderSpec(2, 0), cfg).strong is True
                 for p in ellipse.uniform_boundary(st.ellipse_points, st.seed + 7))
    square = convex_boundary("square")
    corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    rejected = sum(classify_point(square, c, OrderSpec(1, 0), cfg).pointwise is False for c in corners)
    edge_cfg = replace(cfg, levels=10)
    corner_arr = np.array(corners)
    edges = [p for p in square.uniform_boundary(st.edge_points, st.seed + 8)
             if np.linalg.norm(corner_arr - p, axis=1).min() > 1e-9]
    accepted = sum(classify_point(square, p, OrderSpec(2, 0), edge_cfg).pointwise is True for p in edges)
    ok = strong == st.ellipse_points and rejected == 4 and accepted >= 0.95 * len(edges)
    return CriterionResult(7, name, bool(ok), f"ellipse {strong}/{st.ellipse_points} strong at (2,0); "
                           f"square corners rejected {rejected}/4; edges accepted {accepted}/{len(edges)}",
                           {"strong": strong, "rejected": rejected, "accepted": accepted})


# 8

def criterion_dichotomy(st: SuiteSettings) -> CriterionResult:
    name = "zero-or-infinity dichotomy"
    if st.budget < MIN_BUDGET:
        return _insufficient(8, name)
    rng = np.random.default_rng(st.seed + 8)
    total, right = 0, 0
    for l in (1.0, 1.5, 2.0, 2.5, 3.0):
        for m in (1, 2, 3):
            c = rng.uniform(-1, 1, size=m)
            lo = dichotomy_probe(power_field(l + 0.5, m, c, st.budget), c[None], l).verdicts[0]
            hi = dichotomy_probe(power_field(l - 0.5, m, c, st.budget), c[None], l).verdicts[0]
            total += 2
            right += (lo == "ZERO") + (hi == "INFINITY")
    cantor, f = cantor_instance(st.cantor_depth)
    pts = cantor.sample_points(st.cantor_points, st.seed + 9)
    res = dichotomy_probe(f, pts, 2.5, r0=2.0 ** -10, levels=16)
    counts = {v: res.verdicts.count(v) for v in ("ZERO", "INFINITY", INTERMEDIATE)}
    ok = right == total and res.intermediate_fraction <= 0.10
    return CriterionResult(8, name, bool(ok), f"power fields {right}/{total} correct; hesitating field "
                           f"intermediate fraction {res.intermediate_fraction:.2f} {counts}",
                           {"intermediate_fraction": res.intermediate_fraction})


# 9

def criterion_gamma(st: SuiteSettings) -> CriterionResult:
    name = "empirical polynomial control constant"
    if st.budget < MIN_BUDGET:
        return _insufficient(9, name)
    worst, parts = 0.0, []
    finite = True
    for k, m in st.gamma_pairs:
        g0 = empirical_gamma(k, m, st.gamma_trials, 0.02, st.seed)
        g1 = empirical_gamma(k, m, st.gamma_trials, 0.02, st.seed + 1)
        finite &= bool(np.isfinite(g0) and np.isfinite(g1))
        spread = abs(g0 - g1) / max(g0, g1)
        worst = max(worst, spread)
        parts.append(f"({k},{m}) {_g(g0)}/{_g(g1)}")
    ok = finite and worst < 0.05
    return CriterionResult(9, name, bool(ok), f"max seed spread {worst:.3%}; " + ", ".join(parts),
                           {"spread": worst})


CRITERIA = (criterion_jet_recovery, criterion_blowup, criterion_blowup_failure, criterion_shear,
            criterion_construction_audit, criterion_cantor_classification, criterion_convex, criterion_dichotomy,
            criterion_gamma)


# 10

def criterion_determinism(st: SuiteSettings, elapsed: float) -> CriterionResult:
    name = "determinism and runtime"
    if st.budget < MIN_BUDGET:
        return _insufficient(10, name)
    small = replace(st, graphs=3, cloud_samples=5000)
    first = criterion_jet_recovery(small).line() + criterion_blowup_failure(small).line()
    second = criterion_jet_recovery(small).line() + criterion_blowup_failure(small).line()
    same = first == second
    fast = elapsed <= st.time_limit
    return CriterionResult(10, name, same and fast, f"repeat runs {'identical' if same else 'differ'}; "
                           f"suite {'within' if fast else 'over'} {st.time_limit:.0f} s")


def run_suite(st: SuiteSettings = REDUCED, only=None, log=None) -> list[CriterionResult]:
    """Run the criteria in order; ``log`` receives (line, seconds) for progress reporting."""
    out = []
    start = time.perf_counter()
    for number, fn in enumerate(CRITERIA, start=1):
        if only is not None and number not in only:
            continue
        t0 = time.perf_counter()
        res = fn(st)
        out.append(res)
        if log:
            log(res.line(), time.perf_counter() - t0)
    if only is None or 10 in only:
        res = criterion_determinism(st, time.perf_counter() - start)
        out.append(res)
        if log:
            log(res.line(), 0.0)
    return out


def summary(results) -> str:
    return "\n".join(r.line() for r in results) + "\n"
