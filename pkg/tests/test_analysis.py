import numpy as np
import pytest

from ptdiff.analysis import (BOUNDED, DIVERGES, INCONCLUSIVE, INFINITY, VANISHES, ZERO, BlowupConfig, ClassifyConfig,
                             SampledField, VerdictConfig, classify_point, classify_sequence, cone_certificate,
                             decay_scan, dichotomy_probe, estimate_tangent, fit_agreement, fit_jet, inductive_blowup,
                             jet_agreement, one_sided_deviation, power_field, shear_subtract, two_sided_deviation)
from ptdiff.analysis.blowup import aitken_limit
from ptdiff.analysis.deviation import direct_two_sided
from ptdiff.grassmann import Plane, grass_distance
from ptdiff.jets import JetPolynomial, OrderSpec
from ptdiff.selftest import cantor_instance
from ptdiff.sets import GraphSet, PointCloud, UnionSet, affine_plane, convex_boundary

X = Plane.coordinate(2, [0])
Y = Plane.coordinate(2, [1])
ORIGIN = [0.0, 0.0]


def graph(terms, degree=None):
    degree = max(terms) if degree is None else degree
    return GraphSet(X, JetPolynomial.from_terms(X, degree, {(i,): c for i, c in terms.items()}))


def x_axis():
    return affine_plane(X, ORIGIN)


# deviations

def test_one_sided_identical_sets():
    dev = one_sided_deviation(x_axis(), x_axis(), ORIGIN, 0.5)
    assert dev.value <= dev.error + 1e-15


def test_one_sided_parabola_against_axis():
    r = 0.1
    t = np.linspace(-r, r, 200_001)
    inside = t * t + t ** 4 <= r * r
    brute = (t[inside] ** 2).max()
    dev = one_sided_deviation(graph({2: 1.0}), x_axis(), ORIGIN, r)
    assert brute == pytest.approx(0.0099, rel=1e-3)
    assert dev.value == pytest.approx(brute, rel=0.1)


def test_one_sided_cone_against_axis():
    cone = GraphSet(X, np.abs)
    t = np.linspace(-0.2, 0.2, 400_001)
    brute = np.abs(t[np.hypot(t, t) <= 0.2]).max()
    dev = one_sided_deviation(cone, x_axis(), ORIGIN, 0.2)
    assert brute == pytest.approx(0.2 / np.sqrt(2), rel=1e-5)
    assert dev.value == pytest.approx(0.1414, abs=1e-3)


def test_two_sided_examples():
    assert two_sided_deviation(x_axis(), x_axis(), ORIGIN, 0.3).value == 0.0
    shifted = affine_plane(X, [0.0, 0.05])
    dev = two_sided_deviation(x_axis(), shifted, ORIGIN, 0.3)
    assert abs(dev.value - 0.05) <= dev.error + 1e-12
    par = two_sided_deviation(graph({2: 1.0}), x_axis(), ORIGIN, 0.1)
    assert par.value <= 0.04 + par.error


def test_two_sided_bound_dominates_direct_estimate():
    A = graph({2: 1.0})
    for r in (0.2, 0.05):
        bound = two_sided_deviation(A, x_axis(), ORIGIN, r)
        direct = direct_two_sided(A, x_axis(), ORIGIN, r, 256)
        assert 0 < direct.value <= bound.value + bound.error
    c = classify_point(A, ORIGIN, OrderSpec(2))
    assert "bound below direct estimate" not in c.reports["graph"].note


def test_budget_floor():
    with pytest.raises(ValueError):
        one_sided_deviation(x_axis(), x_axis(), ORIGIN, 0.1, budget=0)


# decay scans

def test_decay_scan_examples():
    sq = lambda r: (r * r, 0.0)  # noqa: E731
    assert decay_scan(sq, 0.25, 8, 1.0).verdict == VANISHES
    assert decay_scan(sq, 0.25, 8, 2.0).verdict == BOUNDED
    logged = lambda r: (r * r / (1 + np.log(1 / r)), 0.0)  # noqa: E731
    rep = decay_scan(logged, 0.25, 12, 2.5)
    assert rep.verdict == DIVERGES
    assert rep.config == VerdictConfig().to_json()


def test_decay_scan_needs_five_levels():
    with pytest.raises(ValueError):
        decay_scan(lambda r: (r, 0.0), 0.25, 4, 1.0)


def test_classify_sequence_zero_and_nan():
    r = 0.25 * 2.0 ** -np.arange(6)
    assert classify_sequence(r, np.zeros(6), np.zeros(6), 3.0)[0] == VANISHES
    vals = r ** 2
    vals[-1] = np.nan
    assert classify_sequence(r, vals, np.zeros(6), 1.0)[0] == INCONCLUSIVE


def test_staircase_is_not_vanishing():
    # plateaus followed by drops, as on the hesitating graph
    r = 0.25 * 2.0 ** -np.arange(8)
    vals = np.array([6e-4, 5e-5, 5e-5, 3e-5, 9e-10, 2.4e-11, 3.4e-11, 2e-15])
    assert classify_sequence(r, vals, 1e-3 * vals, 1.0)[0] == INCONCLUSIVE


# tangents and cones

def test_tangent_of_axis():
    t = estimate_tangent(x_axis(), ORIGIN)
    assert t.ok and t.dim == 1 and t.report.verdict == VANISHES
    assert grass_distance(t.plane, X) <= 1e-12


def test_tangent_of_parabola():
    t = estimate_tangent(graph({2: 1.0}), ORIGIN)
    assert t.ok and grass_distance(t.plane, X) <= 1e-3


def test_cross_is_not_order_one():
    cross = UnionSet([x_axis(), affine_plane(Y, ORIGIN)])
    assert estimate_tangent(cross, ORIGIN).status == "not order-1"


def test_cone_certificates():
    assert cone_certificate(x_axis(), ORIGIN, X).kappa == 0.0
    assert cone_certificate(graph({2: 1.0}), ORIGIN, X, r0=0.5).kappa <= 0.5
    assert cone_certificate(GraphSet(X, np.abs), ORIGIN, X).kappa == pytest.approx(1.0)


# jets

def test_fit_jet_cubic():
    fit = fit_jet(graph({2: 2.0, 3: -1.0}), ORIGIN, X, 3)
    assert np.allclose(fit.jet.coeffs[:, 0], [0, 0, 2, -1], atol=1e-6)
    assert fit.report.verdict == VANISHES


def test_fit_jet_axis_is_zero():
    for k in (1, 2, 3):
        fit = fit_jet(x_axis(), ORIGIN, X, k)
        assert np.abs(fit.jet.coeffs).max() <= 1e-12
        assert fit.report.verdict == VANISHES


def test_fit_jet_hesitating_graph():
    # zero jet; residuals vanish at q = k but diverge at q = k + 1/2
    cantor, f = cantor_instance(16)
    A = GraphSet(X, f.graph_function())
    a = [float(cantor.sample_points(1, 6)[0, 0]), 0.0]
    fit = fit_jet(A, a, X, 2)
    assert np.abs(fit.jet.coeffs).max() <= 1e-6
    assert fit.report.verdict == VANISHES
    assert fit.report.renormalized(2.5).verdict == DIVERGES


# classification

def test_classify_parabola():
    c = classify_point(graph({2: 1.0}), ORIGIN, OrderSpec(2))
    assert c.pointwise is True and c.strong is True
    assert c.jets[2].coefficient((2,))[0] == pytest.approx(1.0, abs=1e-6)
    assert c.jet.derivative_tensor([0.0], 2)[0, 0, 0] == pytest.approx(2.0, abs=1e-6)


def test_classify_square_corner():
    square = convex_boundary("square")
    c = classify_point(square, [0.0, 0.0], OrderSpec(1))
    assert c.pointwise is False and c.status == "not order-1"


def test_classify_isolated_point():
    single = PointCloud(np.array([[0.3, 0.4]]))
    for k in (1, 3):
        c = classify_point(single, [0.3, 0.4], OrderSpec(k))
        assert c.tangent_dim == 0 and c.pointwise is True and c.strong is True


def test_classify_insufficient_budget():
    c = classify_point(graph({2: 1.0}), ORIGIN, OrderSpec(2), ClassifyConfig(budget=0))
    assert c.pointwise is None and "insufficient budget" in c.status


# shear and blow-up

def test_shear_subtract_examples():
    A = graph({2: 1.0})
    p = JetPolynomial.from_terms(X, 2, {(2,): 1.0})
    assert shear_subtract(A, X, JetPolynomial.zero(X, 2)).dist([[0.5, 0.25]])[0][0] <= 1e-12
    flat = shear_subtract(A, X, p)
    assert fit_jet(flat, ORIGIN, X, 2).jet.max_abs_diff(JetPolynomial.zero(X, 2)) <= 1e-9
    B = shear_subtract(graph({2: 1.0, 3: 1.0}), X, p)
    fa = fit_jet(graph({2: 1.0, 3: 1.0}), ORIGIN, X, 3)
    fb = fit_jet(B, ORIGIN, X, 3)
    drop = fa.jet.coefficient((2,))[0] - fb.jet.coefficient((2,))[0]
    assert drop == pytest.approx(1.0, abs=1e-6)
    assert fb.jet.coefficient((3,))[0] == pytest.approx(1.0, abs=1e-6)


def test_aitken_limit_geometric():
    lim = aitken_limit(np.array([1.5]), np.array([1.25]), np.array([1.125]))
    assert lim[0] == pytest.approx(1.0)


def test_blowup_quadratic_plus_cubic():
    res = inductive_blowup(graph({2: 1.0, 3: 1.0}), ORIGIN, 3)
    assert res.status == "ok" and len(res.stages) == 3
    assert np.abs(res.stages[0].jet.coeffs).max() <= 1e-6
    assert res.stages[1].jet.coefficient((2,))[0] == pytest.approx(1.0, abs=1e-3)
    assert res.stages[2].jet.coefficient((3,))[0] == pytest.approx(1.0, abs=1e-2)


def test_blowup_rough_power_halts_at_three():
    res = inductive_blowup(GraphSet(X, lambda c: np.abs(c) ** 2.5), ORIGIN, 3)
    assert abs(res.stages[1].jet.coefficient((2,))[0]) <= 1e-3
    assert res.halted_at == 3 and res.stages[-1].verdict == DIVERGES


def test_blowup_axis_all_zero():
    res = inductive_blowup(x_axis(), ORIGIN, 3)
    assert res.status == "ok"
    assert all(np.abs(j.coeffs).max() <= 1e-9 for j in res.jets)


def test_blowup_wrong_supplied_polynomial_fails():
    A = graph({2: 1.0, 3: 1.0})
    wrong = JetPolynomial.from_terms(X, 2, {(2,): 0.5})
    res = inductive_blowup(A, ORIGIN, 3, supplied={2: wrong})
    assert res.status != "ok"


def test_blowup_config_round_trip():
    cfg = BlowupConfig(s0=0.2, steps=6)
    assert BlowupConfig.from_json(cfg.to_json()) == cfg


# dichotomy

def test_dichotomy_powers():
    l = 2.0
    assert dichotomy_probe(power_field(l + 1), [[0.0]], l).verdicts == [ZERO]
    assert dichotomy_probe(power_field(l - 0.5), [[0.0]], l).verdicts == [INFINITY]


def test_dichotomy_on_cantor_points():
    cantor, f = cantor_instance(16)
    res = dichotomy_probe(f, cantor.sample_points(20, 2), 2.5)
    assert res.intermediate_fraction <= 0.1


def test_dichotomy_needs_sup_ball():
    with pytest.raises(TypeError):
        dichotomy_probe(lambda x: x, [[0.0]], 1.0)
    assert SampledField(lambda x: x[:, 0] ** 2, 1).sup_ball([0.0], 0.5)[0] == pytest.approx(0.25)


# jet agreement

def test_agreement_examples():
    A = graph({2: 1.0})
    fa = fit_jet(A, ORIGIN, X, 2)
    assert fit_agreement(fa, fit_jet(A, ORIGIN, X, 2, seed=3)).agree
    five = fit_jet(graph({2: 1.0, 5: 1.0}), ORIGIN, X, 2)
    agr = fit_agreement(fa, five)
    assert agr.agree and agr.discrepancy <= 1e-3
    a3 = fit_jet(graph({2: 1.0}, 3), ORIGIN, X, 3)
    b3 = fit_jet(graph({2: 1.0, 3: 1.0}), ORIGIN, X, 3)
    agr = fit_agreement(a3, b3)
    assert agr.agree is False and agr.disagree_orders == [3]
    assert agr.by_order[3] == pytest.approx(1.0, abs=1e-6)
    assert jet_agreement(None, None, fa.jet, fa.errors).agree is None
