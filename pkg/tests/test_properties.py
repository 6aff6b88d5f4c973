"""Property tests for the invariants of planes, jets, oracles and verdicts."""

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from ptdiff.analysis import DIVERGES, VANISHES, ClassifyConfig, VerdictConfig, classify_point, classify_sequence
from ptdiff.grassmann import Plane, grass_distance, transversal
from ptdiff.jets import JetPolynomial, OrderSpec, multi_indices
from ptdiff.sets import (DilatedSet, GraphSet, Modulus, PointCloud, convex_boundary, fat_cantor, hesitating_function,
                         plane_with_holes, rescaled, smooth_modulus)
from ptdiff.sets.oracles import ShearImage

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(0, 2 ** 32 - 1)


def random_plane(rng, n, m):
    return Plane(n, rng.normal(size=(m, n)))


@st.composite
def planes(draw, n=None, m=None):
    n = draw(st.integers(1, 6)) if n is None else n
    m = draw(st.integers(0, n)) if m is None else m
    return random_plane(np.random.default_rng(draw(seeds)), n, m)


@st.composite
def jets(draw, max_m=3, max_q=2, max_k=4):
    m = draw(st.integers(1, max_m))
    q = draw(st.integers(1, max_q))
    k = draw(st.integers(0, max_k))
    rng = np.random.default_rng(draw(seeds))
    plane = random_plane(rng, m + q, m)
    coeffs = rng.uniform(-1, 1, size=(len(multi_indices(m, k)), q))
    return JetPolynomial(plane, k, coeffs, rng.uniform(-0.5, 0.5, m))


# planes

@SETTINGS
@given(planes())
def test_plane_basis_and_projector(p):
    ortho, proj = p.check()
    assert ortho <= 1e-12
    assert proj <= 1e-10


@SETTINGS
@given(planes(), seeds)
def test_pythagoras(p, seed):
    x = np.random.default_rng(seed).normal(size=p.ambient_dim) * 10
    lhs = x @ x
    rhs = np.sum(p.project(x) ** 2) + np.sum(p.perp_project(x) ** 2)
    assert abs(lhs - rhs) <= 1e-9 * max(lhs, 1e-300)


@SETTINGS
@given(st.integers(1, 6), seeds)
def test_grass_distance_triangle(n, seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(0, n + 1))
    s, t, u = (random_plane(rng, n, m) for _ in range(3))
    assert grass_distance(s, u) <= grass_distance(s, t) + grass_distance(t, u) + 1e-9


@SETTINGS
@given(st.integers(2, 6), seeds, st.booleans())
def test_transversal_matches_null_space(n, seed, degenerate):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, n))
    s = random_plane(rng, n, m)
    vecs = rng.normal(size=(m, n))
    if degenerate:
        # put a vector of S-perp into T
        vecs[0] = s.perp_project(rng.normal(size=n))
    t = Plane(n, vecs)
    # T meets S-perp nontrivially exactly when the stacked bases are rank deficient
    stacked = np.vstack([t.basis, s.perp_basis])
    sv = np.linalg.svd(stacked, compute_uv=False)
    meets = sv[-1] <= 1e-8
    res = transversal(s, t)
    if sv[-1] > 1e-4 or meets:
        assert bool(res) == (not meets)


# jets

@SETTINGS
@given(jets(), seeds)
def test_eval_linearity(p, seed):
    rng = np.random.default_rng(seed)
    other = JetPolynomial(p.domain, p.degree, rng.normal(size=p.coeffs.shape), p.base)
    a, b = rng.normal(size=2)
    chi = rng.uniform(-1, 1, size=(5, p.m))
    lhs = (a * p + b * other).eval(chi)
    assert np.allclose(lhs, a * p.eval(chi) + b * other.eval(chi), atol=1e-10)


@SETTINGS
@given(jets(), seeds)
def test_derivative_tensor_against_finite_differences(p, seed):
    assume(p.degree >= 1)
    chi = np.random.default_rng(seed).uniform(-0.5, 0.5, p.m)
    h = 1e-3
    grad = np.zeros((p.m, p.q))
    for j in range(p.m):
        e = np.eye(p.m)[j] * h
        grad[j] = (p.eval(chi + e) - p.eval(chi - e)) / (2 * h)
    assert np.abs(p.derivative_tensor(chi, 1) - grad).max() <= 10 * h * h * len(p.indices)


@SETTINGS
@given(jets(), seeds)
def test_homogeneous_components_sum(p, seed):
    chi = p.base + np.random.default_rng(seed).uniform(-1, 1, size=(100, p.m))
    total = sum(p.homogeneous_component(i).eval(chi) for i in range(p.degree + 1))
    assert np.allclose(total, p.eval(chi), atol=1e-10)


@SETTINGS
@given(jets())
def test_jet_keys_and_base_value(p):
    assert all(sum(t) <= p.degree for t in p.terms())
    assert np.array_equal(p.eval(p.base), p.coeffs[0])


@SETTINGS
@given(jets(), seeds)
def test_recenter_round_trip(p, seed):
    b = np.random.default_rng(seed).uniform(-1, 1, p.m)
    back = p.recenter(b).recenter(p.base)
    assert np.abs(back.coeffs - p.coeffs).max() <= 1e-9


# oracles

def _oracles():
    X = Plane.coordinate(2, [0])
    cubic = JetPolynomial.from_terms(X, 3, {(2,): 1.0, (3,): -0.7})
    holes = [([2.0 ** -j], 4.0 ** -j) for j in range(1, 12)]
    pts = np.random.default_rng(0).normal(size=(300, 2))
    return {
        "graph": GraphSet(X, cubic),
        "ellipse": convex_boundary("ellipse", axes=[2.0, 1.0]),
        "square": convex_boundary("square"),
        "holes": plane_with_holes(X, holes),
        "cloud": PointCloud(pts),
        "cantor": fat_cantor(1, Modulus.log(), 10),
        "shear": ShearImage(GraphSet(X, cubic), X, cubic * 0.5),
        "dilated": DilatedSet(GraphSet(X, cubic), X, 2, 0.25),
    }


ORACLES = _oracles()
names = st.sampled_from(sorted(ORACLES))


@SETTINGS
@given(names, seeds)
def test_dist_is_lipschitz(name, seed):
    A = ORACLES[name]
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.5, 1.5, size=(200, A.ambient_dim))
    y = x + rng.normal(scale=0.3, size=x.shape)
    dx, ex = A.dist(x)
    dy, ey = A.dist(y)
    assert np.all(np.abs(dx - dy) <= np.linalg.norm(x - y, axis=1) + ex + ey + 1e-12)


@SETTINGS
@given(names, seeds, st.floats(0.05, 1.0))
def test_samples_lie_in_set_and_ball(name, seed, r):
    A = ORACLES[name]
    rng = np.random.default_rng(seed)
    a = A.sample_ball(np.zeros(A.ambient_dim), 3.0, 64, seed)
    assume(len(a) > 0)
    a = a[int(rng.integers(len(a)))]
    pts = A.sample_ball(a, r, 128, seed)
    if len(pts) == 0:
        return
    d, e = A.dist(pts)
    assert np.all(d <= e + 1e-12 + 0.5 * A.resolution)
    assert np.all(np.linalg.norm(pts - a, axis=1) <= r + e + 1e-12)


@SETTINGS
@given(seeds, st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.integers(1, 3))
def test_dilation_group_law(seed, s, t, i):
    X = Plane(3, np.random.default_rng(seed).normal(size=(2, 3)))
    inner = plane_with_holes(X)
    x = np.random.default_rng(seed + 1).normal(size=(20, 3))
    two = DilatedSet(inner, X, i, s).forward(DilatedSet(inner, X, i, t).forward(x))
    one = DilatedSet(inner, X, i, s * t).forward(x)
    assert np.allclose(two, one, rtol=1e-10, atol=1e-10)


@SETTINGS
@given(seeds)
def test_shear_inverse(seed):
    X = Plane.coordinate(2, [0])
    rng = np.random.default_rng(seed)
    gen = JetPolynomial(X, 3, rng.uniform(-1, 1, size=(4, 1)))
    f = JetPolynomial(X, 2, rng.uniform(-1, 1, size=(3, 1)))
    A = GraphSet(X, gen)
    back = ShearImage(ShearImage(A, X, f), X, -f)
    pts = A.sample_ball(A.lift(np.zeros(1)), 0.5, 64, seed)
    assert np.abs(back.dist(pts)[0]).max() <= 1e-9


# moduli and the hesitating construction

@SETTINGS
@given(st.floats(0.05, 1.0))
def test_smooth_modulus_sandwich(beta):
    omega = Modulus.power(beta)
    psi = smooth_modulus(omega)
    t = np.linspace(1e-4, 1, 1000)
    assert np.all(omega(t / 4) <= psi(t) * (1 + 1e-12))
    assert np.all(psi(t) <= omega(t) * (1 + 1e-12))
    assert omega.check()


HES = hesitating_function(fat_cantor(1, Modulus.log(), 14), Modulus.log(), 2)


@SETTINGS
@given(seeds)
def test_hesitating_bounds(seed):
    x = np.random.default_rng(seed).uniform(0, 1, 200)
    assert HES.audit(x)["all_ok"]


# verdicts

@SETTINGS
@given(st.lists(st.floats(0, 1e3, allow_nan=False), min_size=5, max_size=10), st.floats(0, 3), st.floats(0, 0.3))
def test_verdict_invariants(values, q, rel):
    cfg = VerdictConfig()
    v = np.array(values)
    r = 0.25 * 2.0 ** -np.arange(len(v))
    e = rel * v
    verdict, _, _ = classify_sequence(r, v, e, q, cfg)
    up = ((v + e) / r ** q)[-4:]
    lo = (np.maximum(v - e, 0) / r ** q)[-4:]
    if verdict == VANISHES:
        zero = np.all((v + e)[-4:] <= cfg.zero_tol * r[-4:])
        assert zero or np.all(up[1:] * cfg.factor <= up[:-1])
    if verdict == DIVERGES:
        assert np.all(lo[1:] >= cfg.factor * lo[:-1]) and lo[0] > 0


# classification

X2 = Plane.coordinate(2, [0])


@settings(max_examples=12, deadline=None)
@given(seeds, st.sampled_from([1, 2]))
def test_strong_implies_pointwise(seed, k):
    rng = np.random.default_rng(seed)
    gen = JetPolynomial(X2, 3, rng.uniform(-1, 1, size=(4, 1)))
    c = classify_point(GraphSet(X2, gen), X2.lift(np.zeros(1), gen.eval(np.zeros(1))), OrderSpec(k),
                       ClassifyConfig(budget=128))
    if c.strong:
        assert c.pointwise


@settings(max_examples=8, deadline=None)
@given(seeds, st.sampled_from([0.5, 2.0]))
def test_verdicts_invariant_under_rescaling(seed, lam):
    rng = np.random.default_rng(seed)
    gen = JetPolynomial(X2, 3, rng.uniform(-1, 1, size=(4, 1)))
    A = GraphSet(X2, gen)
    a = X2.lift(np.zeros(1), gen.eval(np.zeros(1)))
    cfg = ClassifyConfig(budget=128)
    base = classify_point(A, a, OrderSpec(2), cfg)
    scaled = classify_point(rescaled(A, lam), lam * a, OrderSpec(2), cfg.scaled(lam))
    assert (base.pointwise, base.strong) == (scaled.pointwise, scaled.strong)


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(1, 4))
def test_isolated_points(seed, k):
    p = np.random.default_rng(seed).normal(size=(1, 3))
    c = classify_point(PointCloud(p), p[0], OrderSpec(k), ClassifyConfig(budget=64))
    assert c.tangent_dim == 0 and c.pointwise and c.strong
