import numpy as np
import pytest

from ptdiff.grassmann import Plane
from ptdiff.jets import (JetPolynomial, OrderSpec, derivative_tensor, empirical_gamma, eval_jet, homogeneous_component,
                         jet_uniqueness_check, markov_profiles, multi_indices, poly_seminorm, recenter)

X = Plane.coordinate(2, [0])
XY = Plane.coordinate(3, [0, 1])


def jet1(terms, degree=None, base=None):
    degree = max(terms) if degree is None else degree
    return JetPolynomial.from_terms(X, degree, {(i,): c for i, c in terms.items()}, base)


def test_multi_indices_graded():
    idx = multi_indices(2, 2)
    assert idx[0] == (0, 0)
    assert sorted(map(sum, idx)) == [sum(t) for t in idx]
    assert len(idx) == 6


def test_order_spec():
    assert OrderSpec(2).gamma == 2
    assert OrderSpec(1, 0.5).gamma == (1, 0.5)
    assert OrderSpec.parse("2,0.5").exponent == 2.5
    with pytest.raises(ValueError):
        OrderSpec(0)
    with pytest.raises(ValueError):
        OrderSpec(1, 1.5)


def test_eval_examples():
    assert eval_jet(jet1({2: 1.0}), [2.0])[0] == 4.0
    assert eval_jet(JetPolynomial.zero(X, 3), [0.7])[0] == 0.0
    p = JetPolynomial.from_terms(XY, 2, {(2, 0): 1.0, (1, 1): -3.0})
    # 1 - 3 * 1 * 2
    assert eval_jet(p, [1.0, 2.0])[0] == pytest.approx(-5.0, abs=1e-14)


def test_derivative_tensor_examples():
    assert derivative_tensor(jet1({2: 1.0}), [0.3], 2)[0, 0, 0] == pytest.approx(2.0)
    assert derivative_tensor(jet1({3: 1.0}), [2.0], 1)[0, 0] == pytest.approx(12.0)
    p = JetPolynomial.from_terms(XY, 3, {(2, 1): 1.0})
    hess = derivative_tensor(p, [1.0, 1.0], 2)[..., 0]
    assert np.allclose(hess, [[2, 2], [2, 0]], atol=1e-12)
    # finite-difference oracle
    h = 1e-5
    f = lambda x, y: x * x * y  # noqa: E731
    fd = np.array([[(f(1 + h, 1) - 2 * f(1, 1) + f(1 - h, 1)) / h ** 2,
                    (f(1 + h, 1 + h) - f(1 + h, 1 - h) - f(1 - h, 1 + h) + f(1 - h, 1 - h)) / (4 * h * h)],
                   [0.0, (f(1, 1 + h) - 2 * f(1, 1) + f(1, 1 - h)) / h ** 2]])
    fd[1, 0] = fd[0, 1]
    assert np.allclose(hess, fd, atol=1e-4)


def test_recenter_examples():
    p = recenter(jet1({2: 1.0}), [1.0])
    assert np.allclose(p.coeffs[:, 0], [1.0, 2.0, 1.0])
    z = recenter(JetPolynomial.zero(X, 4), [0.3])
    assert not z.coeffs.any()
    rng = np.random.default_rng(0)
    cubic = JetPolynomial(XY, 3, rng.normal(size=(10, 1)))
    back = cubic.recenter([0.4, -1.1]).recenter([0.0, 0.0])
    assert np.abs(back.coeffs - cubic.coeffs).max() <= 1e-9


def test_homogeneous_component_examples():
    p = jet1({0: 1.0, 1: 1.0, 2: 1.0})
    assert homogeneous_component(p, 1).terms()[(1,)][0] == 1.0
    assert homogeneous_component(p, 0).coeffs[0, 0] == 1.0
    q = JetPolynomial.from_terms(XY, 3, {(2, 0): 1.0, (1, 1): 1.0, (0, 3): 1.0})
    two = homogeneous_component(q, 2)
    chi = np.array([0.7, -0.4])
    assert two.eval(chi)[0] == pytest.approx(chi[0] ** 2 + chi[0] * chi[1])


def test_poly_seminorm_examples():
    assert poly_seminorm(JetPolynomial.zero(X, 2), [0.0], 1.0).value == 0.0
    assert poly_seminorm(jet1({1: 1.0}), [0.0], 1.0).value == pytest.approx(1.0)
    # max{ r^0 x^2, r 2|x|, r^2 2 } over |x| <= 2, r = 2
    assert poly_seminorm(jet1({2: 1.0}), [0.0], 2.0).value == pytest.approx(8.0)


def test_poly_seminorm_off_base_matches_recentred():
    rng = np.random.default_rng(4)
    p = JetPolynomial(XY, 3, rng.normal(size=(10, 1)))
    a = np.array([0.2, -0.1])
    direct = poly_seminorm(p, a, 0.5).value
    moved = poly_seminorm(p.recenter(a), a, 0.5).value
    assert direct == pytest.approx(moved, rel=1e-9)


def test_empirical_gamma_examples():
    assert empirical_gamma(0, 1, 50, 0.05) == pytest.approx(1.0)
    assert empirical_gamma(1, 1, 50, points=np.array([[-1.0], [1.0]])) >= 1.0 - 1e-12
    g = empirical_gamma(2, 1, 100, 0.05)
    assert np.isfinite(g) and g < 100
    # quadratic Markov constant on [-1, 1] is 4
    assert g == pytest.approx(4.0, rel=1e-3)
    assert empirical_gamma(2, 1, 100, 0.05, seed=1) == pytest.approx(g, rel=0.05)


def test_markov_profiles_recover_chebyshev():
    nodes = np.linspace(-1, 1, 2001)
    for p in markov_profiles(3, nodes):
        assert np.allclose(p, [0.0, -3.0, 0.0, 4.0], atol=1e-6)


def test_jet_uniqueness_examples():
    t = np.linspace(-1, 1, 201)[:, None]
    samples = [(r, r * t) for r in (0.5, 0.25, 0.125)]
    zero = jet_uniqueness_check(JetPolynomial.zero(X, 2), samples)
    assert zero.statistic == 0.0 and all(v == 0.0 for v in zero.coefficient_norms.values())
    eps = jet_uniqueness_check(jet1({2: 1e-8}), samples)
    assert eps.statistic == pytest.approx(1e-8, rel=1e-9)
    assert eps.coefficient_norms[2] == pytest.approx(1e-8)
    assert eps.dense
    sparse = jet_uniqueness_check(jet1({1: 1.0}), [(0.5, np.zeros((1, 1)))])
    assert sparse.statistic == 0.0 and sparse.coefficient_norms[1] == 1.0
    assert not sparse.dense and sparse.message == "density precondition violated"


def test_json_round_trip():
    p = JetPolynomial.from_terms(XY, 2, {(1, 1): 2.5, (0, 0): -1.0}, base=[0.1, 0.2])
    q = JetPolynomial.from_json(p.to_json())
    assert q.max_abs_diff(p) == 0.0


def test_degree_limit():
    with pytest.raises(ValueError):
        JetPolynomial.from_terms(X, 2, {(3,): 1.0})
