import numpy as np
import pytest

from ptdiff.grassmann import Plane, grass_distance, perp_project, project, transversal

SQ = 1 / np.sqrt(2)


def x_axis():
    return Plane.coordinate(2, [0])


def diagonal():
    return Plane.from_vectors([[1.0, 1.0]])


def test_project_coordinate_and_identity():
    assert np.allclose(project(x_axis(), [3, 4]), [3, 0])
    assert np.allclose(project(Plane.full(2), [3, 4]), [3, 4])


def test_project_diagonal_matches_grid_minimisation():
    x = np.array([1.0, 0.0])
    t = np.linspace(-2, 2, 400_001)
    s = t[:, None] * np.array([SQ, SQ])
    brute = s[np.argmin(np.linalg.norm(s - x, axis=1))]
    got = project(diagonal(), x)
    assert np.allclose(got, [0.5, 0.5], atol=1e-12)
    assert np.allclose(got, brute, atol=1e-5)


def test_perp_project_examples():
    assert np.allclose(perp_project(x_axis(), [3, 4]), [0, 4])
    assert np.allclose(perp_project(Plane.zero(2), [3, 4]), [3, 4])
    assert np.allclose(perp_project(diagonal(), [1, 0]), [0.5, -0.5], atol=1e-12)


def _brute_distance(s, t, count=200_000):
    theta = np.linspace(0, np.pi, count)
    v = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return np.linalg.norm(v @ (s.projector - t.projector).T, axis=1).max()


def test_grass_distance_examples():
    assert grass_distance(x_axis(), x_axis()) == pytest.approx(0.0, abs=1e-12)
    y = Plane.coordinate(2, [1])
    assert grass_distance(x_axis(), y) == pytest.approx(1.0, abs=1e-9)
    assert _brute_distance(x_axis(), y) == pytest.approx(1.0, abs=1e-6)
    tilt = Plane.from_vectors([[np.cos(np.pi / 6), np.sin(np.pi / 6)]])
    assert grass_distance(x_axis(), tilt) == pytest.approx(0.5, abs=1e-9)
    assert _brute_distance(x_axis(), tilt) == pytest.approx(0.5, abs=1e-6)


def test_transversal_examples():
    same = transversal(x_axis(), x_axis())
    assert same.transversal and same.margin == pytest.approx(1.0)
    ortho = transversal(x_axis(), Plane.coordinate(2, [1]))
    assert not ortho.transversal and ortho.margin == pytest.approx(0.0, abs=1e-12)
    diag = transversal(x_axis(), diagonal())
    assert diag.transversal and diag.margin == pytest.approx(SQ, abs=1e-9)
    # brute force: min over unit v in T of |pi_S v|, T one-dimensional
    assert abs(diagonal().basis[0] @ x_axis().basis[0]) == pytest.approx(SQ)


def test_zero_and_full_planes():
    z = Plane.zero(3)
    assert z.dim == 0 and z.codim == 3
    assert np.allclose(z.projector, 0)
    f = Plane.full(3)
    assert np.allclose(f.projector, np.eye(3))
    assert grass_distance(z, f) == pytest.approx(1.0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        Plane(2, np.eye(3))
    with pytest.raises(ValueError):
        grass_distance(Plane.full(2), Plane.full(3))
    with pytest.raises(ValueError):
        Plane.from_vectors([[1.0, 0.0], [2.0, 0.0]])


def test_json_round_trip():
    p = Plane.from_vectors([[1.0, 2.0, 3.0], [0.0, 1.0, -1.0]])
    q = Plane.from_json(p.to_json())
    assert q == p
    assert grass_distance(p, q) <= 1e-12


def test_check_reports_small_defects():
    p = Plane(5, np.random.default_rng(3).normal(size=(3, 5)))
    ortho, proj = p.check()
    assert ortho <= 1e-12 and proj <= 1e-10
