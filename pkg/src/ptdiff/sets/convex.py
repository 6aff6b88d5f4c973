"""Boundaries of convex bodies: ellipsoids (n = 2, 3) and convex polygons (n = 2)."""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from ..grassmann import Plane
from .oracles import SetOracle, as_points, disk_points


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class EllipsoidBoundary(SetOracle):
    """Boundary of { c + R y : sum (y_i / e_i)^2 <= 1 }."""

    sample_error = 1e-14

    def __init__(self, semi_axes, center=None, rotation=None):
        e = np.asarray(semi_axes, dtype=float)
        if e.ndim != 1 or not 2 <= e.size <= 3:
            raise ValueError("ellipsoids are supported in dimension 2 or 3")
        if np.any(e <= 0):
            raise ValueError("degenerate body: semi-axes must be positive")
        self.axes = e
        self.ambient_dim = e.size
        self.center = np.zeros(e.size) if center is None else np.asarray(center, dtype=float)
        self.rotation = np.eye(e.size) if rotation is None else np.asarray(rotation, dtype=float)
        if not np.allclose(self.rotation.T @ self.rotation, np.eye(e.size), atol=1e-10):
            raise ValueError("rotation must be orthogonal")

    def _local(self, x):
        return (as_points(x, self.ambient_dim) - self.center) @ self.rotation

    def _global(self, y):
        return y @ self.rotation.T + self.center

    def closest_local(self, y):
        """Closest boundary points in body coordinates (robust root of the secular equation)."""
        e = self.axes
        scale = float(e.max())
        sgn = np.where(y < 0, -1.0, 1.0)
        z = np.maximum(np.abs(y), 1e-14 * scale)
        emin2 = float(e.min()) ** 2
        lo = np.full(len(z), -emin2)
        hi = np.maximum(np.linalg.norm(z, axis=1) * e.max(), 1e-300)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            val = np.sum((e * z / (mid[:, None] + e ** 2)) ** 2, axis=1) - 1.0
            lo = np.where(val > 0, mid, lo)
            hi = np.where(val > 0, hi, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(np.abs(mid), emin2)):
                break
        t = 0.5 * (lo + hi)
        x = e ** 2 * z / (t[:, None] + e ** 2)
        # snap onto the surface to remove the residual of the root solve
        x = x / np.sqrt(np.sum((x / e) ** 2, axis=1, keepdims=True))
        return sgn * x

    def dist(self, x):
        y = self._local(x)
        near = self.closest_local(y)
        d = np.linalg.norm(near - y, axis=1)
        return d, np.full(len(d), self.sample_error * float(self.axes.max()))

    def boundary_point(self, u):
        """Map unit directions u (body coordinates) to boundary points."""
        return self._global(_unit(np.asarray(u, dtype=float)) * self.axes)

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(self.ambient_dim)
        base = self.closest_local(self._local(a))[0]
        u0 = _unit(base / self.axes)
        # angular half-width that covers the ball; the surface speed is at least min(e)
        width = min(np.pi, 1.05 * (r + np.linalg.norm(self._local(a)[0] - base)) / float(self.axes.min()))
        if self.ambient_dim == 2:
            th0 = np.arctan2(u0[1], u0[0])
            th = th0 + width * np.linspace(-1.0, 1.0, max(int(budget), 3) | 1)
            u = np.stack([np.cos(th), np.sin(th)], axis=1)
        else:
            tb = np.linalg.svd(u0[None, :])[2][1:]
            disk = disk_points(2, budget, seed) * np.tan(min(width, 1.4))
            u = _unit(u0 + disk @ tb)
        pts = self.boundary_point(u)
        return pts[np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)]

    def support(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        w = u @ self.rotation
        return u @ self.center + np.sqrt(np.sum((self.axes * w) ** 2, axis=1))

    def uniform_boundary(self, count: int, seed: int = 0) -> np.ndarray:
        """Boundary points with respect to arc length (n = 2) or area (n = 3, by rejection)."""
        rng = np.random.default_rng(seed)
        if self.ambient_dim == 2:
            th = np.linspace(0, 2 * np.pi, 20001)
            speed = np.hypot(self.axes[0] * np.sin(th), self.axes[1] * np.cos(th))
            cum = np.concatenate([[0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(th))])
            s = rng.uniform(0, cum[-1], count)
            t = np.interp(s, cum, th)
            return self.boundary_point(np.stack([np.cos(t), np.sin(t)], 1))
        # z uniform on the sphere maps to x = e z with area factor prod(e) |z / e|
        out = []
        bound = 1.0 / float(self.axes.min())
        while sum(len(o) for o in out) < count:
            z = _unit(rng.standard_normal((count, 3)))
            w = np.linalg.norm(z / self.axes, axis=1) / bound
            out.append((z * self.axes)[rng.uniform(0, 1, count) < w])
        return self._global(np.vstack(out)[:count])

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        return _support_cover(self, plane, a, r, budget, seed)

    def describe(self):
        return {"type": "EllipsoidBoundary", "n": self.ambient_dim, "axes": self.axes.tolist()}


class PolygonBoundary(SetOracle):
    """Boundary of a convex polygon in R^2."""

    sample_error = 1e-15

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("need at least three planar vertices")
        try:
            hull = ConvexHull(v)
        except Exception as exc:  # qhull raises on flat input
            raise ValueError("degenerate body: polygon has empty interior") from exc
        if hull.volume <= 1e-14:
            raise ValueError("degenerate body: polygon has empty interior")
        self.vertices = v[hull.vertices]
        self.ambient_dim = 2
        self.edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        self.lengths = np.linalg.norm(self.edges, axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(self.lengths)])

    def _seg_dist(self, x):
        rel = x[:, None, :] - self.vertices[None]
        t = np.clip(np.einsum("nej,ej->ne", rel, self.edges) / self.lengths ** 2, 0.0, 1.0)
        foot = self.vertices[None] + t[..., None] * self.edges[None]
        d = np.linalg.norm(x[:, None, :] - foot, axis=2)
        return d, t

    def dist(self, x):
        x = as_points(x, 2)
        d, _ = self._seg_dist(x)
        d = d.min(axis=1)
        return d, np.full(len(d), 1e-15 * (1 + np.abs(x).max()))

    def point_at(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.cum[-1])
        j = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.lengths) - 1)
        t = (s - self.cum[j]) / self.lengths[j]
        return self.vertices[j] + t[:, None] * self.edges[j]

    def arclength(self, x):
        x = as_points(x, 2)
        d, t = self._seg_dist(x)
        j = np.argmin(d, axis=1)
        return self.cum[j] + t[np.arange(len(x)), j] * self.lengths[j]

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(2)
        s0 = self.arclength(a)[0]
        reach = r + float(self.dist(a)[0][0])
        span = min(reach * 1.01, 0.5 * self.cum[-1])
        s = s0 + span * np.linspace(-1.0, 1.0, max(int(budget), 3) | 1)
        pts = self.point_at(s)
        pts = np.vstack([pts, self.vertices])
        return pts[np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)]

    def uniform_boundary(self, count, seed=0):
        rng = np.random.default_rng(seed)
        return self.point_at(rng.uniform(0, self.cum[-1], count))

    def support(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return (u @ self.vertices.T).max(axis=1)

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        return _support_cover(self, plane, a, r, budget, seed)

    def describe(self):
        return {"type": "PolygonBoundary", "n": 2, "vertices": self.vertices.tolist()}


def _support_cover(body, plane: Plane, a, r, budget, seed):
    """sup_{y in S-ball(pi_S a, r)} dist(y, pi_S K) via the support function of K.

    For a convex body the projection of its boundary equals the projection of the
    body whenever dim S < n, and dist(y, C) = max_u (<u, y> - h_C(u))_+.
    """
    m = plane.dim
    if m == 0:
        return 0.0, 0.0
    if m == body.ambient_dim:
        # pi_S is the identity: fall back to sampling the ball against the boundary
        return SetOracle.cover_deviation(body, plane, a, r, budget, seed)
    c = plane.project(np.asarray(a, dtype=float))
    if m == 1:
        u = np.vstack([plane.basis[0], -plane.basis[0]])
        err = 0.0
    else:
        u = disk_points(m, 4 * budget, seed)
        u = u[np.linalg.norm(u, axis=1) > 1e-9]
        u = plane.lift(_unit(u))
        err = r * 4.0 / np.sqrt(len(u))
    val = (u @ c) + r - body.support(u)
    return float(max(val.max(), 0.0)), float(err)


def convex_boundary(kind: str, **params) -> SetOracle:
    if kind in ("ellipse", "ellipsoid"):
        return EllipsoidBoundary(params["axes"], params.get("center"), params.get("rotation"))
    if kind == "polygon":
        return PolygonBoundary(params["vertices"])
    if kind == "square":
        s = float(params.get("side", 1.0))
        origin = np.asarray(params.get("origin", [0.0, 0.0]), dtype=float)
        return PolygonBoundary(origin + s * np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    raise ValueError(f"unknown convex body {kind!r}")
