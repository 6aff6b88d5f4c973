"""Set oracles: distance evaluation with error bars and sampling inside balls."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from ..grassmann import Plane, grass_distance
from ..jets import JetPolynomial, ball_points


class EmptySampleError(RuntimeError):
    """The set does not meet the requested ball."""


def as_points(x, n: int) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1, n)


def disk_points(m: int, budget: int, seed: int, symmetric: bool = True) -> np.ndarray:
    """Points of the closed unit ball in R^m: a grid when m == 1, scrambled Halton otherwise."""
    budget = max(int(budget), 2)
    if m == 0:
        return np.zeros((1, 0))
    if m == 1:
        return np.linspace(-1.0, 1.0, budget | 1)[:, None]
    half = budget // 2 if symmetric else budget
    pts = ball_points(m, max(half, 4 * m), seed)
    if symmetric:
        pts = np.vstack([pts, -pts])
    return pts


class SetOracle:
    """Abstract closed set A in R^n.

    Subclasses implement ``dist`` returning (values, error bounds) and
    ``sample_ball`` returning points of A inside a closed ball.
    """

    ambient_dim: int
    exact_samples = False
    resolution = 0.0
    sample_error = 0.0

    def dist(self, x) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample_ball(self, a, r: float, budget: int, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        d, e = self.dist(x)
        return d <= e + tol

    def cover_deviation(self, plane: Plane, a, r: float, budget: int = 512, seed: int = 0) -> tuple[float, float]:
        """sup over S-ball B(pi_S a, r) of dist(., pi_S[A]), by sampling both sides."""
        a = np.asarray(a, dtype=float)
        m = plane.dim
        if m == 0:
            return 0.0, 0.0
        c = plane.coords(a)
        grid = c + r * disk_points(m, budget, seed)
        pts = self.sample_ball(a, 4.0 * r, 4 * budget, seed)
        if len(pts) == 0:
            return float(r), 0.0
        proj = plane.coords(pts)
        tree = cKDTree(proj)
        d = tree.query(grid)[0]
        # gaps at the sample spacing are not resolvable and are treated as covered
        spacing = _spacing(proj)
        floor = max(spacing, self.resolution)
        return float(max(d.max() - floor, 0.0)), float(self.sample_error)

    def describe(self) -> dict:
        return {"type": type(self).__name__, "n": self.ambient_dim}


def _spacing(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    d = cKDTree(pts).query(pts, k=2)[0][:, 1]
    return float(np.max(d))


class PointCloud(SetOracle):
    """Finite point set with exact nearest-neighbour distances."""

    exact_samples = True

    def __init__(self, points, resolution: float | None = None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        self.points = pts
        self.ambient_dim = pts.shape[1]
        self.tree = cKDTree(pts)
        if resolution is None:
            # widest gap between samples, estimated as twice the largest nearest-neighbour distance
            resolution = 2.0 * float(self.tree.query(pts, k=2)[0][:, 1].max()) if len(pts) > 1 else 0.0
        self.resolution = float(resolution)

    def dist(self, x):
        x = as_points(x, self.ambient_dim)
        d = self.tree.query(x)[0]
        return d, np.zeros_like(d)

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(self.ambient_dim)
        idx = np.array(sorted(self.tree.query_ball_point(a, r * (1 + 1e-12))), dtype=int)
        if len(idx) > budget > 0:
            rng = np.random.default_rng(seed)
            idx = np.sort(rng.choice(idx, size=budget, replace=False))
        return self.points[idx]

    def describe(self):
        return {"type": "PointCloud", "n": self.ambient_dim, "count": len(self.points), "resolution": self.resolution}


class Translated(SetOracle):
    """A - v."""

    def __init__(self, inner: SetOracle, shift):
        self.inner = inner
        self.shift = np.asarray(shift, dtype=float)
        self.ambient_dim = inner.ambient_dim
        self.exact_samples = inner.exact_samples
        self.resolution = inner.resolution
        self.sample_error = inner.sample_error

    def dist(self, x):
        return self.inner.dist(as_points(x, self.ambient_dim) + self.shift)

    def sample_ball(self, a, r, budget, seed=0):
        return self.inner.sample_ball(np.asarray(a) + self.shift, r, budget, seed) - self.shift

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        return self.inner.cover_deviation(plane, np.asarray(a) + self.shift, r, budget, seed)


def translate(inner: SetOracle, v) -> SetOracle:
    """A - v, keeping graphs and clouds in closed form."""
    v = np.asarray(v, dtype=float).reshape(inner.ambient_dim)
    if isinstance(inner, GraphSet):
        cv, wv = inner.plane.coords(v), inner.plane.perp_coords(v)
        dc = None if inner.domain_radius is None else inner.domain_center - cv
        return GraphSet(inner.plane, MappedFunction(inner.f, in_shift=cv, out_shift=wv), dc, inner.domain_radius)
    if isinstance(inner, PointCloud):
        return PointCloud(inner.points - v, inner.resolution)
    return Translated(inner, v)


class UnionSet(SetOracle):
    def __init__(self, parts):
        self.parts = list(parts)
        self.ambient_dim = self.parts[0].ambient_dim
        self.sample_error = max(p.sample_error for p in self.parts)

    def dist(self, x):
        vals = [p.dist(x) for p in self.parts]
        d = np.stack([v[0] for v in vals])
        e = np.stack([v[1] for v in vals])
        j = np.argmin(d, axis=0)
        cols = np.arange(d.shape[1])
        return d[j, cols], e[j, cols]

    def sample_ball(self, a, r, budget, seed=0):
        share = max(budget // len(self.parts), 1)
        out = [p.sample_ball(a, r, share, seed + i) for i, p in enumerate(self.parts)]
        return np.vstack([o for o in out if len(o)] or [np.zeros((0, self.ambient_dim))])


# graphs of functions over a plane

class GraphFunction:
    """Vector-valued function over S-coordinates with a Jacobian."""

    m: int
    q: int
    analytic_jac = False

    def eval(self, chi) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, chi) -> np.ndarray:
        chi = np.asarray(chi, dtype=float)
        h = 1e-6 * (1.0 + np.abs(chi))
        cols = []
        for j in range(self.m):
            e = np.zeros(self.m)
            e[j] = 1.0
            step = h[..., j:j + 1]
            cols.append((self.eval(chi + step * e) - self.eval(chi - step * e)) / (2 * step))
        return np.stack(cols, axis=-1)


class CallableFunction(GraphFunction):
    def __init__(self, func, m: int, q: int, jac=None):
        self.func, self.jac, self.m, self.q = func, jac, m, q
        self.analytic_jac = jac is not None

    def eval(self, chi):
        chi = np.asarray(chi, dtype=float)
        return np.asarray(self.func(chi), dtype=float).reshape(chi.shape[:-1] + (self.q,))

    def jacobian(self, chi):
        if self.jac is None:
            return super().jacobian(chi)
        chi = np.asarray(chi, dtype=float)
        return np.asarray(self.jac(chi), dtype=float).reshape(chi.shape[:-1] + (self.q, self.m))


class JetFunction(GraphFunction):
    analytic_jac = True

    def __init__(self, jet: JetPolynomial):
        self.jet, self.m, self.q = jet, jet.m, jet.q

    def eval(self, chi):
        return self.jet.eval(chi)

    def jacobian(self, chi):
        return self.jet.jacobian(chi)


class MappedFunction(GraphFunction):
    """G(chi) = out_scale * (F(in_scale * chi + in_shift) - out_shift) - sub(chi)."""

    def __init__(self, inner: GraphFunction, in_scale=1.0, in_shift=None, out_scale=1.0, out_shift=None,
                 sub: JetPolynomial | None = None):
        self.inner, self.m, self.q = inner, inner.m, inner.q
        self.in_scale, self.out_scale = float(in_scale), float(out_scale)
        self.in_shift = np.zeros(self.m) if in_shift is None else np.asarray(in_shift, dtype=float)
        self.out_shift = np.zeros(self.q) if out_shift is None else np.asarray(out_shift, dtype=float)
        self.sub = sub
        self.analytic_jac = inner.analytic_jac

    def eval(self, chi):
        chi = np.asarray(chi, dtype=float)
        inner = self.inner.eval(self.in_scale * chi + self.in_shift)
        if self.sub is not None:
            # subtract before scaling so cancellations happen at the original size
            inner = inner - self.sub.eval(self.in_scale * chi + self.in_shift)
        return self.out_scale * (inner - self.out_shift)

    def jacobian(self, chi):
        if not self.analytic_jac:
            # differencing at the mapped scale avoids amplifying the inner step error
            return super().jacobian(chi)
        chi = np.asarray(chi, dtype=float)
        y = self.in_scale * chi + self.in_shift
        jac = self.inner.jacobian(y)
        if self.sub is not None:
            jac = jac - self.sub.jacobian(y)
        return self.out_scale * self.in_scale * jac


def as_graph_function(f, plane: Plane) -> GraphFunction:
    if isinstance(f, GraphFunction):
        return f
    if isinstance(f, JetPolynomial):
        return JetFunction(f)
    if hasattr(f, "graph_function"):
        return f.graph_function()
    return CallableFunction(f, plane.dim, plane.codim)


class GraphSet(SetOracle):
    """{ chi + f(chi) : chi in D } over a plane S, with D a ball in S-coordinates or all of S."""

    def __init__(self, plane: Plane, f, domain_center=None, domain_radius: float | None = None,
                 gn_steps: int = 40, candidates: int = 17):
        if plane.dim == 0:
            raise ValueError("graphs need a plane of positive dimension")
        self.plane = plane
        self.f = as_graph_function(f, plane)
        self.ambient_dim = plane.ambient_dim
        self.domain_center = None if domain_radius is None else (
            np.zeros(plane.dim) if domain_center is None else np.asarray(domain_center, dtype=float))
        self.domain_radius = domain_radius
        self.gn_steps = gn_steps
        self.candidates = candidates
        self.sample_error = 1e-13

    # geometry helpers
    def lift(self, chi) -> np.ndarray:
        chi = np.asarray(chi, dtype=float)
        return self.plane.lift(chi, self.f.eval(chi))

    def _clip(self, chi):
        if self.domain_radius is None:
            return chi
        off = chi - self.domain_center
        nrm = np.linalg.norm(off, axis=-1, keepdims=True)
        scale = np.minimum(1.0, self.domain_radius / np.maximum(nrm, 1e-300))
        return self.domain_center + off * scale

    def in_domain(self, chi) -> np.ndarray:
        chi = np.asarray(chi, dtype=float)
        if self.domain_radius is None:
            return np.ones(chi.shape[:-1], dtype=bool)
        return np.linalg.norm(chi - self.domain_center, axis=-1) <= self.domain_radius * (1 + 1e-12)

    def _objective(self, chi, cx, w):
        return np.sum((chi - cx) ** 2, axis=-1) + np.sum((self.f.eval(chi) - w) ** 2, axis=-1)

    def dist(self, x):
        x = as_points(x, self.ambient_dim)
        m = self.plane.dim
        cx = self.plane.coords(x)
        w = self.plane.perp_coords(x)
        start = self._clip(cx)
        rho = np.sqrt(self._objective(start, cx, w))
        # coarse multi-start inside the ball that must contain the minimiser
        g = np.linspace(-1.0, 1.0, self.candidates if m == 1 else (9 if m == 2 else 5))
        grid = np.array(np.meshgrid(*([g] * m), indexing="ij")).reshape(m, -1).T
        cand = self._clip(cx[:, None, :] + rho[:, None, None] * grid[None])
        vals = self._objective(cand.reshape(-1, m), np.repeat(cx, len(grid), 0), np.repeat(w, len(grid), 0))
        vals = vals.reshape(len(x), len(grid))
        order = np.argsort(vals, axis=1)[:, :2]
        starts = [start] + [cand[np.arange(len(x)), order[:, j]] for j in range(order.shape[1])]
        best = np.full(len(x), np.inf)
        best_chi = start
        for s in starts:
            chi, val = self._gauss_newton(s, cx, w)
            take = val < best
            best = np.where(take, val, best)
            best_chi = np.where(take[:, None], chi, best_chi)
        d = np.sqrt(np.maximum(best, 0.0))
        # leftover decrease predicted by one more Newton step bounds the excess of d
        slack = self._predicted_decrease(best_chi, cx, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            excess = np.where(d > 0, slack / np.maximum(d, 1e-300), np.sqrt(slack))
        err = 1e-14 * (1.0 + np.linalg.norm(x, axis=1)) + np.minimum(excess, d)
        return d, err

    def nearest(self, x) -> np.ndarray:
        """S-coordinates of the graph point nearest to each x."""
        x = as_points(x, self.ambient_dim)
        cx, w = self.plane.coords(x), self.plane.perp_coords(x)
        return self._gauss_newton(self._clip(cx), cx, w)[0]

    def _newton_step(self, chi, cx, w):
        """Damped Newton step for the squared distance; curvature of f by central differences of its Jacobian."""
        m = self.plane.dim
        eye = np.eye(m)
        fv = self.f.eval(chi) - w
        jac = self.f.jacobian(chi)
        hess = eye + np.einsum("nqi,nqj->nij", jac, jac)
        grad = (chi - cx) + np.einsum("nqi,nq->ni", jac, fv)
        # the Gauss-Newton model alone contracts at rate ~ dist * curvature, slow near focal points
        h = 1e-5 * (1.0 + np.abs(chi))
        curv = np.zeros_like(hess)
        for j in range(m):
            e = np.zeros(m)
            e[j] = 1.0
            dj = (self.f.jacobian(chi + h[:, j:j + 1] * e) - self.f.jacobian(chi - h[:, j:j + 1] * e)) / (2 * h[:, j, None, None])
            curv[:, :, j] = np.einsum("nqi,nq->ni", dj, fv)
        full = hess + 0.5 * (curv + np.swapaxes(curv, 1, 2))
        low = np.linalg.eigvalsh(full)[:, 0]
        full = full + np.maximum(1e-8 - low, 0.0)[:, None, None] * eye
        ok = np.all(np.isfinite(full), axis=(1, 2))
        full = np.where(ok[:, None, None], full, hess)
        step = -np.linalg.solve(full, grad[..., None])[..., 0]
        return step, grad

    def _predicted_decrease(self, chi, cx, w) -> np.ndarray:
        step, grad = self._newton_step(chi, cx, w)
        return np.maximum(-0.5 * np.sum(step * grad, axis=1), 0.0)

    def _gauss_newton(self, chi, cx, w):
        chi = chi.copy()
        val = self._objective(chi, cx, w)
        for _ in range(self.gn_steps):
            step, _ = self._newton_step(chi, cx, w)
            t = np.ones(len(chi))
            size = np.linalg.norm(step, axis=1)
            # below this a step changes the distance by far less than its error bar
            tiny = 1e-13 * (1.0 + np.linalg.norm(chi, axis=1)) + 1e-8 * np.sqrt(np.maximum(val, 0.0))
            if np.all(size <= tiny):
                break
            new = self._clip(chi + step)
            new_val = self._objective(new, cx, w)
            for _ in range(30):
                # steps below roundoff are rejected outright instead of halved further
                bad = (new_val > val) & (t * size > tiny)
                if not bad.any():
                    break
                t = np.where(bad, t * 0.5, t)
                new = np.where(bad[:, None], self._clip(chi + t[:, None] * step), new)
                new_val = np.where(bad, self._objective(new, cx, w), new_val)
            ok = new_val <= val
            moved = np.linalg.norm(np.where(ok[:, None], new - chi, 0.0), axis=1)
            chi = np.where(ok[:, None], new, chi)
            val = np.where(ok, new_val, val)
            if np.all(moved <= tiny):
                break
        return chi, val

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(self.ambient_dim)
        ca = self.plane.coords(a)
        chi = ca + r * disk_points(self.plane.dim, budget, seed)
        chi = chi[self.in_domain(chi)]
        pts = self.lift(chi)
        keep = np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)
        return pts[keep]

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        if plane.dim == self.plane.dim and grass_distance(plane, self.plane) <= 1e-12:
            if self.domain_radius is None:
                return 0.0, 0.0
            c = plane.coords(np.asarray(a, dtype=float))
            gap = np.linalg.norm(c - self.domain_center) + r - self.domain_radius
            return float(max(gap, 0.0)), 0.0
        return super().cover_deviation(plane, a, r, budget, seed)

    def describe(self):
        return {"type": "GraphSet", "n": self.ambient_dim, "m": self.plane.dim}


def _unwrap(inner: SetOracle) -> SetOracle:
    """Closed-form equivalent of a wrapper when one exists."""
    return getattr(inner, "_delegate", None) or inner


def _same_plane(s: Plane, t: Plane) -> bool:
    return s.dim == t.dim and grass_distance(s, t) <= 1e-9


class ShearImage(SetOracle):
    """{ x - f(pi_S x) : x in A } for a jet f over S."""

    def __init__(self, inner: SetOracle, plane: Plane, f: JetPolynomial):
        inner = _unwrap(inner)
        self.inner, self.plane, self.f = inner, plane, f
        self.ambient_dim = inner.ambient_dim
        self.exact_samples = inner.exact_samples
        self.resolution = inner.resolution
        self.sample_error = inner.sample_error
        self._delegate = None
        if isinstance(inner, GraphSet) and _same_plane(inner.plane, plane):
            self._delegate = GraphSet(inner.plane, MappedFunction(inner.f, sub=_in_plane(f, inner.plane)),
                                      inner.domain_center, inner.domain_radius)
        elif isinstance(inner, PointCloud):
            self._delegate = PointCloud(self.forward(inner.points), inner.resolution)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        return x - self.plane.lift(np.zeros(x.shape[:-1] + (self.plane.dim,)), self.f.eval(self.plane.coords(x)))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        return y + self.plane.lift(np.zeros(y.shape[:-1] + (self.plane.dim,)), self.f.eval(self.plane.coords(y)))

    def _lipschitz(self, centre, r):
        chi = self.plane.coords(centre) + r * disk_points(self.plane.dim, 64, 0)
        jac = self.f.jacobian(chi)
        return 1.0 + float(np.linalg.norm(jac, ord=2, axis=(-2, -1)).max())

    def dist(self, x):
        if self._delegate is not None:
            return self._delegate.dist(x)
        x = as_points(x, self.ambient_dim)
        out_d, out_e = np.empty(len(x)), np.empty(len(x))
        for i, xi in enumerate(x):
            # grow a window around x until it meets the set
            rad = max(float(self.inner.dist(self.inverse(xi))[0][0]), 1e-12)
            for _ in range(20):
                lip = self._lipschitz(xi, 2 * rad)
                pts = self.forward(self.inner.sample_ball(self.inverse(xi), lip * 2 * rad, 2048, 0))
                if len(pts):
                    d = np.linalg.norm(pts - xi, axis=1)
                    out_d[i], out_e[i] = d.min(), 0.5 * _spacing(pts) + self.inner.sample_error
                    break
                rad *= 2
            else:
                out_d[i], out_e[i] = np.inf, 0.0
        return out_d, out_e

    def sample_ball(self, a, r, budget, seed=0):
        if self._delegate is not None:
            return self._delegate.sample_ball(a, r, budget, seed)
        a = np.asarray(a, dtype=float)
        lip = self._lipschitz(a, r)
        pts = self.forward(self.inner.sample_ball(self.inverse(a), lip * r, budget, seed))
        return pts[np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)]

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        if _same_plane(plane, self.plane):
            # shears along S-perp leave pi_S[A] unchanged
            return self.inner.cover_deviation(plane, self.inverse(np.asarray(a, dtype=float)), r, budget, seed)
        return super().cover_deviation(plane, a, r, budget, seed)


def _in_plane(jet: JetPolynomial, plane: Plane) -> JetPolynomial:
    """Re-express a jet over ``plane`` (same subspace, possibly another basis)."""
    if jet.domain is plane:
        return jet
    if not _same_plane(jet.domain, plane):
        raise ValueError("jet is defined over a different plane")
    if np.allclose(jet.domain.basis, plane.basis, atol=1e-8) and np.allclose(jet.domain.perp_basis, plane.perp_basis,
                                                                            atol=1e-8):
        return JetPolynomial(plane, jet.degree, jet.coeffs, jet.base)
    raise ValueError("jet plane uses a different basis; re-fit over the target plane")


class DilatedSet(SetOracle):
    """beta_{i,s}[A] with beta(x) = s^-1 pi_S x + s^-i pi_S-perp x."""

    def __init__(self, inner: SetOracle, plane: Plane, order: int, scale: float):
        if scale <= 0:
            raise ValueError("scale must be positive")
        inner = _unwrap(inner)
        self.inner, self.plane, self.order, self.scale = inner, plane, int(order), float(scale)
        self.ambient_dim = inner.ambient_dim
        self.exact_samples = inner.exact_samples
        s, i = self.scale, self.order
        self.resolution = inner.resolution / min(s, s ** i) if inner.resolution else 0.0
        self.sample_error = inner.sample_error / min(s, s ** i)
        self._delegate = None
        if isinstance(inner, GraphSet) and _same_plane(inner.plane, plane):
            dc = None if inner.domain_radius is None else inner.domain_center / s
            dr = None if inner.domain_radius is None else inner.domain_radius / s
            self._delegate = GraphSet(inner.plane, MappedFunction(inner.f, in_scale=s, out_scale=s ** -i), dc, dr)
            self.sample_error = self._delegate.sample_error
        elif isinstance(inner, PointCloud):
            self._delegate = PointCloud(self.forward(inner.points), self.resolution)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        s, i = self.scale, self.order
        return self.plane.project(x) / s + self.plane.perp_project(x) / s ** i

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        s, i = self.scale, self.order
        return self.plane.project(y) * s + self.plane.perp_project(y) * s ** i

    def dist(self, x):
        if self._delegate is not None:
            return self._delegate.dist(x)
        x = as_points(x, self.ambient_dim)
        if self.order == 1 or self.plane.dim in (0, self.ambient_dim):
            # similarity: distances scale exactly
            s = self.scale if self.order == 1 or self.plane.dim == self.ambient_dim else self.scale ** self.order
            d, e = self.inner.dist(x * s)
            return d / s, e / s
        out_d, out_e = np.empty(len(x)), np.empty(len(x))
        for j, xj in enumerate(x):
            rad = max(float(self.inner.dist(self.inverse(xj))[0][0]) / min(self.scale, self.scale ** self.order), 1e-12)
            for _ in range(30):
                pts = self.sample_ball(xj, 2 * rad, 2048, 0)
                if len(pts):
                    out_d[j] = np.linalg.norm(pts - xj, axis=1).min()
                    out_e[j] = 0.5 * _spacing(pts) + self.sample_error
                    break
                rad *= 2
            else:
                out_d[j], out_e[j] = np.inf, 0.0
        return out_d, out_e

    def sample_ball(self, a, r, budget, seed=0):
        if self._delegate is not None:
            return self._delegate.sample_ball(a, r, budget, seed)
        a = np.asarray(a, dtype=float)
        s, i = self.scale, self.order
        pre = self.inner.sample_ball(self.inverse(a), r * max(s, s ** i), budget, seed)
        pts = self.forward(pre) if len(pre) else pre
        return pts[np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)] if len(pts) else pts

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        if _same_plane(plane, self.plane):
            v, e = self.inner.cover_deviation(plane, self.inverse(np.asarray(a, dtype=float)), r * self.scale,
                                              budget, seed)
            return v / self.scale, e / self.scale
        return super().cover_deviation(plane, a, r, budget, seed)


def rescaled(inner: SetOracle, lam: float) -> SetOracle:
    """The image of A under x -> lam * x."""
    return DilatedSet(inner, Plane.full(inner.ambient_dim), 1, 1.0 / lam)


def dilate(x, plane: Plane, order: int, scale: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return plane.project(x) / scale + plane.perp_project(x) / scale ** order


# planes with holes

class PlaneWithHoles(SetOracle):
    """(o + S) minus disjoint open balls given in S-coordinates relative to o."""

    def __init__(self, plane: Plane, holes=(), origin=None):
        self.plane = plane
        self.ambient_dim = plane.ambient_dim
        self.origin = np.zeros(self.ambient_dim) if origin is None else np.asarray(origin, dtype=float)
        holes = list(holes)
        self.hole_centers = np.array([h[0] for h in holes], dtype=float).reshape(-1, plane.dim)
        self.hole_radii = np.array([h[1] for h in holes], dtype=float).reshape(-1)
        self._tree = cKDTree(self.hole_centers) if len(holes) else None
        self._rmax = float(self.hole_radii.max()) if len(holes) else 0.0

    def _inplane_gap(self, chi):
        """Distance inside the plane from chi to the complement of the holes."""
        gap = np.zeros(len(chi))
        if self._tree is None:
            return gap
        for i, near in enumerate(self._tree.query_ball_point(chi, self._rmax)):
            if near:
                d = np.linalg.norm(self.hole_centers[near] - chi[i], axis=1)
                gap[i] = max(0.0, float(np.max(self.hole_radii[near] - d)))
        return gap

    def dist(self, x):
        x = as_points(x, self.ambient_dim) - self.origin
        perp = np.linalg.norm(self.plane.perp_coords(x), axis=1) if self.plane.codim else np.zeros(len(x))
        gap = self._inplane_gap(self.plane.coords(x))
        d = np.sqrt(perp ** 2 + gap ** 2)
        return d, np.zeros_like(d)

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(self.ambient_dim) - self.origin
        h = np.linalg.norm(self.plane.perp_coords(a)) if self.plane.codim else 0.0
        if h > r:
            return np.zeros((0, self.ambient_dim))
        rad = np.sqrt(max(r * r - h * h, 0.0))
        chi = self.plane.coords(a) + rad * disk_points(self.plane.dim, budget, seed)
        chi = chi[self._inplane_gap(chi) <= 0.0]
        return self.plane.lift(chi) + self.origin

    def cover_deviation(self, plane, a, r, budget=512, seed=0):
        if not _same_plane(plane, self.plane):
            return super().cover_deviation(plane, a, r, budget, seed)
        if self._tree is None:
            return 0.0, 0.0
        c = plane.coords(np.asarray(a, dtype=float) - self.origin)
        c = self.plane.coords(plane.lift(c))
        near = self._tree.query_ball_point(c, r + self._rmax)
        best = 0.0
        for j in near:
            d = np.linalg.norm(self.hole_centers[j] - c)
            best = max(best, self.hole_radii[j] - max(0.0, d - r))
        return float(max(best, 0.0)), 0.0

    def describe(self):
        return {"type": "PlaneWithHoles", "n": self.ambient_dim, "m": self.plane.dim, "holes": len(self.hole_radii)}


def affine_plane(plane: Plane, origin) -> PlaneWithHoles:
    return PlaneWithHoles(plane, (), origin)


def plane_with_holes(plane: Plane, holes=(), origin=None) -> PlaneWithHoles:
    return PlaneWithHoles(plane, holes, origin)
