"""Moduli of continuity, fat Cantor sets and smooth functions hesitating to vanish."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .oracles import CallableFunction, GraphFunction, SetOracle, as_points

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
MAX_PANELS = 64


class Modulus:
    """Monotone gauge omega: [0, 1] -> [0, 1] with omega(0) = 0."""

    def __init__(self, func, name: str = "custom", params: dict | None = None):
        self._func = func
        self.name = name
        self.params = dict(params or {})

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._func(np.clip(t, 0.0, 1.0)), dtype=float)
        return np.where(t <= 0.0, 0.0, out)

    @classmethod
    def log(cls) -> "Modulus":
        """omega(t) = 1 / (1 + log(1/t))."""
        def f(t):
            with np.errstate(divide="ignore"):
                return 1.0 / (1.0 + np.log(1.0 / np.maximum(t, 1e-300)))
        return cls(f, "log")

    @classmethod
    def identity(cls) -> "Modulus":
        return cls(lambda t: t, "identity")

    @classmethod
    def power(cls, beta: float) -> "Modulus":
        return cls(lambda t: t ** beta, "power", {"beta": beta})

    @classmethod
    def constant(cls, c: float = 1.0) -> "Modulus":
        return cls(lambda t: np.full_like(t, c), "constant", {"c": c})

    @classmethod
    def from_config(cls, cfg) -> "Modulus":
        if isinstance(cfg, Modulus):
            return cfg
        if isinstance(cfg, str):
            cfg = {"name": cfg}
        name = cfg.get("name", "log")
        if name == "log":
            return cls.log()
        if name == "identity":
            return cls.identity()
        if name == "power":
            return cls.power(float(cfg["beta"]))
        if name == "constant":
            return cls.constant(float(cfg.get("c", 1.0)))
        raise ValueError(f"unknown modulus {name!r}")

    def to_config(self) -> dict:
        return {"name": self.name, **self.params}

    def check(self, grid_levels: int = 40) -> bool:
        """Monotone, zero only at 0 and tending to 0, on a dyadic grid."""
        t = 2.0 ** -np.arange(grid_levels, -1, -1, dtype=float)
        v = self(t)
        return bool(self(0.0) == 0.0 and np.all(np.diff(v) >= -1e-15) and np.all(v > 0))


def _smooth_step(u):
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


class SmoothModulus(Modulus):
    """psi with psi(2^-i) = omega(2^-i-1), C-infinity monotone steps in between."""

    def __init__(self, omega: Modulus):
        self.omega = omega
        super().__init__(self._psi, f"smooth({omega.name})", {"omega": omega.to_config()})

    def _psi(self, t):
        t = np.asarray(t, dtype=float)
        pos = np.maximum(t, 1e-300)
        mant, ex = np.frexp(pos)
        lo = np.ldexp(0.5, ex)  # t in [lo, 2 lo)
        u = 2.0 * mant - 1.0
        left, right = self.omega(lo / 2.0), self.omega(lo)
        return left + (right - left) * _smooth_step(u)

    def nodes(self, t):
        """Dyadic breakpoints below t, used to align quadrature panels."""
        return np.ldexp(0.5, np.frexp(np.maximum(t, 1e-300))[1])


def smooth_modulus(omega: Modulus) -> SmoothModulus:
    return SmoothModulus(omega)


def _panel_integrals(psi: Modulus, k: int, a, b) -> np.ndarray:
    """int_a^b (b - s)^(k-i-1) / (k-i-1)! psi(s) ds for i < k, Gauss-Legendre on one panel each."""
    half = 0.5 * (b - a)
    s = 0.5 * (a + b)[:, None] + half[:, None] * GL_NODES
    w = half[:, None] * GL_WEIGHTS * psi(s)
    gap = b[:, None] - s
    return np.stack([np.sum(w * gap ** (k - i - 1), axis=1) / math.factorial(k - i - 1) for i in range(k)], axis=1)


def _taylor_shift(vals: np.ndarray, step) -> np.ndarray:
    """sum_{j >= i} vals_j step^(j-i) / (j-i)! for the polynomial part of each derivative."""
    k = vals.shape[1]
    out = np.zeros_like(vals)
    for i in range(k):
        for j in range(i, k):
            out[:, i] += vals[:, j] * step ** (j - i) / math.factorial(j - i)
    return out


def _node_table(psi: Modulus, k: int) -> np.ndarray:
    """h, ..., h^(k-1) at the dyadic nodes 2^-p, p = 0..MAX_PANELS (zero below the last node)."""
    cache = psi.__dict__.setdefault("_primitive_tables", {})
    if k not in cache:
        table = np.zeros((MAX_PANELS + 1, k))
        for p in range(MAX_PANELS - 1, -1, -1):
            lo, hi = np.array([2.0 ** -(p + 1)]), np.array([2.0 ** -p])
            table[p] = _taylor_shift(table[p + 1][None], hi - lo)[0] + _panel_integrals(psi, k, lo, hi)[0]
        cache[k] = table
    return cache[k]


def primitive_stack(psi: Modulus, k: int, y) -> np.ndarray:
    """Values h(y), h'(y), ..., h^(k)(y) with h^(k) = psi and h^(i)(0) = 0.

    h^(i)(y) = int_0^y (y - s)^(k-i-1) / (k-i-1)! psi(s) ds. The integrals up to the dyadic
    nodes 2^-p are tabulated once (Gauss-Legendre on panels aligned with the breakpoints of
    psi); a point y is reached from the node below it by Taylor shift plus one panel.
    Returns an array of shape y.shape + (k + 1,).
    """
    y = np.asarray(y, dtype=float)
    if np.any((y < 0) | (y >= 1)):
        raise ValueError("y must lie in [0, 1)")
    flat = y.reshape(-1)
    out = np.zeros((flat.size, k + 1))
    out[:, k] = psi(flat)
    pos = flat > 0
    if k == 0 or not pos.any():
        return out.reshape(y.shape + (k + 1,))
    yy = flat[pos]
    mant, ex = np.frexp(yy)
    top = np.ldexp(0.5, ex)  # largest dyadic node <= y
    p = np.minimum(1 - ex, MAX_PANELS)
    base = _node_table(psi, k)[p]
    base = np.where((1 - ex <= MAX_PANELS)[:, None], base, 0.0)
    out[pos, :k] = _taylor_shift(base, yy - top) + _panel_integrals(psi, k, top, yy)
    return out.reshape(y.shape + (k + 1,))


def regularized_distance(dist_fn, x, m: int | None = None, nodes: int = 33) -> tuple[np.ndarray, float]:
    """Mollified distance g(x) = 0.8 * avg_{|y|<=1} delta(x + delta(x)/4 * y) under a bump weight.

    ``dist_fn`` maps (N, m) points to distances (or is a SetOracle).
    Returns (g, gamma_hat) where 0.6 delta <= g <= delta, so gamma_hat = 1/0.6.
    """
    if isinstance(dist_fn, SetOracle):
        oracle = dist_fn
        m = oracle.ambient_dim
        dist_fn = lambda p: oracle.dist(p)[0]  # noqa: E731
    x = np.asarray(x, dtype=float)
    if m is None:
        m = x.shape[-1] if x.ndim else 1
    pts = x.reshape(-1, m)
    if m > 2:
        raise ValueError("regularized distance is implemented for m <= 2")
    delta = np.asarray(dist_fn(pts), dtype=float).reshape(-1)
    if np.any(delta <= 0):
        raise ValueError("x lies in A")
    if np.any(delta >= 1):
        raise ValueError("dist(x, A) must be below 1")
    t, wt = np.polynomial.legendre.leggauss(nodes)
    grid = np.array(np.meshgrid(*([t] * m), indexing="ij")).reshape(m, -1).T
    wts = np.prod(np.array(np.meshgrid(*([wt] * m), indexing="ij")).reshape(m, -1), axis=0)
    r2 = np.sum(grid ** 2, axis=1)
    bump = np.where(r2 < 1, np.exp(-1.0 / np.maximum(1.0 - r2, 1e-300)), 0.0) * wts
    bump /= bump.sum()
    keep = bump > 0
    grid, bump = grid[keep], bump[keep]
    q = pts[:, None, :] + (delta[:, None, None] / 4.0) * grid[None]
    vals = np.asarray(dist_fn(q.reshape(-1, m)), dtype=float).reshape(len(pts), -1)
    g = 0.8 * vals @ bump
    return g.reshape(x.shape[:-1] if x.ndim > 1 else ()), 1.0 / 0.6


# fat Cantor sets

@dataclass
class FatCantor(SetOracle):
    """Product C^m of a one-dimensional mid-gap Cantor set C in [0, 1].

    ``intervals`` are the closed components of C at the final depth and
    ``gaps`` the registry rows (level, centre, radius) of removed intervals.
    """

    m: int
    depth: int
    omega_name: str
    intervals: np.ndarray = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        self.ambient_dim = self.m
        self.sample_error = 1e-16
        self._left = self.intervals[:, 0]
        self._right = self.intervals[:, 1]

    @property
    def measure_1d(self) -> float:
        return float(np.sum(self._right - self._left))

    @property
    def measure(self) -> float:
        return self.measure_1d ** self.m

    @property
    def gap_count(self) -> int:
        return len(self.gaps)

    def gap_registry(self) -> list[tuple[float, float]]:
        return [(float(c), float(r)) for _, c, r in self.gaps]

    def dist_1d(self, x):
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self._left, x, side="right") - 1
        jc = np.clip(j, 0, len(self._left) - 1)
        inside = (j >= 0) & (x <= self._right[jc])
        left_gap = np.where(j >= 0, x - self._right[jc], np.inf)
        nxt = np.clip(j + 1, 0, len(self._left) - 1)
        right_gap = np.where(j + 1 < len(self._left), self._left[nxt] - x, np.inf)
        return np.where(inside, 0.0, np.minimum(left_gap, right_gap))

    def gap_bounds(self, x):
        """(l, u) of the complementary interval containing x; infinite ends outside [0, 1]."""
        x = np.asarray(x, dtype=float)
        j = np.searchsorted(self._left, x, side="right") - 1
        jc = np.clip(j, 0, len(self._left) - 1)
        lo = np.where(j >= 0, self._right[jc], -np.inf)
        nxt = np.clip(j + 1, 0, len(self._left) - 1)
        hi = np.where(j + 1 < len(self._left), self._left[nxt], np.inf)
        return lo, hi

    def dist(self, x):
        x = as_points(x, self.m)
        d = np.sqrt(np.sum(self.dist_1d(x) ** 2, axis=1))
        return d, np.zeros_like(d)

    def _sample_1d(self, lo, hi, count, rng):
        i0 = max(np.searchsorted(self._right, lo, side="left"), 0)
        i1 = np.searchsorted(self._left, hi, side="right")
        if i1 <= i0:
            return np.zeros(0)
        a = np.maximum(self._left[i0:i1], lo)
        b = np.minimum(self._right[i0:i1], hi)
        ok = b >= a
        a, b = a[ok], b[ok]
        lengths = b - a
        total = lengths.sum()
        ends = np.concatenate([a, b])
        if total <= 0:
            return np.unique(ends)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = (np.arange(count) + rng.uniform(0, 1, count)) * total / count
        j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(a) - 1)
        pts = a[j] + (s - cum[j])
        return np.concatenate([pts, ends])

    def sample_ball(self, a, r, budget, seed=0):
        a = np.asarray(a, dtype=float).reshape(self.m)
        rng = np.random.default_rng(seed)
        if self.m == 1:
            pts = self._sample_1d(a[0] - r, a[0] + r, budget, rng)[:, None]
        else:
            per = max(int(np.sqrt(budget)), 2)
            axes = [self._sample_1d(a[i] - r, a[i] + r, per, rng) for i in range(self.m)]
            if any(len(ax) == 0 for ax in axes):
                return np.zeros((0, self.m))
            pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(self.m, -1).T
        return pts[np.linalg.norm(pts - a, axis=1) <= r * (1 + 1e-12)]

    def sample_points(self, count: int, seed: int = 0) -> np.ndarray:
        """Points of A drawn uniformly with respect to Lebesgue measure."""
        rng = np.random.default_rng(seed)
        lengths = self._right - self._left
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        cols = []
        for _ in range(self.m):
            s = rng.uniform(0, cum[-1], count)
            j = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
            cols.append(self._left[j] + (s - cum[j]))
        return np.stack(cols, axis=1)

    def gap_chain(self, a: float) -> np.ndarray:
        """Registry rows (level, centre, radius) of the gaps cut from the intervals containing a."""
        rows = []
        for lev in range(1, self.depth + 1):
            cand = self.gaps[self.gaps[:, 0] == lev]
            j = np.argmin(np.abs(cand[:, 1] - a))
            rows.append(cand[j])
        return np.array(rows).reshape(-1, 3)

    def describe(self):
        return {"type": "FatCantor", "m": self.m, "depth": self.depth, "omega": self.omega_name,
                "measure": self.measure, "gap_count": self.gap_count}


def _unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


def fat_cantor(m: int, omega: Modulus, depth: int, seed: int = 0) -> FatCantor:
    """Mid-gap Cantor product with a gap ball of measure >= omega(4^-j) 4^-jm at level j."""
    if not 1 <= m <= 2:
        raise ValueError("fat Cantor sets are built for m in {1, 2}")
    if not 0 <= depth <= 24:
        raise ValueError("depth must lie in [0, 24]")
    vol = _unit_ball_volume(m)
    intervals = np.array([[0.0, 1.0]])
    gaps = []
    for lev in range(1, depth + 1):
        r = 4.0 ** -lev
        lam = 2.0 * r * (float(omega(r)) / vol) ** (1.0 / m)
        lengths = intervals[:, 1] - intervals[:, 0]
        if np.any(lam >= lengths):
            raise ValueError(f"modulus too large: level-{lev} gap does not fit inside its interval")
        mid = 0.5 * (intervals[:, 0] + intervals[:, 1])
        gaps.extend((lev, c, lam / 2) for c in mid)
        left = np.stack([intervals[:, 0], mid - lam / 2], axis=1)
        right = np.stack([mid + lam / 2, intervals[:, 1]], axis=1)
        intervals = np.stack([left, right], axis=1).reshape(-1, 2)
    removed = 1.0 - float(np.sum(intervals[:, 1] - intervals[:, 0])) ** m
    if removed >= 0.5:
        raise ValueError(f"modulus too large to keep positive measure: removed measure {removed:.3f} >= 1/2")
    return FatCantor(m, depth, omega.name, intervals, np.array(gaps, dtype=float).reshape(-1, 3), seed)


def check_gap_registry(cantor: FatCantor, omega: Modulus) -> bool:
    """Every level-j gap ball has measure >= omega(r_j) r_j^m and fits in the r_j-ball."""
    vol = _unit_ball_volume(cantor.m)
    for lev, _, rad in cantor.gaps:
        r = 4.0 ** -lev
        if rad > r or vol * rad ** cantor.m < float(omega(r)) * r ** cantor.m * (1 - 1e-12):
            return False
    return True


# the hesitating function f = h o g

def _stirling2(i: int, j: int) -> int:
    return int(sum((-1) ** t * math.comb(j, t) * (j - t) ** i for t in range(j + 1)) // math.factorial(j))


class HesitatingFunction:
    """f = h o g with g a regularized distance to A and h the primitive stack of psi.

    On a one-dimensional interval union g is the exact gap profile
    (x - l)(u - x)/(u - l), so g/delta lies in [1/2, 1] and |D^j g| <= 2 delta^(1-j).
    """

    def __init__(self, zero_set: SetOracle, omega: Modulus, k: int):
        if k < 1:
            raise ValueError("order k must be positive")
        self.zero_set = zero_set
        self.omega = omega
        self.psi = smooth_modulus(omega)
        self.k = int(k)
        self.exact_gaps = hasattr(zero_set, "gap_bounds") and zero_set.ambient_dim == 1
        self.m = zero_set.ambient_dim

    @cached_property
    def delta_const(self) -> float:
        return 2.0 if self.exact_gaps else 1.0 / 0.6

    @cached_property
    def gamma_hat(self) -> float:
        """A priori constant from the chain rule with |D^j g| <= Delta delta^(1-j)."""
        k, dlt = self.k, self.delta_const
        cands = [(2 * dlt) ** k * math.factorial(k), 1.0 / math.factorial(k)]
        for i in range(1, k + 1):
            cands.append(sum(_stirling2(i, j) * dlt ** j / math.factorial(k - j) for j in range(1, i + 1)))
        return float(max(cands))

    def delta(self, x) -> np.ndarray:
        return self.zero_set.dist(as_points(x, self.m))[0]

    def g_derivs(self, x) -> np.ndarray:
        """g, g', g'' (1-d exact profile); zero where x lies in A."""
        x = np.asarray(x, dtype=float).reshape(-1)
        lo, hi = self.zero_set.gap_bounds(x)
        d = self.zero_set.dist_1d(x)
        out = np.zeros((len(x), 3))
        inside = d > 0
        finite = inside & np.isfinite(lo) & np.isfinite(hi)
        left = inside & ~np.isfinite(lo)
        right = inside & ~np.isfinite(hi)
        span = np.where(finite, hi - lo, 1.0)
        out[finite, 0] = ((x - lo) * (hi - x) / span)[finite]
        out[finite, 1] = ((hi + lo - 2 * x) / span)[finite]
        out[finite, 2] = (-2.0 / span)[finite]
        out[left, 0], out[left, 1] = (hi - x)[left], -1.0
        out[right, 0], out[right, 1] = (x - lo)[right], 1.0
        return out

    def g(self, x) -> np.ndarray:
        if self.exact_gaps:
            return self.g_derivs(x)[:, 0]
        pts = as_points(x, self.m)
        d = self.delta(pts)
        out = np.zeros(len(pts))
        pos = d > 0
        if pos.any():
            out[pos] = regularized_distance(self.zero_set, pts[pos])[0]
        return out

    def _check_range(self, d):
        if np.any(d >= 1):
            raise ValueError("evaluation needs dist(x, A) < 1")

    def __call__(self, x) -> np.ndarray:
        return self.value(x)

    def value(self, x) -> np.ndarray:
        pts = as_points(x, self.m)
        d = self.delta(pts)
        self._check_range(d)
        gv = self.g(pts)
        return np.where(d > 0, primitive_stack(self.psi, self.k, np.clip(gv, 0, 1 - 1e-16))[:, 0], 0.0)

    def sup_ball(self, a, r: float) -> tuple[float, float]:
        """Exact sup of f over [a - r, a + r] (m = 1): the best clipped gap midpoint."""
        if not self.exact_gaps:
            raise ValueError("exact ball suprema need a one-dimensional interval union")
        a = float(np.asarray(a, dtype=float).reshape(-1)[0])
        lo_w, hi_w = a - r, a + r
        left, right = self.zero_set.intervals[:, 0], self.zero_set.intervals[:, 1]
        # gaps (right_j, left_j+1) plus the two unbounded ends
        gl = np.concatenate([[-np.inf], right])
        gu = np.concatenate([left, [np.inf]])
        hit = (gl < hi_w) & (gu > lo_w)
        gl, gu = gl[hit], gu[hit]
        if len(gl) == 0:
            return 0.0, 0.0
        mid = np.where(np.isfinite(gl) & np.isfinite(gu), 0.5 * (gl + gu), np.where(np.isfinite(gl), hi_w, lo_w))
        xs = np.clip(mid, np.maximum(gl, lo_w), np.minimum(gu, hi_w))
        # f is increasing in g, so only the largest profile value matters
        best = xs[int(np.argmax(self.g_derivs(xs)[:, 0]))]
        val = float(self.value(np.array([[best]]))[0])
        return val, 1e-9 * val

    def derivatives(self, x, order: int | None = None) -> np.ndarray:
        """f, f', ..., f^(order) for m = 1 via the chain rule (shape (N, order + 1))."""
        order = self.k if order is None else order
        if self.m != 1:
            raise ValueError("closed-form derivatives are available for m = 1")
        if order > self.k:
            raise ValueError("derivatives beyond order k are not tracked")
        x = np.asarray(x, dtype=float).reshape(-1)
        d = self.zero_set.dist_1d(x)
        self._check_range(d)
        out = np.zeros((len(x), order + 1))
        pos = d > 0
        if not pos.any():
            return out
        if self.exact_gaps:
            gd = self.g_derivs(x[pos])
        else:
            gd = self._fd_g(x[pos])
        hs = primitive_stack(self.psi, self.k, np.clip(gd[:, 0], 0, 1 - 1e-16))
        g1, g2 = gd[:, 1], gd[:, 2]
        vals = [hs[:, 0]]
        if order >= 1:
            vals.append(hs[:, 1] * g1)
        if order >= 2:
            vals.append(hs[:, 2] * g1 ** 2 + hs[:, 1] * g2)
        for i in range(3, order + 1):
            # exact gap profile has vanishing third derivative
            vals.append(sum(_stirling2_terms(hs, g1, g2, i)))
        out[pos] = np.stack(vals, axis=1)
        return out

    def _fd_g(self, x):
        h = 1e-4 * self.zero_set.dist_1d(x)
        gp, g0, gm = self.g(x + h), self.g(x), self.g(x - h)
        return np.stack([g0, (gp - gm) / (2 * h), (gp - 2 * g0 + gm) / h ** 2], axis=1)

    def graph_function(self) -> GraphFunction:
        def f(chi):
            return self.value(chi)[:, None]

        def jac(chi):
            if self.m == 1:
                return self.derivatives(chi, 1)[:, 1][:, None, None]
            return CallableFunction(f, self.m, 1).jacobian(chi)

        return CallableFunction(lambda c: f(np.asarray(c).reshape(-1, self.m)).reshape(np.asarray(c).shape[:-1] + (1,)),
                                self.m, 1,
                                lambda c: jac(np.asarray(c).reshape(-1, self.m)).reshape(np.asarray(c).shape[:-1] + (1, self.m)))

    def audit(self, x) -> dict:
        """Check both displayed bounds at every point with the single constant gamma_hat."""
        x = np.asarray(x, dtype=float).reshape(-1)
        d = self.zero_set.dist_1d(x)
        der = self.derivatives(x, self.k)
        gam = self.gamma_hat
        lower = d ** self.k * self.omega(d / gam) / gam
        ok_lower = der[:, 0] >= lower * (1 - 1e-12)
        ok_upper = np.ones(len(x), dtype=bool)
        for i in range(self.k + 1):
            ok_upper &= np.abs(der[:, i]) <= gam * self.omega(d) * d ** (self.k - i) * (1 + 1e-12)
        return {"gamma_hat": gam, "points": int(len(x)), "lower_ok": int(ok_lower.sum()),
                "upper_ok": int(ok_upper.sum()), "all_ok": bool(ok_lower.all() and ok_upper.all())}


def _stirling2_terms(hs, g1, g2, i):
    # Faa di Bruno with only g', g'' nonzero: partitions into blocks of size 1 and 2
    terms = []
    for pairs in range(i // 2 + 1):
        singles = i - 2 * pairs
        blocks = singles + pairs
        if blocks >= hs.shape[1]:
            continue
        count = math.factorial(i) // (math.factorial(singles) * math.factorial(pairs) * 2 ** pairs)
        terms.append(count * hs[:, blocks] * g1 ** singles * g2 ** pairs)
    return terms


def hesitating_function(zero_set: SetOracle, omega: Modulus, k: int) -> HesitatingFunction:
    return HesitatingFunction(zero_set, omega, k)
