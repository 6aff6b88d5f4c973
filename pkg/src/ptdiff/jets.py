"""Polynomial maps P: S -> S-perp stored as Taylor coefficients about a base point."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .grassmann import Plane

MAX_DEGREE = 8
N_DIRECTIONS = 2048


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices over m variables with |i| <= k, graded then lex-descending."""
    out = []
    for d in range(k + 1):
        block = [c for c in itertools.product(range(d, -1, -1), repeat=m) if sum(c) == d]
        out.extend(sorted(block, reverse=True))
    if m == 0:
        out = [()]
    return tuple(out)


@lru_cache(maxsize=None)
def _index_array(m: int, k: int) -> np.ndarray:
    return np.array(multi_indices(m, k), dtype=int).reshape(-1, m)


def monomials(u: np.ndarray, m: int, k: int) -> np.ndarray:
    """Monomial design matrix u^i for rows of u, shape (N, n_multi)."""
    u = np.asarray(u, dtype=float).reshape(-1, m)
    idx = _index_array(m, k)
    out = np.ones((u.shape[0], idx.shape[0]))
    if m == 0:
        return out
    # powers table (N, m, k+1)
    pw = np.ones((u.shape[0], m, k + 1))
    for p in range(1, k + 1):
        pw[:, :, p] = pw[:, :, p - 1] * u
    for j in range(m):
        out *= pw[:, j, idx[:, j]]
    return out


@lru_cache(maxsize=None)
def _partial_plan(m: int, k: int, beta: tuple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Surviving monomials of d^beta, their falling-factorial scales and reduced exponents."""
    idx = _index_array(m, k)
    keep = np.all(idx >= np.array(beta, dtype=int), axis=1)
    scale = np.array([np.prod([math.perm(int(a), int(b)) for a, b in zip(row, beta)]) for row in idx[keep]])
    return keep, scale.reshape(-1), idx[keep] - np.array(beta, dtype=int)


def _power_products(u: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """prod_j u_j^e_j for every row of exps, shape (N, len(exps))."""
    top = int(exps.max()) if exps.size else 0
    pw = np.ones((u.shape[0], u.shape[1], top + 1))
    for p in range(1, top + 1):
        pw[:, :, p] = pw[:, :, p - 1] * u
    out = np.ones((u.shape[0], exps.shape[0]))
    for j in range(u.shape[1]):
        out *= pw[:, j, exps[:, j]]
    return out


def _factorial_multi(idx) -> float:
    return float(np.prod([math.factorial(int(i)) for i in idx]))


@dataclass(frozen=True)
class OrderSpec:
    """Differentiability order gamma: k when alpha == 0, else (k, alpha)."""

    k: int
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError("order k must be a positive integer")
        if not 0.0 <= float(self.alpha) <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def gamma(self):
        return self.k if self.alpha == 0 else (self.k, self.alpha)

    @property
    def exponent(self) -> float:
        return self.k + self.alpha

    @classmethod
    def parse(cls, text: str) -> "OrderSpec":
        parts = [p for p in str(text).split(",") if p.strip()]
        if not 1 <= len(parts) <= 2:
            raise ValueError(f"bad order spec {text!r}")
        return cls(int(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0)

    def __str__(self):
        return f"{self.k}" if self.alpha == 0 else f"{self.k},{self.alpha:g}"


class JetPolynomial:
    """Polynomial P(chi) = sum_i c_i (chi - base)^i with chi in S-coordinates.

    ``coeffs`` has shape (n_multi, q) in the order of ``multi_indices(m, k)``;
    values are expressed in the orthonormal S-perp basis of ``domain``.
    """

    __slots__ = ("domain", "degree", "base", "coeffs")

    def __init__(self, domain: Plane, degree: int, coeffs=None, base=None):
        if not 0 <= int(degree) <= MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
        m, q = domain.dim, domain.codim
        n_multi = len(multi_indices(m, int(degree)))
        c = np.zeros((n_multi, q)) if coeffs is None else np.array(coeffs, dtype=float)
        c = c.reshape(n_multi, q)
        b = np.zeros(m) if base is None else np.array(base, dtype=float).reshape(m)
        c.setflags(write=False)
        b.setflags(write=False)
        self.domain = domain
        self.degree = int(degree)
        self.base = b
        self.coeffs = c

    # construction helpers
    @classmethod
    def from_terms(cls, domain: Plane, degree: int, terms: dict, base=None) -> "JetPolynomial":
        """Build from {multi-index tuple: value or vector}."""
        idx = multi_indices(domain.dim, degree)
        pos = {t: i for i, t in enumerate(idx)}
        c = np.zeros((len(idx), domain.codim))
        for key, val in terms.items():
            key = tuple(int(v) for v in key)
            if key not in pos:
                raise ValueError(f"multi-index {key} exceeds degree {degree}")
            c[pos[key]] = val
        return cls(domain, degree, c, base)

    @classmethod
    def zero(cls, domain: Plane, degree: int, base=None) -> "JetPolynomial":
        return cls(domain, degree, None, base)

    @property
    def m(self) -> int:
        return self.domain.dim

    @property
    def q(self) -> int:
        return self.domain.codim

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.m, self.degree)

    def terms(self) -> dict:
        return {t: self.coeffs[i].copy() for i, t in enumerate(self.indices)}

    def coefficient(self, idx) -> np.ndarray:
        return self.coeffs[self.indices.index(tuple(idx))]

    # evaluation
    def __call__(self, chi) -> np.ndarray:
        return self.eval(chi)

    def eval(self, chi) -> np.ndarray:
        chi = np.asarray(chi, dtype=float)
        lead = chi.shape[:-1] if self.m else chi.shape[:-1]
        u = chi.reshape(-1, self.m) - self.base
        val = monomials(u, self.m, self.degree) @ self.coeffs
        return val.reshape(lead + (self.q,))

    def partials(self, chi, beta) -> np.ndarray:
        """d^beta P at points chi, shape (..., q)."""
        chi = np.asarray(chi, dtype=float)
        u = chi.reshape(-1, self.m) - self.base
        beta = tuple(int(b) for b in np.asarray(beta, dtype=int).reshape(self.m))
        keep, scale, red = _partial_plan(self.m, self.degree, beta)
        if not keep.any():
            return np.zeros(chi.shape[:-1] + (self.q,))
        val = (_power_products(u, red) * scale) @ self.coeffs[keep]
        return val.reshape(chi.shape[:-1] + (self.q,))

    def jacobian(self, chi) -> np.ndarray:
        """Derivative matrix at points chi, shape (..., q, m)."""
        chi = np.asarray(chi, dtype=float)
        cols = [self.partials(chi, np.eye(self.m, dtype=int)[j]) for j in range(self.m)]
        return np.stack(cols, axis=-1) if cols else np.zeros(chi.shape[:-1] + (self.q, 0))

    def derivative_tensor(self, chi, order: int) -> np.ndarray:
        """Symmetric order-i derivative at one point, shape (m,)*i + (q,)."""
        if not 0 <= order <= self.degree:
            raise ValueError(f"order {order} outside [0, {self.degree}]")
        chi = np.asarray(chi, dtype=float).reshape(self.m)
        out = np.zeros((self.m,) * order + (self.q,))
        for combo in itertools.combinations_with_replacement(range(self.m), order):
            beta = np.bincount(np.array(combo, dtype=int), minlength=self.m) if order else np.zeros(self.m, int)
            val = self.partials(chi[None, :], beta)[0]
            for perm in set(itertools.permutations(combo)):
                out[perm] = val
        return out

    def directional(self, chi, directions, order: int) -> np.ndarray:
        """D^i P(chi)[v,...,v] for points (N, m) and unit directions (D, m): (N, D, q)."""
        chi = np.asarray(chi, dtype=float).reshape(-1, self.m)
        dirs = np.asarray(directions, dtype=float).reshape(-1, self.m)
        betas = [c for c in multi_indices(self.m, order) if sum(c) == order]
        parts = np.stack([self.partials(chi, b) / _factorial_multi(b) for b in betas], axis=1)
        vpow = monomials(dirs, self.m, order)
        sel = [multi_indices(self.m, order).index(b) for b in betas]
        return math.factorial(order) * np.einsum("nbq,db->ndq", parts, vpow[:, sel])

    # algebra
    def _binary(self, other: "JetPolynomial", sign: float) -> "JetPolynomial":
        if other.domain is not self.domain and other.domain != self.domain:
            raise ValueError("jets live over different planes")
        k = max(self.degree, other.degree)
        a = self.with_degree(k)
        b = other.recenter(self.base).with_degree(k)
        return JetPolynomial(self.domain, k, a.coeffs + sign * b.coeffs, self.base)

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return JetPolynomial(self.domain, self.degree, -self.coeffs, self.base)

    def __mul__(self, scalar: float):
        return JetPolynomial(self.domain, self.degree, float(scalar) * self.coeffs, self.base)

    __rmul__ = __mul__

    def with_degree(self, k: int) -> "JetPolynomial":
        """Same polynomial stored at degree k (truncating higher terms if k is smaller)."""
        src = self.terms()
        out = JetPolynomial.zero(self.domain, k, self.base)
        c = np.array(out.coeffs)
        for i, t in enumerate(out.indices):
            if t in src:
                c[i] = src[t]
        return JetPolynomial(self.domain, k, c, self.base)

    def _dense(self) -> np.ndarray:
        k, m = self.degree, self.m
        arr = np.zeros((k + 1,) * m + (self.q,))
        for i, t in enumerate(self.indices):
            arr[t] = self.coeffs[i]
        return arr

    def recenter(self, new_base) -> "JetPolynomial":
        """Re-express the same function around ``new_base`` by per-axis Horner shifts."""
        new_base = np.asarray(new_base, dtype=float).reshape(self.m)
        if self.m == 0:
            return JetPolynomial(self.domain, self.degree, self.coeffs, new_base)
        shift = new_base - self.base
        arr = self._dense()
        k = self.degree
        for ax in range(self.m):
            d = shift[ax]
            if d == 0.0:
                continue
            a = np.moveaxis(arr, ax, 0).copy()
            for i in range(k):
                for j in range(k - 1, i - 1, -1):
                    a[j] += d * a[j + 1]
            arr = np.moveaxis(a, 0, ax)
        coeffs = np.array([arr[t] for t in self.indices])
        return JetPolynomial(self.domain, k, coeffs, new_base)

    def homogeneous_component(self, i: int) -> "JetPolynomial":
        if not 0 <= i <= self.degree:
            raise ValueError(f"component {i} outside [0, {self.degree}]")
        terms = {t: self.coeffs[j] for j, t in enumerate(self.indices) if sum(t) == i}
        return JetPolynomial.from_terms(self.domain, i, terms, self.base)

    def max_abs_diff(self, other: "JetPolynomial") -> float:
        k = max(self.degree, other.degree)
        a = self.with_degree(k).coeffs
        b = other.recenter(self.base).with_degree(k).coeffs
        return float(np.abs(a - b).max()) if a.size else 0.0

    # serialization
    def to_json(self) -> dict:
        return {
            "plane": self.domain.to_json(),
            "base": self.base.tolist(),
            "k": self.degree,
            "coeffs": {",".join(map(str, t)): self.coeffs[i].tolist() for i, t in enumerate(self.indices)},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JetPolynomial":
        plane = Plane.from_json(obj["plane"])
        terms = {tuple(int(v) for v in key.split(",") if v != ""): val for key, val in obj["coeffs"].items()}
        return cls.from_terms(plane, int(obj["k"]), terms, obj.get("base"))

    def __repr__(self):
        nz = {t: np.round(c, 12).tolist() for t, c in self.terms().items() if np.any(c != 0)}
        return f"JetPolynomial(m={self.m}, q={self.q}, k={self.degree}, base={self.base.tolist()}, terms={nz})"


# free-function aliases matching the operation names
def eval_jet(p: JetPolynomial, chi) -> np.ndarray:
    return p.eval(chi)


def derivative_tensor(p: JetPolynomial, chi, order: int) -> np.ndarray:
    return p.derivative_tensor(chi, order)


def recenter(p: JetPolynomial, new_base) -> JetPolynomial:
    return p.recenter(new_base)


def homogeneous_component(p: JetPolynomial, i: int) -> JetPolynomial:
    return p.homogeneous_component(i)


# seminorm machinery

def ball_points(m: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic Halton points in the closed unit ball of R^m plus its extreme points."""
    return _ball_points(int(m), int(count), int(seed)).copy()


@lru_cache(maxsize=256)
def _ball_points(m: int, count: int, seed: int) -> np.ndarray:
    if m == 0:
        return np.zeros((1, 0))
    if m == 1:
        return np.linspace(-1.0, 1.0, max(count, 3))[:, None]
    sampler = qmc.Halton(d=m + 1, scramble=True, seed=seed)
    raw = sampler.random(count)
    g = _sphere_from_cube(raw[:, :m])
    rad = raw[:, m] ** (1.0 / m)
    pts = g * rad[:, None]
    eye = np.eye(m)
    extra = np.vstack([np.zeros((1, m)), eye, -eye, _sphere_from_cube(sampler.random(max(count // 4, 2 * m))[:, :m])])
    return np.vstack([pts, extra])


def _sphere_from_cube(u: np.ndarray) -> np.ndarray:
    from scipy.special import ndtri
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def unit_directions(m: int, count: int = N_DIRECTIONS, seed: int = 0) -> np.ndarray:
    return _unit_directions(int(m), int(count), int(seed)).copy()


@lru_cache(maxsize=256)
def _unit_directions(m: int, count: int, seed: int) -> np.ndarray:
    if m == 1:
        return np.array([[1.0]])
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, m))
    return np.vstack([np.eye(m), z / np.linalg.norm(z, axis=1, keepdims=True)])


@dataclass(frozen=True)
class Seminorm:
    value: float
    n_samples: int
    norm_error: float

    def __float__(self):
        return self.value


def form_norms(p: JetPolynomial, chi: np.ndarray, order: int, seed: int = 0) -> tuple[np.ndarray, float]:
    """Operator norms of D^i P at points chi and an error indication of the approximation."""
    chi = np.asarray(chi, dtype=float).reshape(-1, p.m)

    def part(beta, rows=slice(None)):
        return p.partials(chi[rows], beta)

    return _norms_from_partials(part, len(chi), p.m, order, seed)


def _norms_from_partials(part, count: int, m: int, order: int, seed: int) -> tuple[np.ndarray, float]:
    """Form norms from a callback part(beta, rows) giving d^beta P at (a subset of) the points."""
    if order == 0:
        return np.linalg.norm(part((0,) * m), axis=-1), 0.0
    if m == 1:
        return np.linalg.norm(part((order,)), axis=-1), 0.0
    eye = np.eye(m, dtype=int)
    if order == 1:
        jac = np.stack([part(tuple(eye[j])) for j in range(m)], axis=-1)
        return np.linalg.norm(jac, ord=2, axis=(-2, -1)), 0.0
    betas = [c for c in multi_indices(m, order) if sum(c) == order]
    vals = {b: part(b) for b in betas}
    q = next(iter(vals.values())).shape[-1]
    if order == 2 and q == 1:
        hess = np.zeros((count, m, m))
        for i in range(m):
            for j in range(i, m):
                v = vals[tuple(eye[i] + eye[j])][:, 0]
                hess[:, i, j] = v
                hess[:, j, i] = v
        return np.abs(np.linalg.eigvalsh(hess)).max(axis=-1), 0.0
    # symmetric forms attain their norm on the diagonal, so sample v -> |D^i P[v^i]|;
    # a coarse direction set screens the points, the full set is used on the best ones
    dirs = unit_directions(m, N_DIRECTIONS, seed)
    parts = np.stack([vals[b] / _factorial_multi(b) for b in betas], axis=1)
    sel = [multi_indices(m, order).index(b) for b in betas]

    def directional(rows, d):
        vpow = monomials(d, m, order)[:, sel]
        return math.factorial(order) * np.einsum("nbq,db->ndq", parts[rows], vpow)

    coarse = np.linalg.norm(directional(slice(None), dirs[: 64 + m]), axis=-1).max(axis=1)
    top = np.argsort(-coarse)[:8]
    fine = np.linalg.norm(directional(top, dirs), axis=-1).max(axis=1)
    best = coarse.copy()
    best[top] = np.maximum(fine, coarse[top])
    err = float(np.max(fine - coarse[top])) if fine.size else 0.0
    return best, err


@lru_cache(maxsize=64)
def _seminorm_plan(m: int, k: int, count: int, seed: int):
    """Sample points of the unit ball and, per beta, the linear map coeffs -> d^beta P there."""
    pts = ball_points(m, count, seed)
    idx = _index_array(m, k)
    ops = {}
    for beta in multi_indices(m, k):
        keep, scale, red = _partial_plan(m, k, beta)
        op = np.zeros((len(pts), len(idx)))
        op[:, keep] = _power_products(pts, red) * scale
        ops[beta] = op
    return pts, ops, idx.sum(axis=1)


def poly_seminorm(p: JetPolynomial, a=None, r: float = 1.0, seed: int = 0,
                  n_points: int | None = None) -> Seminorm:
    """sup { r^i |D^i P(x)| : x in the closed ball B(a, r), i = 0..k } by deterministic sampling."""
    if r <= 0:
        raise ValueError("radius must be positive")
    m, k = p.m, p.degree
    a = p.base if a is None else np.asarray(a, dtype=float).reshape(m)
    count = n_points or 4 ** m * (k + 1)
    if np.array_equal(a, p.base):
        # balls about the base point reuse cached linear maps: u = r x turns u^i into r^|i| x^i
        pts, ops, degree = _seminorm_plan(m, k, count, seed)
        scaled = p.coeffs * (r ** degree)[:, None]

        def part(beta, rows=slice(None)):
            return ops[tuple(beta)][rows] @ scaled / r ** sum(beta)
    else:
        pts = a + r * ball_points(m, count, seed)

        def part(beta, rows=slice(None)):
            return p.partials(pts[rows], beta)
    best, err = 0.0, 0.0
    for i in range(k + 1):
        norms, e = _norms_from_partials(part, len(pts), m, i, seed)
        best = max(best, r ** i * float(norms.max()))
        err = max(err, r ** i * e)
    return Seminorm(best, len(pts), err)


def _jitter_cells(cells: np.ndarray, seed: int, h: float) -> np.ndarray:
    """Jittered-grid point of each integer cell, reproducible from (cell, seed)."""
    c = cells.astype(np.int64)
    mix = np.full(c.shape[0], np.uint64(seed * 0x9E3779B97F4A7C15 % 2**64), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(c.shape[1]):
            mix ^= (c[:, j].astype(np.uint64) + np.uint64(0x632BE59BD9B4E019)) * np.uint64(0xBF58476D1CE4E5B9)
            mix = (mix ^ (mix >> np.uint64(31))) * np.uint64(0x94D049BB133111EB)
        jit = []
        for j in range(c.shape[1]):
            mix = (mix ^ (mix >> np.uint64(29))) * np.uint64(0xD6E8FEB86659FD93) + np.uint64(j + 1)
            jit.append((mix >> np.uint64(11)).astype(np.float64) / 2.0 ** 53)
    pts = (c + np.stack(jit, axis=1)) * h
    nrm = np.linalg.norm(pts, axis=1, keepdims=True)
    return np.where(nrm > 1.0, pts / np.maximum(nrm, 1e-300), pts)


@lru_cache(maxsize=64)
def _probe_plan(m: int, k: int, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed probe points of the unit ball, their monomial design and nearest-neighbour lists."""
    probe = ball_points(m, count, seed=1)
    design = monomials(probe, m, k)
    nbrs = cKDTree(probe).query(probe, k=min(2 * m + 3, len(probe)))[1]
    return probe, design, nbrs


def _sup_on_jittered(p: JetPolynomial, h: float, seed: int, window: int = 3, keep: int = 8,
                     starts: int = 32, hints=None) -> float:
    """sup |P| over a jittered grid of spacing h in the unit ball (P based at 0).

    Ascent starts at the best local maxima of |P| over a fixed probe set rather than at the
    best probe values, so a narrow peak is not crowded out by a broad plateau; only cells
    near the best distinct maximizers are generated. ``hints`` are extra points whose cells
    are always searched (known maximizers of the continuous sup, say).
    """
    m = p.m
    probe, design, nbrs = _probe_plan(m, p.degree, 1024 * m)
    vals = np.linalg.norm(design @ p.coeffs, axis=-1)
    local = np.flatnonzero(vals >= vals[nbrs].max(axis=1))
    local = local[np.argsort(-vals[local])[:starts]]
    steps = max(int(np.ceil(np.log(h / 0.1) / np.log(0.85))), 1) if h < 0.1 else 1
    cand = _refine_max(p, probe[local], steps=steps)
    vals = np.linalg.norm(p.eval(cand), axis=-1)
    order = np.argsort(-vals)
    chosen: list[np.ndarray] = []
    for i in order:
        if all(np.linalg.norm(cand[i] - c) > 2 * window * h for c in chosen):
            chosen.append(cand[i])
            if len(chosen) == keep:
                break
    if hints is not None:
        chosen += list(np.asarray(hints, dtype=float).reshape(-1, m))
    offs = np.array(list(itertools.product(range(-window, window + 1), repeat=m)))
    cells = np.concatenate([np.floor(c / h).astype(np.int64) + offs for c in chosen])
    cells = np.unique(cells, axis=0)
    # cell centres must reach the ball
    centres = (cells + 0.5) * h
    cells = cells[np.linalg.norm(centres, axis=1) <= 1.0 + h * np.sqrt(m)]
    pts = _jitter_cells(cells, seed, h)
    return float(np.linalg.norm(p.eval(pts), axis=-1).max())


def _refine_max(p: JetPolynomial, x: np.ndarray, steps: int = 40, step: float = 0.1) -> np.ndarray:
    """Projected gradient ascent of |P|^2 on the unit ball."""
    x = x.copy()
    m, k = p.m, p.degree
    idx = _index_array(m, k)
    for _ in range(steps):
        mon, dmon = _monomials_with_gradient(x, idx)
        val = mon @ p.coeffs
        grad = np.einsum("nq,njb,bq->nj", val, dmon, p.coeffs)
        gn = np.linalg.norm(grad, axis=1, keepdims=True)
        x = x + step * grad / np.maximum(gn, 1e-300)
        nrm = np.linalg.norm(x, axis=1, keepdims=True)
        x = np.where(nrm > 1.0, x / np.maximum(nrm, 1.0), x)
        step *= 0.85
    return x


def _monomials_with_gradient(u: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """u^i and its gradient for every multi-index row: shapes (N, B) and (N, m, B)."""
    n, m = u.shape
    top = int(idx.max()) if idx.size else 0
    pw = np.ones((n, m, top + 2))
    for e in range(1, top + 1):
        pw[:, :, e] = pw[:, :, e - 1] * u
    factors = np.stack([pw[:, j, idx[:, j]] for j in range(m)], axis=1)  # (N, m, B)
    # derivative factor e u^(e-1); e = 0 rows are zeroed by the factor e anyway
    dfac = np.stack([idx[:, j] * pw[:, j, np.maximum(idx[:, j] - 1, 0)] for j in range(m)], axis=1)
    # products of all factors but the j-th from prefix and suffix products
    pre = np.ones((n, m + 1, idx.shape[0]))
    suf = np.ones((n, m + 1, idx.shape[0]))
    for j in range(m):
        pre[:, j + 1] = pre[:, j] * factors[:, j]
        suf[:, m - j - 1] = suf[:, m - j] * factors[:, m - j - 1]
    mon = pre[:, m]
    grad = pre[:, :m] * suf[:, 1:] * dfac
    return mon, grad


def empirical_gamma(k: int, m: int, trials: int = 1000, density: float = 0.02, seed: int = 0,
                    q: int = 1, points=None) -> float:
    """Max observed seminorm / sup_X |P| over random unit-seminorm polynomials.

    X is a density-dense jittered grid in the unit ball (or ``points`` if given).
    """
    return gamma_search(k, m, trials, density, seed, q, points)[0]


def gamma_search(k: int, m: int, trials: int = 1000, density: float = 0.02, seed: int = 0,
                 q: int = 1, points=None) -> tuple[float, JetPolynomial]:
    """empirical_gamma together with the polynomial that realised the maximum."""
    if not (0 <= k <= 6 and 0 <= m <= 6):
        raise ValueError("k and m must lie in [0, 6]")
    if points is None and not 0 < density <= 0.1:
        raise ValueError("density must lie in (0, 0.1]")
    plane = Plane.coordinate(m + q, range(m))
    rng = np.random.default_rng(seed)
    n_multi = len(multi_indices(m, k))
    h = density / np.sqrt(max(m, 1))
    fixed = None if points is None else np.asarray(points, dtype=float).reshape(-1, m)
    basis = legendre_change_of_basis(m, k)

    def ratio(coeffs: np.ndarray, hints=None) -> float:
        p = JetPolynomial(plane, k, coeffs)
        semi = poly_seminorm(p, np.zeros(m), 1.0, seed=seed).value
        if semi == 0.0:
            return 0.0
        p = p * (1.0 / semi)
        if fixed is not None:
            sup_x = float(np.linalg.norm(p.eval(fixed), axis=-1).max())
        elif m == 0:
            sup_x = float(np.linalg.norm(p.coeffs[0]))
        else:
            sup_x = _sup_on_jittered(p, h, seed, hints=hints)
        return 1.0 / sup_x if sup_x > 0 else np.inf

    record = {"value": -1.0, "coeffs": None}

    def observe(coeffs, hints=None) -> float:
        if isinstance(coeffs, tuple):
            coeffs, hints = coeffs
        val = ratio(coeffs, hints)
        if val > record["value"]:
            record.update(value=val, coeffs=coeffs)
        return val

    def climb(start, objective, draw_step, budget: int, best: float, on_accept=None):
        # adaptive random-walk ascent (a (1+1) evolution strategy)
        step = 0.3
        for _ in range(budget):
            cand = draw_step(start, step)
            val = objective(cand)
            if val > best:
                start, best = cand, val
                step = min(step * 1.5, 0.5)
                if on_accept is not None:
                    on_accept(cand)
            else:
                step = max(step * 0.93, 1e-3)
        return best

    def jitter(c, step):
        return c + step * np.linalg.norm(c) * rng.standard_normal(c.shape) / np.sqrt(c.size)

    n_draw = trials if k == 0 else max(1, trials // 2)
    idx = multi_indices(m, k)
    ridges = m >= 2 and k >= 2
    n_ridge = n_draw // 2 if ridges else 0

    def ridge(params) -> tuple[np.ndarray, np.ndarray]:
        # monomial coefficients of sum_j c_j L_j(<u, x>), one column of c per output, plus
        # the points t u where the profile peaks on [-1, 1] as hints for the sup over X
        u, c = params
        u = u / np.linalg.norm(u)
        coeffs, peaks = _ridge_coeffs(idx, u, c)
        return coeffs, peaks[:, None] * u

    # extremal profiles of the one-variable problem on a 1-d grid of the same spacing,
    # laid along a random direction
    if k >= 1 and m >= 1 and fixed is None:
        # cells overhanging [-1, 1] are pulled back onto the endpoints
        reach = int(np.ceil(1 / density)) + 1
        nodes = _jitter_cells(np.arange(-reach, reach)[:, None], seed, density)[:, 0]
        u = rng.standard_normal(m)
        u /= np.linalg.norm(u)
        for prof in markov_profiles(k, nodes):
            coeffs, peaks = _ridge_monomial(idx, u, np.repeat(prof[:, None], q, axis=1) / np.sqrt(q))
            observe(coeffs, peaks[:, None] * u)

    # independent draws: generic Legendre tensors, plus ridge profiles when m >= 2
    best_tensor, best_ridge, tensor_val, ridge_val = None, None, -1.0, -1.0
    for t in range(n_draw):
        if t < n_draw - n_ridge:
            c = rng.uniform(-1.0, 1.0, size=(n_multi, q))
            val = observe(basis @ c)
            if val > tensor_val:
                best_tensor, tensor_val = c, val
        else:
            params = (rng.standard_normal(m), rng.uniform(-1.0, 1.0, size=(k + 1, q)))
            val = observe(ridge(params))
            if val > ridge_val:
                best_ridge, ridge_val = params, val
    if trials > n_draw:
        if ridges:
            # the ridge ratio is, up to sampling, the one-variable ratio of its profile, so
            # the walk runs on the exact profile problem and every improvement is observed
            # on X; a walk on the sampled m-variable ratio mostly exploits sampling error
            u = best_ridge[0]
            profile = _profile_ratio(k, q, density, seed)
            climb(best_ridge[1], profile, jitter, trials - n_draw, profile(best_ridge[1]),
                  on_accept=lambda c: observe(ridge((u, c))))
        else:
            climb(best_tensor, lambda c: observe(basis @ c), jitter, trials - n_draw, tensor_val)
    return record["value"], JetPolynomial(plane, k, record["coeffs"])


def _profile_ratio(k: int, q: int, density: float, seed: int):
    """Ratio of the one-variable polynomial sum_j c_j L_j (normalised Legendre) on [-1, 1]."""
    plane = Plane.coordinate(1 + q, [0])
    basis = legendre_change_of_basis(1, k)

    def ratio(c: np.ndarray) -> float:
        p = JetPolynomial(plane, k, basis @ c)
        semi = poly_seminorm(p, np.zeros(1), 1.0, seed=seed).value
        if semi == 0.0:
            return 0.0
        sup_x = _sup_on_jittered(p * (1.0 / semi), density, seed)
        return 1.0 / sup_x if sup_x > 0 else np.inf

    return ratio


def markov_profiles(k: int, nodes: np.ndarray) -> list[np.ndarray]:
    """For each i = 1..k the degree-k polynomial maximising p^(i)(1) subject to |p| <= 1 on nodes.

    A linear program in the Chebyshev coefficients; returns monomial coefficient vectors.
    """
    from numpy.polynomial import chebyshev
    from scipy.optimize import linprog
    design = chebyshev.chebvander(np.asarray(nodes, dtype=float), k)
    out = []
    for i in range(1, k + 1):
        # value of the i-th derivative of T_j at 1
        grad = np.array([chebyshev.chebval(1.0, chebyshev.chebder(np.eye(k + 1)[j], i)) for j in range(k + 1)])
        res = linprog(-grad, A_ub=np.vstack([design, -design]), b_ub=np.ones(2 * len(design)),
                      bounds=[(None, None)] * (k + 1), method="highs")
        if res.status == 0:
            out.append(chebyshev.cheb2poly(res.x))
    return out


def _ridge_coeffs(idx, u: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    from numpy.polynomial import legendre
    # normalised Legendre profile, matching the tensor basis in one variable
    c = c.reshape(len(c), -1) * np.sqrt((2 * np.arange(len(c)) + 1) / 2.0)[:, None]
    mono = np.zeros_like(c)
    for col in range(c.shape[1]):
        coef = legendre.leg2poly(c[:, col])
        mono[:len(coef), col] = coef
    return _ridge_monomial(idx, u, mono)


def _ridge_monomial(idx, u: np.ndarray, mono: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of p(<u, x>) from the monomial profile p, and the peaks of |p| on [-1, 1]."""
    mono = mono.reshape(len(mono), -1)
    out = np.zeros((len(idx), mono.shape[1]))
    for row, t in enumerate(idx):
        j = sum(t)
        if j < len(mono):
            mult = math.factorial(j) / math.prod(math.factorial(e) for e in t)
            out[row] = mult * np.prod(u ** np.array(t)) * mono[j]
    # local maximisers of |profile| on [-1, 1]: endpoints and real critical points
    peaks = [-1.0, 1.0]
    for col in range(mono.shape[1]):
        crit = np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polyder(mono[:, col])) \
            if np.any(mono[1:, col]) and len(mono) > 2 else np.zeros(0)
        peaks += [float(z.real) for z in np.atleast_1d(crit) if abs(z.imag) < 1e-9 and abs(z.real) <= 1.0]
    return out, np.array(peaks)


@lru_cache(maxsize=None)
def legendre_change_of_basis(m: int, k: int) -> np.ndarray:
    """Columns hold monomial coefficients of the tensor Legendre products L_i(x) = prod_j P_{i_j}(x_j)."""
    from numpy.polynomial import legendre
    idx = multi_indices(m, k)
    pos = {t: i for i, t in enumerate(idx)}
    mat = np.zeros((len(idx), len(idx)))
    for col, t in enumerate(idx):
        # per-axis monomial coefficients, normalised to unit L2 mass on [-1, 1]
        axes = [legendre.leg2poly(np.eye(d + 1)[d]) * np.sqrt((2 * d + 1) / 2.0) for d in t]
        for powers in itertools.product(*[range(len(a)) for a in axes]):
            val = np.prod([a[p] for a, p in zip(axes, powers)]) if axes else 1.0
            if val != 0.0:
                mat[pos[tuple(powers)], col] += val
    return mat


@dataclass(frozen=True)
class UniquenessReport:
    statistic: float
    coefficient_norms: dict
    dense: bool
    message: str


def jet_uniqueness_check(p: JetPolynomial, samples) -> UniquenessReport:
    """max_j r_j^-k sup_{X_j} |P| together with coefficient norms per degree.

    ``samples`` is a list of (r_j, X_j) with X_j in S-coordinates around the base point.
    The density precondition asks every X_j to be (r_j/10)-dense in the ball.
    """
    if not samples:
        raise ValueError("empty samples")
    radii = [float(r) for r, _ in samples]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    stat, dense = 0.0, True
    probe = ball_points(p.m, 64 * max(p.m, 1), seed=7)
    for r, x in samples:
        x = np.asarray(x, dtype=float).reshape(-1, p.m)
        if x.shape[0] == 0:
            raise ValueError("empty sample set")
        sup = float(np.linalg.norm(p.eval(x), axis=-1).max())
        stat = max(stat, sup / r ** p.degree)
        if p.m:
            gap = cKDTree(x).query(p.base + r * probe)[0].max()
            dense &= bool(gap <= r / 10 + 1e-15)
    norms = {i: float(np.linalg.norm(p.homogeneous_component(i).coeffs)) for i in range(p.degree + 1)}
    msg = "ok" if dense else "density precondition violated"
    return UniquenessReport(stat, norms, dense, msg)
