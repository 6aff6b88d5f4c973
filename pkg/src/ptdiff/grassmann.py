"""Planes in R^n: orthogonal projections, subspace distance and transversality."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

ORTHO_TOL = 1e-12
POWER_TOL = 1e-12
POWER_MAXITER = 10_000


def _gram_schmidt(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize rows with one reorthogonalization pass per vector."""
    out: list[np.ndarray] = []
    for v in np.atleast_2d(np.asarray(vectors, dtype=float)):
        w = v.copy()
        for _ in range(2):
            for q in out:
                w -= (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm <= tol * max(1.0, np.linalg.norm(v)):
            raise ValueError("basis vectors are linearly dependent")
        out.append(w / nrm)
    return np.array(out)


def power_opnorm(mat: np.ndarray, tol: float = POWER_TOL, maxiter: int = POWER_MAXITER) -> float:
    """Largest singular value of ``mat`` by power iteration on mat^T mat."""
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        return 0.0
    gram = mat.T @ mat
    return float(np.sqrt(max(_power_sym(gram, tol, maxiter), 0.0)))


def _power_sym(gram: np.ndarray, tol: float, maxiter: int) -> float:
    # deterministic start vector with no special alignment to coordinate axes
    d = gram.shape[0]
    v = 1.0 + 0.1 * np.sin(np.arange(1, d + 1) * 1.7)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(maxiter):
        w = gram @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        new = float(v @ w)
        v = w / nrm
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return float(v @ gram @ v)
        lam = new
    return float(v @ gram @ v)


def _projected_basis(proj: np.ndarray, count: int, against: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the columns of a projector, largest columns first."""
    n = proj.shape[0]
    rows: list[np.ndarray] = []
    # rounding keeps the column order stable under tiny perturbations
    order = np.argsort(-np.round(np.linalg.norm(proj, axis=0), 6), kind="stable")
    for j in order:
        if len(rows) == count:
            break
        w = proj[:, j].copy()
        for _ in range(2):
            for q in rows:
                w -= (q @ w) * q
            for q in against:
                w -= (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            rows.append(w / nrm)
    return np.array(rows).reshape(-1, n)


@dataclass(frozen=True, eq=False)
class Plane:
    """Linear subspace S of R^n stored as an orthonormal row basis (m, n)."""

    ambient_dim: int
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = int(self.ambient_dim)
        if n < 1:
            raise ValueError("ambient dimension must be positive")
        b = np.asarray(self.basis, dtype=float).reshape(-1, n)
        if b.shape[0] > n:
            raise ValueError("more basis vectors than ambient dimension")
        if b.shape[0]:
            b = _gram_schmidt(b)
        b.setflags(write=False)
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "basis", b)

    # constructors
    @classmethod
    def from_vectors(cls, vectors, n: int | None = None) -> "Plane":
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        return cls(n if n is not None else v.shape[1], v)

    @classmethod
    def coordinate(cls, n: int, axes) -> "Plane":
        return cls(n, np.eye(n)[list(axes)])

    @classmethod
    def zero(cls, n: int) -> "Plane":
        return cls(n, np.zeros((0, n)))

    @classmethod
    def full(cls, n: int) -> "Plane":
        return cls(n, np.eye(n))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.dim

    @cached_property
    def perp_basis(self) -> np.ndarray:
        """Orthonormal basis of S-perp obtained from the projected standard basis."""
        out = _projected_basis(np.eye(self.ambient_dim) - self.projector, self.codim, self.basis)
        out.setflags(write=False)
        return out

    def canonical(self) -> "Plane":
        """Same subspace with the basis obtained by projecting the standard axes."""
        if self.dim in (0, self.ambient_dim):
            return Plane(self.ambient_dim, np.eye(self.ambient_dim)[:self.dim])
        return Plane(self.ambient_dim, _projected_basis(self.projector, self.dim, np.zeros((0, self.ambient_dim))))

    @cached_property
    def projector(self) -> np.ndarray:
        p = self.basis.T @ self.basis
        p.setflags(write=False)
        return p

    @cached_property
    def perp(self) -> "Plane":
        return Plane(self.ambient_dim, self.perp_basis)

    # projections; all accept (..., n) arrays
    def coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.basis.T

    def perp_coords(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.perp_basis.T

    def project(self, x) -> np.ndarray:
        return self.coords(x) @ self.basis

    def perp_project(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x - self.project(x)

    def lift(self, chi, w=None) -> np.ndarray:
        """Ambient point with S-coordinates ``chi`` and S-perp coordinates ``w``."""
        chi = np.asarray(chi, dtype=float)
        out = chi @ self.basis if self.dim else np.zeros(chi.shape[:-1] + (self.ambient_dim,))
        if w is not None and self.codim:
            out = out + np.asarray(w, dtype=float) @ self.perp_basis
        return out

    def check(self) -> tuple[float, float]:
        """Return (orthonormality defect, idempotence/symmetry defect)."""
        if self.dim == 0:
            return 0.0, 0.0
        gram = self.basis @ self.basis.T - np.eye(self.dim)
        p = self.projector
        return float(np.abs(gram).max()), max(power_opnorm(p @ p - p), power_opnorm(p - p.T))

    def to_json(self) -> dict:
        return {"n": self.ambient_dim, "m": self.dim, "basis": self.basis.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Plane":
        n, m = int(obj["n"]), int(obj["m"])
        basis = np.asarray(obj.get("basis", []), dtype=float).reshape(m, n)
        return cls(n, basis)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return (self.ambient_dim == other.ambient_dim and self.dim == other.dim
                and grass_distance(self, other) <= 1e-10)

    def __hash__(self):
        return hash((self.ambient_dim, self.dim))


def project(plane: Plane, x) -> np.ndarray:
    return plane.project(x)


def perp_project(plane: Plane, x) -> np.ndarray:
    return plane.perp_project(x)


def _check_same_ambient(s: Plane, t: Plane):
    if s.ambient_dim != t.ambient_dim:
        raise ValueError(f"ambient dimension mismatch: {s.ambient_dim} vs {t.ambient_dim}")


def grass_distance(s: Plane, t: Plane) -> float:
    """Operator norm of pi_S - pi_T."""
    _check_same_ambient(s, t)
    return power_opnorm(s.projector - t.projector)


@dataclass(frozen=True)
class Transversality:
    transversal: bool
    margin: float

    def __bool__(self) -> bool:
        return self.transversal


def transversal(s: Plane, t: Plane, tol: float = 1e-6) -> Transversality:
    """Whether pi_S restricted to T has full rank; margin is its least singular value."""
    _check_same_ambient(s, t)
    if s.dim != t.dim:
        raise ValueError(f"dimension mismatch: {s.dim} vs {t.dim}")
    if s.dim == 0:
        return Transversality(True, 1.0)
    comp = s.basis @ t.basis.T
    # least singular value as 1 / |comp^-1|: the shifted-Gram route loses half the digits near zero
    try:
        inv = np.linalg.inv(comp)
    except np.linalg.LinAlgError:
        return Transversality(False, 0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        big = power_opnorm(inv) if np.all(np.isfinite(inv)) else np.inf
    margin = float(1.0 / big) if np.isfinite(big) and big > 0 else 0.0
    return Transversality(margin > tol, margin)
