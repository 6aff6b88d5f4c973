"""Tensor-by-tensor comparison of fitted jets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..jets import JetPolynomial, multi_indices

FLOOR = 1e-9


@dataclass
class Agreement:
    agree: bool | None
    discrepancy: float
    by_order: list
    disagree_orders: list

    def to_json(self) -> dict:
        return {"agree": self.agree, "discrepancy": self.discrepancy, "by_order": self.by_order,
                "disagree_orders": self.disagree_orders}


def jet_agreement(p: JetPolynomial | None, p_err, r: JetPolynomial | None, r_err, factor: float = 10.0,
                  floor: float = FLOOR) -> Agreement:
    """Agreement when every coefficient gap is within factor x the combined error bars (plus a floor)."""
    if p is None or r is None:
        return Agreement(None, float("nan"), [], [])
    if p.domain.dim != r.domain.dim or p.domain.codim != r.domain.codim:
        raise ValueError("jets live over planes of different dimensions")
    k = min(p.degree, r.degree)
    base = p.base
    a, b = p.with_degree(k), r.recenter(base).with_degree(k)
    ea = _errors(p_err, p, k)
    eb = _errors(r_err, r, k)
    gap = np.abs(a.coeffs - b.coeffs)
    tol = factor * (ea + eb) + floor
    degrees = np.array([sum(t) for t in multi_indices(p.m, k)])
    by_order, bad = [], []
    for i in range(k + 1):
        sel = degrees == i
        d = float(gap[sel].max()) if sel.any() else 0.0
        by_order.append(d)
        if np.any(gap[sel] > tol[sel]):
            bad.append(i)
    return Agreement(not bad, float(gap.max()), by_order, bad)


def _errors(err, jet: JetPolynomial, k: int) -> np.ndarray:
    n = len(multi_indices(jet.m, k))
    if err is None:
        return np.zeros((n, jet.q))
    return np.asarray(err, dtype=float).reshape(-1, jet.q)[:n]


def fit_agreement(fa, fb, factor: float = 10.0) -> Agreement:
    """jet_agreement on two JetFit results."""
    return jet_agreement(fa.jet, fa.errors, fb.jet, fb.errors, factor)
