"""Non-asymptotic recovery bound and concentration checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Iterable, Optional

import numpy as np

from .fields import empirical_field
from .model import TimeSeriesPanel, design_matrix, get_link


@dataclass
class BoundReport:
    lambda1: float
    m_g: float
    eps: float
    bound_l2: float
    bound_inf_delta: float
    empirical_err: Optional[float] = None
    covered: Optional[bool] = None

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(asdict(self), f)


def gram_matrix(panel: TimeSeriesPanel):
    """Covariate second-moment matrix (1/T) sum_t w w^T and its smallest eigenvalue."""
    W = design_matrix(panel)
    G = W @ W.T / panel.horizon
    lam1 = float(np.linalg.eigvalsh(G)[0])
    # clip eigensolver noise on rank-deficient panels
    if abs(lam1) < 1e-12:
        lam1 = 0.0
    return G, max(lam1, 0.0)


def recovery_bound(d: int, T: int, eps: float, m_g: float, lambda1: float) -> float:
    """Per-node l2 recovery radius (1 / (m_g lambda1)) sqrt(d log(2d/eps) / T)."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    if m_g <= 0:
        raise ValueError("m_g must be > 0")
    if lambda1 <= 0:
        raise ValueError("the bound is undefined for a singular covariate Gram matrix")
    return float(np.sqrt(d * np.log(2 * d / eps) / T) / (m_g * lambda1))


def concentration_radius(d: int, T: int, eps: float) -> float:
    """High-probability sup-norm radius of the field at the ground truth."""
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    return float(np.sqrt(np.log(2 * d / eps) / T))


def concentration_check(panels: Iterable[TimeSeriesPanel], theta_star, link,
                        eps: float):
    """Fraction of (trial, node) pairs with ||F_T(theta*)||_inf within the radius."""
    link = get_link(link)
    flags = []
    for panel in panels:
        W = design_matrix(panel)
        radius = concentration_radius(theta_star.dim, panel.horizon, eps)
        for i in range(panel.n_nodes):
            F = empirical_field(theta_star.column(i), panel, link, design=W,
                                node=i, enforce_domain=False)
            flags.append(bool(np.abs(F).max() <= radius))
    coverage = float(np.mean(flags)) if flags else float("nan")
    return coverage, flags
