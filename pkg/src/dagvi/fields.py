"""Empirical vector fields and their penalized variants.

The unpenalized field averages w * (g(w^T theta_i) - y) over time steps; the
penalized fields add the gradient of a cycle-discouraging penalty:
data-adaptive linear, continuous-DAG, l1 or adaptive l1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import DEFAULT_EDGE_EPS, CycleSets, matrix_exp
from .model import (FeasibilityError, ParamMatrix, TimeSeriesPanel,
                    design_matrix, extract_lag_matrix, get_link, lag_rows)

PENALTY_KINDS = ("none", "adaptive_linear", "dag", "l1", "adaptive_l1")


class ConfigurationError(ValueError):
    """A penalty is missing its prerequisites (cycle sets or pilot estimate)."""


@dataclass
class PenaltySpec:
    """Choice of penalty and its strength.

    ``lam`` is the overall penalty strength; ``floor`` is the small
    denominator used in place of vanishing pilot weights (adaptive penalties).
    """

    kind: str = "none"
    lam: float = 0.0
    floor: float = 1e-3
    cycles: Optional[CycleSets] = None
    pilot: Optional[ParamMatrix] = None
    edge_eps: float = DEFAULT_EDGE_EPS

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise ConfigurationError(
                f"unknown penalty kind {self.kind!r}; choose from {PENALTY_KINDS}")
        if self.lam < 0:
            raise ConfigurationError("lam must be >= 0")
        if self.floor <= 0:
            raise ConfigurationError("floor must be > 0")

    def validate(self) -> None:
        if self.kind == "adaptive_linear" and self.cycles is None:
            raise ConfigurationError("adaptive_linear penalty requires cycle sets")
        if self.kind == "adaptive_l1" and self.pilot is None:
            raise ConfigurationError("adaptive_l1 penalty requires a pilot estimate")


@dataclass
class FieldEval:
    """A field value split into its data part and additive penalty part."""

    value: np.ndarray
    data_part: np.ndarray
    penalty_part: np.ndarray


def empirical_field(theta_i: np.ndarray, panel: TimeSeriesPanel, link,
                    design: Optional[np.ndarray] = None, node: int = 0,
                    enforce_domain: bool = True) -> np.ndarray:
    """Per-node field (1/T) sum_t w_t (g(w_t^T theta_i) - y_t^(i))."""
    link = get_link(link)
    W = design_matrix(panel) if design is None else design
    x = W.T @ np.asarray(theta_i, dtype=float)
    if enforce_domain and link.domain_max is not None:
        if (x > link.domain_max + 1e-12).any():
            raise FeasibilityError(
                f"linear predictor exceeds the {link.kind} link domain bound")
    y = panel.events[node].astype(float)
    return W @ (np.asarray(link.value(x)) - y) / panel.horizon


def concatenated_field(theta: ParamMatrix, panel: TimeSeriesPanel, link,
                       design: Optional[np.ndarray] = None,
                       enforce_domain: bool = True) -> np.ndarray:
    """All per-node fields stacked column-wise into a (d, d1) matrix."""
    link = get_link(link)
    W = design_matrix(panel) if design is None else design
    X = W.T @ theta.theta
    if enforce_domain and link.domain_max is not None:
        if (X > link.domain_max + 1e-12).any():
            raise FeasibilityError(
                f"linear predictor exceeds the {link.kind} link domain bound")
    Y = panel.events.T.astype(float)
    return W @ (np.asarray(link.value(X)) - Y) / panel.horizon


# ---------------------------------------------------------------------------
# Penalty gradients
# ---------------------------------------------------------------------------

def adaptive_linear_penalty_matrix(cycles: CycleSets, n_nodes: int, lam: float,
                                   floor: float) -> np.ndarray:
    """Constant gradient of the data-adaptive linear penalty, theta layout."""
    tau = cycles.memory
    P = np.zeros((1 + tau * n_nodes, n_nodes))

    def row(j, lag):
        return 1 + j * tau + (lag - 1)

    for lag in range(1, tau + 1):
        A = cycles.pilot_alpha[lag - 1]
        loops = cycles.self_loops.get(lag, set())
        for i in range(n_nodes):
            denom = A[i, i] if i in loops else floor
            P[row(i, lag), i] += 1.0 / denom
        for (i, j) in cycles.pairs.get(lag, set()):
            d2 = cycles.delta2[(lag, i, j)]
            P[row(j, lag), i] += 1.0 / d2
            P[row(i, lag), j] += 1.0 / d2
        for (i, j, k) in cycles.triples.get(lag, set()):
            d3 = cycles.delta3[(lag, i, j, k)]
            P[row(j, lag), i] += 1.0 / d3
            P[row(k, lag), j] += 1.0 / d3
            P[row(i, lag), k] += 1.0 / d3
    return lam * P


def l1_penalty_matrix(n_nodes: int, memory: int, lam: float) -> np.ndarray:
    """l1 gradient on the nonnegative orthant: lam at every alpha position."""
    P = np.full((1 + memory * n_nodes, n_nodes), lam)
    P[0] = 0.0
    return P


def adaptive_l1_penalty_matrix(pilot: ParamMatrix, lam: float, floor: float,
                               edge_eps: float = DEFAULT_EDGE_EPS) -> np.ndarray:
    """Adaptive-l1 gradient: lam / pilot weight, floored at lam / floor."""
    alpha = pilot.theta[1:]
    P = np.empty_like(pilot.theta)
    P[0] = 0.0
    P[1:] = lam / np.where(alpha > edge_eps, alpha, floor)
    return P


def dag_penalty_matrix(theta: ParamMatrix, lam: float) -> np.ndarray:
    """Gradient of lam * dagness(A_1) embedded into the theta layout (tau = 1)."""
    if theta.memory != 1:
        raise ConfigurationError("the DAG penalty is defined for memory depth 1")
    A = extract_lag_matrix(theta, 1)
    P = np.zeros_like(theta.theta)
    P[1:] = lam * matrix_exp(A)
    return P


def penalty_gradient(spec: PenaltySpec, theta: ParamMatrix) -> np.ndarray:
    """Additive penalty part of the field at theta for the given spec."""
    spec.validate()
    if spec.kind == "none" or spec.lam == 0.0:
        return np.zeros_like(theta.theta)
    if spec.kind == "adaptive_linear":
        return adaptive_linear_penalty_matrix(spec.cycles, theta.n_nodes,
                                              spec.lam, spec.floor)
    if spec.kind == "l1":
        return l1_penalty_matrix(theta.n_nodes, theta.memory, spec.lam)
    if spec.kind == "adaptive_l1":
        return adaptive_l1_penalty_matrix(spec.pilot, spec.lam, spec.floor,
                                          spec.edge_eps)
    return dag_penalty_matrix(theta, spec.lam)


def penalized_field(theta: ParamMatrix, panel: TimeSeriesPanel, link,
                    spec: PenaltySpec, design: Optional[np.ndarray] = None,
                    enforce_domain: bool = True) -> FieldEval:
    """Concatenated field plus the penalty gradient, split for inspection."""
    data = concatenated_field(theta, panel, link, design=design,
                              enforce_domain=enforce_domain)
    pen = penalty_gradient(spec, theta)
    return FieldEval(value=data + pen, data_part=data, penalty_part=pen)
