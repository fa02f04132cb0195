"""Scikit-learn style front end for the penalized VI graph learner."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .fields import PenaltySpec
from .graphs import DEFAULT_EDGE_EPS, dagness
from .model import ParamMatrix, TimeSeriesPanel, extract_lag_matrix, get_link
from .selection import DEFAULT_THRES, lambda_sweep
from .solver import SolverConfig, fit as solve_fit


def as_panel(X, memory: int = 1) -> TimeSeriesPanel:
    """Coerce input into a panel.

    Accepts a TimeSeriesPanel, or a (memory + T, d1) binary array whose rows
    are time steps (the first ``memory`` rows are the pre-history).
    """
    if isinstance(X, TimeSeriesPanel):
        return X
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] <= memory:
        raise ValueError("expected a (memory + T, d1) array of time-step rows")
    return TimeSeriesPanel(history=X[:memory].T, events=X[memory:].T)


class DagLearner(BaseEstimator):
    """Learns a directed acyclic mutual-excitation graph from binary time series.

    Fits the Bernoulli-process GLM by projected gradient descent on a
    penalized empirical vector field.  With ``lam=None`` the penalty strength
    is selected as the smallest grid value whose fitted graph has
    DAG-ness <= ``thres``.

    Parameters mirror the solver and selection defaults; after ``fit`` the
    learned parameters live in ``theta_``, ``nu_``, ``adjacency_`` (lag-1
    matrix), ``lambda_`` and ``dagness_``.
    """

    def __init__(self, link: str = "exponential", penalty: str = "adaptive_linear",
                 lam: Optional[float] = None, thres: float = DEFAULT_THRES,
                 penalty_floor: float = 1e-3, edge_eps: float = DEFAULT_EDGE_EPS,
                 lambda_grid: Optional[Sequence[float]] = None, memory: int = 1,
                 initial_lr: float = 5e-3, halve_every: int = 2000,
                 total_iters: int = 6000):
        self.link = link
        self.penalty = penalty
        self.lam = lam
        self.thres = thres
        self.penalty_floor = penalty_floor
        self.edge_eps = edge_eps
        self.lambda_grid = lambda_grid
        self.memory = memory
        self.initial_lr = initial_lr
        self.halve_every = halve_every
        self.total_iters = total_iters

    def _solver_config(self) -> SolverConfig:
        return SolverConfig(initial_lr=self.initial_lr,
                            halve_every=self.halve_every,
                            total_iters=self.total_iters)

    def fit(self, X, y=None):
        panel = as_panel(X, self.memory)
        link = get_link(self.link)
        config = self._solver_config()

        if self.penalty == "none":
            result = solve_fit(panel, link, PenaltySpec(), config)
            self.lambda_ = 0.0
            self.sweep_points_ = None
        elif self.lam is not None:
            pilot = None
            spec = PenaltySpec(kind=self.penalty, lam=self.lam,
                               floor=self.penalty_floor, edge_eps=self.edge_eps)
            if self.penalty in ("adaptive_linear", "adaptive_l1"):
                pilot = solve_fit(panel, link, PenaltySpec(), config).theta_hat
                spec.pilot = pilot
                if self.penalty == "adaptive_linear":
                    from .graphs import enumerate_cycles
                    spec.cycles = enumerate_cycles(pilot, self.edge_eps)
            result = solve_fit(panel, link, spec, config)
            self.lambda_ = self.lam
            self.sweep_points_ = None
        else:
            sweep = lambda_sweep(panel, link, self.penalty,
                                 grid=self.lambda_grid, thres=self.thres,
                                 config=config, floor=self.penalty_floor,
                                 edge_eps=self.edge_eps)
            result = sweep.selected_fit
            self.lambda_ = sweep.selected_lam
            self.sweep_points_ = sweep.points
            self.sweep_qualified_ = sweep.qualified

        self.result_ = result
        self.theta_ = result.theta_hat
        self.nu_ = result.theta_hat.nu.copy()
        self.adjacency_ = extract_lag_matrix(result.theta_hat, 1)
        self.dagness_ = dagness(self.adjacency_)
        self.n_features_in_ = panel.n_nodes
        return self

    def lag_adjacency(self, lag: int = 1) -> np.ndarray:
        check_is_fitted(self, "theta_")
        return extract_lag_matrix(self.theta_, lag)

    def predict_proba(self, X) -> np.ndarray:
        """Next-step event probabilities g(w_t^T theta_i) for each t, node: (T, d1)."""
        check_is_fitted(self, "theta_")
        panel = as_panel(X, self.memory)
        link = get_link(self.link)
        from .model import design_matrix
        scores = design_matrix(panel).T @ self.theta_.theta
        return np.clip(np.asarray(link.value(scores), dtype=float), 0.0, 1.0)
