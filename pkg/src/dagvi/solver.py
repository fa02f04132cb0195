"""Projected gradient descent on the (penalized) empirical vector field."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fields import PenaltySpec, penalty_gradient
from .graphs import dagness
from .model import (ParamMatrix, TimeSeriesPanel, design_matrix,
                    extract_lag_matrix, get_link)


class DivergenceError(RuntimeError):
    """An iterate blew up; usually a mis-scaled penalty strength."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(message or f"solver diverged at iteration {iteration}")


@dataclass
class SolverConfig:
    initial_lr: float = 5e-3
    halve_every: int = 2000
    total_iters: int = 6000
    convergence_tol: Optional[float] = None  # early stop on step norm when set
    init: str = "zeros"                      # "zeros" | "uniform" | "warm"
    init_range: tuple = (0.0, 0.1)
    warm_start: Optional[ParamMatrix] = None
    init_seed: Optional[int] = None
    track_trajectory: bool = False
    divergence_limit: float = 1e6

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be > 0")
        if self.total_iters < 1:
            raise ValueError("total_iters must be >= 1")

    def learning_rate(self, k: int) -> float:
        return self.initial_lr * 0.5 ** (k // self.halve_every)

    def to_dict(self) -> dict:
        return {
            "initial_lr": self.initial_lr,
            "halve_every": self.halve_every,
            "total_iters": self.total_iters,
            "convergence_tol": self.convergence_tol,
            "init": self.init,
        }


@dataclass
class FitResult:
    theta_hat: ParamMatrix
    iterations_run: int
    final_field_norm: float
    trajectory: Optional[list] = None
    config: Optional[SolverConfig] = None

    def to_json(self, path) -> None:
        payload = {
            "theta_hat": self.theta_hat.theta.tolist(),
            "tau": self.theta_hat.memory,
            "iterations": self.iterations_run,
            "final_field_norm": self.final_field_norm,
            "config": self.config.to_dict() if self.config else None,
        }
        with open(path, "w") as f:
            json.dump(payload, f)

    @classmethod
    def from_json(cls, path) -> "FitResult":
        with open(path) as f:
            payload = json.load(f)
        theta = ParamMatrix(np.asarray(payload["theta_hat"], dtype=float),
                            payload["tau"])
        return cls(theta_hat=theta, iterations_run=payload["iterations"],
                   final_field_norm=payload["final_field_norm"])


def project(theta: np.ndarray) -> np.ndarray:
    """Relaxed projection onto the feasible region: clip negatives to zero."""
    return np.maximum(np.asarray(theta, dtype=float), 0.0)


def _initial_theta(config: SolverConfig, d: int, d1: int, tau: int) -> np.ndarray:
    if config.init == "zeros":
        return np.zeros((d, d1))
    if config.init == "uniform":
        rng = np.random.default_rng(config.init_seed)
        lo, hi = config.init_range
        return rng.uniform(lo, hi, size=(d, d1))
    if config.init == "warm":
        if config.warm_start is None:
            raise ValueError("init='warm' requires warm_start")
        ws = config.warm_start
        if ws.theta.shape != (d, d1) or ws.memory != tau:
            raise ValueError("warm_start has the wrong shape")
        return ws.theta.copy()
    raise ValueError(f"unknown init {config.init!r}")


def fit(panel: TimeSeriesPanel, link, penalty: Optional[PenaltySpec] = None,
        config: Optional[SolverConfig] = None) -> FitResult:
    """Run PGD: theta <- clip(theta - lr_k * field(theta), 0).

    The linear-link upper domain constraint is relaxed during fitting (the
    predictor is treated as a score); the iterates stay on the nonnegative
    orthant through the projection.
    """
    link = get_link(link)
    penalty = penalty or PenaltySpec()
    penalty.validate()
    config = config or SolverConfig()
    d1, tau, T = panel.n_nodes, panel.memory, panel.horizon
    d = 1 + tau * d1

    W = design_matrix(panel)
    Y = panel.events.T.astype(float)
    linear = link.kind == "linear"
    if linear:
        gram = W @ W.T / T
        target = W @ Y / T

    def data_field(th: np.ndarray) -> np.ndarray:
        if linear:
            return gram @ th - target
        return W @ (np.asarray(link.value(W.T @ th)) - Y) / T

    constant_pen = penalty.kind != "dag"
    wrap = ParamMatrix(np.zeros((d, d1)), tau)  # reused view holder

    def full_field(th: np.ndarray, pen_const) -> np.ndarray:
        F = data_field(th)
        if pen_const is not None:
            return F + pen_const
        wrap.theta = th
        return F + penalty_gradient(penalty, wrap)

    pen_const = None
    if constant_pen:
        pen_const = penalty_gradient(penalty, ParamMatrix(np.zeros((d, d1)), tau))

    theta = project(_initial_theta(config, d, d1, tau))
    trajectory = [] if config.track_trajectory else None
    iterations = 0
    for k in range(config.total_iters):
        F = full_field(theta, pen_const)
        if not np.isfinite(F).all():
            raise DivergenceError(k, f"non-finite field at iteration {k}")
        lr = config.learning_rate(k)
        new = project(theta - lr * F)
        if np.abs(new).max() > config.divergence_limit:
            raise DivergenceError(k, f"iterate magnitude exceeded "
                                     f"{config.divergence_limit:g} at iteration {k}")
        step = float(np.linalg.norm(new - theta))
        theta = new
        iterations = k + 1
        if trajectory is not None:
            hval = dagness(theta[1:].T) if tau == 1 else None
            trajectory.append({"iter": k, "lr": lr, "step_norm": step,
                               "field_norm": float(np.linalg.norm(F)),
                               "h": hval})
        if config.convergence_tol is not None and step < config.convergence_tol:
            break

    theta_hat = ParamMatrix(theta, tau)
    final_norm = float(np.linalg.norm(full_field(theta, pen_const)))
    return FitResult(theta_hat=theta_hat, iterations_run=iterations,
                     final_field_norm=final_norm, trajectory=trajectory,
                     config=config)


def fit_decoupled(panel: TimeSeriesPanel, link, config: Optional[SolverConfig] = None) -> FitResult:
    """Unpenalized fit solved node by node (the columns decouple)."""
    link = get_link(link)
    config = config or SolverConfig()
    d1, tau, T = panel.n_nodes, panel.memory, panel.horizon
    d = 1 + tau * d1
    W = design_matrix(panel)
    linear = link.kind == "linear"
    if linear:
        gram = W @ W.T / T

    theta0 = project(_initial_theta(config, d, d1, tau))
    theta = np.empty((d, d1))
    total_norm_sq = 0.0
    iterations = 0
    for i in range(d1):
        y = panel.events[i].astype(float)
        if linear:
            b = W @ y / T
            field = lambda v: gram @ v - b
        else:
            field = lambda v: W @ (np.asarray(link.value(W.T @ v)) - y) / T
        v = theta0[:, i].copy()
        for k in range(config.total_iters):
            F = field(v)
            if not np.isfinite(F).all():
                raise DivergenceError(k, f"non-finite field at iteration {k} (node {i})")
            new = np.maximum(v - config.learning_rate(k) * F, 0.0)
            if np.abs(new).max() > config.divergence_limit:
                raise DivergenceError(k)
            step = float(np.linalg.norm(new - v))
            v = new
            iterations = max(iterations, k + 1)
            if config.convergence_tol is not None and step < config.convergence_tol:
                break
        theta[:, i] = v
        total_norm_sq += float(np.linalg.norm(field(v))) ** 2
    return FitResult(theta_hat=ParamMatrix(theta, tau), iterations_run=iterations,
                     final_field_norm=total_norm_sq ** 0.5, config=config)
