"""Bernoulli-process GLM for multivariate binary time series.

Defines the panel / parameter containers, the link functions, lag-window
covariate construction and forward simulation.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np


class FeasibilityError(ValueError):
    """Raised when parameters leave the feasible region of the chosen link."""


# ---------------------------------------------------------------------------
# Link functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkFunction:
    """A monotone link g mapping the linear predictor to a probability.

    ``domain_max`` is the upper bound of the linear predictor for which the
    link returns a valid probability (1.0 for the linear link, None when
    unconstrained).
    """

    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    domain_max: Optional[float] = None

    def derivative_bounds(self, x_max: float) -> tuple[float, float]:
        """Lower/upper bounds (m_g, M_g) of g' on [0, x_max]."""
        if x_max < 0:
            raise ValueError("x_max must be nonnegative")
        if self.kind == "linear":
            return 1.0, 1.0
        if self.kind == "exponential":
            return float(np.exp(-x_max)), 1.0
        if self.kind == "sigmoid":
            # g' = g(1-g) is maximal at 0 and decreasing on [0, x_max]
            s = 1.0 / (1.0 + np.exp(-x_max))
            return float(s * (1.0 - s)), 0.25
        raise ValueError(f"unknown link kind {self.kind!r}")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


LINKS = {
    "linear": LinkFunction(
        "linear",
        value=lambda x: np.asarray(x, dtype=float),
        derivative=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        domain_max=1.0,
    ),
    "exponential": LinkFunction(
        "exponential",
        value=lambda x: 1.0 - np.exp(-np.asarray(x, dtype=float)),
        derivative=lambda x: np.exp(-np.asarray(x, dtype=float)),
    ),
    "sigmoid": LinkFunction("sigmoid", value=_sigmoid,
                            derivative=lambda x: _sigmoid(x) * (1.0 - _sigmoid(x))),
}


def get_link(name: Union[str, LinkFunction]) -> LinkFunction:
    if isinstance(name, LinkFunction):
        return name
    try:
        return LINKS[name]
    except KeyError:
        raise ValueError(f"unknown link {name!r}; choose from {sorted(LINKS)}") from None


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------

def _check_binary(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a)
    if not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    return a.astype(np.int8)


@dataclass
class TimeSeriesPanel:
    """Binary events over ``n_nodes`` series: tau history columns plus T observed columns.

    ``history[:, k]`` holds the observations at time t = 1 - tau + k (so the
    last history column is t = 0); ``events[:, t-1]`` holds time t = 1..T.
    """

    history: np.ndarray  # (d1, tau)
    events: np.ndarray   # (d1, T)

    def __post_init__(self):
        self.history = _check_binary(self.history, "history")
        self.events = _check_binary(self.events, "events")
        if self.history.ndim != 2 or self.events.ndim != 2:
            raise ValueError("history and events must be 2-D")
        if self.history.shape[0] != self.events.shape[0]:
            raise ValueError("history and events disagree on the number of nodes")
        if self.history.shape[1] < 1 or self.events.shape[1] < 1:
            raise ValueError("need at least one history column and one event column")

    @property
    def n_nodes(self) -> int:
        return self.history.shape[0]

    @property
    def memory(self) -> int:
        return self.history.shape[1]

    @property
    def horizon(self) -> int:
        return self.events.shape[1]

    def observed(self, t: int) -> np.ndarray:
        """Observations at time t, with t in 1-tau .. T (history for t <= 0)."""
        if t < 1 - self.memory or t > self.horizon:
            raise IndexError(f"time {t} outside 1-{self.memory}..{self.horizon}")
        if t <= 0:
            return self.history[:, t + self.memory - 1]
        return self.events[:, t - 1]

    # -- CSV round trip ----------------------------------------------------
    def to_csv(self, path_or_buf) -> None:
        close = False
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            f = open(path_or_buf, "w", newline="")
            close = True
        else:
            f = path_or_buf
        try:
            writer = csv.writer(f)
            writer.writerow(["t"] + [f"node_{i + 1}" for i in range(self.n_nodes)])
            for t in range(1 - self.memory, self.horizon + 1):
                writer.writerow([t] + [int(v) for v in self.observed(t)])
        finally:
            if close:
                f.close()

    @classmethod
    def from_csv(cls, path_or_buf) -> "TimeSeriesPanel":
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, newline="") as f:
                return cls.from_csv(io.StringIO(f.read()))
        reader = csv.reader(path_or_buf)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError("panel CSV must start with a 't' header column")
        d1 = len(header) - 1
        rows = {}
        for row in reader:
            if not row:
                continue
            t = int(row[0])
            vals = [int(v) for v in row[1:]]
            if len(vals) != d1 or any(v not in (0, 1) for v in vals):
                raise ValueError(f"malformed panel row at t={t}")
            rows[t] = vals
        times = sorted(rows)
        tau = sum(1 for t in times if t <= 0)
        T = sum(1 for t in times if t >= 1)
        if tau == 0 or T == 0:
            raise ValueError("panel CSV needs history rows (t <= 0) and event rows (t >= 1)")
        if times != list(range(1 - tau, T + 1)):
            raise ValueError("panel CSV has missing or duplicated time steps")
        history = np.array([rows[t] for t in range(1 - tau, 1)], dtype=np.int8).T
        events = np.array([rows[t] for t in range(1, T + 1)], dtype=np.int8).T
        return cls(history=history, events=events)


@dataclass
class ParamMatrix:
    """Concatenated GLM parameter theta of shape (d, d1) with d = 1 + tau*d1.

    Column i stacks (nu_i, alpha_i11, ..., alpha_i1tau, ..., alpha_i d1 tau).
    The row of alpha_{ij,lag} is ``1 + j*tau + (lag - 1)`` with
    node j zero-based and lag one-based.
    """

    theta: np.ndarray  # (d, d1)
    memory: int

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 2:
            raise ValueError("theta must be 2-D")
        d, d1 = self.theta.shape
        if d != 1 + self.memory * d1:
            raise ValueError(f"theta has {d} rows; expected 1 + tau*d1 = {1 + self.memory * d1}")
        if (self.theta < 0).any():
            raise FeasibilityError("theta must be entrywise nonnegative")

    @property
    def n_nodes(self) -> int:
        return self.theta.shape[1]

    @property
    def dim(self) -> int:
        return self.theta.shape[0]

    @property
    def nu(self) -> np.ndarray:
        return self.theta[0]

    def row_index(self, j: int, lag: int) -> int:
        """Row of alpha_{. j lag}: node j zero-based, lag in 1..tau."""
        if not 0 <= j < self.n_nodes:
            raise IndexError(f"node {j} out of range")
        if not 1 <= lag <= self.memory:
            raise IndexError(f"lag {lag} out of range 1..{self.memory}")
        return 1 + j * self.memory + (lag - 1)

    def column(self, i: int) -> np.ndarray:
        return self.theta[:, i]

    @classmethod
    def zeros(cls, n_nodes: int, memory: int = 1) -> "ParamMatrix":
        return cls(np.zeros((1 + memory * n_nodes, n_nodes)), memory)

    @classmethod
    def from_parts(cls, nu: np.ndarray, lag_matrices: Sequence[np.ndarray]) -> "ParamMatrix":
        nu = np.asarray(nu, dtype=float)
        d1 = nu.shape[0]
        tau = len(lag_matrices)
        out = cls(np.zeros((1 + tau * d1, d1)), tau)
        out.theta[0] = nu
        for lag, A in enumerate(lag_matrices, start=1):
            set_lag_matrix(out, lag, A)
        return out


def lag_rows(params: ParamMatrix, lag: int) -> np.ndarray:
    """0-based theta rows addressing alpha_{. j lag} for j = 0..d1-1."""
    if not 1 <= lag <= params.memory:
        raise IndexError(f"lag {lag} out of range 1..{params.memory}")
    return 1 + np.arange(params.n_nodes) * params.memory + (lag - 1)


def extract_lag_matrix(params: ParamMatrix, lag: int) -> np.ndarray:
    """Adjacency at a lag: A[i, j] = alpha_{ij,lag} (row i = incoming weights)."""
    return params.theta[lag_rows(params, lag), :].T.copy()


def set_lag_matrix(params: ParamMatrix, lag: int, A: np.ndarray) -> None:
    A = np.asarray(A, dtype=float)
    d1 = params.n_nodes
    if A.shape != (d1, d1):
        raise ValueError(f"adjacency must be {d1}x{d1}")
    if (A < 0).any():
        raise FeasibilityError("adjacency must be nonnegative")
    params.theta[lag_rows(params, lag), :] = A.T


# ---------------------------------------------------------------------------
# Covariates and probabilities
# ---------------------------------------------------------------------------

def lag_window(panel: TimeSeriesPanel, t: int) -> np.ndarray:
    """Covariate vector (1, y_{t-1}^{(1)}, .., y_{t-tau}^{(1)}, .., y_{t-tau}^{(d1)})."""
    if not 1 <= t <= panel.horizon:
        raise IndexError(f"t={t} outside 1..{panel.horizon}")
    w = np.empty(1 + panel.memory * panel.n_nodes)
    w[0] = 1.0
    block = np.stack([panel.observed(t - ell) for ell in range(1, panel.memory + 1)], axis=1)
    w[1:] = block.reshape(-1)  # node-major, lag ascending within node
    return w


def design_matrix(panel: TimeSeriesPanel) -> np.ndarray:
    """All lag windows stacked column-wise: shape (d, T)."""
    d1, tau, T = panel.n_nodes, panel.memory, panel.horizon
    full = np.concatenate([panel.history, panel.events], axis=1).astype(float)  # (d1, tau+T)
    W = np.empty((1 + tau * d1, T))
    W[0] = 1.0
    for ell in range(1, tau + 1):
        # y_{t-ell} for t = 1..T lives at full[:, tau + t - 1 - ell]
        W[ell::tau] = full[:, tau - ell: tau - ell + T]
    return W


def event_probability(theta_i: np.ndarray, w: np.ndarray, link) -> float:
    """P(y = 1 | w) = g(w^T theta_i); checks link-domain feasibility."""
    link = get_link(link)
    theta_i = np.asarray(theta_i, dtype=float)
    if (theta_i < 0).any():
        raise FeasibilityError("theta must be nonnegative")
    x = float(np.dot(w, theta_i))
    if link.domain_max is not None and x > link.domain_max + 1e-12:
        raise FeasibilityError(
            f"linear predictor {x:.6g} exceeds the {link.kind} link domain bound {link.domain_max}")
    return float(link.value(x))


def simulate(params: ParamMatrix, link, horizon: int,
             seed=None, init: str = "bernoulli",
             history: Optional[np.ndarray] = None) -> TimeSeriesPanel:
    """Draw a panel from the GLM, sequentially in t.

    ``init`` picks the pre-history law: "bernoulli" samples each history entry
    as Bernoulli(g(nu_i)); "zeros" uses an all-zero history; "given" takes the
    ``history`` array as is.
    """
    link = get_link(link)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    rng = np.random.default_rng(seed)
    d1, tau = params.n_nodes, params.memory
    if init == "given":
        if history is None:
            raise ValueError("init='given' requires a history array")
        hist = _check_binary(history, "history").astype(np.int8)
        if hist.shape != (d1, tau):
            raise ValueError(f"history must be {d1}x{tau}")
    elif init == "zeros":
        hist = np.zeros((d1, tau), dtype=np.int8)
    elif init == "bernoulli":
        p0 = np.asarray(link.value(params.nu), dtype=float)
        _check_probabilities(p0, link)
        hist = (rng.random((d1, tau)) < p0[:, None]).astype(np.int8)
    else:
        raise ValueError(f"unknown init policy {init!r}")

    # rolling buffer: column k holds y at offset -(k+1) from the current step
    past = hist[:, ::-1].copy()  # past[:, 0] = most recent
    events = np.empty((d1, horizon), dtype=np.int8)
    w = np.empty(1 + tau * d1)
    w[0] = 1.0
    for t in range(horizon):
        w[1:] = past.reshape(-1)  # node-major, lag ascending: matches lag_window
        x = w @ params.theta
        if link.domain_max is not None and (x > link.domain_max + 1e-12).any():
            raise FeasibilityError(
                f"infeasible step at t={t + 1}: predictor max {x.max():.6g} "
                f"exceeds {link.domain_max}")
        p = np.asarray(link.value(x), dtype=float)
        _check_probabilities(p, link)
        y = (rng.random(d1) < p).astype(np.int8)
        events[:, t] = y
        past = np.concatenate([y[:, None], past[:, :-1]], axis=1)
    return TimeSeriesPanel(history=hist, events=events)


def _check_probabilities(p: np.ndarray, link: LinkFunction) -> None:
    if ((p < -1e-12) | (p > 1 + 1e-12)).any():
        raise FeasibilityError(f"{link.kind} link produced probability outside [0, 1]")
