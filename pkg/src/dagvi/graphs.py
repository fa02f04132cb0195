"""Graph machinery: DAG-ness functional, cycle enumeration, random DAG ground truth."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import ParamMatrix, extract_lag_matrix

DEFAULT_EDGE_EPS = 1e-3


class GenerationError(RuntimeError):
    """Random ground-truth generation exhausted its retry budget."""


def matrix_exp(A: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Dense matrix exponential by scaling-and-squaring a truncated series."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix_exp needs a square matrix, got shape {A.shape}")
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    s = int(max(0, np.ceil(np.log2(norm)))) if norm > 1 else 0
    B = A / (2.0 ** s)
    E = np.eye(n) + B
    term = B.copy()
    k = 1
    while np.abs(term).max() > tol and k < 64:
        k += 1
        term = term @ B / k
        E += term
    for _ in range(s):
        E = E @ E
    return E


def dagness(A: np.ndarray) -> float:
    """DAG-ness h(A) = tr(e^A) - d1; zero iff the weighted digraph is acyclic."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"dagness needs a square matrix, got shape {A.shape}")
    if (A < 0).any():
        raise ValueError("dagness is defined for nonnegative matrices")
    h = float(np.trace(matrix_exp(A)) - A.shape[0])
    return max(h, 0.0)


def dagness_grad(A: np.ndarray) -> np.ndarray:
    """Gradient of dagness: (e^A)^T."""
    A = np.asarray(A, dtype=float)
    if (A < 0).any():
        raise ValueError("dagness_grad is defined for nonnegative matrices")
    return matrix_exp(A).T


def has_cycle(A: np.ndarray, edge_eps: float = DEFAULT_EDGE_EPS) -> bool:
    """Depth-first search for a directed cycle among edges with weight > edge_eps.

    A[i, j] > eps means an edge j -> i (incoming-weight convention).
    """
    A = np.asarray(A)
    n = A.shape[0]
    children = [np.flatnonzero(A[:, j] > edge_eps) for j in range(n)]
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done
    for start in range(n):
        if color[start]:
            continue
        stack = [(start, iter(children[start]))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    return True
                if color[nxt] == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(children[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return False


# ---------------------------------------------------------------------------
# Cycle sets with adaptive strengths
# ---------------------------------------------------------------------------

@dataclass
class CycleSets:
    """Length-1/2/3 cycles detected in a pilot estimate, with per-cycle budgets.

    Node indices are zero-based. ``pairs`` holds (i, j) with i < j; ``triples``
    holds the rotation of each directed triangle whose first index is minimal
    (the two orientations of a triangle are distinct cycles). ``delta2`` and
    ``delta3`` map (lag, *cycle) to the adaptive constraint strength: the
    cycle-weight sum minus its smallest edge weight.
    """

    memory: int
    self_loops: dict = field(default_factory=dict)   # lag -> set[int]
    pairs: dict = field(default_factory=dict)        # lag -> set[(i, j)]
    triples: dict = field(default_factory=dict)      # lag -> set[(i, j, k)]
    delta2: dict = field(default_factory=dict)       # (lag, i, j) -> float
    delta3: dict = field(default_factory=dict)       # (lag, i, j, k) -> float
    pilot_alpha: list = field(default_factory=list)  # per-lag pilot adjacency

    def n_cycles(self) -> int:
        return sum(len(s) for s in self.self_loops.values()) \
            + sum(len(s) for s in self.pairs.values()) \
            + sum(len(s) for s in self.triples.values())


def _canonical_triple(i: int, j: int, k: int) -> tuple:
    rotations = [(i, j, k), (j, k, i), (k, i, j)]
    return min(rotations)


def enumerate_cycles(pilot: ParamMatrix, edge_eps: float = DEFAULT_EDGE_EPS) -> CycleSets:
    """Detect all length-1, 2, 3 cycles per lag in the pilot adjacency estimates."""
    out = CycleSets(memory=pilot.memory)
    d1 = pilot.n_nodes
    for lag in range(1, pilot.memory + 1):
        A = extract_lag_matrix(pilot, lag)
        out.pilot_alpha.append(A)
        loops = set(np.flatnonzero(np.diag(A) > edge_eps).tolist())
        pairs = set()
        triples = set()
        for i in range(d1):
            for j in range(i + 1, d1):
                if A[i, j] > edge_eps and A[j, i] > edge_eps:
                    pairs.add((i, j))
                    out.delta2[(lag, i, j)] = float(max(A[i, j], A[j, i]))
        for i in range(d1):
            for j in range(i + 1, d1):
                for k in range(j + 1, d1):
                    for (a, b, c) in ((i, j, k), (i, k, j)):
                        # cycle condition: alpha_ab, alpha_bc, alpha_ca all present
                        ws = (A[a, b], A[b, c], A[c, a])
                        if min(ws) > edge_eps:
                            trip = _canonical_triple(a, b, c)
                            triples.add(trip)
                            out.delta3[(lag, *trip)] = float(sum(ws) - min(ws))
        out.self_loops[lag] = loops
        out.pairs[lag] = pairs
        out.triples[lag] = triples
    return out


# ---------------------------------------------------------------------------
# Random DAG ground truth
# ---------------------------------------------------------------------------

def _dag_gradient_descent(A: np.ndarray, lr: float, iters: int, tol: float):
    """Shrink cycles by vanilla GD on dagness, clipping negatives each step."""
    A = A.copy()
    for _ in range(iters):
        E = matrix_exp(A)
        h = float(np.trace(E)) - A.shape[0]
        if h <= tol:
            return A, True
        A = np.maximum(A - lr * E.T, 0.0)
    return A, float(np.trace(matrix_exp(A))) - A.shape[0] <= tol


def generate_ground_truth(d1: int, tau: int = 1, sparsify_quantile: float = 0.95,
                          gd_lr: float = 0.5, gd_iters: int = 5000,
                          seed=None, dag_tol: float = 1e-10,
                          max_attempts: int = 20):
    """Random (nu, {A_lag}) ground truth with acyclic lag graphs.

    Draws nu and the lag matrices uniform on [0, 1], normalizes each node's
    parameter row (nu_i together with its incoming weights across all lags) to
    sum to one, zeroes all weights below the sparsify quantile, then drives
    each lag matrix to dagness <= dag_tol by gradient descent.  If descent
    stalls, the smallest surviving entry is zeroed and descent retried; a
    fresh draw is used if that also fails.  Row totals <= 1 keep the linear
    link feasible even when every parent fires.
    """
    if d1 < 2:
        raise ValueError("need d1 >= 2")
    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        nu = rng.uniform(size=d1)
        mats = [rng.uniform(size=(d1, d1)) for _ in range(tau)]
        totals = nu + sum(A.sum(axis=1) for A in mats)
        nu = nu / totals
        mats = [A / totals[:, None] for A in mats]
        cutoff = np.quantile(np.concatenate([A.ravel() for A in mats]), sparsify_quantile)
        mats = [np.where(A >= cutoff, A, 0.0) for A in mats]
        ok = True
        out = []
        for A in mats:
            converged = False
            for _ in range(10):
                A, converged = _dag_gradient_descent(A, gd_lr, gd_iters, dag_tol)
                if converged:
                    break
                pos = A[A > 0]
                if pos.size == 0:
                    converged = True
                    break
                A = np.where(A == pos.min(), 0.0, A)
            if not converged:
                ok = False
                break
            out.append(A)
        if ok:
            return nu, out
    raise GenerationError(f"could not generate an acyclic ground truth "
                          f"after {max_attempts} attempts (seed={seed!r})")


def save_ground_truth(path, nu: np.ndarray, lag_matrices, seed=None) -> None:
    payload = {
        "nu": np.asarray(nu).tolist(),
        "A": [np.asarray(A).tolist() for A in lag_matrices],
        "seed": seed,
        "d1": int(len(nu)),
        "tau": len(lag_matrices),
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def load_ground_truth(path):
    with open(path) as f:
        payload = json.load(f)
    nu = np.asarray(payload["nu"], dtype=float)
    mats = [np.asarray(A, dtype=float) for A in payload["A"]]
    return nu, mats
