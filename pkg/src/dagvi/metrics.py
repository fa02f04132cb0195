"""Structure- and weight-recovery metrics."""
from __future__ import annotations

import numpy as np

from .graphs import DEFAULT_EDGE_EPS


def binarize(A: np.ndarray, edge_eps: float = DEFAULT_EDGE_EPS) -> np.ndarray:
    """0/1 adjacency: entry 1 iff the weight is strictly above edge_eps."""
    return (np.asarray(A) > edge_eps).astype(np.int8)


def shd(A_hat: np.ndarray, A_true: np.ndarray,
        edge_eps: float = DEFAULT_EDGE_EPS, reversal_cost: int = 2) -> int:
    """Structural Hamming distance between binarized adjacency matrices.

    Entrywise Hamming count by default, so a reversed edge costs 2; pass
    reversal_cost=1 for the convention that counts a reversal once.
    """
    A_hat, A_true = np.asarray(A_hat), np.asarray(A_true)
    if A_hat.shape != A_true.shape:
        raise ValueError(f"shape mismatch: {A_hat.shape} vs {A_true.shape}")
    if reversal_cost not in (1, 2):
        raise ValueError("reversal_cost must be 1 or 2")
    B_hat, B_true = binarize(A_hat, edge_eps), binarize(A_true, edge_eps)
    dist = int((B_hat != B_true).sum())
    if reversal_cost == 1:
        reversed_pairs = ((B_hat == 1) & (B_true == 0)
                          & (B_hat.T == 0) & (B_true.T == 1))
        np.fill_diagonal(reversed_pairs, False)
        dist -= int(reversed_pairs.sum())
    return dist


def a_err(A_hat: np.ndarray, A_true: np.ndarray) -> float:
    """Frobenius norm of the adjacency estimation error."""
    A_hat, A_true = np.asarray(A_hat, float), np.asarray(A_true, float)
    if A_hat.shape != A_true.shape:
        raise ValueError(f"shape mismatch: {A_hat.shape} vs {A_true.shape}")
    return float(np.linalg.norm(A_hat - A_true))


def nu_err(nu_hat: np.ndarray, nu_true: np.ndarray) -> float:
    """l2 norm of the background-intensity estimation error."""
    nu_hat, nu_true = np.asarray(nu_hat, float), np.asarray(nu_true, float)
    if nu_hat.shape != nu_true.shape:
        raise ValueError(f"shape mismatch: {nu_hat.shape} vs {nu_true.shape}")
    return float(np.linalg.norm(nu_hat - nu_true))
