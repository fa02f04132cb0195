"""Matrix exponential, DAG-ness, cycle enumeration, random ground truth."""
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dagvi import (ParamMatrix, dagness, dagness_grad, enumerate_cycles,
                   generate_ground_truth, has_cycle, matrix_exp)
from dagvi.graphs import load_ground_truth, save_ground_truth


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

def test_matrix_exp_zero_is_identity():
    assert np.array_equal(matrix_exp(np.zeros((4, 4))), np.eye(4))


def test_matrix_exp_nilpotent():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(matrix_exp(A), [[1.0, 1.0], [0.0, 1.0]])


def test_matrix_exp_symmetric_2x2():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    c, s = np.cosh(1.0), np.sinh(1.0)
    assert np.allclose(matrix_exp(A), [[c, s], [s, c]], atol=1e-12)


def test_matrix_exp_matches_scipy(rng):
    for _ in range(20):
        n = rng.integers(2, 9)
        A = rng.uniform(0, 1.5, size=(n, n))
        assert np.allclose(matrix_exp(A), scipy.linalg.expm(A), atol=1e-10)


def test_matrix_exp_large_norm_uses_scaling(rng):
    A = rng.uniform(0, 4.0, size=(6, 6))  # 1-norm well above 1
    assert np.allclose(matrix_exp(A), scipy.linalg.expm(A), rtol=1e-9)


def test_matrix_exp_rejects_nonsquare():
    with pytest.raises(ValueError):
        matrix_exp(np.zeros((2, 3)))


# ---------------------------------------------------------------------------
# dagness and its gradient
# ---------------------------------------------------------------------------

def test_dagness_triangular_is_zero(rng):
    A = np.triu(rng.uniform(0, 1, size=(6, 6)), k=1)
    assert dagness(A) == pytest.approx(0.0, abs=1e-10)


def test_dagness_two_cycle_value():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert dagness(A) == pytest.approx(2 * np.cosh(1.0) - 2, abs=1e-12)


def test_dagness_rejects_negative():
    with pytest.raises(ValueError):
        dagness(np.array([[0.0, -0.1], [0.0, 0.0]]))


def test_dagness_grad_closed_forms():
    assert np.array_equal(dagness_grad(np.zeros((3, 3))), np.eye(3))
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(dagness_grad(A), [[1.0, 0.0], [1.0, 1.0]])


def test_dagness_grad_matches_finite_difference(rng):
    A = rng.uniform(0, 0.2, size=(5, 5))
    G = dagness_grad(A)
    h = 1e-6
    for i in range(5):
        for j in range(5):
            Ap, Am = A.copy(), A.copy()
            Ap[i, j] += h
            Am[i, j] -= h
            fd = (np.trace(matrix_exp(Ap)) - np.trace(matrix_exp(Am))) / (2 * h)
            assert abs(G[i, j] - fd) <= 1e-6


def test_dagness_zero_iff_dfs_acyclic(rng):
    """dagness == 0 exactly on DFS-acyclic support patterns (500 random cases)."""
    agree = 0
    for _ in range(500):
        n = int(rng.integers(2, 9))
        A = rng.uniform(0, 1, size=(n, n)) * (rng.random((n, n)) < 0.3)
        np.fill_diagonal(A, A.diagonal() * (rng.random(n) < 0.1))
        acyclic_h = dagness(A) <= 1e-10
        acyclic_dfs = not has_cycle(A, edge_eps=0.0)
        agree += acyclic_h == acyclic_dfs
    assert agree == 500


def test_has_cycle_simple_cases():
    assert not has_cycle(np.array([[0.0, 0.5], [0.0, 0.0]]))
    assert has_cycle(np.array([[0.0, 0.5], [0.5, 0.0]]))
    assert has_cycle(np.diag([0.5, 0.0]))
    # weights at or below eps are not edges
    assert not has_cycle(np.full((2, 2), 1e-3), edge_eps=1e-3)


# ---------------------------------------------------------------------------
# cycle enumeration
# ---------------------------------------------------------------------------

def test_enumerate_cycles_zero_pilot_is_empty():
    cs = enumerate_cycles(ParamMatrix.zeros(4))
    assert cs.n_cycles() == 0


def test_enumerate_cycles_two_cycle():
    A = np.array([[0.0, 0.4], [0.1, 0.0]])
    cs = enumerate_cycles(ParamMatrix.from_parts(np.zeros(2), [A]))
    assert cs.pairs[1] == {(0, 1)}
    assert cs.delta2[(1, 0, 1)] == pytest.approx(0.4)
    assert not cs.self_loops[1] and not cs.triples[1]


def test_enumerate_cycles_triangle():
    # directed triangle 1 -> 2 -> 3 -> 1 with alpha_12=0.3, alpha_23=0.2, alpha_31=0.5
    A = np.zeros((3, 3))
    A[0, 1], A[1, 2], A[2, 0] = 0.3, 0.2, 0.5
    cs = enumerate_cycles(ParamMatrix.from_parts(np.zeros(3), [A]))
    assert len(cs.triples[1]) == 1
    trip = next(iter(cs.triples[1]))
    assert cs.delta3[(1, *trip)] == pytest.approx(1.0 - 0.2)
    assert not cs.pairs[1]


def test_enumerate_cycles_both_triangle_orientations():
    A = np.zeros((3, 3))
    A[0, 1], A[1, 2], A[2, 0] = 0.3, 0.2, 0.5   # one orientation
    A[1, 0], A[2, 1], A[0, 2] = 0.4, 0.6, 0.7   # the reverse orientation
    cs = enumerate_cycles(ParamMatrix.from_parts(np.zeros(3), [A]))
    assert len(cs.triples[1]) == 2
    # the reverse orientation also creates three 2-cycles
    assert len(cs.pairs[1]) == 3


def test_enumerate_cycles_self_loops_and_lags():
    A1 = np.diag([0.5, 0.0])
    A2 = np.array([[0.0, 0.2], [0.3, 0.0]])
    pilot = ParamMatrix.from_parts(np.zeros(2), [A1, A2])
    cs = enumerate_cycles(pilot)
    assert cs.self_loops[1] == {0} and cs.self_loops[2] == set()
    assert cs.pairs[2] == {(0, 1)}
    assert cs.delta2[(2, 0, 1)] == pytest.approx(0.3)


# ---------------------------------------------------------------------------
# random ground truth
# ---------------------------------------------------------------------------

def test_ground_truth_two_nodes_single_edge():
    nu, (A,) = generate_ground_truth(2, seed=0)
    assert (A > 0).sum() <= 1  # a 2-node DAG has at most one edge


def test_ground_truth_sparsity_and_dagness():
    nu, (A,) = generate_ground_truth(10, seed=42)
    assert dagness(A) <= 1e-10
    # 95th-percentile keep of 100 entries leaves about 5, minus any removed by descent
    assert 1 <= (A > 0).sum() <= 5


def test_ground_truth_acyclic_by_dfs_oracle():
    for seed in range(30):
        _, (A,) = generate_ground_truth(10, seed=seed)
        assert not has_cycle(A, edge_eps=0.0)


def test_ground_truth_linear_feasible():
    for seed in range(10):
        nu, mats = generate_ground_truth(8, seed=seed)
        totals = nu + sum(A.sum(axis=1) for A in mats)
        assert (totals <= 1.0 + 1e-9).all()
        assert (nu >= 0).all() and all((A >= 0).all() for A in mats)


def test_ground_truth_reproducible():
    a = generate_ground_truth(6, seed=7)
    b = generate_ground_truth(6, seed=7)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1][0], b[1][0])


def test_ground_truth_multi_lag():
    nu, mats = generate_ground_truth(5, tau=2, seed=3)
    assert len(mats) == 2
    for A in mats:
        assert dagness(A) <= 1e-10


def test_ground_truth_rejects_tiny_graph():
    with pytest.raises(ValueError):
        generate_ground_truth(1)


def test_ground_truth_json_roundtrip(tmp_path):
    nu, mats = generate_ground_truth(6, seed=11)
    path = tmp_path / "truth.json"
    save_ground_truth(path, nu, mats, seed=11)
    nu2, mats2 = load_ground_truth(path)
    assert np.allclose(nu, nu2)
    assert all(np.allclose(a, b) for a, b in zip(mats, mats2))


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, (4, 4), elements=st.floats(0, 2)))
def test_dagness_nonnegative_and_zero_on_diagfree_triangular(A):
    h = dagness(np.triu(A, k=1))
    assert h == pytest.approx(0.0, abs=1e-9)
    assert dagness(A) >= 0.0
