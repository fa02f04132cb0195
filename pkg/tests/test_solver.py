"""Projected gradient descent solver."""
import numpy as np
import pytest

from dagvi import (DivergenceError, ParamMatrix, PenaltySpec, SolverConfig,
                   fit, fit_decoupled, project, simulate)
from dagvi.model import design_matrix
from dagvi.theory import gram_matrix, recovery_bound


def _dense_truth(d1=3, lo=0.02, hi=0.1, seed=0):
    """Strictly positive parameters (interior optimum for the linear link)."""
    r = np.random.default_rng(seed)
    nu = r.uniform(0.1, 0.2, size=d1)
    A = r.uniform(lo, hi, size=(d1, d1))
    return ParamMatrix.from_parts(nu, [A])


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def test_project_keeps_nonnegative(rng):
    theta = rng.uniform(0, 1, (4, 3))
    assert np.array_equal(project(theta), theta)


def test_project_clips_single_entry():
    theta = np.array([[0.5, -0.2], [0.1, 0.3]])
    out = project(theta)
    assert out[0, 1] == 0.0
    assert out[0, 0] == 0.5 and out[1, 0] == 0.1 and out[1, 1] == 0.3


def test_project_idempotent(rng):
    theta = rng.normal(size=(5, 4))
    assert np.array_equal(project(project(theta)), project(theta))


# ---------------------------------------------------------------------------
# solver configuration
# ---------------------------------------------------------------------------

def test_learning_rate_schedule():
    cfg = SolverConfig(initial_lr=5e-3, halve_every=2000, total_iters=6000)
    assert cfg.learning_rate(0) == 5e-3
    assert cfg.learning_rate(1999) == 5e-3
    assert cfg.learning_rate(2000) == 2.5e-3
    assert cfg.learning_rate(4000) == 1.25e-3


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        SolverConfig(initial_lr=0.0)
    with pytest.raises(ValueError):
        SolverConfig(total_iters=0)


# ---------------------------------------------------------------------------
# unpenalized fits
# ---------------------------------------------------------------------------

def test_linear_fit_matches_closed_form():
    """PGD with an interior optimum equals the direct linear solve."""
    truth = _dense_truth()
    panel = simulate(truth, "linear", 5000, seed=1)
    W = design_matrix(panel)
    T = panel.horizon
    gram = W @ W.T / T
    target = W @ panel.events.T.astype(float) / T
    closed = np.linalg.solve(gram, target)
    assert (closed > 0).all()  # interior: the orthant constraint is inactive

    # constant step size, run to convergence
    cfg = SolverConfig(initial_lr=0.2, halve_every=10 ** 9, total_iters=60000,
                       convergence_tol=1e-12)
    res = fit(panel, "linear", config=cfg)
    assert np.abs(res.theta_hat.theta - closed).max() <= 1e-4


def test_zero_event_panel_exponential_fit_is_zero():
    p = ParamMatrix.zeros(3)
    panel = simulate(p, "exponential", 300, seed=0)
    res = fit(panel, "exponential")
    assert np.abs(res.theta_hat.theta).max() <= 1e-3


def test_warm_start_at_truth_stays_within_recovery_bound():
    truth = _dense_truth(d1=3, seed=4)
    panel = simulate(truth, "linear", 10 ** 5, seed=5)
    _, lam1 = gram_matrix(panel)
    bound = recovery_bound(d=truth.dim, T=panel.horizon, eps=0.05,
                           m_g=1.0, lambda1=lam1)
    cfg = SolverConfig(init="warm", warm_start=truth)
    res = fit(panel, "linear", config=cfg)
    for i in range(truth.n_nodes):
        err = np.linalg.norm(res.theta_hat.column(i) - truth.column(i))
        assert err <= bound


def test_random_inits_agree(small_panel):
    """The monotone field has a unique solution: inits must not matter."""
    cfg_a = SolverConfig(init="uniform", init_seed=1, initial_lr=0.05,
                         halve_every=10 ** 9, total_iters=60000)
    cfg_b = SolverConfig(init="uniform", init_seed=2, initial_lr=0.05,
                         halve_every=10 ** 9, total_iters=60000)
    a = fit(small_panel, "exponential", config=cfg_a)
    b = fit(small_panel, "exponential", config=cfg_b)
    assert np.abs(a.theta_hat.theta - b.theta_hat.theta).max() <= 1e-3


def test_fit_decoupled_equals_joint(small_panel):
    joint = fit(small_panel, "exponential")
    percol = fit_decoupled(small_panel, "exponential")
    assert np.allclose(joint.theta_hat.theta, percol.theta_hat.theta,
                       atol=1e-12)
    assert joint.final_field_norm == pytest.approx(percol.final_field_norm,
                                                   rel=1e-9)


def test_error_decreases_with_horizon():
    """Average distance to the truth shrinks as T grows."""
    errs = {T: [] for T in (250, 500, 1000)}
    for seed in range(5):
        truth = _dense_truth(d1=4, seed=seed + 10)
        for T in errs:
            panel = simulate(truth, "linear", T, seed=seed)
            res = fit(panel, "linear")
            errs[T].append(np.linalg.norm(res.theta_hat.theta - truth.theta))
    means = [np.mean(errs[T]) for T in (250, 500, 1000)]
    assert means[0] > means[2]


# ---------------------------------------------------------------------------
# penalized fits, divergence and bookkeeping
# ---------------------------------------------------------------------------

def test_l1_penalty_shrinks_towards_zero(small_panel):
    free = fit(small_panel, "exponential")
    pen = fit(small_panel, "exponential", PenaltySpec(kind="l1", lam=0.05))
    assert pen.theta_hat.theta[1:].sum() < free.theta_hat.theta[1:].sum()


def test_huge_learning_rate_diverges(small_panel):
    cfg = SolverConfig(initial_lr=1e9, total_iters=200)
    with pytest.raises(DivergenceError):
        fit(small_panel, "exponential",
            PenaltySpec(kind="l1", lam=1e6), config=cfg)


def test_convergence_tol_stops_early():
    # a silent panel converges to zero immediately; early stop must trigger
    panel = simulate(ParamMatrix.zeros(3), "exponential", 100, seed=0)
    cfg = SolverConfig(convergence_tol=1e-10, total_iters=6000)
    res = fit(panel, "exponential", config=cfg)
    assert res.iterations_run < 6000


def test_trajectory_tracking(small_panel):
    cfg = SolverConfig(total_iters=50, track_trajectory=True)
    res = fit(small_panel, "exponential", config=cfg)
    assert len(res.trajectory) == 50
    assert {"iter", "lr", "step_norm", "field_norm", "h"} <= set(res.trajectory[0])


def test_fit_result_json_roundtrip(tmp_path, small_panel):
    res = fit(small_panel, "exponential", config=SolverConfig(total_iters=100))
    path = tmp_path / "fit.json"
    res.to_json(path)
    back = res.from_json(path)
    assert np.allclose(back.theta_hat.theta, res.theta_hat.theta)
    assert back.iterations_run == res.iterations_run
