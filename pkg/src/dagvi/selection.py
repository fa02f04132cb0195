"""Penalty-strength selection: sweep lambda, keep the smallest DAG-satisfying one."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fields import ConfigurationError, PenaltySpec
from .graphs import DEFAULT_EDGE_EPS, dagness, enumerate_cycles
from .metrics import a_err, nu_err, shd
from .model import ParamMatrix, TimeSeriesPanel, extract_lag_matrix, get_link
from .solver import DivergenceError, FitResult, SolverConfig, fit

DEFAULT_GRID = np.logspace(-5, 1, 40)
DEFAULT_THRES = 1e-4


@dataclass
class SweepPoint:
    lam: float
    evaluated: bool = False
    failed: bool = False
    h: Optional[float] = None
    field_norm: Optional[float] = None
    a_err: Optional[float] = None
    nu_err: Optional[float] = None
    shd: Optional[int] = None
    selected: bool = False


@dataclass
class SweepResult:
    selected_lam: float
    qualified: bool             # False when no grid point met the threshold
    points: list
    selected_fit: Optional[FitResult] = None
    pilot: Optional[ParamMatrix] = None

    def selected_point(self) -> SweepPoint:
        for p in self.points:
            if p.selected:
                return p
        raise ValueError("sweep has no selected point")


def _attach_metrics(point: SweepPoint, theta: ParamMatrix, truth,
                    edge_eps: float) -> None:
    if truth is None:
        return
    nu_true, mats = truth
    A_hat = extract_lag_matrix(theta, 1)
    point.a_err = a_err(A_hat, mats[0])
    point.nu_err = nu_err(theta.nu, nu_true)
    point.shd = shd(A_hat, mats[0], edge_eps=edge_eps)


def select_from_points(points: Sequence[SweepPoint], thres: float):
    """Smallest evaluated lambda with h <= thres, else the largest evaluated one."""
    for p in points:
        p.selected = False
    evaluated = [p for p in points if p.evaluated and not p.failed]
    if not evaluated:
        raise ConfigurationError("no sweep point evaluated successfully")
    for p in evaluated:
        if p.h <= thres:
            p.selected = True
            return p, True
    evaluated[-1].selected = True
    return evaluated[-1], False


def lambda_sweep(panel: TimeSeriesPanel, link, penalty_kind: str,
                 grid: Optional[Sequence[float]] = None,
                 thres: float = DEFAULT_THRES,
                 config: Optional[SolverConfig] = None, *,
                 floor: float = 1e-3, edge_eps: float = DEFAULT_EDGE_EPS,
                 pilot: Optional[ParamMatrix] = None,
                 truth=None, early_exit: bool = True,
                 keep_selected_fit: bool = True) -> SweepResult:
    """Fit along an ascending lambda grid and select by the DAG-ness rule.

    The pilot estimate feeding the adaptive penalties is the unpenalized fit;
    pass ``pilot`` to reuse one across sweeps. ``truth`` is an optional
    (nu, [A_lag]) pair enabling error metrics per grid point. With
    ``early_exit`` the sweep stops at the first qualifying lambda; disable it
    to trace the full metric trajectories.
    """
    link = get_link(link)
    grid = DEFAULT_GRID if grid is None else np.asarray(list(grid), dtype=float)
    if len(grid) == 0:
        raise ConfigurationError("lambda grid must be nonempty")
    if (np.diff(grid) < 0).any():
        raise ConfigurationError("lambda grid must be ascending")
    if thres <= 0:
        raise ConfigurationError("thres must be > 0")
    config = config or SolverConfig()

    if penalty_kind in ("adaptive_linear", "adaptive_l1") and pilot is None:
        pilot = fit(panel, link, PenaltySpec(), config).theta_hat
    cycles = enumerate_cycles(pilot, edge_eps) if penalty_kind == "adaptive_linear" else None

    points = [SweepPoint(lam=float(l)) for l in grid]
    fits = {}
    for idx, point in enumerate(points):
        spec = PenaltySpec(kind=penalty_kind, lam=point.lam, floor=floor,
                           cycles=cycles, pilot=pilot, edge_eps=edge_eps)
        try:
            result = fit(panel, link, spec, config)
        except DivergenceError:
            point.evaluated, point.failed = True, True
            continue
        point.evaluated = True
        theta = result.theta_hat
        point.h = dagness(extract_lag_matrix(theta, 1))
        point.field_norm = result.final_field_norm
        _attach_metrics(point, theta, truth, edge_eps)
        if keep_selected_fit:
            fits[idx] = result
        if early_exit and point.h <= thres:
            break

    selected, qualified = select_from_points(points, thres)
    sel_fit = fits.get(points.index(selected)) if keep_selected_fit else None
    return SweepResult(selected_lam=selected.lam, qualified=qualified,
                       points=points, selected_fit=sel_fit, pilot=pilot)


SWEEP_CSV_COLUMNS = ["lambda", "h", "A_err", "nu_err", "shd", "field_norm", "selected"]


def write_sweep_csv(path, points: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for p in points:
            if not p.evaluated:
                continue
            writer.writerow([
                repr(p.lam),
                "" if p.h is None else repr(p.h),
                "" if p.a_err is None else repr(p.a_err),
                "" if p.nu_err is None else repr(p.nu_err),
                "" if p.shd is None else p.shd,
                "" if p.field_norm is None else repr(p.field_norm),
                int(p.selected),
            ])
