"""Proportional-fair RB assignment for broadband users.

``solve_fractional`` maximizes the sum of log mean rates over the relaxed
assignment polytope (per-RB user shares in [0,1] summing to at most 1) by
projected gradient ascent; ``round_to_binary`` turns the fractional solution
into a whole-RB assignment by greedy largest-remaining-claim rounding.
"""

from __future__ import annotations

import logging

import numpy as np

from .model import (
    ChannelRealization,
    PunctureWeights,
    SchedulingMatrix,
    SystemConfig,
    embb_spectral_eff,
)
from .projections import project_rows_capped_simplex

logger = logging.getLogger(__name__)

_ARMIJO = 1e-4
_REL_TOL = 1e-9
_TOL_WINDOW = 10


def rate_coefficients(
    cfg: SystemConfig,
    chan: ChannelRealization,
    weights: PunctureWeights | np.ndarray | None = None,
) -> np.ndarray:
    """Per-user mean rate per Hz of assigned bandwidth: spectral efficiency
    discounted by the expected puncturing loss."""
    eff = embb_spectral_eff(cfg, chan)
    if weights is None:
        return eff
    w = weights.weights if isinstance(weights, PunctureWeights) else np.asarray(weights)
    return eff * (1.0 - w * cfg.expected_load_fraction())


def active_user_mask(
    cfg: SystemConfig,
    chan: ChannelRealization,
    weights: PunctureWeights | np.ndarray | None = None,
) -> np.ndarray:
    """Users with a positive rate coefficient; the rest cannot appear inside a
    log objective and are excluded with zero bandwidth."""
    return rate_coefficients(cfg, chan, weights) > 0.0


def proportional_fair_objective(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: PunctureWeights | np.ndarray | None = None,
) -> float:
    """Sum of log mean rates over active users (natural log)."""
    coeff = rate_coefficients(cfg, chan, weights)
    active = coeff > 0.0
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    vals = phi[active] * coeff[active]
    if np.any(vals <= 0.0):
        return -np.inf
    return float(np.log(vals).sum())


def solve_fractional(
    cfg: SystemConfig,
    chan: ChannelRealization,
    weights: PunctureWeights | np.ndarray | None = None,
    max_iters: int = 2000,
) -> SchedulingMatrix:
    """Fractional proportional-fair assignment via projected gradient ascent.

    Ascent runs with Armijo backtracking from unit steps and stops once the
    objective improves by less than a 1e-9 relative margin over 10 iterations.
    Degenerate users (zero gain, or fully punctured in expectation) are
    excluded and logged rather than crashing the log objective.
    """
    active = active_user_mask(cfg, chan, weights)
    n_active = int(active.sum())
    if n_active < cfg.num_embb_users:
        logger.warning(
            "excluding %d degenerate user(s) from scheduling: %s",
            cfg.num_embb_users - n_active,
            np.flatnonzero(~active).tolist(),
        )
    entries = np.zeros((cfg.num_rbs, cfg.num_embb_users))
    if n_active == 0:
        return SchedulingMatrix(entries)
    # neutral interior start: equal small share for every active user
    entries[:, active] = 1.0 / (2.0 * n_active)

    f_b = cfg.rb_bandwidth

    def objective(e: np.ndarray) -> float:
        phi = f_b @ e
        return float(np.log(phi[active]).sum())

    obj = objective(entries)
    history = [obj]
    for _ in range(max_iters):
        phi = f_b @ entries
        grad = np.zeros_like(entries)
        grad[:, active] = f_b[:, None] / phi[active][None, :]
        step = 1.0
        improved = False
        while step >= 1e-14:
            trial = project_rows_capped_simplex(entries + step * grad)
            trial[:, ~active] = 0.0
            new_obj = objective(trial)
            gain = float((grad * (trial - entries)).sum())
            if new_obj >= obj + _ARMIJO * gain:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        entries, obj = trial, new_obj
        history.append(obj)
        if len(history) > _TOL_WINDOW:
            if obj - history[-1 - _TOL_WINDOW] < _REL_TOL * max(1.0, abs(obj)):
                break
    return SchedulingMatrix(entries)


def round_to_binary(frac: SchedulingMatrix, cfg: SystemConfig) -> SchedulingMatrix:
    """Assign each RB wholly to one user by greedy rounding.

    RBs are visited in descending bandwidth order; each goes to the user with
    the largest remaining fractional bandwidth claim among users holding a
    positive fractional share of that RB (an all-zero RB column stays
    unassigned). Ties break toward the lower user index. Per-user bandwidth
    lands within max(rb_bandwidth) of the fractional allocation.
    """
    f_b = cfg.rb_bandwidth
    claims = frac.user_bandwidth(f_b).astype(float).copy()
    entries = np.zeros_like(frac.entries)
    order = np.argsort(-f_b, kind="stable")
    for b in order:
        eligible = frac.entries[b] > 0.0
        if not np.any(eligible):
            continue
        masked = np.where(eligible, claims, -np.inf)
        winner = int(np.argmax(masked))
        entries[b, winner] = 1.0
        claims[winner] -= f_b[b]
    return SchedulingMatrix(entries)
