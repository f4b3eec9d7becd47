"""Puncturing-weight placement for a fixed RB assignment.

``solve_placement`` maximizes the sum of log mean broadband rates minus a
risk penalty on their total, subject to the relaxed reliability floor on the
mean URLLC rate (a linear constraint) and per-user box bounds. The two
auxiliary risk variables are eliminated analytically: minimizing
``gamma + excess/(1-alpha)`` subject to ``excess >= E[R] - gamma, excess >= 0``
pins ``gamma`` to the mean total rate and ``excess`` to zero, leaving a smooth
concave problem in the weights alone, solved by projected gradient ascent.

``solve_baseline1`` is the same problem with the risk penalty off;
``solve_baseline2`` maximizes the linear sum of mean rates instead, which a
greedy exchange argument solves exactly: puncture users in ascending order of
spectral efficiency until the reliability floor holds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ChannelRealization,
    PunctureWeights,
    SchedulingMatrix,
    SystemConfig,
    embb_spectral_eff,
    urllc_spectral_eff_mean,
)
from .projections import project_box_halfspace

_ARMIJO = 1e-4
_REL_TOL = 1e-9
_TOL_WINDOW = 10
_MAX_ITERS = 10_000


@dataclass
class PlacementSolution:
    """Solver output. When ``feasible`` is False even full puncturing cannot
    meet the reliability floor; ``weights`` then holds the full-puncture
    fallback and ``max_achievable_urllc_rate`` the best attainable mean rate.
    """

    weights: PunctureWeights
    feasible: bool
    objective: float
    max_achievable_urllc_rate: float
    iterations: int = 0


@dataclass
class _Problem:
    """Precomputed coefficients of the placement problem for one slot."""

    phi: np.ndarray            # Hz per user
    rate_per_hz: np.ndarray    # unpunctured bits/s/Hz per user
    load_fraction: float       # mean load / l_max; scales every weight
    floor: float               # required mean URLLC rate, bits/s
    floor_coeff: np.ndarray    # mean URLLC rate contributed per unit weight
    caps: np.ndarray           # per-user upper bounds keeping mean rates > 0
    active: np.ndarray         # users that appear in the log objective
    penalty: float             # risk weight / risk rate scale, 1/(bits/s)


def _build_problem(
    cfg: SystemConfig, chan: ChannelRealization, mat: SchedulingMatrix
) -> _Problem:
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    eff = embb_spectral_eff(cfg, chan)
    kappa = cfg.expected_load_fraction()
    caps = np.full(cfg.num_embb_users, 1.0)
    if kappa > 0:
        caps = np.minimum(1.0, (1.0 - 1e-12) / kappa)
        caps = np.broadcast_to(caps, phi.shape).copy()
    return _Problem(
        phi=phi,
        rate_per_hz=eff,
        load_fraction=kappa,
        floor=cfg.markov_rate_floor() if cfg.puncture_prob > 0 else 0.0,
        floor_coeff=phi * kappa * urllc_spectral_eff_mean(cfg, chan),
        caps=caps,
        active=(phi > 0.0) & (eff > 0.0),
        penalty=cfg.risk_weight / cfg.risk_rate_scale,
    )


def _mean_rates(prob: _Problem, w: np.ndarray) -> np.ndarray:
    return prob.phi * prob.rate_per_hz * (1.0 - prob.load_fraction * w)


def _objective(prob: _Problem, w: np.ndarray) -> float:
    rates = _mean_rates(prob, w)[prob.active]
    if np.any(rates <= 0.0):
        return -np.inf
    return float(np.log(rates).sum() - prob.penalty * rates.sum())


def _gradient(prob: _Problem, w: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(w)
    a = prob.active
    coeff = (prob.phi * prob.rate_per_hz)[a]
    grad[a] = prob.load_fraction * (prob.penalty * coeff - 1.0 / (1.0 - prob.load_fraction * w[a]))
    return grad


def placement_objective(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: PunctureWeights | np.ndarray,
) -> float:
    """Objective value of the placement problem at the given weights (risk
    variables at their pinned optimum)."""
    w = weights.weights if isinstance(weights, PunctureWeights) else np.asarray(weights)
    return _objective(_build_problem(cfg, chan, mat), w)


def _finish(prob: _Problem, w: np.ndarray, feasible: bool, iters: int) -> PlacementSolution:
    mean_total = float(_mean_rates(prob, w)[prob.active].sum())
    return PlacementSolution(
        weights=PunctureWeights(weights=w, var_level=mean_total, excess=0.0),
        feasible=feasible,
        objective=_objective(prob, w),
        max_achievable_urllc_rate=float(prob.floor_coeff @ prob.caps),
        iterations=iters,
    )


def solve_placement(
    cfg: SystemConfig, chan: ChannelRealization, mat: SchedulingMatrix
) -> PlacementSolution:
    """Risk-aware puncturing weights for a fixed assignment matrix.

    Projected gradient ascent from zero weights; every iterate is kept inside
    the box and above the reliability floor by exact projection, so the
    returned point is feasible to numerical precision.
    """
    prob = _build_problem(cfg, chan, mat)
    w = np.zeros(cfg.num_embb_users)
    if prob.floor <= 0.0:
        return _finish(prob, w, feasible=True, iters=0)
    if float(prob.floor_coeff @ prob.caps) < prob.floor:
        return _finish(prob, prob.caps.copy(), feasible=False, iters=0)

    w = project_box_halfspace(w, prob.floor_coeff, prob.floor, prob.caps)
    obj = _objective(prob, w)
    history = [obj]
    iters = 0
    for iters in range(1, _MAX_ITERS + 1):
        grad = _gradient(prob, w)
        step = 1.0
        improved = False
        while step >= 1e-14:
            trial = project_box_halfspace(
                w + step * grad, prob.floor_coeff, prob.floor, prob.caps
            )
            new_obj = _objective(prob, trial)
            gain = float(grad @ (trial - w))
            if new_obj >= obj + _ARMIJO * gain:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        w, obj = trial, new_obj
        history.append(obj)
        if len(history) > _TOL_WINDOW:
            if obj - history[-1 - _TOL_WINDOW] < _REL_TOL * max(1.0, abs(obj)):
                break
    return _finish(prob, w, feasible=True, iters=iters)


def solve_baseline1(
    cfg: SystemConfig, chan: ChannelRealization, mat: SchedulingMatrix
) -> PlacementSolution:
    """Placement without the risk penalty (risk weight zero): pure
    proportional fairness, which punctures everyone as little and as evenly
    as the reliability floor allows."""
    return solve_placement(replace(cfg, risk_weight=0.0), chan, mat)


def solve_baseline2(
    cfg: SystemConfig, chan: ChannelRealization, mat: SchedulingMatrix
) -> PlacementSolution:
    """Linear sum-rate-maximizing placement.

    Puncturing user u costs mean rate in proportion to its spectral
    efficiency but buys floor coverage in proportion to its bandwidth alone,
    so the exact optimum loads users in ascending spectral-efficiency order
    (low-rate users first), stable by index, until the floor is met.
    """
    prob = _build_problem(cfg, chan, mat)
    w = np.zeros(cfg.num_embb_users)
    if prob.floor <= 0.0:
        return _finish(prob, w, feasible=True, iters=0)
    if float(prob.floor_coeff @ prob.caps) < prob.floor:
        return _finish(prob, prob.caps.copy(), feasible=False, iters=0)

    need = prob.floor
    for u in np.argsort(prob.rate_per_hz, kind="stable"):
        if need <= 0.0:
            break
        if prob.floor_coeff[u] <= 0.0:
            continue
        w[u] = min(prob.caps[u], need / prob.floor_coeff[u])
        need -= prob.floor_coeff[u] * w[u]
    return _finish(prob, w, feasible=True, iters=0)
