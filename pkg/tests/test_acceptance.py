"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The heavyweight Monte
Carlo sweeps are module-scoped fixtures shared by several criteria.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from urllc_slice.cli import main as cli_main
from urllc_slice.embb_scheduler import proportional_fair_objective, solve_fractional
from urllc_slice.model import (
    ChannelRealization,
    SchedulingMatrix,
    SystemConfig,
    embb_spectral_eff,
    expected_embb_rate,
    sample_channel,
    sample_mean_snr,
)
from urllc_slice.risk import EmpiricalDistribution, cvar_alpha, tail_objective, var_alpha
from urllc_slice.simulator import mean_snr_rng, run_simulation, slot_rng, sweep
from urllc_slice.urllc_placement import solve_baseline1, solve_baseline2, solve_placement

from test_urllc_placement import (
    coefficients,
    grid_search_3d,
    make_instance,
    objective_at,
)

SEED = 7
SLOTS = 1000
P_GRID = [round(0.1 * i, 1) for i in range(1, 10)]
EPS_GRID = [0.05, 0.1, 0.5]
DECILES = [0.1 * i for i in range(1, 10)]


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def ecdf_quantile(metrics, q: float) -> float:
    idx = int(np.searchsorted(metrics.ecdf_probs, q, side="left"))
    return float(metrics.ecdf_values[min(idx, metrics.ecdf_values.size - 1)])


def avg_ranks(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    ranks[order] = np.arange(v.size, dtype=float)
    _, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
    sums = np.zeros(counts.size)
    np.add.at(sums, inverse, ranks)
    return sums[inverse] / counts[inverse]


def spearman(x, y) -> float:
    rx, ry = avg_ranks(x) - avg_ranks(x).mean(), avg_ranks(y) - avg_ranks(y).mean()
    return float((rx * ry).sum() / math.sqrt((rx * rx).sum() * (ry * ry).sum()))


@pytest.fixture(scope="module")
def default_cfg():
    return SystemConfig()


@pytest.fixture(scope="module")
def p_sweep_results(default_cfg):
    t0 = time.perf_counter()
    results = {
        policy: sweep(default_cfg, policy, "p", P_GRID, SLOTS, SEED)
        for policy in ("proposed", "baseline1", "baseline2")
    }
    return results, time.perf_counter() - t0


@pytest.fixture(scope="module")
def eps_sweep_results(default_cfg):
    return {
        policy: sweep(default_cfg, policy, "epsilon", EPS_GRID, SLOTS, SEED)
        for policy in ("proposed", "baseline1")
    }


@pytest.fixture(scope="module")
def placement_oracle_instances():
    """25 seeded three-user placement instances with their cached grid optima
    and solve timings."""
    rng = np.random.default_rng(20260810)
    out = []
    make_instance(rng, num_users=3)  # warm-up draw, discarded
    for _ in range(25):
        cfg, chan, mat = make_instance(rng, num_users=3)
        t0 = time.perf_counter()
        sol = solve_placement(cfg, chan, mat)
        elapsed = time.perf_counter() - t0
        out.append((cfg, chan, mat, sol, grid_search_3d(cfg, chan, mat), elapsed))
    return out


def test_criterion_1_placement_matches_grid_oracle(placement_oracle_instances):
    worst_dev, worst_time = 0.0, 0.0
    for cfg, chan, mat, sol, grid_best, elapsed in placement_oracle_instances:
        obj = objective_at(cfg, chan, mat, sol.weights.weights)
        worst_dev = max(worst_dev, abs(obj - grid_best) / abs(grid_best))
        worst_time = max(worst_time, elapsed)
    ok = worst_dev <= 1e-4 and worst_time < 0.05
    report(
        1,
        ok,
        f"25 three-user solves vs 200^3 grid: worst relative deviation "
        f"{worst_dev:.2e} (<= 1e-4), worst solve {worst_time * 1e3:.2f} ms (< 50 ms)",
    )


def test_criterion_2_scheduler_matches_closed_form():
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        num_users = int(rng.integers(2, 9))
        num_rbs = int(rng.integers(num_users, 41))
        cfg = SystemConfig(
            num_embb_users=num_users,
            num_rbs=num_rbs,
            num_urllc_users=2,
            rb_bandwidth=float(rng.uniform(1e5, 5e5)),
            puncture_prob=float(rng.uniform(0.1, 0.9)),
        )
        chan = ChannelRealization(
            embb_gain=rng.uniform(0.5, 300, num_users), urllc_gain=np.full(2, 5.0)
        )
        weights = rng.uniform(0.0, 0.9, num_users)
        phi = solve_fractional(cfg, chan, weights).user_bandwidth(cfg.rb_bandwidth)
        target = cfg.total_bandwidth() / num_users
        worst = max(worst, float(np.max(np.abs(phi - target)) / target))
    beats = True
    for _ in range(5):
        num_users, num_rbs = 3, 7
        cfg = SystemConfig(
            num_embb_users=num_users,
            num_rbs=num_rbs,
            num_urllc_users=2,
            rb_bandwidth=rng.uniform(1e5, 2e6, num_rbs),
        )
        chan = ChannelRealization(
            embb_gain=rng.uniform(0.5, 300, num_users), urllc_gain=np.full(2, 5.0)
        )
        frac = solve_fractional(cfg, chan)
        solver_obj = proportional_fair_objective(cfg, chan, frac)
        entries = rng.random((10_000, num_rbs, num_users))
        entries /= entries.sum(axis=2, keepdims=True)
        entries *= rng.random((10_000, num_rbs, 1))
        phis = np.einsum("b,nbu->nu", cfg.rb_bandwidth, entries)
        objs = np.log(phis * embb_spectral_eff(cfg, chan)).sum(axis=1)
        beats = beats and solver_obj >= objs.max() - 1e-9
    ok = worst <= 1e-6 and beats
    report(
        2,
        ok,
        f"equal-share closed form on 100 uniform-bandwidth instances: worst "
        f"relative gap {worst:.2e} (<= 1e-6); beats 10^4 random matrices on 5 "
        f"heterogeneous instances: {beats}",
    )


def test_criterion_3_cvar_grid_equivalence_and_coherence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 300))
        k = int(rng.integers(1, n))
        alpha = k / n
        dist = EmpiricalDistribution(rng.uniform(0, 1000, n))
        grid = np.union1d(np.linspace(dist.samples[0], dist.samples[-1], 2001), dist.samples)
        grid_min = min(tail_objective(dist, g, alpha) for g in grid)
        scale = max(dist.range(), 1.0)
        worst = max(worst, abs(cvar_alpha(dist, alpha) - grid_min) / scale)
    coherent = True
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        samples = rng.uniform(-10, 50, n)
        alpha = float(rng.uniform(0.05, 0.95))
        dist = EmpiricalDistribution(samples)
        v, c = var_alpha(dist, alpha), cvar_alpha(dist, alpha)
        shift, scale_k = float(rng.uniform(-5, 5)), float(rng.uniform(0.1, 8))
        shifted = EmpiricalDistribution(samples + shift)
        scaled = EmpiricalDistribution(samples * scale_k)
        coherent = coherent and c >= v - 1e-12
        coherent = coherent and abs(var_alpha(shifted, alpha) - (v + shift)) <= 1e-9
        coherent = coherent and abs(cvar_alpha(shifted, alpha) - (c + shift)) <= 1e-9
        coherent = coherent and abs(var_alpha(scaled, alpha) - v * scale_k) <= 1e-9 * max(
            1.0, abs(v * scale_k)
        )
        coherent = coherent and abs(cvar_alpha(scaled, alpha) - c * scale_k) <= 1e-9 * max(
            1.0, abs(c * scale_k)
        )
    ok = worst <= 1e-6 and coherent
    report(
        3,
        ok,
        f"tail-average vs grid minimization on 100 sample sets: worst deviation "
        f"{worst:.2e} of range (<= 1e-6); coherence on 10^3 cases: {coherent}",
    )


def test_criterion_4_surrogate_collapse(placement_oracle_instances):
    solutions = [
        (cfg, chan, mat, sol) for cfg, chan, mat, sol, _, _ in placement_oracle_instances
    ]
    rng = np.random.default_rng(4)
    for _ in range(20):
        cfg, chan, mat = make_instance(rng, num_users=int(rng.integers(1, 6)))
        for solver in (solve_placement, solve_baseline1, solve_baseline2):
            solutions.append((cfg, chan, mat, solver(cfg, chan, mat)))
    worst_gamma, worst_excess = 0.0, 0.0
    for cfg, chan, mat, sol in solutions:
        mean_total = float(expected_embb_rate(cfg, chan, mat, sol.weights).sum())
        scale = max(1.0, abs(mean_total))
        worst_gamma = max(worst_gamma, abs(sol.weights.var_level - mean_total) / scale)
        worst_excess = max(worst_excess, abs(sol.weights.excess))
    ok = worst_gamma <= 1e-8 and worst_excess <= 1e-8
    report(
        4,
        ok,
        f"threshold pinned to the mean total rate on {len(solutions)} optima: "
        f"worst relative gap {worst_gamma:.2e}, worst excess {worst_excess:.2e} "
        f"(both <= 1e-8)",
    )


def test_criterion_5_reliability_trends(p_sweep_results):
    results, elapsed = p_sweep_results
    rel = {policy: [m.embb_reliability for m in results[policy]] for policy in results}
    slack = 0.01  # Monte Carlo tolerance on a [0,1] fraction over 10^4 pairs
    floor_ok = all(r >= 0.85 for r in rel["proposed"])
    order1_ok = all(
        a >= b - slack for a, b in zip(rel["proposed"], rel["baseline1"])
    )
    order2_ok = all(
        a >= b - slack for a, b in zip(rel["baseline1"], rel["baseline2"])
    )
    monotone_ok = all(
        rel[p][i + 1] <= rel[p][i] + slack
        for p in rel
        for i in range(len(P_GRID) - 1)
    )
    time_ok = elapsed < 300.0
    ok = floor_ok and order1_ok and order2_ok and monotone_ok and time_ok
    report(
        5,
        ok,
        f"reliability over p {P_GRID}: proposed min {min(rel['proposed']):.4f} "
        f"(>= 0.85: {floor_ok}), proposed >= baseline1: {order1_ok}, baseline1 >= "
        f"baseline2: {order2_ok}, nonincreasing in p (slack {slack}): {monotone_ok}, "
        f"sweep took {elapsed:.0f}s (< 300s: {time_ok})",
    )


def test_criterion_6_ecdf_shifts(p_sweep_results, eps_sweep_results):
    # right shift with a looser outage budget, checked at nine deciles
    eps_ok, eps_detail = True, []
    for policy, series in eps_sweep_results.items():
        for i in range(len(series) - 1):
            lo = np.array([ecdf_quantile(series[i], q) for q in DECILES])
            hi = np.array([ecdf_quantile(series[i + 1], q) for q in DECILES])
            eps_ok = eps_ok and bool(np.all(hi >= lo - 1e-9 * np.abs(lo)))
        gain = series[-1].mean_sum_rate - series[0].mean_sum_rate
        eps_detail.append(f"{policy} +{gain / 1e6:.1f} Mbps")
        eps_ok = eps_ok and gain > 0
    # left shift with heavier traffic, at well-separated levels 0.1/0.5/0.9
    p_points = [P_GRID.index(p) for p in (0.1, 0.5, 0.9)]
    p_ok, p_detail = True, []
    results, _ = p_sweep_results
    for policy, series in results.items():
        picked = [series[i] for i in p_points]
        for i in range(len(picked) - 1):
            hi = np.array([ecdf_quantile(picked[i], q) for q in DECILES])
            lo = np.array([ecdf_quantile(picked[i + 1], q) for q in DECILES])
            p_ok = p_ok and bool(np.all(lo <= hi + 1e-9 * np.abs(hi)))
        drop = picked[0].mean_sum_rate - picked[-1].mean_sum_rate
        p_detail.append(f"{policy} -{drop / 1e6:.1f} Mbps")
        p_ok = p_ok and drop > 0
    ok = eps_ok and p_ok
    report(
        6,
        ok,
        f"9-decile dominance: right shift over eps {EPS_GRID} ({', '.join(eps_detail)}): "
        f"{eps_ok}; left shift over p 0.1/0.5/0.9 ({', '.join(p_detail)}): {p_ok}",
    )


def test_criterion_7_puncturing_distribution(default_cfg, p_sweep_results):
    results, _ = p_sweep_results
    at_default = P_GRID.index(default_cfg.puncture_prob)
    m_proposed = results["proposed"][at_default]
    m_baseline2 = results["baseline2"][at_default]
    # per-user mean unpunctured rate rebuilt from the same random streams
    means = sample_mean_snr(default_cfg, mean_snr_rng(SEED))
    phi = default_cfg.total_bandwidth() / default_cfg.num_embb_users
    acc = np.zeros(default_cfg.num_embb_users)
    for slot in range(SLOTS):
        chan = sample_channel(default_cfg, means[0], means[1], slot_rng(SEED, slot))
        acc += phi * embb_spectral_eff(default_cfg, chan)
    unpunctured = acc / SLOTS
    rho_proposed = spearman(unpunctured, m_proposed.per_user_mean_theta)
    rho_baseline2 = spearman(unpunctured, m_baseline2.per_user_mean_theta)
    symmetric = replace(default_cfg, snr_min_db=15.0, snr_max_db=15.0)
    theta = run_simulation(symmetric, "baseline1", SLOTS, SEED).per_user_mean_theta
    ratio = float(theta.max() / theta.min())
    ok = rho_proposed >= 0.5 and rho_baseline2 < 0.0 and ratio <= 1.05
    report(
        7,
        ok,
        f"rate/puncturing Spearman: proposed {rho_proposed:.3f} (>= 0.5), "
        f"baseline2 {rho_baseline2:.3f} (< 0); symmetric no-risk spread max/min "
        f"{ratio:.4f} (<= 1.05)",
    )


def test_criterion_8_urllc_outage_budget(default_cfg):
    slots = 10_000
    metrics = run_simulation(default_cfg, "proposed", slots, SEED)
    budget = default_cfg.urllc_outage_budget
    bound = budget + 3 * math.sqrt(budget / slots)
    feasible_slots = slots - metrics.n_infeasible_slots
    # every recorded outage charged against the feasible slots: a conservative
    # upper bound on the outage rate conditioned on feasibility
    conditional = metrics.urllc_outage_rate * slots / feasible_slots
    ok = conditional <= bound
    report(
        8,
        ok,
        f"outage over {slots} slots: rate {metrics.urllc_outage_rate:.4f}, "
        f"{metrics.n_infeasible_slots} infeasible slot(s) excluded, conditional "
        f"rate {conditional:.4f} <= {bound:.4f}",
    )


def test_criterion_9_byte_identical_runs(tmp_path_factory):
    args = ["run", "--policy", "all", "--slots", "40", "--seed", "7", "--threads", "2"]
    trees = []
    for name in ("first", "second"):
        out = tmp_path_factory.mktemp(name)
        assert cli_main(args + ["--out", str(out)]) == 0
        trees.append({p.name: p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    same_names = trees[0].keys() == trees[1].keys()
    same_bytes = trees[0] == trees[1]
    ok = same_names and same_bytes
    report(
        9,
        ok,
        f"two identical CLI runs: {len(trees[0])} files, identical names "
        f"{same_names}, byte-identical {same_bytes}",
    )
