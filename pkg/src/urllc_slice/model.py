"""System model: configuration, channel and traffic sampling, rate equations.

One scheduling slot is 1 ms and contains ``num_minislots`` minislots. Sporadic
low-latency arrivals land on minislot boundaries and are served by zeroing
transmit power on part of the broadband users' already-scheduled bandwidth
("puncturing"). Everything here is a pure function of explicit inputs;
randomness enters only through a caller-supplied ``numpy.random.Generator``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Union

import numpy as np

SLOT_DURATION_S = 1e-3


class ConfigError(ValueError):
    """Invalid or unparseable system configuration."""


@dataclass(eq=False)
class SystemConfig:
    """Static system parameters.

    Vector-valued fields (``rb_bandwidth``, ``embb_tx_power``,
    ``urllc_tx_power``) accept scalars and are broadcast to the right length.
    ``l_max`` (maximum servable URLLC traffic per slot, bits) defaults to
    ``num_minislots * demand_quantum``, i.e. one arrival per minislot.
    """

    num_embb_users: int = 10
    num_rbs: int = 50
    num_minislots: int = 7
    num_urllc_users: int = 4
    rb_bandwidth: np.ndarray = 360e3          # Hz per RB
    l_max: float = None                       # bits per slot
    embb_tx_power: np.ndarray = 1.0           # W
    urllc_tx_power: np.ndarray = 1.0          # W
    noise_power: float = 1.0                  # W
    puncture_prob: float = 0.5                # arrival probability per minislot
    cvar_level: float = 0.9
    risk_weight: float = 1.0
    urllc_outage_budget: float = 0.1
    target_rate: float = 2e6                  # bits/s, reliability threshold
    demand_quantum: float = 256.0             # bits carried by one arrival
    snr_min_db: float = 3.0                   # per-user mean SNR range
    snr_max_db: float = 30.0
    risk_rate_scale: float = 8e6              # bits/s; rate unit of the risk penalty

    def __post_init__(self):
        self.rb_bandwidth = np.broadcast_to(
            np.asarray(self.rb_bandwidth, dtype=float), (self.num_rbs,)
        ).copy()
        self.embb_tx_power = np.broadcast_to(
            np.asarray(self.embb_tx_power, dtype=float), (self.num_embb_users,)
        ).copy()
        self.urllc_tx_power = np.broadcast_to(
            np.asarray(self.urllc_tx_power, dtype=float), (self.num_urllc_users,)
        ).copy()
        if self.l_max is None:
            self.l_max = float(self.num_minislots * self.demand_quantum)

    # -- derived quantities -------------------------------------------------

    def total_bandwidth(self) -> float:
        return float(self.rb_bandwidth.sum())

    def expected_load_bits(self) -> float:
        """Mean URLLC traffic per slot, ignoring the l_max clamp."""
        return self.num_minislots * self.puncture_prob * self.demand_quantum

    def expected_load_fraction(self) -> float:
        """Mean load normalized by l_max; multiplies the puncture weights."""
        return self.expected_load_bits() / self.l_max

    def markov_rate_floor(self) -> float:
        """Minimum mean URLLC rate (bits/s) implied by the outage budget."""
        return self.expected_load_bits() / (self.urllc_outage_budget * SLOT_DURATION_S)

    # -- validation and serialization ----------------------------------------

    def validate(self) -> list[str]:
        """Return a list of invariant violations, one human-readable line each."""
        bad = []
        for name in ("num_embb_users", "num_rbs", "num_minislots", "num_urllc_users"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                bad.append(f"{name}: must be a positive integer, got {v!r}")
        if np.any(self.rb_bandwidth <= 0):
            bad.append("rb_bandwidth: all entries must be > 0")
        if len(self.rb_bandwidth) != self.num_rbs:
            bad.append("rb_bandwidth: length must equal num_rbs")
        if np.any(self.embb_tx_power <= 0):
            bad.append("embb_tx_power: all entries must be > 0")
        if np.any(self.urllc_tx_power <= 0):
            bad.append("urllc_tx_power: all entries must be > 0")
        if not self.noise_power > 0:
            bad.append("noise_power: must be > 0")
        if not self.l_max > 0:
            bad.append("l_max: must be > 0")
        if not 0.0 <= self.puncture_prob <= 1.0:
            bad.append("puncture_prob: must lie in [0, 1]")
        if not 0.0 < self.cvar_level < 1.0:
            bad.append("cvar_level: must lie in (0, 1)")
        if not 0.0 <= self.risk_weight <= 1.0:
            bad.append("risk_weight: must lie in [0, 1]")
        if not 0.0 < self.urllc_outage_budget < 1.0:
            bad.append("urllc_outage_budget: must lie in (0, 1)")
        if not self.target_rate > 0:
            bad.append("target_rate: must be > 0")
        if not self.demand_quantum > 0:
            bad.append("demand_quantum: must be > 0")
        if self.snr_min_db > self.snr_max_db:
            bad.append("snr_min_db: must not exceed snr_max_db")
        if not self.risk_rate_scale > 0:
            bad.append("risk_rate_scale: must be > 0")
        return bad

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config has unknown keys: {', '.join(unknown)}")
        cfg = cls(**data)
        bad = cfg.validate()
        if bad:
            raise ConfigError("config invalid: " + "; ".join(bad))
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "SystemConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)


@dataclass
class ChannelRealization:
    """Per-slot dimensionless power gains for both traffic classes."""

    embb_gain: np.ndarray
    urllc_gain: np.ndarray

    def __post_init__(self):
        self.embb_gain = np.asarray(self.embb_gain, dtype=float)
        self.urllc_gain = np.asarray(self.urllc_gain, dtype=float)


@dataclass
class UrllcLoad:
    """Realized URLLC traffic of one slot, in bits.

    ``total`` is the minislot sum clamped to l_max (excess traffic is blocked).
    """

    per_minislot: np.ndarray
    total: float


@dataclass
class SchedulingMatrix:
    """RB-to-user assignment, ``entries[b, u]`` in [0,1]; per RB the user
    shares sum to at most 1."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)

    def user_bandwidth(self, rb_bandwidth: np.ndarray) -> np.ndarray:
        """Hz allocated per user: bandwidth-weighted column sums."""
        return np.asarray(rb_bandwidth, dtype=float) @ self.entries

    def is_binary(self, tol: float = 0.0) -> bool:
        e = self.entries
        return bool(np.all((np.abs(e) <= tol) | (np.abs(e - 1.0) <= tol)))

    def validate(self) -> list[str]:
        bad = []
        if self.entries.ndim != 2:
            return ["entries: must be a B x U matrix"]
        if np.any(self.entries < -1e-12) or np.any(self.entries > 1 + 1e-12):
            bad.append("entries: values must lie in [0, 1]")
        if np.any(self.entries.sum(axis=1) > 1 + 1e-9):
            bad.append("entries: per-RB user shares must sum to <= 1")
        return bad


@dataclass
class PunctureWeights:
    """Per-user puncturing weights plus the auxiliary risk variables of the
    placement solver (threshold rate and its excess)."""

    weights: np.ndarray
    var_level: float = 0.0
    excess: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)

    def validate(self) -> list[str]:
        bad = []
        if np.any(self.weights < -1e-12) or np.any(self.weights > 1 + 1e-12):
            bad.append("weights: values must lie in [0, 1]")
        if self.excess < -1e-12:
            bad.append("excess: must be >= 0")
        return bad


@dataclass
class SlotOutcome:
    """Realized per-slot quantities after puncturing."""

    realized_load: float
    embb_rate_per_user: np.ndarray
    embb_sum_rate: float
    urllc_rate: float
    punctured_bw: np.ndarray
    outage: bool


# -- sampling ----------------------------------------------------------------


def sample_mean_snr(cfg: SystemConfig, rng: np.random.Generator):
    """Per-user mean linear SNRs, uniform in dB over the configured range.

    Drawn once per simulation run; slot-to-slot variation comes from fading.
    """
    embb_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db, cfg.num_embb_users)
    urllc_db = rng.uniform(cfg.snr_min_db, cfg.snr_max_db, cfg.num_urllc_users)
    return 10.0 ** (embb_db / 10.0), 10.0 ** (urllc_db / 10.0)


def sample_channel(
    cfg: SystemConfig,
    embb_mean_snr: np.ndarray,
    urllc_mean_snr: np.ndarray,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Rayleigh-fading gains: exponential power fading around each user's mean
    SNR, mapped to gains so that P*g/N0 equals the realized SNR."""
    embb_snr = np.asarray(embb_mean_snr) * rng.exponential(1.0, cfg.num_embb_users)
    urllc_snr = np.asarray(urllc_mean_snr) * rng.exponential(1.0, cfg.num_urllc_users)
    return ChannelRealization(
        embb_gain=embb_snr * cfg.noise_power / cfg.embb_tx_power,
        urllc_gain=urllc_snr * cfg.noise_power / cfg.urllc_tx_power,
    )


def sample_urllc_load(cfg: SystemConfig, rng: np.random.Generator) -> UrllcLoad:
    """One slot of URLLC traffic: an independent Bernoulli arrival per
    minislot, each carrying ``demand_quantum`` bits; total clamped to l_max."""
    arrivals = rng.random(cfg.num_minislots) < cfg.puncture_prob
    per_minislot = cfg.demand_quantum * arrivals.astype(float)
    return UrllcLoad(per_minislot, min(float(per_minislot.sum()), cfg.l_max))


# -- rate equations ----------------------------------------------------------

WeightsLike = Union[PunctureWeights, np.ndarray]
LoadLike = Union[UrllcLoad, float]


def _weights_vec(weights: WeightsLike) -> np.ndarray:
    if isinstance(weights, PunctureWeights):
        return weights.weights
    return np.asarray(weights, dtype=float)


def _load_bits(load: LoadLike) -> float:
    if isinstance(load, UrllcLoad):
        return float(load.total)
    return float(load)


def embb_spectral_eff(cfg: SystemConfig, chan: ChannelRealization) -> np.ndarray:
    """bits/s/Hz per broadband user at this slot's gains."""
    return np.log2(1.0 + cfg.embb_tx_power * chan.embb_gain / cfg.noise_power)


def urllc_spectral_eff_mean(cfg: SystemConfig, chan: ChannelRealization) -> float:
    """bits/s/Hz averaged over the URLLC users (punctured bandwidth is split
    evenly between them)."""
    eff = np.log2(1.0 + cfg.urllc_tx_power * chan.urllc_gain / cfg.noise_power)
    return float(eff.mean())


def punctured_bandwidth(
    cfg: SystemConfig,
    mat: SchedulingMatrix,
    weights: WeightsLike,
    load: LoadLike,
) -> np.ndarray:
    """Hz surrendered by each user: its bandwidth, scaled by its puncture
    weight and by the normalized realized load."""
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    return phi * _weights_vec(weights) * (_load_bits(load) / cfg.l_max)


def embb_rate(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: WeightsLike,
    load: LoadLike,
) -> np.ndarray:
    """Instantaneous per-user broadband rate (bits/s) after puncturing."""
    load_bits = _load_bits(load)
    if load_bits > cfg.l_max * (1 + 1e-12):
        raise ValueError(f"load {load_bits} exceeds l_max {cfg.l_max}; clamp first")
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    loss = _weights_vec(weights) * (load_bits / cfg.l_max)
    return phi * (1.0 - loss) * embb_spectral_eff(cfg, chan)


def expected_embb_rate(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: WeightsLike,
) -> np.ndarray:
    """Per-user rate with the load replaced by its mean (the rate is affine in
    the load, so this is the exact expectation absent clamping)."""
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    loss = _weights_vec(weights) * cfg.expected_load_fraction()
    return phi * (1.0 - loss) * embb_spectral_eff(cfg, chan)


def urllc_rate(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: WeightsLike,
    load: LoadLike,
) -> float:
    """Aggregate URLLC rate (bits/s) over the punctured bandwidth, which is
    divided equally between the URLLC users."""
    theta = punctured_bandwidth(cfg, mat, weights, load)
    return float(theta.sum() * urllc_spectral_eff_mean(cfg, chan))


def expected_urllc_rate(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: WeightsLike,
) -> float:
    """URLLC rate at the mean load; the left-hand side of the relaxed
    reliability constraint."""
    phi = mat.user_bandwidth(cfg.rb_bandwidth)
    theta = phi * _weights_vec(weights) * cfg.expected_load_fraction()
    return float(theta.sum() * urllc_spectral_eff_mean(cfg, chan))


def outage_indicator(urllc_rate_bps: float, load_bits: float) -> bool:
    """True when the slot carried traffic the punctured bandwidth could not
    cover within the slot. An empty slot is never an outage."""
    return load_bits > 0 and urllc_rate_bps * SLOT_DURATION_S <= load_bits


def evaluate_slot(
    cfg: SystemConfig,
    chan: ChannelRealization,
    mat: SchedulingMatrix,
    weights: WeightsLike,
    load: LoadLike,
) -> SlotOutcome:
    """Realized rates, punctured bandwidth, and outage flag for one slot."""
    load_bits = _load_bits(load)
    rates = embb_rate(cfg, chan, mat, weights, load_bits)
    r_urllc = urllc_rate(cfg, chan, mat, weights, load_bits)
    return SlotOutcome(
        realized_load=load_bits,
        embb_rate_per_user=rates,
        embb_sum_rate=float(rates.sum()),
        urllc_rate=r_urllc,
        punctured_bw=punctured_bandwidth(cfg, mat, weights, load_bits),
        outage=outage_indicator(r_urllc, load_bits),
    )
