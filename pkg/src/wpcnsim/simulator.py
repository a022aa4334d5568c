"""Closed-loop slotted simulation, the cost sweep, and the radiated pattern.

Each slot: draw fading, classify queues, run the data policy and the beacon
policy off the same congestion snapshot, apply harvest and spending to the
batteries, then advance the queues with fresh arrivals.  Everything downstream
(metrics, traces, the averaged beam pattern) is accumulated online so a run
never stores per-slot beam vectors.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .beamforming import eap_power_decision, harvested_power
from .capacity import CapacityParams
from .channel import ChannelConfig, ChannelSampler
from .lyapunov import (
    BoundConstants,
    SystemConstants,
    congestion_sets,
    drift_bound_gap,
    power_coefficients,
)
from .model import NetworkState, NetworkTopology, step_batteries, step_queues
from .routing import route

DRIFT_REL_TOL = 1e-9

ARRIVAL_KINDS = ("uniform", "constant", "bernoulli")


@dataclass(frozen=True)
class ArrivalConfig:
    """Per-stream arrival statistics (bits/slot at each stream's source)."""

    rates: tuple
    kind: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if self.kind not in ARRIVAL_KINDS:
            raise ValueError(f"unknown arrival kind {self.kind!r}")
        if any(r < 0 for r in self.rates):
            raise ValueError("arrival rates must be nonnegative")

    def peak(self, a_max: float) -> float:
        """Largest arrival a single slot can bring, given the ceiling."""
        if not self.rates:
            return 0.0
        if self.kind == "uniform":
            return 2.0 * max(self.rates)
        if self.kind == "constant":
            return max(self.rates)
        return a_max


class ArrivalProcess:
    """Draws one (n_nodes, n_streams) arrival matrix per slot."""

    def __init__(self, topo: NetworkTopology, config: ArrivalConfig,
                 a_max: float, rng: np.random.Generator):
        if len(config.rates) != topo.n_streams:
            raise ValueError("one arrival rate per stream required")
        if config.peak(a_max) > a_max:
            raise ValueError("arrival peak exceeds the configured ceiling")
        if config.kind == "bernoulli" and max(config.rates, default=0.0) > a_max:
            raise ValueError("bernoulli rate above the ceiling")
        self.topo = topo
        self.config = config
        self.a_max = a_max
        self.rng = rng
        self._rates = np.array(config.rates)
        self._bern_p = self._rates / a_max if a_max > 0 else np.zeros_like(self._rates)
        self._sources = np.array([src for src, _ in topo.streams], dtype=np.intp)
        self._stream_ids = np.arange(topo.n_streams)

    def draw(self) -> np.ndarray:
        kind = self.config.kind
        if kind == "uniform":
            vals = self.rng.uniform(0.0, 2.0 * self._rates)
        elif kind == "constant":
            vals = self._rates.copy()
        else:
            on = self.rng.random(len(self._rates)) < self._bern_p
            vals = np.where(on, self.a_max, 0.0)
        out = np.zeros((self.topo.n_nodes, self.topo.n_streams))
        out[self._sources, self._stream_ids] = vals
        return out


@dataclass(frozen=True)
class RunConfig:
    """Everything one reproducible run needs."""

    topology: NetworkTopology
    constants: SystemConstants
    cap_params: CapacityParams
    channel: ChannelConfig
    arrivals: ArrivalConfig
    horizon: int
    seed: int = 0
    drift_check_every: int = 0   # 0 disables the slot-wise bound check
    trace: str = "off"           # off | scalar | full

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least one slot")
        if self.drift_check_every < 0:
            raise ValueError("drift_check_every must be nonnegative")
        if self.trace not in ("off", "scalar", "full"):
            raise ValueError(f"unknown trace mode {self.trace!r}")

    def with_v(self, v: float) -> "RunConfig":
        return dataclasses.replace(
            self, constants=dataclasses.replace(self.constants, v=float(v)))


@dataclass(frozen=True, eq=False)
class SlotTrace:
    """Columnar per-slot series; queue/battery panels only in full mode."""

    t: np.ndarray
    p_ap: np.ndarray
    sum_queue: np.ndarray
    min_battery: np.ndarray
    beam_gain: np.ndarray | None = None
    queues: np.ndarray | None = None      # (T, n_nodes, n_streams)
    batteries: np.ndarray | None = None   # (T, n_nodes)


@dataclass(frozen=True)
class RunMetrics:
    """Aggregates of one run; wall_clock_s never enters the CSV output."""

    v: float
    seed: int
    horizon: int
    avg_p_ap: float
    avg_sum_queue: float
    max_queue: float
    final_sum_queue: float
    arrived_bits: tuple
    delivered_bits: tuple
    beamed_slots: int
    battery_outages: int
    safety_violations: int
    projection_events: int
    gain_clip_events: int
    drift_checks: int
    drift_failures: int
    min_drift_margin: float    # min over checks of gap/max(|rhs|,1); inf if unchecked
    min_battery: float
    wall_clock_s: float


@dataclass(frozen=True, eq=False)
class RunResult:
    metrics: RunMetrics
    final_state: NetworkState
    trace: SlotTrace | None
    beam_accum: np.ndarray     # (M, M) sum of p_ap * w w^H over slots
    horizon: int


def run(config: RunConfig, initial_state: NetworkState | None = None) -> RunResult:
    """Simulate one closed-loop run; deterministic given (config, seed)."""
    topo = config.topology
    constants = config.constants
    cap = config.cap_params
    t0 = time.perf_counter()

    rng = np.random.default_rng(config.seed)
    sampler = ChannelSampler(topo, config.channel, rng)
    arrivals = ArrivalProcess(topo, config.arrivals, constants.a_max, rng)
    bounds = BoundConstants.from_system(constants, topo)

    state = initial_state or NetworkState.zeros(topo)
    queues = state.queues.copy()
    batteries = state.batteries.copy()

    horizon = config.horizon
    scalar_trace = config.trace in ("scalar", "full")
    full_trace = config.trace == "full"
    tr_p = np.empty(horizon) if scalar_trace else None
    tr_q = np.empty(horizon) if scalar_trace else None
    tr_e = np.empty(horizon) if scalar_trace else None
    tr_g = np.empty(horizon) if scalar_trace else None
    tr_queues = np.empty((horizon, topo.n_nodes, topo.n_streams)) if full_trace else None
    tr_batt = np.empty((horizon, topo.n_nodes)) if full_trace else None

    g_cap = cap.g_max_sq
    p_sum = 0.0
    q_sum = 0.0
    max_queue = 0.0
    min_battery = np.inf
    beamed = 0
    safety_violations = 0
    projection_events = 0
    clip_events = 0
    drift_checks = 0
    drift_failures = 0
    min_margin = np.inf
    arrived = np.zeros(topo.n_streams)
    delivered = np.zeros(topo.n_streams)
    beam_accum = np.zeros((topo.n_antennas, topo.n_antennas), dtype=complex)
    check_every = config.drift_check_every

    for t in range(horizon):
        gains, channels = sampler.draw()
        gains_sq = gains.real ** 2 + gains.imag ** 2
        over = gains_sq > g_cap
        if over.any():
            clip_events += int(np.count_nonzero(over))
            gains_sq = np.minimum(gains_sq, g_cap)

        sets = congestion_sets(queues, batteries, constants)
        prices = power_coefficients(queues, batteries, sets, constants)
        data = route(topo, queues, batteries, sets, prices, gains_sq, constants, cap)
        energy = eap_power_decision(prices, channels, constants)
        harvest = harvested_power(energy.p_ap, energy.weights, channels)

        spend = topo.out_inc @ data.link_powers
        low = batteries <= constants.p_max
        if np.any(spend[low] > 0.0):
            safety_violations += int(np.count_nonzero(spend[low] > 0.0))
        projection_events += data.projected_nodes

        next_batteries = step_batteries(topo, batteries, data.link_powers, harvest, t)
        batch = arrivals.draw()
        next_queues, got = step_queues(topo, queues, data.rates, batch)

        if check_every and t % check_every == 0:
            gap, rhs = drift_bound_gap(
                queues, batteries, sets, data.rates, data.link_powers, batch,
                harvest, next_queues, next_batteries, constants, bounds, topo)
            drift_checks += 1
            margin = gap / max(abs(rhs), 1.0)
            if margin < min_margin:
                min_margin = margin
            if gap < -DRIFT_REL_TOL * abs(rhs):
                drift_failures += 1

        sum_q = float(queues.sum())
        q_sum += sum_q
        p_sum += energy.p_ap
        if energy.p_ap > 0.0:
            beamed += 1
            beam_accum += energy.p_ap * np.outer(energy.weights, energy.weights.conj())
        peak = float(queues.max(initial=0.0))
        if peak > max_queue:
            max_queue = peak
        low_b = float(batteries.min(initial=np.inf))
        if low_b < min_battery:
            min_battery = low_b
        arrived += batch.sum(axis=0)
        delivered += got

        if scalar_trace:
            tr_p[t] = energy.p_ap
            tr_q[t] = sum_q
            tr_e[t] = low_b
            tr_g[t] = energy.beam_gain
        if full_trace:
            tr_queues[t] = queues
            tr_batt[t] = batteries

        queues = next_queues
        batteries = next_batteries

    metrics = RunMetrics(
        v=constants.v,
        seed=config.seed,
        horizon=horizon,
        avg_p_ap=p_sum / horizon,
        avg_sum_queue=q_sum / horizon,
        max_queue=max_queue,
        final_sum_queue=float(queues.sum()),
        arrived_bits=tuple(float(x) for x in arrived),
        delivered_bits=tuple(float(x) for x in delivered),
        beamed_slots=beamed,
        battery_outages=0,
        safety_violations=safety_violations,
        projection_events=projection_events,
        gain_clip_events=clip_events,
        drift_checks=drift_checks,
        drift_failures=drift_failures,
        min_drift_margin=float(min_margin),
        min_battery=float(min_battery),
        wall_clock_s=time.perf_counter() - t0,
    )
    trace = None
    if scalar_trace:
        trace = SlotTrace(
            t=np.arange(horizon),
            p_ap=tr_p,
            sum_queue=tr_q,
            min_battery=tr_e,
            beam_gain=tr_g,
            queues=tr_queues,
            batteries=tr_batt,
        )
    final = NetworkState(queues=queues, batteries=batteries, slot=horizon)
    return RunResult(metrics=metrics, final_state=final, trace=trace,
                     beam_accum=beam_accum, horizon=horizon)


def sweep_v(config: RunConfig, v_list) -> list[RunResult]:
    """Re-run the same seeded scenario at each cost weight (paired seeds)."""
    v_list = [float(v) for v in v_list]
    if not v_list:
        raise ValueError("empty v list")
    if any(v <= 0 for v in v_list):
        raise ValueError("v values must be positive")
    return [run(config.with_v(v)) for v in v_list]


def mirrored_angle_grid(n_grid: int):
    """Angles on [0, pi), step pi/n_grid, with structurally mirrored sines.

    sin is evaluated on the lower half only and copied to the upper half, so
    any quantity that depends on the angle through its sine is bit-for-bit
    symmetric under theta -> pi - theta (indices k and n_grid - k pair up).
    """
    if n_grid < 2:
        raise ValueError("need at least two grid points")
    angles = np.linspace(0.0, np.pi, n_grid, endpoint=False)
    sines = np.sin(angles)
    half = (n_grid - 1) // 2
    sines[n_grid - half:] = sines[1:half + 1][::-1]
    return angles, sines


def beam_pattern(result: RunResult, topo: NetworkTopology,
                 channel: ChannelConfig, n_grid: int = 180):
    """Time-averaged radiated power toward each angle on a mirrored grid.

    Uses the run's accumulated p_ap-weighted beam outer products; the value at
    angle theta is mean_t p_ap(t) |w(t) . a(theta)|^2 / n_antennas, i.e. watts
    steered toward theta, normalized so an ideal aligned beam gives p_ap.
    """
    angles, sines = mirrored_angle_grid(n_grid)
    m = np.arange(topo.n_antennas)
    responses = np.exp(2j * np.pi * channel.antenna_spacing * sines[:, None] * m)
    pattern = np.einsum("gm,mn,gn->g", responses, result.beam_accum, responses.conj())
    pattern = pattern.real / (result.horizon * topo.n_antennas)
    return angles, pattern
