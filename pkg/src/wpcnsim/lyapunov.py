"""Perturbed-potential machinery behind both control decisions.

The controller never optimizes the potential directly; it only needs the
congestion classification of every queue, the per-link data coefficients, the
per-node power coefficients, and (for verification) the slot-wise drift bound
with its closed-form constant.  All of that lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacity import CapacityParams, capacity_cap, rate_slope


@dataclass(frozen=True)
class SystemConstants:
    """Operating ceilings plus every derived control constant.

    ``energy_norm`` converts joules of battery into backlog units; a queue
    counts as congested above ``congestion_threshold`` and as critically
    congested when it also exceeds energy_norm * battery.  Build via
    :meth:`build` so the derived fields stay consistent.
    """

    p_max: float                  # per-link transmit ceiling, W
    p_ap_max: float               # beacon transmit ceiling, W
    a_max: float                  # per-stream arrival ceiling, bits/slot
    alpha: float                  # perturbation ratio, > 1
    v: float                      # beacon cost weight, bits^2 per watt
    rate_slope: float             # bits/slot per watt, global
    c_max: float                  # largest feasible link rate, bits/slot
    energy_norm: float            # bits per joule
    congestion_threshold: float   # bits

    DEFAULT_ALPHA = 1.0 + np.sqrt(2.0)  # minimizes the threshold, see below

    @classmethod
    def build(cls, p_max, p_ap_max, a_max, v, cap_params: CapacityParams,
              alpha: float = DEFAULT_ALPHA) -> "SystemConstants":
        if p_max <= 0 or p_ap_max <= 0:
            raise ValueError("power ceilings must be positive")
        if a_max < 0:
            raise ValueError("a_max must be nonnegative")
        if alpha <= 1.0:
            raise ValueError("alpha must exceed 1")
        if v <= 0:
            raise ValueError("v must be positive")
        slope = rate_slope(cap_params)
        energy_norm = 2.0 * slope / (1.0 - 1.0 / alpha)
        threshold = p_max * (energy_norm + alpha * slope)
        return cls(
            p_max=float(p_max),
            p_ap_max=float(p_ap_max),
            a_max=float(a_max),
            alpha=float(alpha),
            v=float(v),
            rate_slope=slope,
            c_max=capacity_cap(cap_params, p_max),
            energy_norm=energy_norm,
            congestion_threshold=threshold,
        )


def threshold_for_alpha(alpha, p_max, slope):
    """Congestion threshold as a function of the perturbation ratio.

    Convex in alpha on (1, inf); the ratio 1 + sqrt(2) minimizes it, giving
    (3 + 2*sqrt(2)) * slope * p_max.
    """
    alpha = np.asarray(alpha, dtype=float)
    return p_max * (2.0 * slope / (1.0 - 1.0 / alpha) + alpha * slope)


@dataclass(frozen=True, eq=False)
class CongestionSets:
    """Boolean (n_nodes, n_streams) masks classifying every queue."""

    congested: np.ndarray  # backlog beyond the fixed threshold
    critical: np.ndarray   # also beyond the battery-scaled level


def congestion_sets(queues, batteries, constants: SystemConstants) -> CongestionSets:
    """Classify queues; both comparisons are strict, so boundary queues stay out."""
    scaled = constants.energy_norm * np.asarray(batteries)[:, None]
    congested = queues > constants.congestion_threshold
    critical = queues > np.maximum(constants.congestion_threshold, scaled)
    return CongestionSets(congested=congested, critical=critical)


def lyapunov_value(queues, batteries, constants: SystemConstants) -> float:
    """Perturbed quadratic potential of a state snapshot."""
    queues = np.asarray(queues, dtype=float)
    excess = queues - constants.energy_norm * np.asarray(batteries)[:, None]
    perturbed = np.where(excess > 0, excess, 0.0)
    return 0.5 * float(np.sum(queues * queues)) + 0.5 * float(np.sum(perturbed * perturbed))


def node_scores(queues, batteries, sets: CongestionSets, constants: SystemConstants):
    """Per-(node, stream) pressure entering the data coefficients.

    Congested queues contribute their backlog; critically congested ones add
    the battery-discounted excess on top.
    """
    excess = queues - constants.energy_norm * np.asarray(batteries)[:, None]
    return np.where(sets.critical, excess, 0.0) + np.where(sets.congested, queues, 0.0)


def data_coefficients(queues, batteries, sets, constants, topo) -> np.ndarray:
    """(n_links, n_streams) differential weights used by the data policy.

    Entry (l, s) is the transmitter's score minus the receiver's score for
    stream s; only congested endpoints contribute.
    """
    scores = node_scores(queues, batteries, sets, constants)
    return scores[topo.tx, :] - scores[topo.rx, :]


def power_coefficients(queues, batteries, sets, constants) -> np.ndarray:
    """Per-node price of spending a joule, >= 0; positive only when some
    stream at the node is critically congested."""
    excess = queues - constants.energy_norm * np.asarray(batteries)[:, None]
    return constants.energy_norm * np.sum(np.where(sets.critical, excess, 0.0), axis=1)


@dataclass(frozen=True)
class BoundConstants:
    """Closed-form slot-drift constant; b covers every queue in every case."""

    b0: float
    b1: float
    b2: float
    b: float

    @classmethod
    def from_system(cls, constants: SystemConstants, topo) -> "BoundConstants":
        no = float(topo.max_out_degree)
        ni = float(topo.max_in_degree)
        cm = constants.c_max
        am = constants.a_max
        cn = constants.energy_norm
        pm = constants.p_max
        pap = constants.p_ap_max
        u0 = constants.congestion_threshold
        b0 = (u0 + am + ni * cm) ** 2
        b1 = (0.5 * (no ** 2 + ni ** 2) * cm ** 2 + 0.5 * am ** 2 + am * ni * cm
              + 0.5 * (am + ni * cm + cn * no * pm) ** 2)
        b2 = ((no ** 2 + ni ** 2) * cm ** 2 + am ** 2 + 2.0 * am * ni * cm
              + 0.5 * cn ** 2 * no ** 2 * pm ** 2 + 0.5 * cn ** 2 * pap ** 2
              + cn * pap + 0.5 * no * cm + no * ni * pm * cm + am * no * pm)
        return cls(b0=b0, b1=b1, b2=b2, b=topo.n_nodes * max(b0, b1, b2))


def drift_bound_gap(prev_queues, prev_batteries, sets, rates, link_powers,
                    arrivals, harvest, next_queues, next_batteries,
                    constants: SystemConstants, bounds: BoundConstants, topo):
    """Slack of the slot-wise drift inequality, evaluated pathwise.

    Returns (gap, rhs): gap = rhs - observed potential change, using realized
    rates/powers/arrivals/harvest and the congestion sets the controller saw.
    The inequality holds whenever gap >= -tol * |rhs|.
    """
    lhs = (lyapunov_value(next_queues, next_batteries, constants)
           - lyapunov_value(prev_queues, prev_batteries, constants))
    net_bits = arrivals + topo.in_inc @ rates - topo.out_inc @ rates  # (N, S)
    excess = prev_queues - constants.energy_norm * np.asarray(prev_batteries)[:, None]
    net_energy = harvest - topo.out_inc @ link_powers                 # (N,)
    rhs = bounds.b
    rhs += float(np.sum(np.where(sets.congested, net_bits * prev_queues, 0.0)))
    rhs += float(np.sum(np.where(sets.critical, net_bits * excess, 0.0)))
    rhs -= constants.energy_norm * float(
        np.sum(np.where(sets.critical, net_energy[:, None] * excess, 0.0)))
    return rhs - lhs, rhs
