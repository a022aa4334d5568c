"""Per-slot data-link control: stream choice, transmit power, battery projection.

The decision decomposes per link: pick the stream with the largest differential
weight, then minimize price * p - weight * rate(p) over [0, p_max] in closed
form.  A final per-node projection scales outgoing powers so no battery is
asked for more energy than it holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacity import CapacityParams, link_capacity
from .lyapunov import SystemConstants, data_coefficients

_LN2 = float(np.log(2.0))


@dataclass(frozen=True, eq=False)
class DataDecision:
    """One slot's routing outcome."""

    link_powers: np.ndarray    # (n_links,) W
    rates: np.ndarray          # (n_links, n_streams), one nonzero per row at most
    chosen_stream: np.ndarray  # (n_links,) stream id, -1 where the link idles
    projected_nodes: int       # nodes whose outgoing powers were scaled down


def select_stream(weights):
    """Pick each link's best stream; ties resolve to the lowest stream id.

    Returns (stream index per link, that stream's weight per link).
    """
    weights = np.asarray(weights, dtype=float)
    idx = np.argmax(weights, axis=1)
    return idx, weights[np.arange(weights.shape[0]), idx]


def optimal_link_power(weight, price, gain_sq, constants: SystemConstants,
                       cap_params: CapacityParams):
    """Closed-form minimizer of price * p - weight * rate(p) on [0, p_max].

    Nonpositive weight idles the link.  A zero price (transmitter holds no
    critically congested stream) makes the objective decreasing, so the link
    runs at the ceiling.  Otherwise the stationary point of the concave rate
    term is clamped into the box.  Vectorizes elementwise.
    """
    weight = np.asarray(weight, dtype=float)
    price, gain_sq = np.broadcast_arrays(
        np.asarray(price, dtype=float), np.asarray(gain_sq, dtype=float))
    bw = cap_params.bandwidth
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = weight * bw / (price * _LN2) - bw * cap_params.noise_psd / gain_sq
    interior = np.where(gain_sq > 0, interior, -np.inf)
    p = np.where(
        weight <= 0, 0.0,
        np.where(price == 0, constants.p_max,
                 np.clip(interior, 0.0, constants.p_max)))
    return p if p.shape else float(p)


def project_node_budgets(topo, link_powers, batteries):
    """Scale each overdrawn node's outgoing powers to fit its battery.

    Proportional scaling; a one-shot (1 - 1e-12) backoff absorbs float
    round-up so the projected spend is never above the battery.  Returns
    (feasible powers, number of nodes projected).
    """
    spend = topo.out_inc @ link_powers
    over = spend > batteries
    if not np.any(over):
        return link_powers, 0
    scale = np.ones(topo.n_nodes)
    scale[over] = batteries[over] / spend[over]
    powers = link_powers * scale[topo.tx]
    spend = topo.out_inc @ powers
    still = spend > batteries
    if np.any(still):
        fix = np.where(still, 1.0 - 1e-12, 1.0)
        powers = powers * fix[topo.tx]
    return powers, int(np.count_nonzero(over))


def route(topo, queues, batteries, sets, prices, gains_sq,
          constants: SystemConstants, cap_params: CapacityParams) -> DataDecision:
    """Full data-plane decision for one slot.

    ``prices`` are the per-node power coefficients; ``gains_sq`` the (already
    capped) squared link gains.  The chosen stream gets the link's entire
    rate at the final, projected power.
    """
    weights = data_coefficients(queues, batteries, sets, constants, topo)
    streams, best = select_stream(weights)
    powers = optimal_link_power(best, prices[topo.tx], gains_sq, constants, cap_params)
    powers, projected = project_node_budgets(topo, powers, batteries)
    active = powers > 0
    rates = np.zeros((topo.n_links, topo.n_streams))
    if np.any(active):
        rates[active, streams[active]] = link_capacity(
            powers[active], gains_sq[active], cap_params)
    chosen = np.where(active, streams, -1)
    return DataDecision(link_powers=powers, rates=rates,
                        chosen_stream=chosen, projected_nodes=projected)
