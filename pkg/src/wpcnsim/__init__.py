"""Discrete-time simulator for beam-powered multi-hop wireless networks.

A multi-antenna energy beacon charges battery-limited radio nodes that relay
data streams hop by hop. Transmit power, stream selection and the beacon's
beamforming all follow a queue-and-battery aware drift-plus-penalty policy
with per-slot battery safety and a checkable per-slot drift bound.
"""

from .capacity import CapacityParams, link_capacity
from .channel import ChannelConfig
from .config import ConfigError, load_experiment
from .lyapunov import SystemConstants
from .model import BatteryOverdraw, NetworkState, NetworkTopology
from .simulator import (ArrivalConfig, RunConfig, RunMetrics, beam_pattern,
                        run, sweep_v)

__version__ = "0.1.0"

__all__ = [
    "ArrivalConfig",
    "BatteryOverdraw",
    "CapacityParams",
    "ChannelConfig",
    "ConfigError",
    "NetworkState",
    "NetworkTopology",
    "RunConfig",
    "RunMetrics",
    "SystemConstants",
    "beam_pattern",
    "link_capacity",
    "load_experiment",
    "run",
    "sweep_v",
]
