"""Fading draws: scalar Rician data links and the beacon's array channel.

One sampler instance owns the RNG for a run.  Each slot draws the data-link
gains first, then the per-node array channels, so a fixed seed reproduces the
whole fading sequence bit for bit regardless of what the controller does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Above this the scattered part is below float resolution anyway; treat as
# a deterministic line-of-sight channel.
PURE_LOS_K = 1e12


def ula_steering(angle: float, n_antennas: int, spacing: float = 0.5) -> np.ndarray:
    """Uniform-linear-array response for a planar wave from ``angle``.

    ``spacing`` is the element pitch in carrier wavelengths.  Entries are unit
    modulus, so the squared norm is the element count.
    """
    m = np.arange(n_antennas)
    return np.exp(2j * np.pi * spacing * np.sin(angle) * m)


def sample_rician(mean_gain, k_factor, los, rng):
    """One Rician draw with the given line-of-sight component.

    ``los`` must have unit-modulus entries (scalar or array); the draw then
    satisfies E|x|^2 = mean_gain per entry.  k_factor is the linear power
    ratio of the deterministic part to the scattered part.
    """
    los = np.asarray(los, dtype=complex)
    if k_factor < 0:
        raise ValueError("k_factor must be nonnegative")
    if k_factor >= PURE_LOS_K:
        return np.sqrt(mean_gain) * los
    scatter = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape)) / np.sqrt(2.0)
    mix = np.sqrt(k_factor / (k_factor + 1.0)) * los + np.sqrt(1.0 / (k_factor + 1.0)) * scatter
    return np.sqrt(mean_gain) * mix


def path_gain(distance, ref_gain, exponent=2.0):
    """Mean gain from a power-law distance model; helper for configs."""
    return ref_gain * distance ** (-exponent)


@dataclass(frozen=True)
class ChannelConfig:
    """Fading statistics for every data link and every energy downlink."""

    data_mean_gains: tuple    # per link, E|g|^2
    energy_mean_gains: tuple  # per node, per-antenna E|h_m|^2
    rician_k: float = 1.0
    antenna_spacing: float = 0.5
    data_los_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "data_mean_gains", tuple(float(g) for g in self.data_mean_gains))
        object.__setattr__(self, "energy_mean_gains", tuple(float(g) for g in self.energy_mean_gains))
        if any(g < 0 for g in self.data_mean_gains + self.energy_mean_gains):
            raise ValueError("mean gains must be nonnegative")
        if self.rician_k < 0:
            raise ValueError("rician_k must be nonnegative")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")


class ChannelSampler:
    """Draws one slot's fading for a fixed topology; owns its RNG."""

    def __init__(self, topo, config: ChannelConfig, rng: np.random.Generator):
        if len(config.data_mean_gains) != topo.n_links:
            raise ValueError("one data mean gain per link required")
        if len(config.energy_mean_gains) != topo.n_nodes:
            raise ValueError("one energy mean gain per node required")
        self.topo = topo
        self.config = config
        self.rng = rng
        self._data_los = np.exp(1j * config.data_los_phase)
        # (n_nodes, n_antennas) line-of-sight array responses, fixed geometry
        self._steering = np.stack(
            [ula_steering(a, topo.n_antennas, config.antenna_spacing) for a in topo.angles]
        )
        self._data_gains = np.array(config.data_mean_gains)
        self._energy_gains = np.array(config.energy_mean_gains)

    def draw(self):
        """Return (data link gains (L,) complex, array channels (N, M) complex)."""
        k = self.config.rician_k
        rng = self.rng
        if k >= PURE_LOS_K:
            data = np.sqrt(self._data_gains) * self._data_los
            energy = np.sqrt(self._energy_gains)[:, None] * self._steering
            return data, energy
        c1 = np.sqrt(k / (k + 1.0))
        c2 = np.sqrt(1.0 / (k + 1.0))
        zl = (rng.standard_normal(self.topo.n_links)
              + 1j * rng.standard_normal(self.topo.n_links)) / np.sqrt(2.0)
        data = np.sqrt(self._data_gains) * (c1 * self._data_los + c2 * zl)
        shape = self._steering.shape
        zh = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        energy = np.sqrt(self._energy_gains)[:, None] * (c1 * self._steering + c2 * zh)
        return data, energy
