"""Link rate model: bandwidth-scaled log capacity with a hard gain cap.

Rates are in bits per slot (one slot normalizes the symbol time), powers in
watts.  The squared channel magnitude is capped at ``g_max_sq``; the cap is
what makes the global linear bound rate <= rate_slope * power valid per
realization, which the control layer's battery-safety argument leans on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class CapacityParams:
    bandwidth: float   # Hz
    noise_psd: float   # W/Hz, one-sided
    g_max_sq: float    # cap on |gain|^2

    def __post_init__(self):
        for name in ("bandwidth", "noise_psd", "g_max_sq"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def link_capacity(power, gain_sq, params: CapacityParams):
    """Achievable bits/slot for one link at the given transmit power.

    Depends only on this link's own power and gain (interference-free model).
    Vectorizes elementwise over arrays.
    """
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("negative power")
    snr = power * gain_sq / (params.bandwidth * params.noise_psd)
    out = params.bandwidth * (np.log1p(snr) / _LN2)
    return out if out.shape else float(out)


def rate_slope(params: CapacityParams) -> float:
    """Global slope bound (bits/slot per watt): rate <= slope * power."""
    return params.g_max_sq / (params.noise_psd * _LN2)


def capacity_cap(params: CapacityParams, p_max: float) -> float:
    """Largest rate any link can carry: peak power into the capped gain."""
    return link_capacity(p_max, params.g_max_sq, params)


def clip_gain_sq(gain_sq, params: CapacityParams):
    """Apply the gain cap; returns (clipped values, number clipped)."""
    arr = np.asarray(gain_sq, dtype=float)
    n = int(np.count_nonzero(arr > params.g_max_sq))
    clipped = np.minimum(arr, params.g_max_sq)
    if arr.shape:
        return clipped, n
    return float(clipped), n
