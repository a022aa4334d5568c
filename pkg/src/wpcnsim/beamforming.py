"""Beacon-side control: weighted sum channel, dominant eigenbeam, on/off rule.

The beam maximizes sum_n price_n * |w . h_n|^2 over unit-norm w, which is the
top eigenvector of H = sum_n price_n * conj(h_n) h_n^T (conjugate outer
products keep H Hermitian; the harvest inner product itself carries no
conjugate).  Transmission is bang-bang: full power iff the achievable weighted
harvest beats the cost weight v.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lyapunov import SystemConstants


@dataclass(frozen=True, eq=False)
class EnergyDecision:
    """One slot's beacon outcome."""

    p_ap: float            # 0 or the beacon ceiling, W
    weights: np.ndarray    # (n_antennas,) unit-norm beam
    beam_gain: float       # sum_n price_n |w . h_n|^2 at the chosen beam


def build_sum_channel(prices, channels) -> np.ndarray:
    """(M, M) Hermitian PSD matrix sum_n price_n conj(h_n) h_n^T."""
    prices = np.asarray(prices, dtype=float)
    if np.any(prices < 0):
        raise ValueError("negative price")
    channels = np.asarray(channels, dtype=complex)
    return channels.conj().T @ (prices[:, None] * channels)


def max_eigvec(matrix, tol=1e-10, res_tol=1e-9, max_iter=10_000):
    """Dominant eigenpair of a Hermitian PSD matrix by power iteration.

    Returns (eigenvalue, unit eigenvector).  Iteration stops once the
    eigenvalue estimate settles within ``tol`` (relative) and the residual
    drops under ``res_tol * max(||H||_F, 1)``; past ``max_iter`` it falls
    back to a dense eigendecomposition.  The phase is fixed by rotating the
    first significant entry to the positive real axis, and the zero matrix
    maps to (0, e_0), so the result is deterministic.
    """
    h = np.asarray(matrix, dtype=complex)
    m = h.shape[0]
    norm = float(np.linalg.norm(h))
    if norm == 0.0:
        e0 = np.zeros(m, dtype=complex)
        e0[0] = 1.0
        return 0.0, e0
    res_scale = res_tol * max(norm, 1.0)
    u = np.ones(m, dtype=complex) / np.sqrt(m)
    hu = h @ u
    if np.linalg.norm(hu) <= 1e-14 * norm:
        # all-ones start sits in the nullspace; a fixed pseudo-random start
        # overlaps the top eigenspace almost surely and stays reproducible
        rng = np.random.default_rng(12345)
        u = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        u /= np.linalg.norm(u)
        hu = h @ u
    lam = float(np.real(np.vdot(u, hu)))
    converged = False
    for _ in range(max_iter):
        nrm = np.linalg.norm(hu)
        if nrm == 0.0:
            break
        u = hu / nrm
        hu = h @ u
        new_lam = float(np.real(np.vdot(u, hu)))
        settled = abs(new_lam - lam) <= tol * max(abs(new_lam), 1.0)
        lam = new_lam
        if settled and np.linalg.norm(hu - lam * u) <= res_scale:
            converged = True
            break
    if not converged:
        vals, vecs = np.linalg.eigh(h)
        lam = float(vals[-1])
        u = vecs[:, -1]
    return lam, _fix_phase(u)


def _fix_phase(w):
    mags = np.abs(w)
    k = int(np.argmax(mags > 1e-12))
    pivot = w[k]
    return w * (pivot.conjugate() / abs(pivot))


def harvested_power(p_ap, beam, channels):
    """Per-node harvest p_ap * |w . h_n|^2 (no conjugate in the product)."""
    if p_ap == 0.0:
        return np.zeros(np.asarray(channels).shape[0])
    proj = np.asarray(channels) @ np.asarray(beam)
    return p_ap * (proj.real ** 2 + proj.imag ** 2)


def eap_power_decision(prices, channels, constants: SystemConstants) -> EnergyDecision:
    """Choose the beam and whether the beacon fires this slot.

    The on/off comparison evaluates the weighted-harvest sum at the chosen
    beam directly (it equals the top eigenvalue at the optimum); ties favor
    staying silent.
    """
    m = np.asarray(channels).shape[1]
    h = build_sum_channel(prices, channels)
    if not h.any():
        e0 = np.zeros(m, dtype=complex)
        e0[0] = 1.0
        return EnergyDecision(p_ap=0.0, weights=e0, beam_gain=0.0)
    _, w = max_eigvec(h)
    proj = np.asarray(channels) @ w
    gain = float(np.sum(np.asarray(prices) * (proj.real ** 2 + proj.imag ** 2)))
    p_ap = constants.p_ap_max if constants.v < gain else 0.0
    return EnergyDecision(p_ap=p_ap, weights=w, beam_gain=gain)
