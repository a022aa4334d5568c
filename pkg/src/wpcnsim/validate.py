"""Reduced-scale oracle suite runnable from the CLI.

Each check re-derives a quantity the policy code computes in closed form
(grid search, dense eigensolver, straight-line recompute, moment estimate)
and compares. The hooks exist for mutation-sensitivity tests: they swap a
deliberately broken variant into the comparison so the suite must notice.
"""

import dataclasses

import numpy as np

from .beamforming import max_eigvec
from .channel import ChannelSampler
from .lyapunov import congestion_sets, data_coefficients, node_scores
from .routing import optimal_link_power
from .simulator import run


@dataclasses.dataclass(frozen=True)
class ValidationHooks:
    """Fault injection for mutation-sensitivity tests. All off by default."""

    flip_data_sign: bool = False
    eigensolver_max_iter: int | None = None


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _check_link_power(exp, rng):
    """Closed-form transmit power vs a fine grid, random congested instances."""
    const = exp.run_config.constants
    cap = exp.run_config.cap_params
    grid = np.linspace(0.0, const.p_max, 2000)
    worst_obj = 0.0
    worst_arg = 0.0
    for i in range(300):
        gain_sq = rng.uniform(0.1 * cap.g_max_sq, cap.g_max_sq)
        if i % 3 == 0:
            # craft an instance whose unconstrained optimum sits inside the box
            target = rng.uniform(0.05, 0.95) * const.p_max
            price = 10.0 ** rng.uniform(8.0, 12.0)
            weight = price * (target + cap.bandwidth * cap.noise_psd / gain_sq) \
                * np.log(2.0) / cap.bandwidth
        else:
            weight = rng.uniform(-1e5, 5e5)
            price = rng.choice([0.0, rng.uniform(0.0, 1e12)])
        p_star = optimal_link_power(weight, price, gain_sq, const, cap)
        snr = grid * gain_sq / (cap.bandwidth * cap.noise_psd)
        rates = cap.bandwidth * np.log1p(snr) / np.log(2.0)
        objective = price * grid - weight * rates
        k = int(np.argmin(objective))
        f_star = price * p_star - weight * float(
            cap.bandwidth * np.log1p(p_star * gain_sq / (cap.bandwidth * cap.noise_psd))
            / np.log(2.0))
        scale = max(abs(float(objective[k])), 1e-18)
        worst_obj = max(worst_obj, (f_star - float(objective[k])) / scale)
        worst_arg = max(worst_arg, abs(p_star - float(grid[k])))
    step = float(grid[1] - grid[0])
    ok = bool(worst_obj <= 1e-9 and worst_arg <= step + 1e-18)
    return CheckResult("link-power-grid", ok,
                       f"objective gap {worst_obj:.2e}, argmin gap {worst_arg:.2e} "
                       f"(grid step {step:.2e})")


def _early_stopped_eig(h, n_iter):
    # fallback-free truncated power iteration: the injected bug
    m = h.shape[0]
    u = np.ones(m, dtype=complex) / np.sqrt(m)
    for _ in range(n_iter):
        hu = h @ u
        nrm = np.linalg.norm(hu)
        if nrm == 0.0:
            break
        u = hu / nrm
    lam = float(np.real(np.vdot(u, h @ u)))
    return lam, u


def _check_eigensolver(exp, rng, hooks):
    """Power-iteration eigenpair vs dense eigensolver on random PSD matrices."""
    m = exp.run_config.topology.n_antennas
    worst_res = 0.0
    worst_lam = 0.0
    for _ in range(100):
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        h = a @ a.conj().T
        if hooks.eigensolver_max_iter is not None:
            lam, w = _early_stopped_eig(h, hooks.eigensolver_max_iter)
        else:
            lam, w = max_eigvec(h)
        scale = max(float(np.linalg.norm(h)), 1.0)
        worst_res = max(worst_res, float(np.linalg.norm(h @ w - lam * w)) / scale)
        top = float(np.linalg.eigvalsh(h)[-1])
        worst_lam = max(worst_lam, abs(lam - top) / max(abs(top), 1.0))
    ok = bool(worst_res <= 1e-8 and worst_lam <= 1e-9)
    return CheckResult("eigensolver", ok,
                       f"residual {worst_res:.2e}, eigenvalue gap {worst_lam:.2e}")


def _check_data_coefficients(exp, rng, hooks):
    """Routing weights vs a straight-line recompute on random states."""
    topo = exp.run_config.topology
    const = exp.run_config.constants
    worst = 0.0
    for _ in range(200):
        queues = rng.uniform(0.0, 4.0 * const.congestion_threshold,
                             (topo.n_nodes, topo.n_streams))
        batteries = rng.uniform(0.0, 20.0 * const.p_max, topo.n_nodes)
        sets = congestion_sets(queues, batteries, const)
        got = data_coefficients(queues, batteries, sets, const, topo)
        if hooks.flip_data_sign:
            got = -got
        scores = node_scores(queues, batteries, sets, const)
        for li, (tx, rx) in enumerate(topo.links):
            for s in range(topo.n_streams):
                want = scores[tx, s] - scores[rx, s]
                scale = max(abs(want), 1.0)
                worst = max(worst, float(abs(got[li, s] - want)) / scale)
    ok = bool(worst <= 1e-12)
    return CheckResult("data-coefficients", ok, f"max relative gap {worst:.2e}")


def _check_drift_and_safety(exp):
    """Short closed-loop run with the per-slot bound checker enabled."""
    cfg = dataclasses.replace(exp.run_config, horizon=2000,
                              drift_check_every=1, trace="off")
    result = run(cfg)
    m = result.metrics
    drift_ok = m.drift_failures == 0 and m.drift_checks == cfg.horizon
    safety_ok = (m.battery_outages == 0 and m.safety_violations == 0
                 and m.min_battery >= 0.0)
    return (
        CheckResult("drift-bound", drift_ok,
                    f"{m.drift_checks} checks, {m.drift_failures} failures, "
                    f"min margin {m.min_drift_margin:.3g}"),
        CheckResult("battery-safety", safety_ok,
                    f"outages {m.battery_outages}, "
                    f"low-battery transmissions {m.safety_violations}, "
                    f"min battery {m.min_battery:.3e} J"),
    )


def _check_rician_moments(exp, seed):
    """Sampler second moments vs configured mean gains."""
    rc = exp.run_config
    sampler = ChannelSampler(rc.topology, rc.channel, np.random.default_rng(seed))
    n_draw = 20000
    g2 = np.zeros(len(rc.channel.data_mean_gains))
    h2 = np.zeros(rc.topology.n_nodes)
    for _ in range(n_draw):
        gains, channels = sampler.draw()
        g2 += gains.real ** 2 + gains.imag ** 2
        h2 += np.mean(np.abs(channels) ** 2, axis=1)
    g2 /= n_draw
    h2 /= n_draw
    rel_g = np.abs(g2 / np.asarray(rc.channel.data_mean_gains) - 1.0)
    rel_h = np.abs(h2 / np.asarray(rc.channel.energy_mean_gains) - 1.0)
    worst = float(max(rel_g.max(), rel_h.max()))
    return CheckResult("rician-moments", worst <= 0.05,
                       f"worst second-moment error {worst:.3f} over {n_draw} draws")


def run_validation(exp, hooks: ValidationHooks | None = None, seed: int = 0):
    """Run every check; returns a list of CheckResult."""
    hooks = hooks or ValidationHooks()
    rng = np.random.default_rng(seed)
    results = [
        _check_link_power(exp, rng),
        _check_eigensolver(exp, rng, hooks),
        _check_data_coefficients(exp, rng, hooks),
    ]
    results.extend(_check_drift_and_safety(exp))
    results.append(_check_rician_moments(exp, seed))
    return results
