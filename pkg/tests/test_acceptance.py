"""Acceptance gate: one test per shipped guarantee, on the bundled benchmark.

The long runs are shared: a paired-seed sweep at the bundled V list plus one
run with the per-slot drift checker enabled, 5e5 slots in total. Each test
prints a single verdict line; pytest -v adds the pass/fail status per
criterion.
"""

import dataclasses

import numpy as np
import pytest

from wpcnsim import cli, config
from wpcnsim.beamforming import max_eigvec
from wpcnsim.capacity import link_capacity, rate_slope
from wpcnsim.lyapunov import SystemConstants, threshold_for_alpha
from wpcnsim.routing import optimal_link_power
from wpcnsim.simulator import beam_pattern, run, sweep_v

HORIZON = 100_000
GRID = 180  # one-degree angle bins


def _verdict(num, label, ok, detail=""):
    print(f"criterion {num:02d} {label}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"criterion {num} {label}: {detail}"


@pytest.fixture(scope="module")
def bundled():
    return config.load_experiment()


@pytest.fixture(scope="module")
def sweep_results(bundled):
    cfg = dataclasses.replace(bundled.run_config, horizon=HORIZON, trace="scalar")
    return sweep_v(cfg, list(bundled.v_list))


@pytest.fixture(scope="module")
def drift_run(bundled):
    cfg = dataclasses.replace(bundled.run_config, horizon=HORIZON,
                              drift_check_every=1, trace="off")
    return run(cfg)


@pytest.fixture(scope="module")
def default_v_run(sweep_results, bundled):
    # the sweep element at the config's default V doubles as the showcase run
    v = bundled.run_config.constants.v
    return next(r for r in sweep_results if r.metrics.v == v)


def test_criterion_01_battery_safety(sweep_results, drift_run):
    runs = list(sweep_results) + [drift_run]
    slots = sum(r.metrics.horizon for r in runs)
    outages = sum(r.metrics.battery_outages for r in runs)
    unsafe = sum(r.metrics.safety_violations for r in runs)
    _verdict(1, "battery safety", slots >= 500_000 and outages == 0 and unsafe == 0,
             f"{slots} slots, {outages} outages, {unsafe} low-battery transmissions")


def test_criterion_02_drift_bound(drift_run):
    m = drift_run.metrics
    ok = m.drift_checks == HORIZON and m.drift_failures == 0
    _verdict(2, "pathwise drift bound", ok,
             f"{m.drift_checks} checks, {m.drift_failures} failures, "
             f"min margin {m.min_drift_margin:.3g}")


def test_criterion_03_link_power_oracle(bundled):
    const = bundled.run_config.constants
    cap = bundled.run_config.cap_params
    rng = np.random.default_rng(2024)
    n = 10_000
    u0 = const.congestion_threshold
    weights = rng.uniform(-0.5 * u0, 3.0 * u0, n)
    prices = np.where(rng.random(n) < 0.15, 0.0, 10 ** rng.uniform(12.0, 16.0, n))
    gains = 10 ** rng.uniform(-8.0, np.log10(cap.g_max_sq), n)
    crafted = rng.random(n) < 0.35
    target = rng.uniform(0.05, 0.95, n) * const.p_max
    solved = np.abs(weights) * cap.bandwidth / (
        (target + cap.bandwidth * cap.noise_psd / gains) * np.log(2.0))
    prices = np.where(crafted, solved, prices)
    weights = np.where(crafted, np.abs(weights), weights)

    p_star = optimal_link_power(weights, prices, gains, const, cap)
    grid = np.linspace(0.0, const.p_max, 2000)
    step = float(grid[1] - grid[0])
    worst_obj = 0.0
    worst_arg = 0.0
    for lo in range(0, n, 1000):
        sl = slice(lo, lo + 1000)
        rates = link_capacity(grid[None, :], gains[sl, None], cap)
        obj = prices[sl, None] * grid[None, :] - weights[sl, None] * rates
        k = np.argmin(obj, axis=1)
        rows = np.arange(len(k))
        f_grid = obj[rows, k]
        f_star = prices[sl] * p_star[sl] - weights[sl] * link_capacity(
            p_star[sl], gains[sl], cap)
        gap = (f_star - f_grid) / np.maximum(np.abs(f_grid), 1e-18)
        worst_obj = max(worst_obj, float(gap.max()))
        worst_arg = max(worst_arg, float(np.abs(p_star[sl] - grid[k]).max()))
    ok = worst_obj <= 1e-9 and worst_arg <= step + 1e-15
    _verdict(3, "link power vs grid oracle", ok,
             f"worst relative objective gap {worst_obj:.2e}, "
             f"worst argmin gap {worst_arg:.2e} (step {step:.2e})")


def test_criterion_04_eigensolver_oracle():
    rng = np.random.default_rng(77)
    worst_res = 0.0
    worst_lam = 0.0
    rayleigh_dominated = True
    for _ in range(1000):
        m = int(rng.integers(2, 17))
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        h = a @ a.conj().T
        lam, w = max_eigvec(h)
        scale = max(float(np.linalg.norm(h)), 1.0)
        worst_res = max(worst_res, float(np.linalg.norm(h @ w - lam * w)) / scale)
        top = float(np.linalg.eigvalsh(h)[-1])
        worst_lam = max(worst_lam, abs(lam - top) / abs(top))
        z = rng.standard_normal((1000, m)) + 1j * rng.standard_normal((1000, m))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        quad = np.real(np.einsum("km,mn,kn->k", z.conj(), h, z))
        if quad.max() > lam:
            rayleigh_dominated = False
    ok = worst_res <= 1e-8 and worst_lam <= 1e-9 and rayleigh_dominated
    _verdict(4, "eigensolver oracle", ok,
             f"worst residual {worst_res:.2e}, worst eigenvalue gap "
             f"{worst_lam:.2e}, Rayleigh dominance {rayleigh_dominated}")


def test_criterion_05_tradeoff_trends(sweep_results, bundled):
    power = np.array([r.metrics.avg_p_ap for r in sweep_results])
    backlog = np.array([r.metrics.avg_sum_queue for r in sweep_results])
    v = np.array(bundled.v_list)
    drops = np.diff(power)
    inversions = drops > 0
    tolerable = inversions.sum() <= 1 and np.all(
        drops[inversions] <= 0.02 * power[:-1][inversions]) if inversions.any() \
        else True
    design = np.vstack([v, np.ones_like(v)]).T
    coef, *_ = np.linalg.lstsq(design, backlog, rcond=None)
    resid = backlog - design @ coef
    r2 = 1.0 - float(resid @ resid) / float(
        ((backlog - backlog.mean()) ** 2).sum())
    ok = tolerable and r2 >= 0.9
    _verdict(5, "power/backlog tradeoff", ok,
             f"avg power {np.array2string(power, precision=4)}, "
             f"backlog fit R^2 {r2:.3f}")


def test_criterion_06_stability(default_v_run):
    q = default_v_run.trace.sum_queue
    dec = len(q) // 10
    middle = float(q[4 * dec:5 * dec].mean())
    last = float(q[9 * dec:].mean())
    deciles = [float(q[i * dec:(i + 1) * dec].mean()) for i in range(5, 10)]
    diverging = all(b > a for a, b in zip(deciles, deciles[1:]))
    ok = last <= 2.0 * middle and not diverging
    _verdict(6, "queue stability", ok,
             f"middle decile {middle:.4g}, last decile {last:.4g}, "
             f"ratio {last / middle:.3f}")


def test_criterion_07_capacity_contract(bundled):
    cap = bundled.run_config.cap_params
    rng = np.random.default_rng(5)
    gains = rng.uniform(0.0, cap.g_max_sq, 100)
    zeros = link_capacity(np.zeros_like(gains), gains, cap)
    zero_ok = not zeros.any()
    powers = rng.uniform(0.0, bundled.run_config.constants.p_max, 10_000)
    g = np.minimum(rng.uniform(0.0, 2.0 * cap.g_max_sq, 10_000), cap.g_max_sq)
    slope = rate_slope(cap)
    violations = int(np.count_nonzero(link_capacity(powers, g, cap) > slope * powers))
    ok = zero_ok and violations == 0
    _verdict(7, "capacity contract", ok,
             f"C(0)=0 exact: {zero_ok}, tangent violations {violations}/10000")


def test_criterion_08_threshold_algebra(bundled):
    const = bundled.run_config.constants
    slope = const.rate_slope
    u0_closed = (3.0 + 2.0 * np.sqrt(2.0)) * slope * const.p_max
    norm_closed = (2.0 + np.sqrt(2.0)) * slope
    rel_u0 = abs(const.congestion_threshold - u0_closed) / u0_closed
    rel_norm = abs(const.energy_norm - norm_closed) / norm_closed
    alphas = np.linspace(1.05, 6.0, 4001)
    values = threshold_for_alpha(alphas, const.p_max, slope)
    best = float(alphas[np.argmin(values)])
    grid_step = float(alphas[1] - alphas[0])
    alpha_ok = abs(best - (1.0 + np.sqrt(2.0))) <= grid_step
    ok = rel_u0 <= 1e-12 and rel_norm <= 1e-12 and alpha_ok
    _verdict(8, "threshold algebra", ok,
             f"closed-form gaps {rel_u0:.1e}/{rel_norm:.1e}, "
             f"alpha grid argmin {best:.4f}")


def test_criterion_09_beam_pattern(default_v_run, bundled):
    topo = bundled.run_config.topology
    channel = bundled.run_config.channel
    angles, pat = beam_pattern(default_v_run, topo, channel, n_grid=GRID)
    mirror_ok = all(pat[k] == pat[GRID - k] for k in range(1, GRID))

    # traffic carriers: the stream sources plus the relay they share
    sources = [src for src, _ in topo.streams]
    relays = sorted({rx for (tx, rx) in topo.links if tx in sources})
    carriers = sorted(set(sources) | set(relays))

    step = float(angles[1] - angles[0])
    n = len(pat)
    local_max = [i for i in range(n)
                 if (i == 0 or pat[i] >= pat[i - 1])
                 and (i == n - 1 or pat[i] >= pat[i + 1])]
    local_max.sort(key=lambda i: -pat[i])
    merged = []
    for i in local_max:
        th = float(angles[i])
        if not any(abs(th - t) <= 2 * step or abs((np.pi - th) - t) <= 2 * step
                   for t, _ in merged):
            merged.append((th, float(pat[i])))
    top = merged[:len(carriers)]

    offsets = {}
    used = set()
    for node in carriers:
        tgt = topo.node_angles[node]
        best, best_k = min(
            (min(abs(t - tgt), abs((np.pi - t) - tgt)), k)
            for k, (t, _) in enumerate(top))
        offsets[node] = best
        used.add(best_k)
    aligned = all(off <= step + 1e-12 for off in offsets.values())
    distinct = len(used) == len(carriers)
    ok = mirror_ok and aligned and distinct
    detail = ", ".join(
        f"node {nd}: off {np.degrees(off):.2f} deg" for nd, off in offsets.items())
    _verdict(9, "beam pattern", ok,
             f"mirror exact: {mirror_ok}; top peaks vs carriers: {detail}")


def test_criterion_10_cli_determinism(tmp_path):
    args = ["run", "--set", "run.T=2000", "--trace", "scalar"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    same_metrics = (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    same_trace = (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    _verdict(10, "output determinism", same_metrics and same_trace,
             f"metrics identical: {same_metrics}, trace identical: {same_trace}")
