"""Figure rendering for run, sweep and pattern outputs.

matplotlib is imported lazily so headless metric-only runs never touch it.
Figures are written next to the CSVs they illustrate.
"""

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def run_figure(result, path) -> str:
    """Sample path of one run: total backlog and beacon power over time."""
    plt = _plt()
    tr = result.trace
    fig, (ax_q, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax_q.plot(tr.t, tr.sum_queue, lw=0.8, color="tab:blue")
    ax_q.set_ylabel("total backlog [bits]")
    ax_q.grid(alpha=0.3)
    # beacon power is bang-bang; a windowed mean shows the duty cycle
    win = max(len(tr.t) // 200, 1)
    kernel = np.ones(win) / win
    duty = np.convolve(tr.p_ap, kernel, mode="same")
    ax_p.plot(tr.t, duty, lw=0.8, color="tab:red")
    ax_p.set_ylabel(f"beacon power, {win}-slot mean [W]")
    ax_p.set_xlabel("slot")
    ax_p.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def sweep_figure(results, path) -> str:
    """Average beacon power and average backlog against the tradeoff weight."""
    plt = _plt()
    v = [r.metrics.v for r in results]
    power = [r.metrics.avg_p_ap for r in results]
    backlog = [r.metrics.avg_sum_queue for r in results]
    fig, (ax_p, ax_q) = plt.subplots(1, 2, figsize=(10, 4))
    ax_p.semilogx(v, power, "o-", color="tab:red")
    ax_p.set_xlabel("tradeoff weight V")
    ax_p.set_ylabel("avg beacon power [W]")
    ax_p.grid(alpha=0.3, which="both")
    ax_q.semilogx(v, backlog, "s-", color="tab:blue")
    ax_q.set_xlabel("tradeoff weight V")
    ax_q.set_ylabel("avg total backlog [bits]")
    ax_q.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def pattern_figure(angles, pattern, node_angles, path) -> str:
    """Average radiated power versus angle, with node bearings marked."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(8, 4))
    deg = np.degrees(angles)
    ax.plot(deg, pattern, lw=1.2, color="tab:green")
    for i, theta in enumerate(node_angles):
        ax.axvline(np.degrees(theta), color="gray", ls=":", lw=0.8)
        ax.annotate(f"n{i}", (np.degrees(theta), ax.get_ylim()[1]),
                    ha="center", fontsize=8, color="gray")
    ax.set_xlabel("angle [deg]")
    ax.set_ylabel("avg radiated power [W]")
    ax.set_xlim(0.0, 180.0)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)
