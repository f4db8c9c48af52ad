"""Figures for simulation traces, written next to the CSV output."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def _fig(width=6.0, height=3.2):
    return plt.subplots(figsize=(width, height), constrained_layout=True)


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.savefig(path)
    plt.close(fig)
    return path


def _agents(ax, t, data, label):
    for i in range(data.shape[1]):
        ax.plot(t, data[:, i], label=f"{label}{i + 1}")


def outputs(tr, out_dir):
    fig, ax = _fig()
    ax.plot(tr.t, tr.y0, "k--", label="y0")
    _agents(ax, tr.t, tr.y, "y")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("output")
    ax.legend(ncol=5)
    return _save(fig, out_dir, "outputs.png")


def tracking_errors(tr, out_dir):
    fig, ax = _fig()
    _agents(ax, tr.t, tr.e, "e")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("tracking error")
    ax.legend(ncol=4)
    return _save(fig, out_dir, "tracking_errors.png")


def control_input(tr, out_dir, agent=1):
    fig, ax = _fig()
    ax.step(tr.t, tr.u[:, agent - 1], where="post")
    ax.set_xlabel("t [s]")
    ax.set_ylabel(f"u{agent}")
    return _save(fig, out_dir, f"control_input_agent{agent}.png")


def trigger_detail(tr, out_dir, s, agent=1, t_max=4.0):
    """Measurement error against the triggering threshold, with trigger instants."""
    p = s.params[agent - 1]
    sel = tr.t <= t_max
    t = tr.t[sel]
    thresh = p.kappa * tr.ev[sel, agent - 1] ** 2 + p.beta
    if p.mode.value == "dynamic":
        thresh = thresh + tr.h[sel, agent - 1]
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6.0, 4.2), sharex=True, constrained_layout=True,
                                  gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(t, tr.zeta_sq[sel, agent - 1], label="measurement error")
    ax.plot(t, thresh, label="threshold")
    ax.legend()
    times = [ev.t for ev in tr.events_for(agent) if ev.t <= t_max]
    ax2.vlines(times, 0, 1, linewidth=0.5)
    ax2.set_yticks([])
    ax2.set_xlabel("t [s]")
    return _save(fig, out_dir, f"trigger_agent{agent}.png")


def inter_event_times(tr, out_dir, t_max=4.0):
    fig, ax = _fig()
    for i in range(1, tr.n_agents + 1):
        times = np.array([ev.t for ev in tr.events_for(i) if ev.t <= t_max])
        if len(times) > 1:
            ax.plot(times[1:], np.diff(times), ".", markersize=2, label=f"agent {i}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("inter-event time [s]")
    ax.legend(ncol=4)
    return _save(fig, out_dir, "inter_event_times.png")


def adaptive_gains(tr, out_dir):
    fig, ax = _fig()
    _agents(ax, tr.t, tr.K, "K")
    ax.set_xlabel("t [s]")
    ax.legend(ncol=4)
    return _save(fig, out_dir, "adaptive_gains.png")


def trigger_variables(tr, out_dir):
    fig, ax = _fig()
    _agents(ax, tr.t, tr.h, "h")
    ax.set_xlabel("t [s]")
    ax.legend(ncol=4)
    return _save(fig, out_dir, "trigger_variables.png")


def render_run(tr, s, out_dir, window=4.0):
    """All figures for one run; returns the written paths."""
    with plt.rc_context(RC):
        return [
            outputs(tr, out_dir),
            tracking_errors(tr, out_dir),
            control_input(tr, out_dir),
            trigger_detail(tr, out_dir, s, t_max=window),
            inter_event_times(tr, out_dir, t_max=window),
            adaptive_gains(tr, out_dir),
            trigger_variables(tr, out_dir),
        ]


def render_comparison(counts, out_dir):
    """Grouped bar chart of per-agent update counts; ``counts`` maps mode to a list."""
    with plt.rc_context(RC):
        fig, ax = _fig()
        modes = list(counts)
        n = len(next(iter(counts.values())))
        width = 0.8 / len(modes)
        x = np.arange(1, n + 1)
        for k, m in enumerate(modes):
            ax.bar(x + (k - (len(modes) - 1) / 2) * width, counts[m], width, label=m)
        ax.set_xticks(x)
        ax.set_xlabel("agent")
        ax.set_ylabel("controller updates")
        ax.legend()
        return [_save(fig, out_dir, "update_counts.png")]
