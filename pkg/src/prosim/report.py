"""Figures written next to the CLI's delimited output."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .calendar import WEEKDAYS  # noqa: E402
from .metrics import cycle_times_hours, relative_hours  # noqa: E402


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_distributions(real, sim, out_dir) -> list:
    """Cycle-time and case-relative event-hour histograms, real vs simulated."""
    paths = []
    for name, fn, xlabel in (("cycle_times.png", cycle_times_hours, "cycle time (h)"),
                             ("relative_hours.png", relative_hours, "hours since case arrival")):
        a, b = np.asarray(fn(real), float), np.asarray(fn(sim), float)
        bins = np.histogram_bin_edges(np.concatenate([a, b]), bins=30)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(a, bins=bins, alpha=0.5, density=True, label="real")
        ax.hist(b, bins=bins, alpha=0.5, density=True, label="simulated")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("density")
        ax.legend()
        paths.append(_save(fig, os.path.join(out_dir, name)))
    return paths


def plot_calendar(resource, cal, path):
    fig, axes = plt.subplots(1, 2, figsize=(10, 3), sharey=True)
    for ax, arr, title in ((axes[0], cal.p_abs, "P_ABS"), (axes[1], cal.p_rel, "P_REL")):
        im = ax.imshow(arr, aspect="auto", vmin=0, vmax=1, cmap="viridis")
        ax.set_title(f"{resource} {title}")
        ax.set_xlabel(f"granule ({cal.granularity.granule_minutes} min)")
    axes[0].set_yticks(range(7))
    axes[0].set_yticklabels([d[:3].title() for d in WEEKDAYS])
    fig.colorbar(im, ax=axes.ravel().tolist())
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path


def plot_calendars(calendars: dict, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for r in sorted(calendars):
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in r)
        paths.append(plot_calendar(r, calendars[r], os.path.join(out_dir, f"calendar_{safe}.png")))
    return paths


def plot_sweep(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for gm in sorted({r.granule_minutes for r in rows}):
        sel = [r for r in rows if r.granule_minutes == gm]
        betas = sorted({r.beta for r in sel})
        best = [min(r.red for r in sel if r.beta == b) for b in betas]
        ax.plot(betas, best, marker="o", label=f"{gm} min")
    ax.set_xlabel("beta")
    ax.set_ylabel("RED (best over kappa)")
    ax.legend()
    return _save(fig, path)
