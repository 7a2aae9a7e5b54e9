"""PNG figures for simulation traces and efficiency surfaces (headless Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LOOP_PANELS = (
    ("x_out", "sp_xout", "f_s", "outlet moisture [-]", "feed F_s [kg/s]"),
    ("T_chamber", "sp_tc", "mdot_air", "chamber temperature [K]", "air flow [kg/s]"),
    ("P_draft", "sp_p", "mdot_stack", "draft pressure [Pa]", "stack flow [kg/s]"),
)


def plot_trace(trace, path) -> Path:
    """Three loop panels (measurement, setpoint, actuator) stacked over time."""
    path = Path(path)
    t = trace.t
    fig, axes = plt.subplots(3, 1, figsize=(9, 9), sharex=True)
    for ax, (y, sp, u, ylab, ulab) in zip(axes, LOOP_PANELS):
        ax.plot(t, trace[y], color="tab:red", lw=1.2, label=y)
        ax.plot(t, trace[sp], color="tab:blue", lw=1.0, ls="--", label="setpoint")
        ax.set_ylabel(ylab)
        ax.grid(alpha=0.3)
        twin = ax.twinx()
        twin.plot(t, trace[u], color="tab:gray", lw=0.8, alpha=0.8, label=u)
        twin.set_ylabel(ulab, color="tab:gray")
        ax.legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_efficiency(trace, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.plot(trace.t, trace["eta_d"], color="tab:green")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("drying efficiency [-]")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_surface(grid, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.5, 5))
    vals = np.ma.masked_invalid(grid.values.T)
    mesh = ax.pcolormesh(grid.axis1, grid.axis2, vals, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=grid.quantity)
    ax.set_xlabel(f"{grid.axis1_name} [K]")
    ax.set_ylabel(f"{grid.axis2_name} [K]")
    ax.set_title(f"{grid.quantity} at {grid.fixed_name} = {grid.fixed_value:g} K", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
