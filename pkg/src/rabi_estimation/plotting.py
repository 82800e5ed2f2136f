"""Static figures of fidelity curves, written to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def publication_axes(width: float = 6.0, height: float | None = None):
    golden = (5 ** 0.5 - 1.0) / 2.0
    fig, ax = plt.subplots(figsize=(width, height or width * golden))
    ax.set_xlabel(r"$t$ [$1/\Omega$]")
    ax.set_ylabel("estimation fidelity")
    ax.tick_params(direction="in", top=True, right=True)
    return fig, ax


def render_figure(times: np.ndarray, columns: dict[str, np.ndarray], path: Path, title: str = "") -> Path:
    """Draw whichever of the CSV columns are present and save to ``path``.

    The ensemble mean is a solid grey line with a one-standard-error band,
    the ODE branches are dashed, their mean and the exponential law dotted,
    and ``F_minus`` a dash-dot horizontal line.
    """
    fig, ax = publication_axes()
    mean = columns.get("mean_fidelity")
    if mean is not None:
        err = columns.get("std_error", np.zeros_like(mean))
        ax.fill_between(times, mean - err, mean + err, color="0.8", lw=0)
        ax.plot(times, mean, color="0.5", lw=1.5, label="ensemble mean")
    if "ode_plus" in columns:
        ax.plot(times, columns["ode_plus"], "k--", lw=1, label="ODE (+)")
        ax.plot(times, columns["ode_minus"], "k--", lw=1, label="ODE (-)")
        ax.plot(times, columns["ode_avg"], "k:", lw=1.5, label="ODE average")
        ax.axhline(columns["f_minus"][0], color="k", ls="-.", lw=0.8, label=r"$F_-$")
        if np.allclose(columns["ode_plus"], columns["ode_minus"]):
            ax.plot(times, columns["closed_form"], color="C0", ls=":", lw=1, label=r"$1-e^{-\gamma t/2}$")
    ax.set_ylim(0.0, 1.05)
    ax.set_xlim(times[0], times[-1] if times[-1] > times[0] else times[0] + 1.0)
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(loc="lower right", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
