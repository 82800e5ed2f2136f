"""Command-line harness: parameter runs and figure presets with CSV output.

Usage::

    rabi-estimation MODE --out FILE [options]

``MODE`` is one of ``simulate`` (Monte Carlo only), ``analytic`` (ODE and
closed-form curves only), ``compare`` (both), or the presets ``fig1``,
``fig2a`` and ``fig2b``.  Presets fix ``dp = 0.04``, ``tau = pi/50``,
1000 trajectories, a horizon of 800 time units and a detuning of 0,
gamma/20 or gamma/5 respectively; any explicit flag overrides the preset.

Exit codes: 0 success, 2 usage error, 3 invalid parameter value,
4 I/O failure, 5 simulation failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analytics
from .ensemble import MASK64, EnsembleSpec, EnsembleTrace, asymptotic_mean, run_ensemble
from .errors import DegenerateUpdateError, EstimationError
from .protocol import ProtocolParams
from .qubit import ONE, ZERO, QubitState, fidelity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4
EXIT_SIMULATION = 5

MODES = ("simulate", "analytic", "compare", "fig1", "fig2a", "fig2b")
CSV_COLUMNS = ("t", "mean_fidelity", "std_error", "ode_plus", "ode_minus", "ode_avg", "closed_form", "f_minus")

PRESET_DP = 0.04
PRESET_TAU = math.pi / 50
PRESET_TRAJECTORIES = 1000
PRESET_HORIZON = 800.0
# detuning as a fraction of gamma
PRESET_DETUNING = {"fig1": 0.0, "fig2a": 1.0 / 20.0, "fig2b": 1.0 / 5.0}

DEFAULT_DP = 0.04
DEFAULT_TAU = math.pi / 50
DEFAULT_STEPS = 2000
DEFAULT_TRAJECTORIES = 1000
DEFAULT_SEED = 0
TRANSIENT_GAMMAS = 5.0


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"{self.prog}: error: {message}", EXIT_USAGE)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: ProtocolParams
    n_trajectories: int
    n_steps: int
    master_seed: int
    output_path: Path
    ode_step: float
    workers: int = 1
    figure_path: Path | None = None
    init_actual: QubitState = field(default=ZERO)
    init_estimate: QubitState = field(default=ONE)

    @property
    def simulates(self) -> bool:
        return self.mode != "analytic"

    @property
    def analytic(self) -> bool:
        return self.mode != "simulate"


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rabi-estimation", description="Sequential unsharp-measurement state estimation of a Rabi-oscillating qubit.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--omega", type=float, default=None, help="actual Rabi frequency (default 1, sets the time unit)")
    p.add_argument("--omega-est", type=float, default=None, help="Rabi frequency assumed by the estimator")
    p.add_argument("--dp", type=float, default=None, help="measurement strength in [0, 1]")
    p.add_argument("--tau", type=float, default=None, help="time between measurements")
    p.add_argument("--steps", type=int, default=None, help="number of elementary steps")
    p.add_argument("--trajectories", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed, unsigned 64-bit")
    p.add_argument("--ode-step", type=float, default=None, help="Runge-Kutta step (default tau/10)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for the ensemble")
    p.add_argument("--out", type=Path, required=True, help="CSV output path")
    p.add_argument("--figure", type=Path, default=None, help="also render a figure to this path")
    return p


def parse_args(argv: list[str] | None = None) -> RunConfig:
    """Turn command-line arguments into a validated :class:`RunConfig`.

    Raises :class:`CliError` with ``EXIT_USAGE`` for malformed command lines
    and ``EXIT_INVALID`` for out-of-range values.
    """
    ns = _build_parser().parse_args(argv)
    preset = ns.mode in PRESET_DETUNING

    omega = 1.0 if ns.omega is None else ns.omega
    dp = ns.dp if ns.dp is not None else (PRESET_DP if preset else DEFAULT_DP)
    tau = ns.tau if ns.tau is not None else (PRESET_TAU if preset else DEFAULT_TAU)

    values = {"omega": omega, "dp": dp, "tau": tau}
    if ns.omega_est is not None:
        values["omega-est"] = ns.omega_est
    if ns.ode_step is not None:
        values["ode-step"] = ns.ode_step
    for name, value in values.items():
        if not math.isfinite(value):
            raise CliError(f"--{name} must be finite", EXIT_INVALID)
    if not 0.0 <= dp <= 1.0:
        raise CliError(f"--dp must lie in [0, 1], got {dp}", EXIT_INVALID)
    if tau <= 0.0:
        raise CliError(f"--tau must be positive, got {tau}", EXIT_INVALID)

    if ns.omega_est is not None:
        omega_e = ns.omega_est
    elif preset:
        omega_e = omega - PRESET_DETUNING[ns.mode] * dp * dp / tau
    else:
        omega_e = omega

    if ns.steps is not None:
        n_steps = ns.steps
    elif preset:
        n_steps = math.ceil(PRESET_HORIZON / tau)
    else:
        n_steps = DEFAULT_STEPS
    n_traj = ns.trajectories if ns.trajectories is not None else (PRESET_TRAJECTORIES if preset else DEFAULT_TRAJECTORIES)
    seed = ns.seed if ns.seed is not None else DEFAULT_SEED
    ode_step = ns.ode_step if ns.ode_step is not None else tau / 10.0

    if n_steps < 0:
        raise CliError(f"--steps must be non-negative, got {n_steps}", EXIT_INVALID)
    if n_traj < 1:
        raise CliError(f"--trajectories must be at least 1, got {n_traj}", EXIT_INVALID)
    if not 0 <= seed <= MASK64:
        raise CliError(f"--seed must be an unsigned 64-bit integer, got {seed}", EXIT_INVALID)
    if ode_step <= 0.0:
        raise CliError(f"--ode-step must be positive, got {ode_step}", EXIT_INVALID)
    if ns.workers < 1:
        raise CliError(f"--workers must be at least 1, got {ns.workers}", EXIT_INVALID)
    if ns.mode != "simulate" and dp == 0.0:
        raise CliError("analytic curves need dp > 0 (gamma = dp^2/tau must be positive)", EXIT_INVALID)

    return RunConfig(
        mode=ns.mode,
        params=ProtocolParams(omega=omega, omega_e=omega_e, dp=dp, tau=tau),
        n_trajectories=n_traj,
        n_steps=n_steps,
        master_seed=seed,
        output_path=ns.out,
        ode_step=ode_step,
        workers=ns.workers,
        figure_path=ns.figure,
    )


def analytic_columns(config: RunConfig) -> dict[str, np.ndarray]:
    """ODE branches, their mean, the exponential law and ``F_minus`` at ``t = k tau``.

    The integration step is snapped to ``tau / m`` with ``m`` the nearest
    positive integer to ``tau / ode_step`` so the grid hits every sample time.
    """
    params = config.params
    gamma, delta = params.gamma, params.delta
    f0 = fidelity(config.init_actual, config.init_estimate)
    n = config.n_steps
    times = np.arange(n + 1) * params.tau
    substeps = max(1, round(params.tau / config.ode_step))

    if n == 0:
        plus = minus = np.array([f0])
    else:
        h = params.tau / substeps
        t_end = n * params.tau
        plus = analytics.integrate_ode(analytics.OdeSpec(gamma, delta, +1, f0), t_end, h).fidelities[::substeps]
        minus = analytics.integrate_ode(analytics.OdeSpec(gamma, delta, -1, f0), t_end, h).fidelities[::substeps]
    _, f_minus, _ = analytics.asymptotic_fidelities(gamma, delta)
    return {
        "ode_plus": plus,
        "ode_minus": minus,
        "ode_avg": 0.5 * (plus + minus),
        "closed_form": analytics.closed_form_fidelity(times, gamma),
        "f_minus": np.full(n + 1, f_minus),
    }


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, times: np.ndarray, columns: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k, t in enumerate(times):
            row = [_fmt(t)]
            for name in CSV_COLUMNS[1:]:
                col = columns.get(name)
                row.append("" if col is None else _fmt(col[k]))
            writer.writerow(row)


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """Parse a file written by :func:`write_csv`; empty fields become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) if r[i] else math.nan for r in body]) for i, name in enumerate(header)}


def _summary_window(t_end: float, gamma: float) -> tuple[float, float]:
    start = TRANSIENT_GAMMAS / gamma if gamma > 0 else math.inf
    if start > t_end:
        start = 0.9 * t_end
    return start, t_end


def execute(config: RunConfig) -> int:
    """Run the configured experiment, write the CSV and print a summary line."""
    params = config.params
    times = np.arange(config.n_steps + 1) * params.tau
    columns: dict[str, np.ndarray] = {}
    trace: EnsembleTrace | None = None

    try:
        if config.simulates:
            spec = EnsembleSpec(
                params=params,
                n_trajectories=config.n_trajectories,
                n_steps=config.n_steps,
                master_seed=config.master_seed,
                init_actual=config.init_actual,
                init_estimate=config.init_estimate,
            )
            trace = run_ensemble(spec, workers=config.workers)
            columns["mean_fidelity"] = trace.mean_fidelity
            columns["std_error"] = trace.std_error
        if config.analytic:
            columns.update(analytic_columns(config))
    except DegenerateUpdateError as exc:
        raise CliError(f"simulation failed: {exc}", EXIT_SIMULATION) from exc
    except EstimationError as exc:
        raise CliError(str(exc), EXIT_INVALID) from exc

    try:
        write_csv(config.output_path, times, columns)
    except OSError as exc:
        raise CliError(f"cannot write {config.output_path}: {exc}", EXIT_IO) from exc

    gamma = params.dp ** 2 / params.tau
    start, end = _summary_window(float(times[-1]), gamma)
    if trace is not None:
        window_mean, window_err = asymptotic_mean(trace, start, end)
    else:
        mask = (times >= start) & (times <= end)
        window_mean, window_err = float(np.mean(columns["ode_avg"][mask])), 0.0
    f_bar = analytics.asymptotic_fidelities(gamma, params.delta)[2] if gamma > 0 else math.nan
    print(
        f"mode={config.mode} gamma={gamma:.6g} delta={params.delta:.6g} "
        f"window=[{start:.6g},{end:.6g}] window_mean={window_mean:.6f} +- {window_err:.6f} "
        f"f_bar={f_bar:.6f}"
    )

    if config.figure_path is not None:
        from .plotting import render_figure

        try:
            render_figure(times, columns, config.figure_path, title=f"{config.mode}: gamma={gamma:.4g}, delta={params.delta:.4g}")
        except OSError as exc:
            raise CliError(f"cannot write {config.figure_path}: {exc}", EXIT_IO) from exc
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return execute(parse_args(argv))
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
