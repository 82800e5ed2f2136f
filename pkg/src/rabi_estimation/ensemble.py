"""Seeded Monte Carlo ensembles of estimation trajectories.

Seeding
-------
Trajectory ``k`` of an ensemble with master seed ``s`` draws its uniforms
from numpy's ``PCG64`` bit generator seeded with the ``k``-th output of a
SplitMix64 stream started at ``s``:

    x_k = (s + (k + 1) * 0x9E3779B97F4A7C15) mod 2**64
    seed_k = mix64(x_k)

where ``mix64`` is the SplitMix64 finalizer (shifts 30/27/31, multipliers
``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``).  Each step consumes one
double from ``Generator.random``.

Reduction
---------
Trajectories are simulated in fixed blocks of ``BLOCK_SIZE`` consecutive
indices.  Each block yields a per-time mean and sum of squared deviations;
blocks are merged in index order with the pairwise update of Chan et al.
Neither the block layout nor the merge order depends on the number of
worker processes, so results are bit-identical for any ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, InvalidWindowError
from .protocol import ProtocolParams, simulate_block
from .qubit import ONE, ZERO, QubitState, make_measurement_model

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
BLOCK_SIZE = 256


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trajectory_seed(master_seed: int, index: int) -> int:
    return mix64(master_seed + (index + 1) * GOLDEN_GAMMA)


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent uniform stream for trajectory ``index``."""
    return np.random.Generator(np.random.PCG64(trajectory_seed(master_seed, index)))


@dataclass(frozen=True)
class EnsembleSpec:
    params: ProtocolParams
    n_trajectories: int
    n_steps: int
    master_seed: int
    init_actual: QubitState = field(default=ZERO)
    init_estimate: QubitState = field(default=ONE)

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise InvalidParameterError(f"n_trajectories must be >= 1, got {self.n_trajectories}")
        if self.n_steps < 0:
            raise InvalidParameterError(f"n_steps must be >= 0, got {self.n_steps}")
        if not 0 <= self.master_seed <= MASK64:
            raise InvalidParameterError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.n_steps > 0 and self.params.tau <= 0:
            raise InvalidParameterError("tau must be positive to advance in time")


@dataclass(frozen=True, eq=False)
class EnsembleTrace:
    times: np.ndarray
    mean_fidelity: np.ndarray
    std_error: np.ndarray
    n_trajectories: int

    def __post_init__(self):
        if not (len(self.times) == len(self.mean_fidelity) == len(self.std_error)):
            raise InvalidParameterError("ensemble trace columns differ in length")


def _run_block(spec: EnsembleSpec, start: int, stop: int) -> tuple[int, np.ndarray, np.ndarray]:
    model = make_measurement_model(spec.params.dp)
    rngs = [trajectory_rng(spec.master_seed, k) for k in range(start, stop)]
    fids = simulate_block(spec.params, model, spec.init_actual, spec.init_estimate, spec.n_steps, rngs, first_index=start)
    mean = fids.mean(axis=0)
    m2 = ((fids - mean) ** 2).sum(axis=0)
    return stop - start, mean, m2


def _merge(a, b):
    n_a, mean_a, m2_a = a
    n_b, mean_b, m2_b = b
    n = n_a + n_b
    diff = mean_b - mean_a
    mean = mean_a + diff * (n_b / n)
    m2 = m2_a + m2_b + diff * diff * (n_a * n_b / n)
    return n, mean, m2


def run_ensemble(spec: EnsembleSpec, workers: int = 1) -> EnsembleTrace:
    """Mean fidelity and its standard error over ``spec.n_trajectories`` runs.

    ``workers > 1`` distributes blocks over that many processes; the
    result does not depend on it.
    """
    if workers < 1:
        raise InvalidParameterError(f"workers must be >= 1, got {workers}")
    bounds = [(s, min(s + BLOCK_SIZE, spec.n_trajectories)) for s in range(0, spec.n_trajectories, BLOCK_SIZE)]
    if workers == 1 or len(bounds) == 1:
        parts = [_run_block(spec, s, e) for s, e in bounds]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(bounds))) as pool:
            parts = list(pool.map(_run_block, [spec] * len(bounds), *zip(*bounds)))

    acc = parts[0]
    for part in parts[1:]:
        acc = _merge(acc, part)
    n, mean, m2 = acc
    if n > 1:
        std_error = np.sqrt(m2 / (n - 1)) / math.sqrt(n)
    else:
        std_error = np.zeros_like(mean)
    times = np.arange(spec.n_steps + 1) * spec.params.tau
    return EnsembleTrace(times, np.clip(mean, 0.0, 1.0), std_error, n)


def asymptotic_mean(trace: EnsembleTrace, window_start: float, window_end: float) -> tuple[float, float]:
    """Time average of the ensemble mean over ``[window_start, window_end]``.

    The returned error is the window average of the pointwise standard
    errors, i.e. the bound for fully correlated samples; successive points
    of one ensemble are strongly correlated, so independent-sample
    propagation would understate it.
    """
    if window_end < window_start:
        raise InvalidWindowError(f"window end {window_end} precedes start {window_start}")
    mask = (trace.times >= window_start) & (trace.times <= window_end)
    if not mask.any():
        raise InvalidWindowError(f"no samples in [{window_start}, {window_end}]")
    return float(np.mean(trace.mean_fidelity[mask])), float(np.mean(trace.std_error[mask]))
