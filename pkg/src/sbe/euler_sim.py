"""Euler scheme for stable-driven SDEs with semigroup-mollified drift.

Grid dynamics: X_{t_{i+1}} = X_{t_i} + b(t_i, X_{t_i}, h) + (Z_{t_{i+1}} - Z_{t_i}),
with the integrated step drift evaluated exactly per Fourier mode, and the
continuous extension X_t = X_tau + b(tau, X_tau, t - tau) + (Z_t - Z_tau)
anchored at the last grid point.

All runs walk a shared time partition (the scheme grid, optionally refined
by a noise subdivision and/or observation times).  Noise increments are
drawn per (path, partition interval) from counter-based streams and added
sequentially, so:

* identical provenance reproduces ensembles bitwise regardless of how
  paths are chunked across workers;
* runs at different step counts driven by the same partition live on one
  probability space (a coarse increment is consumed as the ordered sum of
  its fine sub-increments), which makes zero-drift level differences vanish
  bitwise and gives common-random-number variance reduction in general.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _modesum
from .besov_drift import (
    ConfigurationError,
    DriftField,
    check_mode_resolution,
    step_weights,
    validate_parameters,
)
from . import stable_kernel as sk
from .stable_kernel import IncrementSampler, StableLaw

__all__ = [
    "SchemeConfig",
    "PathEnsemble",
    "simulate_grid",
    "simulate_continuous",
    "reference_ensemble",
    "simulate_with_observations",
    "run_common_noise_levels",
    "run_pair_with_observations",
    "export_ensemble_csv",
    "OVERFLOW_BOUND",
]

OVERFLOW_BOUND = 1.0e6
_CHUNK_ELEMENT_BUDGET = 16_000_000


@dataclass(frozen=True)
class SchemeConfig:
    horizon: float
    steps: int
    start: float | tuple
    path_count: int
    master_seed: int
    off_grid_times: tuple = ()
    allow_invalid_params: bool = False
    threads: int = 0
    chunk_size: int = 32768

    def __post_init__(self):
        if not (0.0 < self.horizon <= 1.0):
            raise ValueError("horizon must lie in (0, 1]")
        if self.steps < 1:
            raise ValueError("need at least one step")
        if self.path_count < 1:
            raise ValueError("need at least one path")

    @property
    def step(self) -> float:
        return self.horizon / self.steps

    def grid_times(self) -> np.ndarray:
        return self.horizon * np.arange(self.steps + 1) / self.steps


@dataclass
class PathEnsemble:
    """Simulated positions plus full provenance for bitwise regeneration."""

    terminal: np.ndarray
    step_count: int
    provenance: dict
    obs_times: np.ndarray | None = None
    observations: np.ndarray | None = None  # (paths, n_obs[, d])
    trajectory: np.ndarray | None = None  # (paths, steps + 1[, d])
    overflow_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.overflow_mask is None:
            flat = self.terminal if self.terminal.ndim == 1 else np.max(
                np.abs(self.terminal), axis=-1
            )
            self.overflow_mask = np.abs(flat) > OVERFLOW_BOUND

    @property
    def n_paths(self) -> int:
        return self.terminal.shape[0]


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Partition:
    times: np.ndarray  # strictly increasing, times[0] = 0, times[-1] = T
    grid_nodes: np.ndarray  # indices of scheme grid points, both ends included

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.times)

    def signature(self) -> str:
        h = hashlib.sha256(self.times.tobytes() + self.grid_nodes.tobytes())
        return h.hexdigest()[:16]


def _build_partition(horizon: float, steps: int, subdivision: int = 1,
                     extra_times: tuple = ()) -> _Partition:
    grid = horizon * np.arange(steps + 1) / steps
    fine = horizon * np.arange(steps * subdivision + 1) / (steps * subdivision)
    times = np.union1d(fine, np.asarray(extra_times, dtype=float))
    if times[0] != 0.0 or abs(times[-1] - horizon) > 1e-15 * max(1.0, horizon):
        raise ValueError("observation times must lie in [0, horizon]")
    grid_nodes = np.searchsorted(times, grid)
    if not np.allclose(times[grid_nodes], grid, rtol=0.0, atol=1e-15):
        raise AssertionError("grid points lost while building the partition")
    return _Partition(times=times, grid_nodes=grid_nodes)


# ---------------------------------------------------------------------------
# core walker
# ---------------------------------------------------------------------------


def _drift_step_weights(drift: DriftField, law: StableLaw, grid: np.ndarray):
    """Per-step integrated-drift mode weights; collapsed if time-homogeneous."""
    n = grid.shape[0] - 1
    if drift.is_zero():
        return None
    if drift.n_cells == 1:
        w = step_weights(drift, law, float(grid[0]), float(grid[1] - grid[0]))
        return [w] * n
    return [
        step_weights(drift, law, float(grid[i]), float(grid[i + 1] - grid[i]))
        for i in range(n)
    ]


def _partial_weights(drift, law, anchor_t: float, t: float):
    if drift.is_zero():
        return None
    return step_weights(drift, law, anchor_t, t - anchor_t)


def _apply_drift(drift, pos, w, num_threads: int):
    if w is None:
        return None
    if drift.dim == 1:
        return _modesum.mode_sum_1d(pos, np.ascontiguousarray(w[:, 0]),
                                    drift.torus_length, num_threads)
    return _modesum.mode_sum_nd(pos, drift.modes, w, drift.torus_length)


def _walk_chunk(
    drift: DriftField,
    law: StableLaw,
    partition: _Partition,
    weights,
    incr: np.ndarray,
    start,
    obs_nodes: np.ndarray,
    obs_partial,
    record_grid: bool,
    num_threads: int,
):
    """Run one path chunk through the partition.

    Returns (terminal, observations, grid_trajectory).  The position update
    applies the step drift at each grid anchor and then the sub-increments
    one at a time in time order.
    """
    m = incr.shape[0]
    d = law.dim
    if d == 1:
        pos = np.full(m, float(np.atleast_1d(start)[0]))
    else:
        pos = np.tile(np.asarray(start, dtype=float), (m, 1))
    times = partition.times
    grid_set = {int(g): k for k, g in enumerate(partition.grid_nodes)}
    obs_out = None
    if obs_nodes.size:
        obs_out = np.empty((m, obs_nodes.size) + ((d,) if d > 1 else ()))
    traj = None
    if record_grid:
        traj = np.empty((m, partition.grid_nodes.size) + ((d,) if d > 1 else ()))
        traj[:, 0] = pos
    obs_by_node = {int(n): slot for slot, n in enumerate(obs_nodes)}
    need_zsum = any(int(n) not in grid_set for n in obs_nodes)
    anchor = None
    zsum = np.zeros_like(pos) if need_zsum else None
    step_idx = -1
    for node in range(times.shape[0]):
        if node in obs_by_node and node in grid_set:
            obs_out[:, obs_by_node[node]] = pos
        elif node in obs_by_node:
            w_part = obs_partial[obs_by_node[node]]
            val = anchor + zsum if w_part is None else anchor + zsum
            if w_part is not None:
                val = val + _apply_drift(drift, anchor, w_part, num_threads)
            obs_out[:, obs_by_node[node]] = val
        if node in grid_set:
            k = grid_set[node]
            if record_grid:
                traj[:, k] = pos
            if k == partition.grid_nodes.size - 1:
                break
            if need_zsum:
                anchor = pos.copy()
                zsum[...] = 0.0
            step_idx += 1
            if weights is not None:
                pos += _apply_drift(drift, pos, weights[step_idx], num_threads)
        delta = incr[:, node] if d > 1 else incr[:, node]
        pos += delta
        if need_zsum:
            zsum += delta
    return pos, obs_out, traj


def _chunk_ranges(n_paths: int, chunk: int):
    for lo in range(0, n_paths, chunk):
        yield lo, min(lo + chunk, n_paths)


def _auto_chunk(cfg: SchemeConfig, n_intervals: int) -> int:
    by_budget = max(sk.PATH_BLOCK, _CHUNK_ELEMENT_BUDGET // max(n_intervals, 1))
    chunk = min(cfg.chunk_size, by_budget)
    # align to sampler blocks so block streams are generated exactly once
    return max(sk.PATH_BLOCK, (chunk // sk.PATH_BLOCK) * sk.PATH_BLOCK)


def _precheck(drift: DriftField, law: StableLaw, cfg: SchemeConfig,
              finest_step: float) -> None:
    # smooth constructions (zero, constant, single modes) are not governed by
    # the distributional well-posedness window
    if drift.construction in ("random-fourier", "deterministic"):
        report = validate_parameters(law.alpha, law.dim, drift.besov)
        if not report.valid and not cfg.allow_invalid_params:
            raise ConfigurationError(
                "drift parameters violate the well-posedness window "
                f"(gamma = {report.gamma:.4f}, beta window {report.beta_window}); "
                "set allow_invalid_params to override"
            )
    check_mode_resolution(drift, law, finest_step)


def _provenance(drift, law, cfg, partition, subdivision, kind) -> dict:
    return {
        "kind": kind,
        "drift": drift.manifest_line(),
        "alpha": law.alpha,
        "dim": law.dim,
        "horizon": cfg.horizon,
        "steps": cfg.steps,
        "start": cfg.start,
        "paths": cfg.path_count,
        "seed": cfg.master_seed,
        "subdivision": subdivision,
        "partition": partition.signature(),
        "backend": _modesum.BACKEND,
    }


def _run(drift, law, cfg, partition, weights, obs_nodes, obs_partial,
         record_grid):
    sampler = IncrementSampler(law, cfg.master_seed)
    durations = partition.durations
    n_int = durations.shape[0]
    chunk = _auto_chunk(cfg, n_int)
    threads = _modesum.resolve_threads(cfg.threads)
    ranges = list(_chunk_ranges(cfg.path_count, chunk))

    def work(rng):
        lo, hi = rng
        incr = sampler.chunk_increments(lo, hi, durations)
        return _walk_chunk(drift, law, partition, weights, incr, cfg.start,
                           obs_nodes, obs_partial, record_grid, 1)

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(work, ranges))
    else:
        parts = [work(r) for r in ranges]
    terminal = np.concatenate([p[0] for p in parts], axis=0)
    obs = None
    if obs_nodes.size:
        obs = np.concatenate([p[1] for p in parts], axis=0)
    traj = None
    if record_grid:
        traj = np.concatenate([p[2] for p in parts], axis=0)
    return terminal, obs, traj


def simulate_grid(drift: DriftField, law: StableLaw, cfg: SchemeConfig,
                  subdivision: int = 1, record_grid: bool = False) -> PathEnsemble:
    """Run the grid scheme; `subdivision` refines only the noise partition.

    With subdivision rho the increments equal those of the rho-times-finer
    scheme, summed per step in time order, so coarse and fine runs with the
    same seed share one noise realisation.
    """
    _precheck(drift, law, cfg, cfg.step)
    partition = _build_partition(cfg.horizon, cfg.steps, subdivision)
    weights = _drift_step_weights(drift, law, cfg.grid_times())
    terminal, _, traj = _run(drift, law, cfg, partition, weights,
                             np.empty(0, dtype=np.int64), [], record_grid)
    return PathEnsemble(
        terminal=terminal,
        step_count=cfg.steps,
        provenance=_provenance(drift, law, cfg, partition, subdivision, "grid"),
        trajectory=traj,
    )


def simulate_continuous(drift: DriftField, law: StableLaw, cfg: SchemeConfig,
                        t: float) -> np.ndarray:
    """Positions of the continuous-time extension at t in (0, horizon].

    At grid times this reproduces simulate_grid values bitwise (same
    partition, same draw sequence, same update order).
    """
    if not (0.0 < t <= cfg.horizon):
        raise ValueError("query time outside (0, horizon]")
    ens = simulate_with_observations(drift, law, cfg, (t,))
    return ens.observations[:, 0]


def simulate_with_observations(
    drift: DriftField,
    law: StableLaw,
    cfg: SchemeConfig,
    obs_times: tuple,
    subdivision: int = 1,
    record_grid: bool = False,
) -> PathEnsemble:
    """Grid run reporting the continuous extension at the given times."""
    _precheck(drift, law, cfg, cfg.step)
    obs_times = tuple(float(t) for t in obs_times)
    for t in obs_times:
        if not (0.0 < t <= cfg.horizon):
            raise ValueError("observation times must lie in (0, horizon]")
    partition = _build_partition(cfg.horizon, cfg.steps, subdivision, obs_times)
    weights = _drift_step_weights(drift, law, cfg.grid_times())
    obs_nodes = np.searchsorted(partition.times, np.asarray(obs_times))
    h = cfg.step
    obs_partial = []
    grid_node_set = set(int(g) for g in partition.grid_nodes)
    for t, node in zip(obs_times, obs_nodes):
        if int(node) in grid_node_set:
            obs_partial.append(None)
            continue
        anchor_t = h * np.floor(t / h)
        obs_partial.append(_partial_weights(drift, law, float(anchor_t), t))
    terminal, obs, traj = _run(drift, law, cfg, partition, weights, obs_nodes,
                               obs_partial, record_grid)
    return PathEnsemble(
        terminal=terminal,
        step_count=cfg.steps,
        provenance=_provenance(drift, law, cfg, partition, subdivision, "observed"),
        obs_times=np.asarray(obs_times),
        observations=obs,
        trajectory=traj,
    )


def reference_ensemble(drift: DriftField, law: StableLaw, cfg: SchemeConfig,
                       refinement: int, record_grid: bool = False) -> PathEnsemble:
    """Fine-step proxy for the SDE: the same scheme at step h / refinement.

    Drawing its increments on its own grid makes them exactly the
    sub-increments a coarse run with `subdivision=refinement` consumes, so
    the pair is coupled by common random numbers.
    """
    if refinement < 4:
        raise ValueError("refinement must be at least 4")
    fine_cfg = replace(cfg, steps=cfg.steps * refinement)
    return simulate_grid(drift, law, fine_cfg, record_grid=record_grid)


def run_common_noise_levels(
    drift: DriftField,
    law: StableLaw,
    cfg: SchemeConfig,
    n_list: list[int],
    consumer,
) -> None:
    """Drive several step counts through one noise realisation, chunkwise.

    `n_list` entries must divide the finest count.  For each path chunk the
    finest-partition increments are drawn once and every level walks them;
    `consumer(lo, hi, {n: terminal_positions})` folds the results.
    """
    n_fine = max(n_list)
    for n in n_list:
        if n_fine % n:
            raise ConfigurationError("level step counts must nest")
    _precheck(drift, law, replace(cfg, steps=n_fine), cfg.horizon / n_fine)
    partition = _build_partition(cfg.horizon, n_fine, 1)
    grids = {n: cfg.horizon * np.arange(n + 1) / n for n in n_list}
    weight_table = {n: _drift_step_weights(drift, law, grids[n]) for n in n_list}
    part_table = {
        n: _Partition(times=partition.times,
                      grid_nodes=partition.grid_nodes[:: n_fine // n])
        for n in n_list
    }
    sampler = IncrementSampler(law, cfg.master_seed)
    durations = partition.durations
    chunk = _auto_chunk(cfg, durations.shape[0])
    threads = _modesum.resolve_threads(cfg.threads)
    no_obs = np.empty(0, dtype=np.int64)

    def work(rng):
        lo, hi = rng
        incr = sampler.chunk_increments(lo, hi, durations)
        out = {}
        for n in n_list:
            pos, _, _ = _walk_chunk(drift, law, part_table[n], weight_table[n],
                                    incr, cfg.start, no_obs, [], False, 1)
            out[n] = pos
        return lo, hi, out

    ranges = list(_chunk_ranges(cfg.path_count, chunk))
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for lo, hi, out in ex.map(work, ranges):
                consumer(lo, hi, out)
    else:
        for rng in ranges:
            lo, hi, out = work(rng)
            consumer(lo, hi, out)


def run_pair_with_observations(
    drift: DriftField,
    law: StableLaw,
    cfg: SchemeConfig,
    refinement: int,
    obs_times: tuple,
):
    """Coarse scheme and its fine-step proxy on shared noise, both observed.

    Returns (coarse: PathEnsemble, fine: PathEnsemble) whose observations
    are the continuous extensions at `obs_times` anchored to the respective
    grids.  Both walk the union partition of the fine grid and the
    observation times, consuming identical increments.
    """
    if refinement < 1:
        raise ValueError("refinement must be positive")
    obs_times = tuple(float(t) for t in obs_times)
    n_fine = cfg.steps * refinement
    _precheck(drift, law, replace(cfg, steps=n_fine), cfg.horizon / n_fine)
    partition = _build_partition(cfg.horizon, n_fine, 1, obs_times)
    fine_nodes = np.searchsorted(
        partition.times, cfg.horizon * np.arange(n_fine + 1) / n_fine
    )
    results = []
    sampler = IncrementSampler(law, cfg.master_seed)
    durations = partition.durations
    chunk = _auto_chunk(cfg, durations.shape[0])
    threads = _modesum.resolve_threads(cfg.threads)
    obs_nodes = np.searchsorted(partition.times, np.asarray(obs_times))

    specs = []
    for steps, stride in ((cfg.steps, refinement), (n_fine, 1)):
        h = cfg.horizon / steps
        grid = cfg.horizon * np.arange(steps + 1) / steps
        part = _Partition(times=partition.times, grid_nodes=fine_nodes[::stride])
        weights = _drift_step_weights(drift, law, grid)
        grid_node_set = set(int(g) for g in part.grid_nodes)
        partial = []
        for t, node in zip(obs_times, obs_nodes):
            if int(node) in grid_node_set:
                partial.append(None)
            else:
                anchor_t = h * np.floor(t / h)
                partial.append(_partial_weights(drift, law, float(anchor_t), t))
        specs.append((steps, part, weights, partial))

    def work(rng):
        lo, hi = rng
        incr = sampler.chunk_increments(lo, hi, durations)
        outs = []
        for steps, part, weights, partial in specs:
            outs.append(
                _walk_chunk(drift, law, part, weights, incr, cfg.start,
                            obs_nodes, partial, False, 1)
            )
        return outs

    ranges = list(_chunk_ranges(cfg.path_count, chunk))
    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            all_parts = list(ex.map(work, ranges))
    else:
        all_parts = [work(r) for r in ranges]
    for idx, (steps, part, weights, partial) in enumerate(specs):
        terminal = np.concatenate([p[idx][0] for p in all_parts], axis=0)
        obs = np.concatenate([p[idx][1] for p in all_parts], axis=0)
        scfg = replace(cfg, steps=steps)
        results.append(
            PathEnsemble(
                terminal=terminal,
                step_count=steps,
                provenance=_provenance(drift, law, scfg, part, 1, "pair"),
                obs_times=np.asarray(obs_times),
                observations=obs,
            )
        )
    return results[0], results[1]


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def export_ensemble_csv(ens: PathEnsemble, path: str) -> None:
    """CSV export with columns (path, time, x_1..x_d)."""
    d = 1 if ens.terminal.ndim == 1 else ens.terminal.shape[1]
    header = "path,time," + ",".join(f"x_{i+1}" for i in range(d))
    t_end = ens.provenance["horizon"]
    rows = []
    for p in range(ens.n_paths):
        if ens.obs_times is not None:
            for j, t in enumerate(ens.obs_times):
                coords = np.atleast_1d(ens.observations[p, j])
                rows.append(f"{p},{t:.17g}," + ",".join(f"{c:.17g}" for c in coords))
        coords = np.atleast_1d(ens.terminal[p])
        rows.append(f"{p},{t_end:.17g}," + ",".join(f"{c:.17g}" for c in coords))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(rows) + "\n")


def write_manifest(ens: PathEnsemble, path: str) -> None:
    with open(path, "w") as fh:
        for key in sorted(ens.provenance):
            fh.write(f"{key} = {ens.provenance[key]}\n")
