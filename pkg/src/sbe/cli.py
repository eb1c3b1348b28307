"""Command-line harness: configuration, orchestration, artifact emission.

Usage: sbe <mode> --config <path> [--out <dir>] [--seed N] [--threads N] [--plot]

Modes: kernel-check, drift-check, simulate, rate, duhamel, decompose,
inequalities.  Configs are flat "key = value" text (see README for the key
table); every run writes a manifest sufficient to reproduce its artifacts
bitwise.  Exit codes: 0 success, 1 assertion failure, 2 configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import _modesum
from . import besov_drift as bd
from . import density_weak_error as dw
from . import euler_sim as es
from . import inequality_lab as il
from . import stable_kernel as sk

MODES = ("kernel-check", "drift-check", "simulate", "rate", "duhamel",
         "decompose", "inequalities")

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_CONFIG = 2
EXIT_IO = 3


class ConfigError(Exception):
    pass


def _parse_scalar(raw: str):
    raw = raw.strip()
    if raw.lower() in ("inf", "infinity"):
        return np.inf
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    try:
        iv = int(raw)
        return iv
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


@dataclass
class ExperimentConfig:
    mode: str = "kernel-check"
    alpha: float = 1.5
    dim: int = 1
    horizon: float = 1.0
    steps: int = 8
    paths: int = 100000
    start: float = 0.0
    seed: int = 0
    threads: int = 0
    beta: float = -0.1
    p: float = np.inf
    q: float = np.inf
    r: float = np.inf
    epsilon_frac: float = 0.05
    drift_construction: str = "zero"
    drift_length: float = 16.0
    drift_cutoff: int = 128
    drift_sigma: float = 1.0
    drift_seed: int = 0
    drift_value: float = 0.0
    drift_mode: int = 1
    drift_amplitude: float = 1.0
    levels: tuple = (8, 16, 32, 64, 128, 256, 512, 1024)
    refinement: int = 16
    window: float = 8.0
    grid_points: int = 129
    bandwidth_const: float = 1.0
    rho: float = 0.25
    sweep_size: int = 200
    metric: str = "test-functions"
    plot: bool = False
    out: str = "."

    _KEYMAP = {
        "mode": "mode", "alpha": "alpha", "dim": "dim", "T": "horizon",
        "steps": "steps", "paths": "paths", "start": "start", "seed": "seed",
        "threads": "threads", "beta": "beta", "p": "p", "q": "q", "r": "r",
        "epsilon_frac": "epsilon_frac",
        "drift.construction": "drift_construction",
        "drift.L": "drift_length", "drift.K": "drift_cutoff",
        "drift.sigma": "drift_sigma", "drift.seed": "drift_seed",
        "drift.value": "drift_value", "drift.k": "drift_mode",
        "drift.amplitude": "drift_amplitude",
        "levels": "levels", "refinement": "refinement", "window": "window",
        "grid_points": "grid_points", "bandwidth_const": "bandwidth_const",
        "rho": "rho", "sweep_size": "sweep_size", "metric": "metric",
        "plot": "plot", "out": "out",
    }

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, raw = body.partition("=")
            key = key.strip()
            if key not in cls._KEYMAP:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            attr = cls._KEYMAP[key]
            if attr == "levels":
                vals = tuple(int(v) for v in raw.replace(",", " ").split())
                setattr(cfg, attr, vals)
            else:
                setattr(cfg, attr, _parse_scalar(raw))
        if cfg.mode not in MODES:
            raise ConfigError(f"unknown mode {cfg.mode!r}")
        return cfg

    def serialize(self) -> str:
        rev = {v: k for k, v in self._KEYMAP.items()}
        lines = []
        for f in fields(self):
            if f.name.startswith("_") or f.name not in rev:
                continue
            val = getattr(self, f.name)
            if f.name == "levels":
                val = ",".join(str(v) for v in val)
            elif val == np.inf:
                val = "inf"
            lines.append(f"{rev[f.name]} = {val}")
        return "\n".join(lines) + "\n"

    def besov(self) -> bd.BesovParams:
        return bd.BesovParams(beta=self.beta, p=self.p, q=self.q, r=self.r)

    def law(self) -> sk.StableLaw:
        return sk.StableLaw(self.alpha, self.dim)

    def drift(self) -> bd.DriftField:
        c = self.drift_construction
        if c == "zero":
            return bd.zero_drift(self.dim, self.drift_length)
        if c == "constant":
            return bd.constant_drift(self.drift_value, self.dim, self.drift_length)
        if c == "single-mode":
            return bd.single_mode_drift(self.drift_amplitude, self.drift_mode,
                                        self.dim, self.drift_length)
        if c == "random-fourier":
            return bd.random_fourier_drift(self.drift_cutoff, self.besov(),
                                           seed=self.drift_seed, dim=self.dim,
                                           torus_length=self.drift_length,
                                           sigma=self.drift_sigma)
        if c == "scale-free":
            return bd.scale_free_drift(self.drift_cutoff, self.besov(),
                                       alpha=self.alpha, seed=self.drift_seed,
                                       torus_length=self.drift_length,
                                       sigma=self.drift_sigma)
        if c == "deterministic":
            return bd.deterministic_drift(self.drift_cutoff, self.besov(),
                                          dim=self.dim,
                                          torus_length=self.drift_length,
                                          sigma=self.drift_sigma)
        raise ConfigError(f"unknown drift construction {c!r}")

    def scheme(self) -> es.SchemeConfig:
        return es.SchemeConfig(
            horizon=self.horizon, steps=self.steps, start=self.start,
            path_count=self.paths, master_seed=self.seed, threads=self.threads,
        )


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _emit_manifest(cfg: ExperimentConfig, out_dir: str, extra: dict) -> None:
    lines = [cfg.serialize().rstrip(), f"# backend = {_modesum.BACKEND}"]
    for k in sorted(extra):
        lines.append(f"# {k} = {extra[k]}")
    _write(os.path.join(out_dir, "manifest.txt"), "\n".join(lines) + "\n")


def _run_kernel_check(cfg: ExperimentConfig, out_dir: str) -> int:
    law = cfg.law()
    rows = ["check,value,limit,pass"]
    failures = 0

    def record(name, value, limit, ok):
        nonlocal failures
        rows.append(f"{name},{value:.6e},{limit:.6e},{int(ok)}")
        if not ok:
            failures += 1

    norm = sk.normalization_error(law)
    record("normalization", norm, 1e-4, norm < 1e-4)
    if law.alpha == 1.0 and law.dim == 1:
        z = np.linspace(-10, 10, 801)
        for t in (0.1, 1.0):
            got = sk.evaluate_density(law, t, z)
            want = t / (np.pi * (t * t + z * z))
            err = float(np.max(np.abs(got - want) / want))
            record(f"cauchy_t{t:g}", err, 1e-6, err < 1e-6)
    if law.alpha == 2.0 and law.dim == 1:
        z = np.linspace(-10, 10, 801)
        for t in (0.1, 1.0):
            got = sk.evaluate_density(law, t, z)
            want = np.exp(-z * z / (4 * t)) / np.sqrt(4 * np.pi * t)
            err = float(np.max(np.abs(got - want) / want))
            record(f"gaussian_t{t:g}", err, 1e-6, err < 1e-6)
    r = np.linspace(0.0, 50.0, 2001)
    ratio = law.profile(r) / (law.c_alpha_bar * (1.0 + r) ** -(law.dim + law.alpha))
    aronson = float(max(ratio.max(), 1.0 / ratio.min()))
    record("aronson_constant", aronson, 100.0, aronson < 100.0)
    sampler = sk.IncrementSampler(law, cfg.seed)
    if law.dim == 1:
        draws = sampler.chunk_increments(0, 100_000, np.array([1.0]))[:, 0]
        zs = np.sort(draws)
        cdf = sk.density_cdf_1d(law, 1.0, zs)
        n = zs.size
        dks = float(max(np.max(np.abs(np.arange(1, n + 1) / n - cdf)),
                        np.max(np.abs(np.arange(0, n) / n - cdf))))
        record("sampler_ks", dks, 1.628 / np.sqrt(n), dks < 1.628 / np.sqrt(n))
    _write(os.path.join(out_dir, "kernel_check.csv"), "\n".join(rows) + "\n")
    _emit_manifest(cfg, out_dir, {"failures": failures})
    return EXIT_OK if failures == 0 else EXIT_ASSERT


def _run_drift_check(cfg: ExperimentConfig, out_dir: str) -> int:
    law = cfg.law()
    drift = cfg.drift()
    rows = ["check,value,limit,pass"]
    failures = 0

    def record(name, value, limit, ok):
        nonlocal failures
        rows.append(f"{name},{value:.6e},{limit:.6e},{int(ok)}")
        if not ok:
            failures += 1

    h = cfg.horizon / cfg.steps
    z = 0.37
    quad = bd.quadrature_step_drift(drift, law, 0.0, h, z)
    closed = bd.integrated_step_drift(drift, law, 0.0, h, z)
    scale = max(abs(closed), 1e-12)
    err = abs(quad - closed) / scale
    record("integrated_drift_identity", err, 1e-10, err < 1e-10)
    # pointwise-scaling regression: only the sharp-profile constructions
    # satisfy the +-0.03 band (Gaussian-magnitude samples carry log factors)
    if cfg.drift_construction in ("scale-free", "deterministic"):
        vs = np.geomspace(1e-4, 1e-1, 16)
        sups = [
            float(np.max(np.abs(bd.synthesize_mollified(drift, law, v, 0.0,
                                                        1 << 14).values)))
            for v in vs
        ]
        slope = float(np.polyfit(np.log(vs), np.log(sups), 1)[0])
        target = drift.besov.beta / law.alpha
        record("mollified_sup_slope", slope - target, 0.03,
               abs(slope - target) < 0.03)
    _write(os.path.join(out_dir, "drift_check.csv"), "\n".join(rows) + "\n")
    _emit_manifest(cfg, out_dir, {"failures": failures})
    return EXIT_OK if failures == 0 else EXIT_ASSERT


def _run_simulate(cfg: ExperimentConfig, out_dir: str) -> int:
    ens = es.simulate_grid(cfg.drift(), cfg.law(), cfg.scheme())
    es.export_ensemble_csv(ens, os.path.join(out_dir, "ensemble.csv"))
    es.write_manifest(ens, os.path.join(out_dir, "run_manifest.txt"))
    _emit_manifest(cfg, out_dir, {"overflow": int(ens.overflow_mask.sum())})
    return EXIT_OK


def _run_rate(cfg: ExperimentConfig, out_dir: str) -> int:
    law = cfg.law()
    drift = cfg.drift()
    levels = [cfg.horizon / n for n in sorted(cfg.levels)]
    if cfg.metric == "density-sup":
        report = dw.density_rate_experiment(drift, law, cfg.scheme(), levels,
                                            epsilon_frac=cfg.epsilon_frac)
    elif cfg.metric == "test-functions":
        report = dw.weak_error_levels(drift, law, cfg.scheme(), None, levels,
                                      epsilon_frac=cfg.epsilon_frac)
    else:
        raise ConfigError(f"unknown rate metric {cfg.metric!r}")
    report.to_csv(os.path.join(out_dir, "rate.csv"))
    _write(os.path.join(out_dir, "rate_summary.txt"), report.summary() + "\n")
    if cfg.plot:
        _plot_rate(report, os.path.join(out_dir, "rate.svg"))
    _emit_manifest(cfg, out_dir, {"slope": report.slope, "tag": report.tag})
    return EXIT_OK


def _plot_rate(report: dw.RateReport, path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, vals in report.metrics.items():
        ax.loglog(report.levels, vals, "o-", label=name)
    ax.set_xlabel("h")
    ax.set_ylabel("|D_k|")
    if report.slope is not None:
        ax.set_title(f"slope {report.slope:.3f}, target {report.target_rate:.3f}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _run_duhamel(cfg: ExperimentConfig, out_dir: str) -> int:
    res = dw.duhamel_residual(cfg.drift(), cfg.law(), cfg.scheme(),
                              window_radius=cfg.window,
                              grid_points=cfg.grid_points,
                              bandwidth_const=cfg.bandwidth_const)
    rows = ["y,lhs,rhs,residual"]
    for y, a, b, r in zip(res["y"], res["lhs"], res["rhs"], res["residual"]):
        rows.append(f"{y:.10e},{a:.10e},{b:.10e},{r:.10e}")
    _write(os.path.join(out_dir, "duhamel.csv"), "\n".join(rows) + "\n")
    _emit_manifest(cfg, out_dir, {
        "sup_normalized": res["sup_normalized"],
        "l2_normalized": res["l2_normalized"],
    })
    return EXIT_OK


def _run_decompose(cfg: ExperimentConfig, out_dir: str) -> int:
    law = cfg.law()
    scale = cfg.horizon ** (1.0 / cfg.alpha)
    probes = cfg.start + np.linspace(-2.0, 2.0, 5) * scale
    res = dw.error_decomposition(cfg.drift(), law, cfg.scheme(), probes,
                                 refinement=cfg.refinement)
    rows = ["y," + ",".join(f"delta_{k}" for k in range(1, 7))
            + ",sum,kde_difference"]
    for i, y in enumerate(res["y"]):
        cells = [f"{res['terms'][k][i]:.10e}" for k in range(1, 7)]
        rows.append(f"{y:.10e}," + ",".join(cells)
                    + f",{res['sum'][i]:.10e},{res['kde_difference'][i]:.10e}")
    _write(os.path.join(out_dir, "decomposition.csv"), "\n".join(rows) + "\n")
    _emit_manifest(cfg, out_dir, {})
    return EXIT_OK


def _run_inequalities(cfg: ExperimentConfig, out_dir: str) -> int:
    rng = np.random.default_rng(cfg.seed)
    failures = 0
    worst = 0.0
    for _ in range(100):
        a, b = rng.uniform(-1.0, 0.9, 2)
        u = rng.uniform(0.0, 1.0)
        t = u + rng.uniform(0.1, 2.0)
        res = il.beta_identity(a, b, u, t)
        rel = abs(res["closedForm"] - res["quadrature"]) / abs(res["closedForm"])
        worst = max(worst, rel)
    if worst > 1e-10:
        failures += 1
    specs = il.sample_admissible_specs(cfg.sweep_size, seed=cfg.seed)
    rows = ["variant,a,b,c,d,r_conj,ratio"]
    max_ratio = 0.0
    for sp in specs:
        for var in ("full", "left", "right"):
            ratio = il.singular_bound_ratio(sp, var)
            max_ratio = max(max_ratio, ratio)
            rows.append(
                f"{var},{sp.a:.6f},{sp.b:.6f},{sp.c:.6f},{sp.d:.6f},"
                f"{sp.r_conj:.6f},{ratio:.6e}"
            )
    if not np.isfinite(max_ratio) or max_ratio >= 10.0:
        failures += 1
    _write(os.path.join(out_dir, "inequalities.csv"), "\n".join(rows) + "\n")
    _emit_manifest(cfg, out_dir, {
        "beta_identity_worst": worst, "sweep_max_ratio": max_ratio,
        "failures": failures,
    })
    return EXIT_OK if failures == 0 else EXIT_ASSERT


_RUNNERS = {
    "kernel-check": _run_kernel_check,
    "drift-check": _run_drift_check,
    "simulate": _run_simulate,
    "rate": _run_rate,
    "duhamel": _run_duhamel,
    "decompose": _run_decompose,
    "inequalities": _run_inequalities,
}


def run(cfg: ExperimentConfig, out_dir: str | None = None) -> int:
    out_dir = out_dir or cfg.out
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        print(f"output directory not writable: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return _RUNNERS[cfg.mode](cfg, out_dir)
    except (bd.ConfigurationError, ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="sbe", description=__doc__)
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = ExperimentConfig.parse(fh.read())
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.plot:
        cfg.plot = True
    if args.out is not None:
        cfg.out = args.out
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
