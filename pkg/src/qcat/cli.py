"""Command-line interface: single runs, sweeps, analyses, and SVG plots.

Subcommands
-----------
run      evolve one (N, D) point -> trace.csv + summary.json
sweep    run the (N, D) grid     -> sweep.csv
analyze  sweep.csv               -> analysis.json
plot     sweep.csv or trace.csv  -> standalone SVG

All parameters come from a single JSON config (--config); --out picks the
output directory, --workers the sweep parallelism.  --seed is accepted and
recorded for future stochastic channels; the current pipeline is
deterministic.  Floats are serialised with 17 significant digits so analyses
round-trip exactly.  Exit codes: 0 success, 1 config error, 2 I/O error,
3 analysis error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DEFAULT_MAP, CatMapSpec, QuantizationError, RunConfig, evolve
from .measures import measure_lambda2, track_extrema
from .sweep import (
    AnalysisError,
    ExponentTriple,
    SweepPoint,
    collapse_spread,
    composite_parameter,
    default_grid,
    fit_chi_expansion,
    fit_transition,
    run_sweep,
    search_exponents,
)

__all__ = ["main", "ConfigError", "JobConfig", "load_config",
           "write_sweep_csv", "read_sweep_csv", "analyze_points"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_ANALYSIS = 3

SWEEP_HEADER = ["N", "hbar", "D", "Lambda", "zeta", "k1_max", "d_chi2_max",
                "chi2_ratio", "flag"]
TRACE_HEADER = ["t", "k1_distance", "chi2_classical", "chi2_quantum",
                "d_chi2_quantum"]


class ConfigError(ValueError):
    """Bad or inconsistent job configuration."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class JobConfig:
    map: tuple[tuple[int, int], tuple[int, int]] = ((2, 1), (3, 2))
    n_dim: int | None = None
    d: float | None = None
    n_list: list[int] = field(default_factory=list)
    d_list: list[float] = field(default_factory=list)
    k_max: int | None = None
    t_m: int = 40
    t_burn: int = 2
    center: tuple[float, float] = (0.5, 0.5)
    alpha: float = 2.0
    beta: float = 1.0
    gamma: float = -1.0
    use_measured_lambda: bool = True
    n_bins: int = 8
    zeta_cut: float = 4.0
    measure: str = "k1"
    input: str | None = None

    def cat(self) -> CatMapSpec:
        try:
            return CatMapSpec.from_matrix(self.map)
        except ValueError as exc:
            raise ConfigError(f"invalid map matrix: {exc}") from exc

    def exponents(self) -> ExponentTriple:
        return ExponentTriple(alpha=self.alpha, beta=self.beta,
                              gamma=self.gamma, alpha_pinned=(self.alpha == 2.0))

    def grid(self) -> list[tuple[int, float]]:
        ns = self.n_list if self.n_list else ([self.n_dim] if self.n_dim else [])
        ds = self.d_list if self.d_list else ([self.d] if self.d is not None else [])
        if not ns and not ds:
            return default_grid()
        if not ns or not ds:
            raise ConfigError("need both N values and D values (or neither)")
        return [(int(n), float(dv)) for n in ns for dv in ds]


_CONFIG_KEYS = {
    "map": "map", "N": "n_dim", "D": "d", "N_list": "n_list",
    "D_list": "d_list", "K_max": "k_max", "t_m": "t_m", "t_burn": "t_burn",
    "center": "center", "alpha": "alpha", "beta": "beta", "gamma": "gamma",
    "use_measured_lambda": "use_measured_lambda", "n_bins": "n_bins",
    "zeta_cut": "zeta_cut", "measure": "measure", "input": "input",
}


def load_config(path: str | None) -> JobConfig:
    cfg = JobConfig()
    if path is None:
        return cfg
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key, value in raw.items():
        attr = _CONFIG_KEYS.get(key)
        if attr is None:
            raise ConfigError(f"unknown config key {key!r}")
        if attr == "map":
            value = tuple(tuple(int(x) for x in row) for row in value)
        elif attr == "center":
            value = tuple(float(x) for x in value)
        setattr(cfg, attr, value)
    return cfg


# ---------------------------------------------------------------- run

def cmd_run(cfg: JobConfig, out_dir: str) -> int:
    if cfg.n_dim is None or cfg.d is None:
        raise ConfigError("run mode needs scalar N and D in the config")
    cat = cfg.cat()
    lam2 = (measure_lambda2(cat) if cfg.use_measured_lambda else 2.0 * cat.lam)
    try:
        run_cfg = RunConfig(n_dim=int(cfg.n_dim), d=float(cfg.d), cat=cat,
                            k_max=cfg.k_max, t_m=cfg.t_m, t_burn=cfg.t_burn,
                            center=cfg.center, lam2=lam2)
        trace = evolve(run_cfg)
    except (QuantizationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    ext = track_extrema(trace, cfg.t_burn)
    zeta = composite_parameter(trace.hbar, lam2, trace.d, cfg.exponents())

    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    with open(trace_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for t in range(trace.steps + 1):
            w.writerow([t, _fmt(trace.k1_distance[t]),
                        _fmt(trace.chi2_classical[t]),
                        _fmt(trace.chi2_quantum[t]),
                        _fmt(trace.d_chi2_quantum[t])])
    summary = {
        "N": trace.n_dim, "hbar": trace.hbar, "D": trace.d, "Lambda": lam2,
        "zeta": zeta, "K1m": ext.k1_max, "DChi2m": ext.d_chi2_max,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {trace_path}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep

def write_sweep_csv(points: list[SweepPoint], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for p in points:
            w.writerow([p.n_dim, _fmt(p.hbar), _fmt(p.d), _fmt(p.lam2),
                        _fmt(p.zeta), _fmt(p.k1_max), _fmt(p.d_chi2_max),
                        _fmt(p.chi2_ratio), p.flag])


def read_sweep_csv(path: str) -> list[SweepPoint]:
    points = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SWEEP_HEADER:
            raise ConfigError(f"malformed sweep CSV: expected header {SWEEP_HEADER}")
        for row in reader:
            if len(row) != len(SWEEP_HEADER):
                raise ConfigError(f"malformed sweep CSV row: {row!r}")
            try:
                points.append(SweepPoint(
                    n_dim=int(row[0]), hbar=float(row[1]), d=float(row[2]),
                    lam2=float(row[3]), zeta=float(row[4]),
                    k1_max=float(row[5]), d_chi2_max=float(row[6]),
                    chi2_ratio=float(row[7]), flag=row[8]))
            except ValueError as exc:
                raise ConfigError(f"malformed sweep CSV row {row!r}: {exc}") from exc
    return points


def cmd_sweep(cfg: JobConfig, out_dir: str, workers: int) -> int:
    grid = cfg.grid()
    points = run_sweep(grid, cat=cfg.cat(), t_m=cfg.t_m, t_burn=cfg.t_burn,
                       center=cfg.center, k_max=cfg.k_max,
                       exponents=cfg.exponents(),
                       use_measured_lambda=cfg.use_measured_lambda,
                       workers=workers) if grid else []
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sweep.csv")
    write_sweep_csv(points, path)
    n_bad = sum(1 for p in points if not p.ok)
    print(f"wrote {path} ({len(points)} rows, {n_bad} flagged)")
    return EXIT_OK


# ---------------------------------------------------------------- analyze

def analyze_points(points: list[SweepPoint], cfg: JobConfig) -> dict:
    best, spread_best = search_exponents(points, measure=cfg.measure,
                                         n_bins=cfg.n_bins)
    ref = ExponentTriple(2.0, 1.0, -1.0)
    spread_ref = collapse_spread(points, cfg.measure, ref, n_bins=cfg.n_bins)
    trans = fit_transition(points, measure=cfg.measure, exponents=ref)
    eq6 = fit_chi_expansion(points, zeta_cut=cfg.zeta_cut)
    return {
        "gamma": best.gamma,
        "spread_at_best": spread_best,
        "spread_at_(2,1,-1)": spread_ref,
        "ln_zeta_star": trans.ln_zeta_star,
        "width": trans.width,
        "eq6": {"a_prime": eq6.a_prime, "b": eq6.b, "c": eq6.c,
                "residual": eq6.residual},
    }


def cmd_analyze(cfg: JobConfig, out_dir: str) -> int:
    if not cfg.input:
        raise ConfigError("analyze mode needs an 'input' sweep CSV path in the config")
    points = read_sweep_csv(cfg.input)
    result = analyze_points(points, cfg)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "analysis.json")
    with open(path, "w") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- plot

def _svg_scatter(panels, width=480, height=360) -> str:
    """Standalone two-panel SVG scatter; panels = [(title, xlabel, ylabel, series)],
    series = [(label, xs, ys)]."""
    mleft, mbot, mtop, mright = 54, 42, 24, 12
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b", "#17becf", "#7f7f7f", "#bcbd22"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{width * len(panels)}" height="{height}" '
             f'font-family="sans-serif" font-size="11">']
    for ip, (title, xlabel, ylabel, series) in enumerate(panels):
        x0 = ip * width
        all_x = np.concatenate([np.asarray(s[1], float) for s in series])
        all_y = np.concatenate([np.asarray(s[2], float) for s in series])
        ok = np.isfinite(all_x) & np.isfinite(all_y)
        if not np.any(ok):
            raise ValueError("nothing finite to plot")
        xmin, xmax = all_x[ok].min(), all_x[ok].max()
        ymin, ymax = all_y[ok].min(), all_y[ok].max()
        if xmax == xmin:
            xmax = xmin + 1.0
        if ymax == ymin:
            ymax = ymin + 1.0
        pw = width - mleft - mright
        ph = height - mtop - mbot

        def sx(x):
            return x0 + mleft + (x - xmin) / (xmax - xmin) * pw

        def sy(y):
            return mtop + (1.0 - (y - ymin) / (ymax - ymin)) * ph

        parts.append(f'<rect x="{x0 + mleft}" y="{mtop}" width="{pw}" '
                     f'height="{ph}" fill="none" stroke="#333"/>')
        parts.append(f'<text x="{x0 + mleft + pw / 2:.1f}" y="{mtop - 8}" '
                     f'text-anchor="middle" font-weight="bold">{title}</text>')
        parts.append(f'<text x="{x0 + mleft + pw / 2:.1f}" y="{height - 8}" '
                     f'text-anchor="middle">{xlabel}</text>')
        parts.append(f'<text x="{x0 + 14}" y="{mtop + ph / 2:.1f}" '
                     f'text-anchor="middle" '
                     f'transform="rotate(-90 {x0 + 14} {mtop + ph / 2:.1f})">'
                     f'{ylabel}</text>')
        for tick in np.linspace(xmin, xmax, 5):
            parts.append(f'<text x="{sx(tick):.1f}" y="{mtop + ph + 14}" '
                         f'text-anchor="middle">{tick:.3g}</text>')
        for tick in np.linspace(ymin, ymax, 5):
            parts.append(f'<text x="{x0 + mleft - 4}" y="{sy(tick) + 4:.1f}" '
                         f'text-anchor="end">{tick:.3g}</text>')
        for i, (label, xs, ys) in enumerate(series):
            color = colors[i % len(colors)]
            for xv, yv in zip(xs, ys):
                if math.isfinite(xv) and math.isfinite(yv):
                    parts.append(f'<circle cx="{sx(xv):.1f}" cy="{sy(yv):.1f}" '
                                 f'r="2.6" fill="{color}" fill-opacity="0.8"/>')
            if label:
                parts.append(f'<text x="{x0 + mleft + 6}" y="{mtop + 14 + 13 * i}" '
                             f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_plot(cfg: JobConfig, out_dir: str) -> int:
    if not cfg.input:
        raise ConfigError("plot mode needs an 'input' CSV path in the config")
    with open(cfg.input, newline="") as fh:
        header = next(csv.reader(fh), None)
    os.makedirs(out_dir, exist_ok=True)
    attr = "k1_max" if cfg.measure == "k1" else "d_chi2_max"
    if header == SWEEP_HEADER:
        points = [p for p in read_sweep_csv(cfg.input) if p.ok]
        if not points:
            raise AnalysisError("no rows to plot")
        raw_series = []
        for n in sorted({p.n_dim for p in points}):
            rows = [p for p in points if p.n_dim == n]
            raw_series.append((f"N={n}",
                               [math.log10(p.d) for p in rows],
                               [getattr(p, attr) for p in rows]))
        coll = [("", [math.log(p.zeta) for p in points],
                 [getattr(p, attr) for p in points])]
        svg = _svg_scatter([
            (f"{cfg.measure} vs noise", "log10(D)", cfg.measure, raw_series),
            (f"{cfg.measure} collapsed", "ln(zeta)", cfg.measure, coll),
        ])
        path = os.path.join(out_dir, "sweep.svg")
    elif header == TRACE_HEADER:
        with open(cfg.input, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)
            rows = [[float(x) for x in row] for row in reader]
        if not rows:
            raise AnalysisError("no rows to plot")
        data = np.asarray(rows)
        svg = _svg_scatter([
            ("distance", "t", "k1_distance", [("", data[:, 0], data[:, 1])]),
            ("structure", "t", "chi2",
             [("classical", data[:, 0], data[:, 2]),
              ("quantum", data[:, 0], data[:, 3])]),
        ])
        path = os.path.join(out_dir, "trace.svg")
    else:
        raise ConfigError(f"unrecognised CSV header in {cfg.input}")
    with open(path, "w") as fh:
        fh.write(svg)
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- entry

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qcat",
        description="noisy cat map: paired quantum/classical runs and collapse analysis")
    sub = parser.add_subparsers(dest="mode", required=True)
    for name in ("run", "sweep", "analyze", "plot"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON job config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="sweep worker processes")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved for future stochastic channels")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.mode == "run":
            return cmd_run(cfg, args.out)
        if args.mode == "sweep":
            return cmd_sweep(cfg, args.out, max(1, args.workers))
        if args.mode == "analyze":
            return cmd_analyze(cfg, args.out)
        return cmd_plot(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
