"""Command-line front end: track, simulate, evaluate, experiment.

Exit codes: 0 success, 2 malformed data file, 3 bad configuration,
4 runtime failure (inconsistent inputs, exceeded caps, IO).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .assignment import BipartiteConfig, resolve_gate_cost, solve_bmcf
from .core import (
    FrameSequence,
    InvalidConfigError,
    InvalidInputError,
    ParseError,
    SpaceCapError,
    TrajectorySet,
    assemble_trajectories,
    matchings_from_trajectories,
    read_detections,
    read_tracks,
    write_detections,
    write_matchings,
    write_tracks,
)
from .metrics import evaluate, write_report_csv, write_report_json
from .simulator import SimConfig, simulate
from .tripartite import TrackerConfig, track

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4

_EXPERIMENT_KEYS = (
    "N0", "sigma", "f", "replicates", "methods", "deltas", "seed",
    "W", "H", "w", "h", "dt", "sigma_mode", "lambda_event", "gate_quantile",
)

RESULT_COLUMNS = (
    "N0", "sigma", "f", "replicate", "seed", "method", "delta",
    "whole_path_precision", "whole_path_recall", "whole_path_f1",
    "mean_pair_identity", "path_identity", "mean_coverage", "eval_count",
)

AGGREGATE_COLUMNS = (
    "N0", "sigma", "method", "delta", "n_replicates",
    "f1_mean", "f1_err", "coverage_mean", "coverage_err",
    "pair_identity_mean", "pair_identity_err",
    "eval_count_mean", "eval_ratio", "eval_ratio_theory",
)

TIMING_COLUMNS = ("N0", "sigma", "f", "replicate", "method", "delta", "wall_seconds")


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid of simulation settings and solver variants to sweep."""

    N0: tuple[int, ...] = (15,)
    sigma: tuple[float, ...] = (1.0,)
    f: int = 50
    replicates: int = 20
    methods: tuple[str, ...] = ("bmcf", "tri")
    deltas: tuple[int, ...] = (0, 1, 2, 3)
    seed: int = 0
    W: float = 3400.0
    H: float = 2560.0
    w: float = 680.0
    h: float = 512.0
    dt: float = 1.0
    sigma_mode: str = "per-frame"
    lambda_event: float | str = "auto"
    gate_quantile: float = 0.99

    def __post_init__(self):
        object.__setattr__(self, "N0", tuple(int(v) for v in self.N0))
        object.__setattr__(self, "sigma", tuple(float(v) for v in self.sigma))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "deltas", tuple(int(v) for v in self.deltas))
        if not self.N0 or not self.sigma:
            raise InvalidConfigError("N0 and sigma lists must be nonempty")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise InvalidConfigError("replicates must be a positive integer")
        object.__setattr__(self, "replicates", int(self.replicates))
        bad = set(self.methods) - {"bmcf", "tri"}
        if bad or not self.methods:
            raise InvalidConfigError("methods must be a nonempty subset of {'bmcf', 'tri'}")
        if "tri" in self.methods and not self.deltas:
            raise InvalidConfigError("deltas must be nonempty when running 'tri'")
        if any(d < 0 for d in self.deltas):
            raise InvalidConfigError("deltas must be nonnegative")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise InvalidConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise InvalidConfigError("config file must hold a JSON object")
        unknown = set(data) - set(_EXPERIMENT_KEYS)
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def tracker_config(self, delta: int) -> TrackerConfig:
        return TrackerConfig(
            delta=delta,
            sigma_mode=self.sigma_mode,
            lambda_event=self.lambda_event,
            gate_quantile=self.gate_quantile,
        )


def _fmt(v) -> str:
    """Stable cell formatting: repr for floats, empty for None."""
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))  # plain float repr even for numpy scalars
    return str(v)


# ---------------------------------------------------------------------------
# track
# ---------------------------------------------------------------------------


def _diagnostics_path(output: str) -> str:
    return os.path.splitext(output)[0] + ".diagnostics.json"


def cmd_track(args) -> int:
    seq = read_detections(args.input)
    cfg = TrackerConfig.from_json(args.config) if args.config else TrackerConfig()
    if args.delta is not None:
        cfg = replace(cfg, delta=args.delta)
    if args.sigma_mode is not None:
        cfg = replace(cfg, sigma_mode=args.sigma_mode)

    if args.method == "bmcf":
        gate = resolve_gate_cost(seq, BipartiteConfig(gate_quantile=cfg.gate_quantile))
        gated = BipartiteConfig(gate_cost=gate)
        matchings = [
            solve_bmcf(seq.frames[k], seq.frames[k + 1], gated) for k in range(len(seq) - 1)
        ]
        trajs = assemble_trajectories(seq, matchings)
        diag = {
            "method": "bmcf",
            "gate_cost": gate,
            "d_star": [m.n_disappeared for m in matchings],
        }
    else:
        res = track(seq, cfg)
        trajs = res.trajectories
        d = res.diagnostics
        diag = {
            "method": "tri",
            "delta": cfg.delta,
            "gate_cost": d.gate_cost,
            "d_star": list(d.d_star),
            "sigma_per_pair": list(d.sigma.sigmas),
            "sigma_pooled": d.sigma.pooled,
            "sigma_chain_counts": list(d.sigma.counts),
            "sigma_fallback": d.sigma.used_fallback,
            "lambda_event": d.lambda_event,
            "space_sizes": list(d.space_sizes),
            "eval_count": d.eval_count,
            "score": res.score,
        }
    write_tracks(args.output, trajs, seq)
    with open(_diagnostics_path(args.output), "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.output} ({len(trajs)} tracks)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = SimConfig.from_json(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = simulate(cfg)
    os.makedirs(args.output, exist_ok=True)
    write_detections(os.path.join(args.output, "detections.csv"), out.seq)
    write_tracks(os.path.join(args.output, "truth_tracks.csv"), out.trajectories, out.seq)
    write_matchings(os.path.join(args.output, "truth_matchings.txt"), out.matchings)
    cfg.to_json(os.path.join(args.output, "metadata.json"))
    print(f"wrote {args.output} ({cfg.n_cells} cells, {cfg.f} frames)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _tracks_to_trajectories(
    pred_rows: list[list[tuple[int, float, float]]],
    truth_rows: list[list[tuple[int, float, float]]],
) -> tuple[FrameSequence, TrajectorySet, TrajectorySet]:
    """Rebuild a common detection universe from two track files.

    Detections are keyed by exact (frame, x, y); per frame the universe
    is the sorted union of coordinates from both files, so identical
    points get identical indices on both sides.
    """
    all_rows = pred_rows + truth_rows
    if not all_rows:
        raise InvalidInputError("no tracks to evaluate")
    pred_frames = {k for tr in pred_rows for k, _, _ in tr}
    truth_frames = {k for tr in truth_rows for k, _, _ in tr}
    missing = sorted(truth_frames - pred_frames)
    if missing:
        raise InvalidInputError(f"prediction has no detections at frames {missing}")
    f = max(max(k for tr in all_rows for k, _, _ in tr) + 1, 1)
    coords: list[set[tuple[float, float]]] = [set() for _ in range(f)]
    for tr in all_rows:
        for k, x, y in tr:
            coords[k].add((x, y))
    ordered = [sorted(c) for c in coords]
    index = [{xy: i for i, xy in enumerate(o)} for o in ordered]
    seq = FrameSequence(tuple(np.array(o, dtype=np.float64).reshape(-1, 2) for o in ordered))

    def convert(rows) -> TrajectorySet:
        return TrajectorySet(
            tuple(tuple((k, index[k][(x, y)]) for k, x, y in tr) for tr in rows)
        )

    return seq, convert(pred_rows), convert(truth_rows)


def cmd_evaluate(args) -> int:
    pred_rows = read_tracks(args.input)
    truth_rows = read_tracks(args.truth)
    seq, pred, truth = _tracks_to_trajectories(pred_rows, truth_rows)
    pred_m = matchings_from_trajectories(seq, pred)
    truth_m = matchings_from_trajectories(seq, truth)
    report = evaluate(seq, pred_m, truth_m, beta=args.beta)
    write_report_csv(report, args.output)
    summary = os.path.splitext(args.output)[0] + ".json"
    write_report_json(report, summary)
    print(
        f"whole-path F{args.beta:g} = {report.whole_fbeta:.4f}, "
        f"path identity = {report.path_identity}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def _experiment_job(job):
    """One (setting, replicate): simulate once, run every method on it."""
    setting_index, replicate, sim_cfg, grid = job
    sim = simulate(sim_cfg)
    truth = list(sim.matchings)
    base = {
        "N0": sim_cfg.N0,
        "sigma": sim_cfg.sigma,
        "f": sim_cfg.f,
        "replicate": replicate,
        "seed": sim_cfg.seed,
    }
    rows = []
    times = []
    for method in grid.methods:
        if method == "bmcf":
            t0 = time.perf_counter()
            gate = resolve_gate_cost(sim.seq, BipartiteConfig(gate_quantile=grid.gate_quantile))
            gated = BipartiteConfig(gate_cost=gate)
            pred = [
                solve_bmcf(sim.seq.frames[k], sim.seq.frames[k + 1], gated)
                for k in range(len(sim.seq) - 1)
            ]
            wall = time.perf_counter() - t0
            report = evaluate(sim.seq, pred, truth)
            mean_ident = sum(report.pair_identity) / len(report.pair_identity)
            rows.append(
                base | {
                    "method": "bmcf",
                    "delta": None,
                    "whole_path_precision": report.whole_precision,
                    "whole_path_recall": report.whole_recall,
                    "whole_path_f1": report.whole_fbeta,
                    "mean_pair_identity": mean_ident,
                    "path_identity": report.path_identity,
                    # a single-candidate space covers truth iff it equals it
                    "mean_coverage": mean_ident,
                    "eval_count": 0,
                }
            )
            times.append(base | {"method": "bmcf", "delta": None, "wall_seconds": wall})
        else:
            for delta in grid.deltas:
                t0 = time.perf_counter()
                res = track(sim.seq, grid.tracker_config(delta))
                wall = time.perf_counter() - t0
                report = evaluate(sim.seq, res.matchings, truth, spaces=res.spaces)
                rows.append(
                    base | {
                        "method": "tri",
                        "delta": delta,
                        "whole_path_precision": report.whole_precision,
                        "whole_path_recall": report.whole_recall,
                        "whole_path_f1": report.whole_fbeta,
                        "mean_pair_identity": (
                            sum(report.pair_identity) / len(report.pair_identity)
                        ),
                        "path_identity": report.path_identity,
                        "mean_coverage": sum(report.coverage) / len(report.coverage),
                        "eval_count": res.diagnostics.eval_count,
                    }
                )
                times.append(base | {"method": "tri", "delta": delta, "wall_seconds": wall})
    return (setting_index, replicate), rows, times


def _aggregate(rows: list[dict], grid: ExperimentConfig) -> list[dict]:
    out = []
    settings = [(n0, s) for n0 in grid.N0 for s in grid.sigma]
    variants: list[tuple[str, int | None]] = []
    if "bmcf" in grid.methods:
        variants.append(("bmcf", None))
    if "tri" in grid.methods:
        variants.extend(("tri", d) for d in sorted(grid.deltas))
    for n0, sig in settings:
        eval_means: dict[int, float] = {}
        for method, delta in variants:
            group = [
                r for r in rows
                if r["N0"] == n0 and r["sigma"] == sig
                and r["method"] == method and r["delta"] == delta
            ]
            if not group:
                continue

            def stats(key):
                vals = [float(r[key]) for r in group]
                mean = sum(vals) / len(vals)
                err = 1.96 * statistics.stdev(vals) if len(vals) > 1 else 0.0
                return mean, err

            f1_mean, f1_err = stats("whole_path_f1")
            cov_mean, cov_err = stats("mean_coverage")
            pi_mean, pi_err = stats("mean_pair_identity")
            ev_mean = sum(float(r["eval_count"]) for r in group) / len(group)
            ratio = None
            theory = None
            if method == "tri":
                eval_means[delta] = ev_mean
                if delta - 1 in eval_means and eval_means[delta - 1] > 0:
                    ratio = ev_mean / eval_means[delta - 1]
                if delta >= 1:
                    theory = ((delta + 0.5) / (delta - 0.5)) ** 2
            out.append(
                {
                    "N0": n0,
                    "sigma": sig,
                    "method": method,
                    "delta": delta,
                    "n_replicates": len(group),
                    "f1_mean": f1_mean,
                    "f1_err": f1_err,
                    "coverage_mean": cov_mean,
                    "coverage_err": cov_err,
                    "pair_identity_mean": pi_mean,
                    "pair_identity_err": pi_err,
                    "eval_count_mean": ev_mean,
                    "eval_ratio": ratio,
                    "eval_ratio_theory": theory,
                }
            )
    return out


def _write_csv(path, columns, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in columns])


def cmd_experiment(args) -> int:
    grid = ExperimentConfig.from_json(args.config)
    if args.replicates is not None:
        grid = replace(grid, replicates=args.replicates)
    if args.seed is not None:
        grid = replace(grid, seed=args.seed)
    os.makedirs(args.output, exist_ok=True)

    settings = [(n0, s) for n0 in grid.N0 for s in grid.sigma]
    jobs = []
    for si, (n0, sig) in enumerate(settings):
        for rep in range(grid.replicates):
            sim_cfg = SimConfig(
                W=grid.W, H=grid.H, w=grid.w, h=grid.h,
                N0=n0, sigma=sig, f=grid.f, dt=grid.dt,
                seed=grid.seed + 1000003 * si + rep,
            )
            jobs.append((si, rep, sim_cfg, grid))

    workers = min(len(jobs), args.jobs or (os.cpu_count() or 1))
    collected: dict[tuple[int, int], tuple[list[dict], list[dict]]] = {}
    if workers <= 1:
        for job in jobs:
            key, rows, times = _experiment_job(job)
            collected[key] = (rows, times)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, rows, times in pool.map(_experiment_job, jobs):
                collected[key] = (rows, times)

    all_rows: list[dict] = []
    all_times: list[dict] = []
    for key in sorted(collected):
        rows, times = collected[key]
        all_rows.extend(rows)
        all_times.extend(times)

    _write_csv(os.path.join(args.output, "results.csv"), RESULT_COLUMNS, all_rows)
    _write_csv(
        os.path.join(args.output, "aggregate.csv"), AGGREGATE_COLUMNS, _aggregate(all_rows, grid)
    )
    _write_csv(os.path.join(args.output, "timings.csv"), TIMING_COLUMNS, all_times)
    print(f"wrote {args.output} ({len(all_rows)} result rows)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="velotrack",
        description="Multi-object association by velocity-smoothness maximization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="link a detection file into tracks")
    p.add_argument("--input", required=True, help="detection CSV (frame_index,x,y)")
    p.add_argument("--output", required=True, help="track CSV to write")
    p.add_argument("--config", help="tracker config JSON")
    p.add_argument("--method", choices=("bmcf", "tri"), default="tri")
    p.add_argument("--delta", type=int, help="override the config's delta")
    p.add_argument(
        "--sigma-mode", dest="sigma_mode",
        help="per-frame, pooled, or fixed:<value>",
    )
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("simulate", help="generate a synthetic video with ground truth")
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--seed", type=int, help="override the config's seed")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score a predicted track file against truth")
    p.add_argument("--input", required=True, help="predicted track CSV")
    p.add_argument("--truth", required=True, help="ground-truth track CSV")
    p.add_argument("--output", required=True, help="report CSV to write")
    p.add_argument("--beta", type=float, default=1.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run a seeded grid of simulations and methods")
    p.add_argument("--config", required=True, help="experiment grid JSON")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--replicates", type=int, help="override the grid's replicate count")
    p.add_argument("--seed", type=int, help="override the grid's base seed")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInputError, SpaceCapError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
