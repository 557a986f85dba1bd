"""Experiment runner and CLI: configures an interval, runs seeded parallel
Monte Carlo trials, aggregates moments and distances, evaluates every bound,
and persists reports.

Reproducibility contract: (config, master_seed) determines every byte of
the emitted report files, independent of worker count.  Trials are split
into fixed-size chunks regardless of workers and aggregated in trial-index
order; wall-clock timings are printed to stderr and embedded in the JSON
only on request (they are the one non-deterministic quantity).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import distances as dist_mod
from . import quadruples as quad_mod
from . import stein as stein_mod
from .errors import ScaleError
from .numtheory import IntervalTable, segmented_factorize, sieve_primes
from .rmf_core import IntervalSampler, SignSource

SCHEMA_VERSION = 1
CHUNK = 4096
HIST_BINS = 64
HIST_RANGE = (-5.0, 5.0)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCALE = 3
EXIT_IO = 4


@dataclass
class ExperimentConfig:
    x: int
    y: int | None = None
    delta: float | None = None
    trials: int = 1
    master_seed: int = 0
    z_override: float | None = None
    workers: int = 1
    output_path: str | None = None
    formats: tuple[str, ...] = ("json",)

    def resolved(self) -> "ExperimentConfig":
        """Validate and fill the y/delta pair: one of the two determines the
        other. Idempotent: a consistent fully-specified config passes."""
        if self.x < 2:
            raise ValueError(f"x must be >= 2, got {self.x}")
        if self.y is None and self.delta is None:
            raise ValueError("one of y and delta must be given")
        y = self.y if self.y is not None else max(1, round(self.delta * self.x))
        if y < 1:
            raise ValueError(f"y must be >= 1, got {y}")
        if y >= self.x:
            raise ValueError(f"y must be < x, got y={y}, x={self.x}")
        delta = y / self.x
        if self.y is not None and self.delta is not None and self.delta != delta:
            raise ValueError(f"inconsistent y={y} and delta={self.delta}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        bad = set(self.formats) - {"json", "csv", "histogram"}
        if bad:
            raise ValueError(f"unknown formats: {sorted(bad)}")
        if delta >= 0.1:
            print(
                f"warning: delta = {delta:.4g} is outside the proven range (< 1/10)",
                file=sys.stderr,
            )
        return ExperimentConfig(
            self.x, y, delta, self.trials, self.master_seed,
            self.z_override, self.workers, self.output_path, tuple(self.formats),
        )

    @property
    def z(self) -> float:
        if self.z_override is not None:
            return self.z_override
        return 0.5 * math.log(1.0 / self.delta)

    def as_dict(self) -> dict:
        # workers is an execution detail: reports must not depend on it
        return {
            "x": self.x,
            "y": self.y,
            "delta": self.delta,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "z": self.z,
        }


@dataclass
class ExperimentReport:
    config: dict
    s_count: int
    moments: dict
    exact: dict
    distances: dict
    bounds: dict
    ratios: dict
    timing_ms: dict | None = None
    # per-trial W values, kept for csv/histogram emission; never serialized
    w_values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "s_count": self.s_count,
            "moments": self.moments,
            "exact": self.exact,
            "distances": self.distances,
            "bounds": self.bounds,
            "ratios": self.ratios,
            "timing_ms": self.timing_ms if include_timing else None,
        }

    def dumps(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {d.get('schema_version')}")
        return cls(
            d["config"], d["s_count"], d["moments"], d["exact"],
            d["distances"], d["bounds"], d["ratios"], d.get("timing_ms"),
        )


# ---------------------------------------------------------------------------
# Trial execution
# ---------------------------------------------------------------------------

_WORKER_STATE: dict = {}


def _chunk_worker(args: tuple[int, int]) -> np.ndarray:
    start, count = args
    sampler: IntervalSampler = _WORKER_STATE["sampler"]
    return sampler.raw_sums(start, count)


def _run_trials(table: IntervalTable, master_seed: int, trials: int,
                workers: int) -> np.ndarray:
    """Raw interval sums for trials 0..trials-1; identical output for any
    worker count (fixed chunking, index-ordered concatenation)."""
    sampler = IntervalSampler(table, master_seed)
    chunks = [(start, min(CHUNK, trials - start)) for start in range(0, trials, CHUNK)]
    if workers == 1 or len(chunks) == 1:
        parts = [sampler.raw_sums(s, c) for s, c in chunks]
    else:
        import multiprocessing

        _WORKER_STATE["sampler"] = sampler
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            parts = pool.map(_chunk_worker, chunks)
        _WORKER_STATE.clear()
    return np.concatenate(parts)


def _moment_block(w: np.ndarray) -> dict:
    t = len(w)
    powers = {k: w ** k for k in (1, 2, 3, 4)}
    moments = {f"m{k}": float(p.mean()) for k, p in powers.items()}
    moments["se"] = {
        f"m{k}": float(p.std(ddof=1) / math.sqrt(t)) if t > 1 else float("nan")
        for k, p in powers.items()
    }
    return moments


def _bound_block(cfg: ExperimentConfig, s_count: int) -> dict:
    b = bounds_mod.BoundInputs(cfg.x, cfg.y, s_count, cfg.delta, cfg.z)
    return {
        "wasserstein": bounds_mod.wasserstein_bound(b),
        "kolmogorov": bounds_mod.kolmogorov_bound(b),
        "nondiagonal": bounds_mod.nondiagonal_bound(cfg.x, cfg.delta),
        # the summed-third-moment comparator divides by ln y
        "delta3_sum": (bounds_mod.delta3_sum_bound(cfg.x, cfg.y, cfg.z)
                       if cfg.y >= 2 else None),
        "exchange_variance": bounds_mod.exchange_variance_bound(cfg.x, cfg.delta, cfg.z),
    }


def run_simulate(config: ExperimentConfig) -> ExperimentReport:
    """Full experiment: seeded trials, moments, distances, bounds, ratios."""
    cfg = config.resolved()
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    table = segmented_factorize(cfg.x, cfg.y)
    timing["sieve"] = (time.perf_counter() - t0) * 1000.0
    s = table.squarefree_count

    t0 = time.perf_counter()
    raw = _run_trials(table, cfg.master_seed, cfg.trials, cfg.workers)
    w = raw / math.sqrt(s) if s else raw.astype(float)
    timing["trials"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    moments = _moment_block(w)

    exact: dict = {}
    try:
        nd = quad_mod.param_enumerate_nondiagonal(cfg.x, cfg.y)
        exact["nondiagonal"] = nd
        exact["fourth_moment"] = quad_mod.diagonal_count(s) + nd
    except ScaleError:
        pass

    sample = dist_mod.SampleSet.from_values(w)
    ks = dist_mod.kolmogorov_stat(sample)
    w1 = dist_mod.wasserstein1(sample)
    holds, ratio = dist_mod.kkw_check(sample)
    distances = {"ks": ks, "w1": w1, "kkw_ratio": ratio, "kkw_holds": holds}

    bounds = _bound_block(cfg, s)
    ratios = {
        "w1_over_bound": w1 / bounds["wasserstein"],
        "ks_over_bound": ks / bounds["kolmogorov"],
    }
    timing["analysis"] = (time.perf_counter() - t0) * 1000.0

    return ExperimentReport(
        cfg.as_dict(), s, moments, exact, distances, bounds, ratios, timing, w,
    )


def run_moments(config: ExperimentConfig) -> dict:
    """Exact fourth-moment fragment: counts, closed forms and bound ratios."""
    cfg = config.resolved()
    table = segmented_factorize(cfg.x, cfg.y)
    s = table.squarefree_count
    nd = quad_mod.param_enumerate_nondiagonal(cfg.x, cfg.y)
    diag = quad_mod.diagonal_count(s)
    out = {
        "s_count": s,
        "diagonal": diag,
        "nondiagonal": nd,
        "fourth_moment": diag + nd,
        "nondiagonal_bound": bounds_mod.nondiagonal_bound(cfg.x, cfg.delta),
    }
    out["nondiagonal_over_bound"] = nd / out["nondiagonal_bound"]
    out["fourth_over_diagonal"] = (diag + nd) / diag if diag else None
    if s <= quad_mod.ORACLE_MAX_S:
        out["oracle"] = quad_mod.oracle_count_square_quadruples(table)
    return out


def run_stein_checks(config: ExperimentConfig, identity_max_l: int = 30,
                     var_trials: int = 2000) -> dict:
    """Identity and conditional-moment checks; each sub-check reports its
    own result or the scale refusal that stopped it."""
    cfg = config.resolved()
    table = segmented_factorize(cfg.x, cfg.y)
    out: dict = {"s_count": table.squarefree_count}

    identity_ok = all(
        stein_mod.subset_weight_identity(l, w) == Fraction(1, w)
        for l in range(1, identity_max_l + 1)
        for w in range(1, l + 1)
    )
    out["weight_identity"] = {"max_l": identity_max_l, "ok": identity_ok}

    signs = SignSource(cfg.master_seed)
    try:
        rng = np.random.default_rng(cfg.master_seed)
        small = sieve_primes(math.floor(cfg.z))
        assignments = [
            {p: int(rng.choice((-1, 1))) for p in small} for _ in range(5)
        ]
        rep = stein_mod.conditional_moments_check(table, cfg.delta, assignments)
        out["conditional_moments"] = {
            "large_primes": len(rep.large_primes),
            "ok": rep.ok,
        }
    except ScaleError as e:
        out["conditional_moments"] = {"skipped": str(e)}

    try:
        direct, closed = stein_mod.decomposition_sides(table, cfg.z, signs)
        out["decomposition"] = {
            "equal": direct == closed,
            "value": str(direct),
        }
    except ScaleError as e:
        out["decomposition"] = {"skipped": str(e)}

    try:
        terms = stein_mod.stein_terms(table, cfg.z, var_trials, cfg.master_seed)
        goal = bounds_mod.exchange_variance_bound(cfg.x, cfg.delta, cfg.z)
        d3_bound = bounds_mod.delta3_sum_bound(cfg.x, cfg.y, cfg.z) if cfg.y >= 2 else None
        out["exchange_variance"] = {
            "estimate": terms.exchange_variance,
            "trials": var_trials,
            "exchange_variance_bound": goal,
            "ratio": terms.exchange_variance / goal,
        }
        out["sum_delta3"] = {
            "value": terms.sum_delta3,
            "exact_primes": terms.exact_primes,
            "bounded_primes": terms.bounded_primes,
            "delta3_sum_bound": d3_bound,
            "ratio": terms.sum_delta3 / d3_bound if d3_bound else None,
        }
    except ScaleError as e:
        out["exchange_variance"] = {"skipped": str(e)}
    return out


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _histogram_block(w: np.ndarray) -> dict:
    """64 bins on [-5, 5] plus explicit under/overflow bins; counts (with
    the flows) sum to the number of trials."""
    counts, edges = np.histogram(w, bins=HIST_BINS, range=HIST_RANGE)
    under = int((w < HIST_RANGE[0]).sum())
    over = int((w > HIST_RANGE[1]).sum())
    # values exactly at the right edge land in the last bin per numpy
    return {
        "edges": [float(e) for e in edges],
        "counts": [under] + [int(c) for c in counts] + [over],
    }


def emit(report: ExperimentReport, formats: tuple[str, ...], out_base: str,
         include_timing: bool = False) -> list[Path]:
    """Write report files <out_base>.json / <out_base>.csv /
    <out_base>.hist.json; on any I/O failure partial files are removed and
    the error re-raised."""
    base = Path(out_base)
    if str(base.parent) not in ("", "."):
        base.parent.mkdir(parents=True, exist_ok=True)
    w_values = report.w_values
    written: list[Path] = []
    try:
        if "json" in formats:
            path = Path(str(base) + ".json")
            path.write_text(report.dumps(include_timing) + "\n")
            written.append(path)
        if "csv" in formats:
            if w_values is None:
                raise ValueError("csv format needs per-trial values")
            path = Path(str(base) + ".csv")
            lines = ["trial,w"]
            lines += [f"{i},{float(v)!r}" for i, v in enumerate(w_values)]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
        if "histogram" in formats:
            if w_values is None:
                raise ValueError("histogram format needs per-trial values")
            path = Path(str(base) + ".hist.json")
            path.write_text(json.dumps(_histogram_block(w_values), indent=2) + "\n")
            written.append(path)
    except OSError:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _add_interval_args(p: argparse.ArgumentParser, trials: bool = False) -> None:
    p.add_argument("--x", type=int, required=True, help="interval left endpoint")
    p.add_argument("--y", type=int, help="interval length")
    p.add_argument("--delta", type=float, help="interval length as a fraction of x")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--z", type=float, default=None,
                   help="override the small/large prime threshold")
    if trials:
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--workers", type=int,
                       default=int(os.environ.get("RMF_LAB_WORKERS", "1")))
    p.add_argument("--out", default=None, help="output path base (default stdout)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rmflab",
        description="Random multiplicative functions in short intervals: "
                    "simulation, exact counting and distance diagnostics.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run seeded Monte Carlo trials")
    _add_interval_args(p, trials=True)
    p.add_argument("--format", default="json",
                   help="comma-separated subset of json,csv,histogram")
    p.add_argument("--timed-json", action="store_true",
                   help="embed wall-clock timings in the JSON report "
                        "(makes files non-reproducible)")

    p = sub.add_parser("moments", help="exact fourth moment of the interval sum")
    _add_interval_args(p)
    p.add_argument("--budget", type=int, default=quad_mod.DEFAULT_BUDGET)

    p = sub.add_parser("quadruples", help="square-quadruple counts and bound")
    _add_interval_args(p)
    p.add_argument("--budget", type=int, default=quad_mod.DEFAULT_BUDGET)

    p = sub.add_parser("stein", help="identity and conditional-moment checks")
    _add_interval_args(p)
    p.add_argument("--var-trials", type=int, default=2000)
    p.add_argument("--identity-max-l", type=int, default=30)

    p = sub.add_parser("bounds", help="evaluate every bound for an interval")
    _add_interval_args(p)

    p = sub.add_parser("distances", help="distances of a stored W sample "
                                         "from the standard normal")
    p.add_argument("--infile", required=True, help="CSV with header trial,w")
    p.add_argument("--out", default=None)
    return ap


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        x=args.x,
        y=args.y,
        delta=args.delta,
        trials=getattr(args, "trials", 1),
        master_seed=args.seed,
        z_override=args.z,
        workers=getattr(args, "workers", 1),
        output_path=args.out,
        formats=tuple(getattr(args, "format", "json").split(",")),
    )


def _emit_or_print(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out is None:
        print(text)
    else:
        path = Path(out + ".json")
        if str(path.parent) not in ("", "."):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = _config_from_args(args).resolved()
            t0 = time.perf_counter()
            report = run_simulate(cfg)
            wall = (time.perf_counter() - t0) * 1000.0
            print(f"simulate: {cfg.trials} trials in {wall:.1f} ms", file=sys.stderr)
            if cfg.output_path is None:
                print(report.dumps(args.timed_json))
            else:
                emit(report, cfg.formats, cfg.output_path, args.timed_json)
        elif args.command == "moments":
            cfg = _config_from_args(args)
            _emit_or_print(run_moments(cfg), args.out)
        elif args.command == "quadruples":
            cfg = _config_from_args(args).resolved()
            table = segmented_factorize(cfg.x, cfg.y)
            s = table.squarefree_count
            payload = {
                "s_count": s,
                "diagonal": quad_mod.diagonal_count(s),
                "nondiagonal": quad_mod.param_enumerate_nondiagonal(
                    cfg.x, cfg.y, args.budget),
                "nondiagonal_bound": bounds_mod.nondiagonal_bound(cfg.x, cfg.delta),
            }
            if s <= quad_mod.ORACLE_MAX_S:
                payload["oracle"] = quad_mod.oracle_count_square_quadruples(table)
            _emit_or_print(payload, args.out)
        elif args.command == "stein":
            cfg = _config_from_args(args)
            _emit_or_print(
                run_stein_checks(cfg, args.identity_max_l, args.var_trials), args.out)
        elif args.command == "bounds":
            cfg = _config_from_args(args).resolved()
            table = segmented_factorize(cfg.x, cfg.y)
            _emit_or_print(_bound_block(cfg, table.squarefree_count), args.out)
        elif args.command == "distances":
            with open(args.infile) as fh:
                header = fh.readline().strip()
                if header != "trial,w":
                    raise ValueError(f"unexpected CSV header {header!r}")
                values = [float(line.split(",")[1]) for line in fh if line.strip()]
            sample = dist_mod.SampleSet.from_values(values)
            holds, ratio = dist_mod.kkw_check(sample)
            _emit_or_print({
                "n": sample.n,
                "ks": dist_mod.kolmogorov_stat(sample),
                "w1": dist_mod.wasserstein1(sample),
                "kkw_ratio": ratio,
                "kkw_holds": holds,
            }, args.out)
    except ScaleError as e:
        print(f"scale error: {e}", file=sys.stderr)
        return EXIT_SCALE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
