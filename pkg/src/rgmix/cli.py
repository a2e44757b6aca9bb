"""Batch command-line front end: simulate scenario data, fit the repulsive
mixture, and post-process traces into plot-ready CSV files.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
Every command writes a JSON manifest next to its outputs so a run can be
reproduced bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata

import numpy as np

from . import diagnostics
from .datasets import SCENARIOS, generate_synthetic, load_dataset, write_dataset
from .distributions import KPrior
from .errors import RgmixError
from .repulsion import MIN_PAIRWISE, PRODUCT_POWER, RepulsionSpec
from .sampler import ModelConfig, Trace, run_chain

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

_ZK_CACHE_ENV = "RGM_ZK_CACHE"

# flat key=value config keys mirroring ModelConfig; values are the defaults
CONFIG_KEYS = {
    "beta": 1.0,
    "form": MIN_PAIRWISE,
    "g0": 10.0,
    "tau": 10.0,
    "a0": 2.0,
    "b0": 2.0,
    "sigma_lo_sq": 0.01,
    "sigma_hi_sq": 100.0,
    "k_prior_intensity": 1.0,
    "k_prior_mode": "plain",
    "m": 2,
    "k_max": 30,
    "zk_mc": 10**6,
    "ztilde_mc": 2000,
    "k_init": 1,
    "exact_k_weights": True,
    "max_rejection_attempts": 100_000,
    "fixed_cov": None,
}


def _build_version() -> str:
    try:
        return "rgmix-" + metadata.version("rgmix")
    except metadata.PackageNotFoundError:
        return "rgmix-dev"


def _write_manifest(out_dir: str, name: str, payload: dict) -> None:
    payload = dict(payload)
    payload["build"] = _build_version()
    path = os.path.join(out_dir, f"{name}.manifest.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_config_file(path: str | None) -> dict:
    """Flat key=value model configuration; unknown keys are hard errors and
    missing keys fall back to the documented defaults (logged to stderr)."""
    resolved = dict(CONFIG_KEYS)
    seen: set[str] = set()
    if path is not None:
        with open(path) as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise RgmixError(f"{path}:{line_no}: expected key=value")
                key, value = (tok.strip() for tok in line.split("=", 1))
                if key not in CONFIG_KEYS:
                    raise RgmixError(
                        f"{path}:{line_no}: unknown config key {key!r} "
                        f"(valid: {', '.join(sorted(CONFIG_KEYS))})"
                    )
                resolved[key] = _coerce(key, value)
                seen.add(key)
    for key in sorted(set(CONFIG_KEYS) - seen):
        print(f"config: {key} not set, using default {resolved[key]!r}", file=sys.stderr)
    return resolved


def _coerce(key: str, value: str):
    default = CONFIG_KEYS[key]
    if key == "fixed_cov":
        if value.lower() in ("none", ""):
            return None
        return tuple(float(tok) for tok in value.split(",")) if "," in value else float(value)
    if key == "form":
        if value not in (MIN_PAIRWISE, PRODUCT_POWER):
            raise RgmixError(f"form must be {MIN_PAIRWISE} or {PRODUCT_POWER}, got {value!r}")
        return value
    if key == "k_prior_mode":
        if value not in ("plain", "zk"):
            raise RgmixError(f"k_prior_mode must be plain or zk, got {value!r}")
        return value
    if isinstance(default, bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise RgmixError(f"{key} expects a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def config_from_mapping(values: dict, zk_table=None) -> ModelConfig:
    spec = RepulsionSpec(form=values["form"], g0=values["g0"], tau=values["tau"])
    if values["k_prior_mode"] == "zk":
        if zk_table is None:
            raise RgmixError(
                "k_prior_mode=zk needs a Z_K table; fit computes one from the "
                "repulsion settings before constructing the prior"
            )
        k_prior = KPrior(
            intensity=values["k_prior_intensity"], mode="zk", log_zk_table=tuple(zk_table)
        )
    else:
        k_prior = KPrior(intensity=values["k_prior_intensity"], mode="plain")
    return ModelConfig(
        beta=values["beta"],
        spec=spec,
        a0=values["a0"],
        b0=values["b0"],
        sigma_lo_sq=values["sigma_lo_sq"],
        sigma_hi_sq=values["sigma_hi_sq"],
        k_prior=k_prior,
        m=values["m"],
        k_max=values["k_max"],
        zk_mc=values["zk_mc"],
        ztilde_mc=values["ztilde_mc"],
        k_init=values["k_init"],
        exact_k_weights=values["exact_k_weights"],
        max_rejection_attempts=values["max_rejection_attempts"],
        fixed_cov=values["fixed_cov"],
    )


def cmd_simulate(args) -> int:
    if args.scenario not in SCENARIOS:
        print(
            f"unknown scenario {args.scenario!r}; valid: {', '.join(SCENARIOS)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    if args.n < 1:
        print(f"n must be >= 1, got {args.n}", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    ds = generate_synthetic(args.scenario, args.n, args.seed)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    os.makedirs(out_dir, exist_ok=True)
    write_dataset(ds, args.out)
    _write_manifest(
        out_dir,
        os.path.basename(args.out),
        {
            "command": "simulate",
            "scenario": args.scenario,
            "n": args.n,
            "seed": args.seed,
            "output": os.path.abspath(args.out),
            "elapsed_s": time.perf_counter() - started,
        },
    )
    return EXIT_OK


def _fit_one_chain(payload):
    data, config, sweeps, burn_in, thin, seed, trace_path, cache_dir = payload
    trace = run_chain(
        data, config, sweeps, burn_in, thin=thin, seed=seed, zk_cache_dir=cache_dir
    )
    trace.write_jsonl(trace_path)
    return trace_path


def cmd_fit(args) -> int:
    if args.burn_in >= args.sweeps:
        print(f"burn-in {args.burn_in} must be below sweeps {args.sweeps}", file=sys.stderr)
        return EXIT_USAGE
    if args.thin < 1 or args.chains < 1:
        print("thin and chains must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    stage = "load data"
    try:
        data = load_dataset(args.data)
        stage = "parse config"
        values = parse_config_file(args.config)
        cache_dir = os.environ.get(_ZK_CACHE_ENV) or None
        zk_table = None
        if values["k_prior_mode"] == "zk":
            stage = "compute Z_K table"
            from .repulsion import cached_log_zk_table

            spec = RepulsionSpec(form=values["form"], g0=values["g0"], tau=values["tau"])
            zk_table = cached_log_zk_table(
                cache_dir,
                spec,
                data.p,
                values["k_max"],
                values["zk_mc"],
                np.random.default_rng(np.random.SeedSequence(args.seed).spawn(1)[0]),
            )
        config = config_from_mapping(values, zk_table=zk_table)
        os.makedirs(args.out, exist_ok=True)
        stage = "run sampler"
        jobs = []
        for c in range(args.chains):
            suffix = f"_chain{c}" if args.chains > 1 else ""
            trace_path = os.path.join(args.out, f"trace{suffix}.jsonl")
            jobs.append(
                (data, config, args.sweeps, args.burn_in, args.thin,
                 args.seed + 1000 * c, trace_path, cache_dir)
            )
        if args.chains == 1:
            outputs = [_fit_one_chain(jobs[0])]
        else:
            with ProcessPoolExecutor(max_workers=args.chains) as pool:
                outputs = list(pool.map(_fit_one_chain, jobs))
    except RgmixError as exc:
        print(f"fit failed at stage {stage!r}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"fit failed at stage {stage!r}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write_manifest(
        args.out,
        "fit",
        {
            "command": "fit",
            "data": os.path.abspath(args.data),
            "config_file": os.path.abspath(args.config) if args.config else None,
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in values.items()},
            "sweeps": args.sweeps,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "seed": args.seed,
            "chains": args.chains,
            "traces": [os.path.abspath(p) for p in outputs],
            "elapsed_s": time.perf_counter() - started,
        },
    )
    return EXIT_OK


def cmd_diagnose(args) -> int:
    what = set(tok.strip() for tok in args.what.split(",") if tok.strip())
    valid = {"cpo", "grid", "khist", "cocluster", "acf"}
    if not what or what - valid:
        print(f"--what takes a comma list from {sorted(valid)}", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    try:
        trace = Trace.read_jsonl(args.trace)
        data = load_dataset(args.data)
    except (RgmixError, OSError) as exc:
        print(f"diagnose failed reading inputs: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if trace.centers[0].shape[1] != data.p or len(trace.assignments[0]) != data.n:
        print(
            f"trace is over n={len(trace.assignments[0])}, p={trace.centers[0].shape[1]} "
            f"but the data file has n={data.n}, p={data.p}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    os.makedirs(args.out, exist_ok=True)
    outputs = {}
    try:
        if "cpo" in what:
            value = diagnostics.log_cpo(trace, data)
            print(f"log-CPO {value:.17g}")
            path = os.path.join(args.out, "logcpo.txt")
            with open(path, "w") as fh:
                fh.write(f"{value:.17g}\n")
            outputs["cpo"] = path
        if "grid" in what:
            if data.p != 2:
                print("grid diagnostics need 2-d data", file=sys.stderr)
                return EXIT_USAGE
            lo = data.obs.min(axis=0) - 3.0
            hi = data.obs.max(axis=0) + 3.0
            axes = [np.linspace(lo[j], hi[j], args.grid_points) for j in range(2)]
            grid = diagnostics.predictive_density_grid(trace, axes, data_n=data.n)
            path = os.path.join(args.out, "density_grid.csv")
            diagnostics.write_grid_csv(grid, path)
            outputs["grid"] = path
        if "khist" in what:
            freqs = diagnostics.posterior_k_distribution(trace)
            path = os.path.join(args.out, "k_hist.csv")
            diagnostics.write_k_histogram_csv(freqs, path)
            outputs["khist"] = path
        if "cocluster" in what:
            summary = diagnostics.coclustering(trace, data.true_labels)
            path = os.path.join(args.out, "cocluster.csv")
            diagnostics.write_cocluster_csv(summary, path)
            if summary.misclassification is not None:
                print(f"misclassification {summary.misclassification:.6g}")
            outputs["cocluster"] = path
        if "acf" in what:
            acf = diagnostics.autocorrelation(
                np.asarray(trace.ks, dtype=float), max_lag=min(50, len(trace) - 1)
            )
            path = os.path.join(args.out, "acf.csv")
            diagnostics.write_acf_csv(acf, path)
            outputs["acf"] = path
    except RgmixError as exc:
        print(f"diagnose failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write_manifest(
        args.out,
        "diagnose",
        {
            "command": "diagnose",
            "trace": os.path.abspath(args.trace),
            "data": os.path.abspath(args.data),
            "what": sorted(what),
            "outputs": {k: os.path.abspath(v) for k, v in outputs.items()},
            "elapsed_s": time.perf_counter() - started,
        },
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgmix", description="Repulsive Gaussian mixture batch tool"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate scenario data as CSV")
    sim.add_argument("--scenario", required=True, help=f"one of: {', '.join(SCENARIOS)}")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="run the blocked-collapsed Gibbs sampler")
    fit.add_argument("--data", required=True, help="input CSV")
    fit.add_argument("--config", default=None, help="flat key=value model config")
    fit.add_argument("--sweeps", type=int, default=2000)
    fit.add_argument("--burn-in", dest="burn_in", type=int, default=1000)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--out", required=True, help="output directory")
    fit.set_defaults(func=cmd_fit)

    diag = sub.add_parser("diagnose", help="post-process a trace file")
    diag.add_argument("--trace", required=True, help="trace JSONL from fit")
    diag.add_argument("--data", required=True, help="the CSV the trace was fit on")
    diag.add_argument("--what", default="cpo,grid,khist,cocluster,acf")
    diag.add_argument("--grid-points", dest="grid_points", type=int, default=80)
    diag.add_argument("--out", required=True, help="output directory")
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except RgmixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
