"""Command-line entry point: ``heavytail <command> [flags]``.

Exit codes: 0 success, 1 I/O or environment failure, 2 usage or validation.
Every run writes a manifest; replaying its ``argv`` reproduces the outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels, report
from .bounds import INDEPENDENT, MixingDecay, MomentSpec, rate_constants
from .estimators import (
    decompose,
    estimator_record,
    hill_estimate,
    huber_estimate,
    huber_threshold,
    sample_mean,
    truncated_mean_bubeck,
)
from .experiments import ExperimentConfig, load_config, run_deviation_experiment
from .generators import (
    GeneratorDescriptor,
    Kind,
    MarkovChainSpec,
    TailDistribution,
    fit_decay_envelope,
    path_truncated_moments,
    read_path_csv,
    sample_path,
    write_path_csv,
)
from .ingest import analyze, parse_prices

SEED_ENV = "HEAVYTAIL_SEED"


class UsageError(Exception):
    pass


def _r_value(text):
    if text.lower() in ("inf", "infinity", "independent"):
        return INDEPENDENT
    return float(text)


def _c_value(text):
    return None if text == "c0" else float(text)


def _int_list(text):
    return [int(float(t)) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _matrix(text):
    return [_float_list(row) for row in text.split(";")]


def _effective_seed(args):
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def _manifest(args, argv, outputs, seed=None):
    effective = list(argv)
    if seed is not None:
        effective += ["--seed", str(seed)]
    params = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {
        "command": args.command,
        "parameters": {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                       for k, v in params.items()},
        "master_seed": seed,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "outputs": [str(o) for o in outputs],
        "argv": effective,
    }


def _emit(args, argv, text, seed=None):
    """Write ``text`` to ``--out`` (with manifest beside it) or stdout (manifest on stderr)."""
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        Path(str(out) + ".manifest.json").write_text(
            report.dumps(_manifest(args, argv, [out], seed))
        )
    else:
        sys.stdout.write(text)
        sys.stderr.write(json.dumps({"manifest": _manifest(args, argv, [], seed)}) + "\n")


# -- commands ----------------------------------------------------------------

def cmd_constants(args, argv):
    if args.nu_alpha is None:
        raise UsageError("--nu-alpha is required")
    alpha_prime = args.alpha if args.alpha_prime is None else args.alpha_prime
    decay = MixingDecay(args.C, args.r)
    k = rate_constants(decay, MomentSpec(args.alpha, alpha_prime, args.nu_alpha), args.delta, args.c)
    rep = k.report()
    text = report.dumps(rep) if args.format == "json" else report.format_key_values(rep)
    _emit(args, argv, text)


def _generator_from_args(args, seed):
    if args.generator:
        doc = json.loads(Path(args.generator).read_text())
        doc["seed"] = seed
        gen = GeneratorDescriptor.from_json(doc)
    else:
        base = TailDistribution(Kind(args.kind), args.tail_exponent, args.scale, args.location)
        chain = None
        decay = MixingDecay()
        if args.transition:
            emission = _float_list(args.emission_scale) if args.emission_scale else None
            P = _matrix(args.transition)
            chain = MarkovChainSpec(P, emission if emission else [1.0] * len(P))
            if args.C == "fit":
                decay = fit_decay_envelope(chain, args.r)
            else:
                decay = MixingDecay(float(args.C), args.r)
        gen = GeneratorDescriptor(base, chain, seed, decay)
    if args.alpha is not None:
        gen.base.require_moment(args.alpha)
    return gen


def cmd_simulate(args, argv):
    if args.n < 1:
        raise UsageError(f"--n must be positive, got {args.n}")
    seed = _effective_seed(args)
    gen = _generator_from_args(args, seed)
    xs = sample_path(gen, args.n)
    out = Path(args.out)
    with out.open("w") as fh:
        write_path_csv(xs, fh)
    desc = Path(str(out) + ".generator.json")
    desc.write_text(report.dumps(gen.to_json()))
    Path(str(out) + ".manifest.json").write_text(
        report.dumps(_manifest(args, argv, [out, desc], seed))
    )


def _read_xs(path):
    with open(path) as fh:
        return read_path_csv(fh)


def cmd_decompose(args, argv):
    xs = _read_xs(args.input)
    centers = None
    if args.generator:
        gen = GeneratorDescriptor.from_json(json.loads(Path(args.generator).read_text()))
        mean_in, mean_out, _ = path_truncated_moments(gen, args.b)
        centers = (mean_in, mean_out)
    dec = decompose(xs, args.b, centers)
    out = Path(args.out)
    with out.open("w") as fh:
        dec.to_csv(xs, fh)
    Path(str(out) + ".manifest.json").write_text(report.dumps(_manifest(args, argv, [out])))


def cmd_estimate(args, argv):
    xs = _read_xs(args.input)
    n = xs.size
    est = args.estimator
    if est == "mean":
        params, value = {}, sample_mean(xs)
    elif est == "bubeck":
        params = {"b_scale": args.b_scale, "delta": args.delta, "alpha": args.alpha}
        value = truncated_mean_bubeck(xs, args.b_scale, args.delta, args.alpha)
    elif est == "huber":
        H = args.H
        if H is None:
            if args.mu_alpha is None:
                raise UsageError("huber needs --H or --mu-alpha")
            H = huber_threshold(args.mu_alpha, n, args.delta, args.alpha)
        params, value = {"H": H}, huber_estimate(xs, H)
    else:
        h = hill_estimate(xs, args.k)
        params, value = {"k": h.k}, h.index
    _emit(args, argv, report.dumps(estimator_record(est, n, params, value)))


def cmd_experiment(args, argv):
    cfg = load_config(args.config)
    doc = cfg.to_json()
    seed = _effective_seed(args)
    if seed is not None:
        doc["master_seed"] = seed
    if args.replicates is not None:
        doc["replicates"] = args.replicates
    if args.n_grid is not None:
        doc["n_grid"] = args.n_grid
    cfg = ExperimentConfig.from_json(doc)
    rep = run_deviation_experiment(cfg, jobs=args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "report.json"
    csv_path = out_dir / "rates.csv"
    json_path.write_text(report.dumps(rep.to_json()))
    csv_path.write_text(rep.rate_table())
    manifest = _manifest(args, argv, [json_path, csv_path], cfg.master_seed)
    manifest["parameters"].pop("jobs", None)  # outputs never depend on worker count
    (out_dir / "manifest.json").write_text(report.dumps(manifest))


def cmd_analyze(args, argv):
    text = Path(args.prices).read_text()
    prices = parse_prices(text)
    rep = analyze(prices, args.k_grid or (), args.max_lag)
    _emit(args, argv, report.dumps(rep))


# -- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="heavytail",
        description="Convergence-rate constants and Monte Carlo checks for heavy-tailed sample means.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print the rate constants")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--alpha-prime", type=float)
    p.add_argument("--r", type=_r_value, default=INDEPENDENT, help='number > 2 or "inf"')
    p.add_argument("--C", type=float, default=0.0)
    p.add_argument("--nu-alpha", type=float)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--c", type=_c_value, default=None, help='number or "c0" (default)')
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("simulate", help="write a sample path as CSV")
    p.add_argument("--generator", help="generator descriptor JSON (overrides inline flags)")
    p.add_argument("--kind", choices=[k.value for k in Kind], default=Kind.SYMMETRIC_PARETO.value)
    p.add_argument("--tail-exponent", type=float, default=2.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--location", type=float, default=0.0)
    p.add_argument("--transition", help='rows separated by ";", e.g. "0.9,0.1;0.1,0.9"')
    p.add_argument("--emission-scale", help='comma list, e.g. "1,2"')
    p.add_argument("--C", default="fit", help='envelope scale or "fit"')
    p.add_argument("--r", type=_r_value, default=3.0)
    p.add_argument("--alpha", type=float, help="check that E|X|^(1+alpha) is finite")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="split a path into main and tail parts")
    p.add_argument("--input", required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--generator", help="descriptor JSON for analytic centering")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("estimate", help="run one mean or tail-index estimator")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", choices=["mean", "bubeck", "huber", "hill"], required=True)
    p.add_argument("--b-scale", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--H", type=float)
    p.add_argument("--mu-alpha", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="replicated deviation experiment")
    p.add_argument("--config", required=True, help="config JSON path or bundled config name")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-grid", type=_int_list)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("analyze", help="log returns, Ljung-Box and Hill curve of a price CSV")
    p.add_argument("--prices", required=True)
    p.add_argument("--k-grid", type=_int_list)
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        args.func(args, argv)
    except (UsageError, ValueError, KeyError, json.JSONDecodeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"heavytail {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"heavytail {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
