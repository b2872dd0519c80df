"""Command-line front end.

Subcommands:

  model build|cache   construct a model from --kind/--param pairs; `build`
                      writes a JSON model file, `cache` stores it under the
                      cache directory (env SPECRES_CACHE_DIR) keyed by its
                      rebuild parameters and skips work when already present
  norms               one bracket of one sweep quantity at a single point
  verify              inequality checks on seeded random corpora, one JSON
                      object per check on stdout
  sweep               run a sweep config file and write its reports
  perturb             run the potential-perturbation pipeline from a config
  report              convert a JSON report to csv / json / plotdata

Config files are TOML.  A sweep config:

    seed = 11
    [model]
    kind = "torus"          # torus | sphere | rough
    n = 2
    K = 8
    [sweep]
    quantity = "cluster-2q" # cluster-2q | resolvent-q'q | resolvent-2q | im-resolvent
    q = [6.0]
    lambda = [1.0, 2.0]     # optional; default dyadic inside the trusted range
    [sweep.eps]
    kind = "power"          # constant | power | log  (log = 1/ln(2+lambda))
    rho = -0.5
    [sweep.mu]
    kind = "constant"
    value = 1.0
    [output]
    directory = "out"       # default "."
    prefix = "report"       # default
    formats = ["json"]      # any of csv, json, plotdata

A perturb config uses [model], [potential] (kind/p plus builder parameters),
[pipeline] (q, lambda, and optional c/n/mu/tol/cluster_eps), and an optional
[iteration] table mirroring IterationConfig.

Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical failure.
"""

import argparse
import json
import os
import sys
from typing import Dict, List, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .inequalities import check_cor34, run_multiplier_corpus, run_prop32_corpus
from .manifolds import build_potential
from .model import NumericalError, random_spectral_operator
from .norms import IterationConfig, operator_norm
from .perturbation import stability_check
from .sweep import (
    QUANTITIES,
    SweepConfig,
    build_model,
    emit,
    ensure_cached,
    fit_all,
    load_model,
    load_report,
    model_cache_path,
    quantity_operator,
    run_sweep,
    save_model,
    trusted_lambda,
)

ESTIMATES = ("L3.1", "3.3", "3.4", "3.5", "3.6", "3.7", "3.8", "C3.4")
COR_VARIANTS = ("a<->b", "b->c", "c->a", "3.10", "3.11")


def cache_dir() -> str:
    return os.environ.get("SPECRES_CACHE_DIR") or os.path.join(
        os.path.expanduser("~"), ".cache", "specres"
    )


def _load_toml(path: str) -> Dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _parse_param(text: str):
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ValueError(f"--param wants KEY=VALUE, got {text!r}")
    for parse in (int, float):
        try:
            return key, parse(raw)
        except ValueError:
            continue
    return key, raw


def _model_params(args) -> Dict:
    params = {"kind": args.kind}
    for item in args.param or ():
        key, value = _parse_param(item)
        params[key] = value
    return params


def _print_json(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_model(args) -> int:
    params = _model_params(args)
    if args.action == "build":
        op = build_model(params)
        path = args.out or os.path.basename(model_cache_path(params, "."))
        save_model(op, params, path)
        print(
            f"wrote {path}: {op.label} size={op.space.size} rank={op.rank} "
            f"trusted_lambda={trusted_lambda(op):g}"
        )
        return 0
    path, built = ensure_cached(params, cache_dir())
    print(f"{'built' if built else 'cached'} {path}")
    return 0


def _cmd_norms(args) -> int:
    if args.model:
        op, _ = load_model(args.model)
    elif args.kind:
        op = build_model(_model_params(args))
    else:
        raise ValueError("norms needs either --model FILE or --kind/--param")
    mapped, p_src, p_tgt = quantity_operator(
        op, args.quantity, args.lam, args.eps, args.mu, args.q
    )
    bracket = operator_norm(mapped, p_src, p_tgt, IterationConfig(seed=args.seed))
    _print_json(
        {
            "model": op.label,
            "quantity": args.quantity,
            "q": args.q,
            "lambda": args.lam,
            "eps": args.eps,
            "mu": args.mu,
            "lower": bracket.lower,
            "upper": bracket.upper,
            "method": bracket.method,
        }
    )
    return 0


def _cor34_corpus(count: int, q: float, seed: int, dim_max: int) -> List:
    """check_cor34 across variants on the shared corpus regime."""
    rng = np.random.default_rng(seed)
    results = []
    for index in range(count):
        dim = int(rng.integers(6, dim_max + 1))
        lam = float(rng.uniform(2.0, 6.0))
        op = random_spectral_operator(
            rng, dim, lam_max=2.0 * lam, label=f"cor34[{index}]"
        )
        eps = float(rng.uniform(lam / 6.0, min(1.5, lam)))
        mu = eps * float(rng.uniform(1.0, 3.0))
        for variant in COR_VARIANTS:
            results.append(check_cor34(op, lam, eps, q, variant, mu=mu, seed=index))
    return results


def _cmd_verify(args) -> int:
    wanted = [args.estimate] if args.estimate else list(ESTIMATES)
    failures = 0
    for estimate in wanted:
        if estimate == "L3.1":
            results = run_multiplier_corpus(
                args.count, args.q, seed=args.seed, dim_max=args.dim_max
            )
        elif estimate == "C3.4":
            results = _cor34_corpus(args.count, args.q, args.seed, args.dim_max)
        else:
            results = run_prop32_corpus(
                args.count, args.q, seed=args.seed, items=(estimate,),
                dim_max=args.dim_max,
            )
        for result in results:
            _print_json(result.to_dict())
            failures += not result.passed
    return 1 if failures else 0


def _cmd_sweep(args) -> int:
    data = _load_toml(args.config)
    config = SweepConfig.from_dict(data)
    records = run_sweep(config)
    fits = fit_all(records)
    output = dict(data.get("output") or {})
    directory = args.out or str(output.get("directory", "."))
    prefix = str(output.get("prefix", "report"))
    formats = [str(fmt) for fmt in output.get("formats", ["json"])]
    os.makedirs(directory, exist_ok=True)
    for fmt in formats:
        target = (
            os.path.join(directory, "plotdata")
            if fmt == "plotdata"
            else os.path.join(directory, f"{prefix}.{fmt}")
        )
        for path in emit(records, fits, fmt, target, config=config):
            print(path)
    return 0


def _cmd_perturb(args) -> int:
    data = _load_toml(args.config)
    op = build_model(dict(data.get("model") or {}))
    potential = dict(data.get("potential") or {})
    V = build_potential(
        str(potential.pop("kind")), op, float(potential.pop("p")), **potential
    )
    pipeline = dict(data.get("pipeline") or {})
    q = float(pipeline.pop("q"))
    grid = [float(x) for x in pipeline.pop("lambda")]
    cfg = None
    if "iteration" in data:
        cfg = IterationConfig(**data["iteration"])
    n = pipeline.pop("n", None)
    report = stability_check(
        op,
        V,
        q,
        grid,
        c=float(pipeline.pop("c", 0.5)),
        n=None if n is None else int(n),
        mu=float(pipeline.pop("mu", 1.0)),
        tol=float(pipeline.pop("tol", 0.05)),
        cluster_eps=float(pipeline.pop("cluster_eps", 1.0)),
        cfg=cfg,
    )
    if pipeline:
        raise ValueError(f"unused pipeline keys: {sorted(pipeline)}")
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0 if report.verified else 1


def _cmd_report(args) -> int:
    doc = load_report(args.infile)
    default_out = {"csv": "report.csv", "json": "report.json", "plotdata": "plotdata"}
    out = args.out or default_out[args.format]
    paths = emit(
        doc["records"],
        doc.get("fits", []),
        args.format,
        out,
        config=doc.get("config"),
        checks=doc.get("checks", []),
    )
    for path in paths:
        print(path)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specres",
        description="spectral cluster/resolvent estimates: models, norms, "
        "inequality checks, sweeps, and the perturbation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    model = sub.add_parser("model", help="build or cache a model operator")
    model.add_argument("action", choices=("build", "cache"))
    model.add_argument("--kind", required=True, choices=("torus", "sphere", "rough"))
    model.add_argument(
        "--param", action="append", metavar="KEY=VALUE", help="model parameter"
    )
    model.add_argument("--out", help="output path (build only)")
    model.set_defaults(handler=_cmd_model)

    norms = sub.add_parser("norms", help="one quantity bracket at one point")
    norms.add_argument("--model", help="model JSON file")
    norms.add_argument("--kind", choices=("torus", "sphere", "rough"))
    norms.add_argument("--param", action="append", metavar="KEY=VALUE")
    norms.add_argument("--quantity", required=True, choices=QUANTITIES)
    norms.add_argument("--q", type=float, required=True)
    norms.add_argument("--lam", type=float, required=True)
    norms.add_argument("--eps", type=float, default=1.0)
    norms.add_argument("--mu", type=float, default=1.0)
    norms.add_argument("--seed", type=int, default=0)
    norms.set_defaults(handler=_cmd_norms)

    verify = sub.add_parser("verify", help="inequality checks on random corpora")
    verify.add_argument("--estimate", choices=ESTIMATES)
    verify.add_argument("--count", type=int, default=5)
    verify.add_argument("--q", type=float, default=6.0)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--dim-max", type=int, default=40)
    verify.set_defaults(handler=_cmd_verify)

    sweep = sub.add_parser("sweep", help="run a sweep config file")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", help="override the output directory")
    sweep.set_defaults(handler=_cmd_sweep)

    perturb = sub.add_parser("perturb", help="run the perturbation pipeline")
    perturb.add_argument("--config", required=True)
    perturb.set_defaults(handler=_cmd_perturb)

    report = sub.add_parser("report", help="convert a JSON report")
    report.add_argument("--in", dest="infile", required=True)
    report.add_argument(
        "--format", required=True, choices=("csv", "json", "plotdata")
    )
    report.add_argument("--out", help="output file (csv/json) or directory")
    report.set_defaults(handler=_cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
