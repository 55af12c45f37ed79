"""Command-line entry point.

Subcommands: ``generate``, ``fit``, ``eval``, ``rates`` and ``hausdorff``.
Experiments are described by a YAML file (``--config``); any key, including
nested ones such as ``constants.b1``, can be overridden with
``--set key=value``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import yaml

from . import harness, latent, manifold_reg, regime1
from .data import Dataset, read_points_csv
from .errors import ConfigurationError


def apply_override(d: dict, assignment: str) -> None:
    """Set ``a.b.c=value`` in a nested dict; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigurationError(f"override {assignment!r} is not key=value")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = d
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"{key!r} descends into a non-mapping")
    node[parts[-1]] = yaml.safe_load(raw)


def load_config(path=None, overrides=()) -> harness.ExperimentConfig:
    d = {}
    if path:
        with open(path) as fh:
            d = yaml.safe_load(fh) or {}
    for a in overrides:
        apply_override(d, a)
    return harness.ExperimentConfig.from_dict(d)


def load_model(path):
    with open(path) as fh:
        kind = json.load(fh).get("kind")
    loaders = {"regime1": regime1.Regime1Model.load,
               "manifold": manifold_reg.ManifoldRegressionModel.load,
               "latent": latent.LatentEstimator.load}
    if kind not in loaders:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    return loaders[kind](path)


def _data_dims(cfg: harness.ExperimentConfig):
    gen = harness.build_generator(cfg)
    return gen.d_X, getattr(gen, "d_Y", None)


def cmd_generate(args, cfg):
    data = harness.generate(cfg, args.n, args.seed)
    data.to_csv(args.out)
    print(f"wrote {data.n} samples to {args.out}")


def cmd_fit(args, cfg):
    d_X, d_Y = _data_dims(cfg)
    data = Dataset.from_csv(args.data, d_X=d_X, d_Y=d_Y)
    model = harness.fit_model(cfg, data)
    model.save(args.out)
    print(f"wrote model to {args.out}")


def cmd_eval(args, cfg):
    model = load_model(args.model)
    err = harness.Scorer(cfg)(model, args.seed)
    print(repr(err))


def cmd_rates(args, cfg):
    out = args.out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    csv_path = os.path.join(out, f"{args.stem}.csv")

    def progress(row):
        print(f"n={row['n']} rep={row['replicate']} error={row['error']:.4g} "
              f"({row['seconds']:.1f}s)", flush=True)

    table = harness.run_rate_experiment(cfg, csv_path, progress=progress)
    paths = harness.write_outputs(table, out, args.stem)
    slope, se = table.slope_fit
    print(f"slope {slope:.3f} +- {se:.3f}; theory -{table.theory_exponent:.3f}")
    for k, p in paths.items():
        print(f"{k}: {p}")


def cmd_hausdorff(args, cfg=None):
    A, B = read_points_csv(args.a), read_points_csv(args.b)
    print(repr(manifold_reg.hausdorff(A, B)))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distreg", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        return sp

    g = with_config(sub.add_parser("generate", help="sample a dataset CSV"))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = with_config(sub.add_parser("fit", help="fit the configured estimator"))
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = with_config(sub.add_parser("eval", help="error of a fitted model"))
    e.add_argument("--model", required=True)
    e.add_argument("--seed", type=int, default=0, help="seed of the covariate draws")
    e.set_defaults(func=cmd_eval)

    r = with_config(sub.add_parser("rates", help="sweep n and fit the rate slope"))
    r.add_argument("--out-dir")
    r.add_argument("--stem", default="rates")
    r.set_defaults(func=cmd_rates)

    h = sub.add_parser("hausdorff", help="distance between two point-cloud CSVs")
    h.add_argument("a")
    h.add_argument("b")
    h.set_defaults(func=cmd_hausdorff, no_config=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = None if getattr(args, "no_config", False) else load_config(args.config, args.set)
        args.func(args, cfg)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
