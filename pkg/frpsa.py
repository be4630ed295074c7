"""
Command line for the two-stage PLS-SEM / neural network analysis.

python frpsa.py run --out results  # bundled spec and survey
python frpsa.py run --spec data/replica_spec.json --data survey.csv --out results
python frpsa.py pls --spec ... --data ... --out ... [--scores scores.csv]
python frpsa.py ann --data scores.csv --target ITI --out ...
python frpsa.py gen --spec data/replica_spec.json --params data/replica_generator.json --out survey.csv
python frpsa.py validate --spec ... [--data ...]
"""
import argparse
import logging
import sys

import config
from dataset import load_dataset
from effects import enumerate_indirect
from model_spec import ModelSpec, check_columns, expand_higher_order, load_spec
from pipeline import RunOptions, apply_overrides, run_ann_on_scores, run_frpsa
from synthetic import generate_synthetic, load_generator_params, write_synthetic
from utils import FrpsaError, stage

logger = logging.getLogger("frpsa")


def _names(value):
    return [name.strip() for name in value.split(",") if name.strip()] if value else None


def _add_run_flags(p, bootstrap=True, ann=True, data=None):
    p.add_argument("--data", type=str, default=data, required=data is None)
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", type=str, default="csv", choices=config.REPORT_FORMATS)
    p.add_argument("--delimiter", type=str, default=",")
    p.add_argument("--timing", action="store_true")
    if bootstrap:
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--skip-bootstrap", action="store_true")
    if ann:
        p.add_argument("--folds", type=int, default=None)
        p.add_argument("--hidden", type=int, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--rate", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="frpsa")
    parser.add_argument("--verbose", action="store_true")
    parser.add_argument("--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run")  # both stages
    run.add_argument("--spec", type=str, default=config.REPLICA_SPEC_PATH)
    _add_run_flags(run, data=config.REPLICA_SURVEY_PATH)

    pls = sub.add_parser("pls")  # stage one only
    pls.add_argument("--spec", type=str, default=config.REPLICA_SPEC_PATH)
    pls.add_argument("--scores", type=str, default=None)
    _add_run_flags(pls, ann=False, data=config.REPLICA_SURVEY_PATH)

    ann = sub.add_parser("ann")  # stage two on a CSV of construct scores
    ann.add_argument("--spec", type=str, default=None)
    ann.add_argument("--target", type=str, default=None)
    ann.add_argument("--inputs", type=str, default=None)  # comma separated
    _add_run_flags(ann, bootstrap=False)

    gen = sub.add_parser("gen")
    gen.add_argument("--spec", type=str, default=config.REPLICA_SPEC_PATH)
    gen.add_argument("--params", type=str, default=config.REPLICA_GENERATOR_PATH)
    gen.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    gen.add_argument("--out", type=str, required=True)

    validate = sub.add_parser("validate")
    validate.add_argument("--spec", type=str, required=True)
    validate.add_argument("--data", type=str, default=None)
    validate.add_argument("--delimiter", type=str, default=",")
    return parser


def _overrides(args):
    return {"seed": args.seed,
            "bootstrap_reps": getattr(args, "reps", None),
            "significance_alpha": getattr(args, "alpha", None),
            "folds": getattr(args, "folds", None),
            "hidden_nodes": getattr(args, "hidden", None),
            "epochs": getattr(args, "epochs", None),
            "learning_rate": getattr(args, "rate", None)}


def _options(args):
    return RunOptions(threads=args.threads, fmt=args.format,
                      skip_bootstrap=getattr(args, "skip_bootstrap", False),
                      timing=args.timing, delimiter=args.delimiter)


def validate(args):
    with stage("validate"):
        m = load_spec(args.spec)
        if args.data:
            check_columns(m, load_dataset(args.data, args.delimiter).columns)
        expanded = expand_higher_order(m)
        chains = enumerate_indirect(expanded)
    print(f"{args.spec}: {len(m.constructs)} constructs, {len(m.paths)} paths "
          f"({len(m.interactions)} interactions), {len(chains)} indirect chains")
    return config.EXIT_OK


def generate(args):
    with stage("gen"):
        m = load_spec(args.spec)
        params = load_generator_params(args.params, m)
        write_synthetic(generate_synthetic(m, params, args.seed), args.out)
    return config.EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        parser.error("--seed must be non-negative")
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "validate":
            return validate(args)
        if args.command == "gen":
            return generate(args)
        if args.command == "ann":
            if args.spec:
                with stage("load"):
                    m = load_spec(args.spec)
            else:
                m = ModelSpec(constructs=(), paths=())
            m = apply_overrides(m, _overrides(args))
            run_ann_on_scores(args.data, args.out, m, inputs=_names(args.inputs), target=args.target,
                              options=_options(args))
            return config.EXIT_OK
        run_frpsa(args.spec, args.data, args.out, overrides=_overrides(args), options=_options(args),
                  stages="all" if args.command == "run" else "pls",
                  scores_path=getattr(args, "scores", None))
        return config.EXIT_OK
    except FrpsaError as err:
        logger.error("%s", err)
        return err.exit_code


if __name__ == '__main__':
    sys.exit(main())
