"""Command-line entry point: ``exp2fscil {gen-synth,run,sweep,lemma,validate}``.

Exit codes: 0 success, 1 validation or parse error, 2 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from typing import List, Optional

import numpy as np

from .core import DatasetInvalid, InvariantError, ProtocolConfig, StrategyConfig, validate
from .io import (DatasetFormatError, RunConfig, load_synth_spec, parse_dataset, write_dataset,
                 write_report, write_synth_spec)
from .protocol import ProtocolReport, run_protocol
from .synth import OverlapQuery, SynthSpec, generate_dataset, monte_carlo_overlap, overlap_bound

log = logging.getLogger("exp2fscil")

SWEEP_PARAMS = {"R": ("R", int), "tau": ("tau", float), "beta-base": ("beta_base", float),
                "beta-inc": ("beta_inc", float)}


def _add_strategy_args(p: argparse.ArgumentParser):
    p.add_argument("--strategy", choices=["baseline", "exp2", "average", "weight"], default="exp2")
    p.add_argument("--R", type=int, default=40)
    p.add_argument("--tau", type=float, default=0.8)
    p.add_argument("--beta-base", type=float, default=0.05)
    p.add_argument("--beta-inc", type=float, default=0.3)
    p.add_argument("--chunk", type=int, default=0, help="streaming chunk size, 0 = whole batch")
    p.add_argument("--no-base-update", action="store_true", help="skip updates during session 0")
    p.add_argument("--seed", type=int, default=None, help="overrides the seed of a --synth spec")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="embedding file")
    src.add_argument("--synth", help="JSON synthetic dataset spec")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exp2fscil")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="write a synthetic Gaussian embedding file")
    g.add_argument("--classes", type=int, required=True)
    g.add_argument("--base", type=int, required=True)
    g.add_argument("--sessions", type=int, required=True)
    g.add_argument("--way", type=int, required=True)
    g.add_argument("--shot", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--sigma", type=float, required=True)
    g.add_argument("--delta", type=float, required=True)
    g.add_argument("--test-per-class", type=int, default=50)
    g.add_argument("--base-train-per-class", type=int, default=50)
    g.add_argument("--placement", choices=["sphere", "simplex"], default=None)
    g.add_argument("--offset", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--spec-out", help="also write the spec as JSON (usable with run --synth)")

    r = sub.add_parser("run", help="run the session protocol and write a report")
    _add_strategy_args(r)
    r.add_argument("--report", help="report path (default: print CSV to stdout)")
    r.add_argument("--format", choices=["csv", "json"], default="csv")

    s = sub.add_parser("sweep", help="grid over one hyperparameter, long-format CSV out")
    _add_strategy_args(s)
    s.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    s.add_argument("--values", required=True, help="comma-separated list")
    s.add_argument("--repeat", type=int, default=1)
    s.add_argument("--out", help="CSV path (default: stdout)")

    lm = sub.add_parser("lemma", help="analytic overlap bound vs Monte Carlo")
    lm.add_argument("--delta", type=float, required=True)
    lm.add_argument("--sigma", type=float, required=True)
    lm.add_argument("--eps", type=float, default=0.0)
    lm.add_argument("--dim", type=int, default=2)
    lm.add_argument("--trials", type=int, default=1_000_000)
    lm.add_argument("--seed", type=int, default=0)
    lm.add_argument("--shards", type=int, default=1)

    v = sub.add_parser("validate", help="check an embedding file")
    v.add_argument("--dataset", required=True)
    return parser


def _strategy(args) -> StrategyConfig:
    return StrategyConfig(args.strategy, args.R, args.tau, args.beta_base, args.beta_inc)


def _run_config(args) -> RunConfig:
    synth = None
    if args.synth:
        synth = load_synth_spec(args.synth)
        if args.seed is not None:
            synth = replace(synth, seed=args.seed)
    return RunConfig(
        strategy=_strategy(args), dataset_path=args.dataset, synth=synth,
        seed=args.seed if args.seed is not None else (synth.seed if synth else None),
        chunk=args.chunk, update_at_base=not args.no_base_update,
        report_path=getattr(args, "report", None), report_format=getattr(args, "format", "csv"),
    )


def execute(cfg: RunConfig, dataset=None) -> ProtocolReport:
    if dataset is None:
        dataset = cfg.load()
    return run_protocol(dataset, cfg.strategy, seed=cfg.seed, chunk=cfg.chunk,
                        update_at_base=cfg.update_at_base)


def derived_seed(seed: int, repeat: int) -> int:
    return int(np.random.SeedSequence([seed, repeat]).generate_state(1, np.uint64)[0])


def _cmd_gen_synth(args) -> int:
    protocol = ProtocolConfig(args.classes, args.base, args.sessions, args.way, args.shot, args.dim)
    spec = SynthSpec(protocol, args.sigma, args.delta, args.placement, args.test_per_class,
                     args.base_train_per_class, args.seed, args.offset)
    write_dataset(generate_dataset(spec), args.out)
    if args.spec_out:
        write_synth_spec(spec, args.spec_out)
    log.info("wrote %s", args.out)
    return 0


def _cmd_run(args) -> int:
    cfg = _run_config(args)
    report = execute(cfg)
    if cfg.report_path:
        write_report(report, cfg.report_path, cfg.report_format)
    else:
        from .io import report_to_csv, report_to_json
        sys.stdout.write(report_to_json(report) if cfg.report_format == "json" else report_to_csv(report))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _run_config(args)
    field_name, cast = SWEEP_PARAMS[args.param]
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    base_seed = cfg.seed if cfg.seed is not None else 0
    fixed = None if cfg.synth is not None else cfg.load()
    rows = []
    for value in values:
        strategy = replace(cfg.strategy, **{field_name: value})
        for rep in range(args.repeat):
            seed = derived_seed(base_seed, rep)
            if fixed is None:
                ds = generate_dataset(replace(cfg.synth, seed=seed))
            else:
                ds = fixed
            report = run_protocol(ds, strategy, seed=seed, chunk=cfg.chunk, update_at_base=cfg.update_at_base)
            for s in report.sessions:
                rows.append([args.param, value, rep, seed, s.session, "overall", repr(s.overall_accuracy)])
                inc = "" if s.incremental_accuracy is None else repr(s.incremental_accuracy)
                rows.append([args.param, value, rep, seed, s.session, "incremental", inc])
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["param", "value", "repeat", "seed", "session", "metric", "result"])
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_lemma(args) -> int:
    q = OverlapQuery(args.delta, args.sigma, args.eps, args.dim, args.trials, args.seed)
    bound = overlap_bound(q.delta, q.sigma, q.epsilon)
    p, se = monte_carlo_overlap(q, shards=args.shards)
    ok = p >= bound - 3.0 * se
    print(f"analytic_bound {bound!r}")
    print(f"empirical {p!r}")
    print(f"stderr {se!r}")
    print(f"check {'PASS' if ok else 'FAIL'} (empirical >= bound - 3*stderr)")
    return 0


def _cmd_validate(args) -> int:
    with open(args.dataset, encoding="utf-8") as fh:
        ds = parse_dataset(fh.read())
    report = validate(ds)
    print(report)
    return 0 if report.ok else 1


COMMANDS = {"gen-synth": _cmd_gen_synth, "run": _cmd_run, "sweep": _cmd_sweep,
            "lemma": _cmd_lemma, "validate": _cmd_validate}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DatasetInvalid as e:
        print(e, file=sys.stderr)
        return 1
    except (DatasetFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (InvariantError, AssertionError) as e:
        print(f"internal invariant violated: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
