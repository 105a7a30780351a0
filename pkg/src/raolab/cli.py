"""Command line entry point: ``raolab generate | run | bound``.

Exit codes: 0 success, 2 validation failure, 3 contract breach, 4 oracle limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema

from . import bounds
from .generators import generate
from .harness import (
    METRICS,
    OPT_SOURCES,
    InvalidInstance,
    offline_value,
    results_row,
    run_trials,
    summarize,
    write_csv,
)
from .model import Instance, accuracy, validate_instance
from .oracles import OracleLimitError
from .readers import ContractBreach, ReaderSpec

EXIT_OK, EXIT_INVALID, EXIT_BREACH, EXIT_ORACLE = 0, 2, 3, 4

_PARAMS = {"type": "object"}
CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["instances", "readers"],
    "properties": {
        "instances": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["generator"],
                        "properties": {
                            "generator": {"enum": ["lemma3", "lemma4", "lemma5", "random"]},
                            "params": _PARAMS,
                            "seed": {"type": "integer", "minimum": 0},
                            "count": {"type": "integer", "minimum": 1},
                        },
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["file"],
                        "properties": {"file": {"type": "string"}},
                    },
                ]
            },
        },
        "readers": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"type": "string"},
                    "params": _PARAMS,
                    "sweep": {
                        "type": "object",
                        "additionalProperties": {"type": "array", "minItems": 1},
                    },
                },
            },
        },
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "opt_source": {"enum": ["auto", *OPT_SOURCES]},
        "metric": {"enum": list(METRICS)},
        "output": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
    },
}


def load_config(path) -> dict:
    text = Path(path).read_text()
    cfg = json.loads(text)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    return cfg


def expand_readers(entries) -> list[ReaderSpec]:
    specs = []
    for e in entries:
        base = dict(e.get("params", {}))
        sweep = e.get("sweep", {})
        combos = [base]
        for key, values in sweep.items():
            combos = [{**c, key: v} for c in combos for v in values]
        specs.extend(ReaderSpec(e["name"], c) for c in combos)
    return specs


def build_instances(entries, base_dir: Path) -> list[Instance]:
    out = []
    for e in entries:
        if "file" in e:
            path = Path(e["file"])
            if not path.is_absolute():
                path = base_dir / path
            out.append(Instance.from_json(path.read_text()))
            continue
        seed = e.get("seed", 0)
        for k in range(e.get("count", 1)):
            out.append(generate(e["generator"], e.get("params", {}), seed + k))
    return out


def run_experiment(cfg: dict, base_dir: Path = Path("."), workers=None) -> str:
    """Run every (instance, reader) pair of a config and return the results CSV."""
    instances = build_instances(cfg["instances"], base_dir)
    readers = expand_readers(cfg["readers"])
    trials = cfg.get("trials", 1000)
    seed = cfg.get("seed", 0)
    metric = cfg.get("metric", "value")
    source = cfg.get("opt_source", "auto")
    workers = workers if workers is not None else cfg.get("workers")
    rows = []
    for i, inst in enumerate(instances):
        if metric == "value":
            opt, used = offline_value(inst, source)
        for j, reader in enumerate(readers):
            values = run_trials(inst, reader, trials, seed, key=(i, j), workers=workers,
                                metric=metric)
            est = summarize(values)
            if metric == "value":
                rows.append(results_row(inst, reader, est, opt, used))
            else:
                row = results_row(inst, reader, est, 1, "none")
                row.update(opt="", ratio="")
                rows.append(row)
    return write_csv(rows)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_number(text: str) -> float:
    return float(Fraction(text))


def cmd_generate(args) -> int:
    params = {}
    if args.params:
        params.update(json.loads(args.params))
    for item in args.param or []:
        key, _, value = item.partition("=")
        params[key] = _parse_value(value)
    try:
        inst = generate(args.generator, params, args.seed)
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = inst.to_json(indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    acc = accuracy(inst)
    print(f"accuracy C = {acc.c_value} (article {acc.argmax_article})", file=sys.stderr)
    report = validate_instance(inst, assume_a1=True)
    print(f"validation: {report}", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (jsonschema.ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.trials is not None:
        cfg["trials"] = args.trials
    out = args.out or cfg.get("output")
    try:
        text = run_experiment(cfg, Path(args.config).parent, workers=args.workers)
    except ContractBreach as exc:
        print(f"contract breach: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except OracleLimitError as exc:
        print(f"oracle limit: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (InvalidInstance, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.mode == "eval":
        if len(args.values) != 3:
            print("eval needs G BETA GAMMA", file=sys.stderr)
            return EXIT_INVALID
        g, beta, gamma = map(_parse_number, args.values)
        try:
            ev = bounds.evaluate_bound(bounds.BoundParams(g, beta, gamma))
        except bounds.InfeasibleParams as exc:
            print(f"constraint violated: {exc}", file=sys.stderr)
            return EXIT_INVALID
        _emit(json.dumps(ev.to_dict(), indent=1), args.out)
        return EXIT_OK
    cfg = bounds.SearchConfig(
        g_step=args.g_step, beta_step=args.beta_step, gamma_step=args.gamma_step,
        fixed_g=_parse_number(args.fixed_g) if args.fixed_g else None,
    )
    if args.mode == "maximize":
        _, ev = bounds.maximize_bound(cfg)
        _emit(json.dumps(ev.to_dict(), indent=1), args.out)
        return EXIT_OK
    grid = bounds.objective_grid(cfg)
    lines = ["g,beta,gamma,objective"]
    lines += [",".join(repr(float(x)) for x in row) for row in grid]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def _emit(text: str, out):
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write an instance as JSON")
    gen.add_argument("generator", choices=["lemma3", "lemma4", "lemma5", "random"])
    gen.add_argument("--param", action="append", metavar="KEY=VALUE")
    gen.add_argument("--params", help="JSON object of generator parameters")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run an experiment config and write a results CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out")
    run.add_argument("--workers", type=int, help="defaults to $RAO_LAB_WORKERS or 1")
    run.set_defaults(func=cmd_run)

    bnd = sub.add_parser("bound", help="evaluate or maximise the threshold-reader guarantee")
    bnd.add_argument("mode", choices=["eval", "maximize", "grid"])
    bnd.add_argument("values", nargs="*", help="G BETA GAMMA for eval (fractions allowed)")
    bnd.add_argument("--fixed-g")
    bnd.add_argument("--g-step", type=float, default=1e-3)
    bnd.add_argument("--beta-step", type=float, default=1e-2)
    bnd.add_argument("--gamma-step", type=float, default=1e-2)
    bnd.add_argument("--out")
    bnd.set_defaults(func=cmd_bound)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
