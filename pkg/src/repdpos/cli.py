"""Command-line front end: run, validate, and sweep experiment specs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from repdpos.config import ConfigError, canonical_dict, config_hash, load_spec
from repdpos.consensus import SimulationError
from repdpos.contracts import ContractInfeasibleError
from repdpos.reporting import run_experiment, write_outputs


def _apply_overrides(spec, seed, tables):
    if seed is not None:
        spec = replace(spec, seed=seed)
    if tables:
        wanted = tuple(t.strip() for t in tables.split(",") if t.strip())
        spec = replace(spec, outputs=wanted).validate()
    return spec


def cmd_run(args) -> int:
    spec = _apply_overrides(load_spec(args.spec), args.seed, args.tables)
    tables = run_experiment(spec)
    out_dir = args.out or os.path.join("out", spec.name)
    written = write_outputs(spec, tables, out_dir)
    for path in written:
        print(path)
    return 0


def cmd_validate(args) -> int:
    try:
        spec = load_spec(args.spec)
    except ConfigError as err:
        print(f"invalid: {err}")
        return 2
    print(f"name: {spec.name}")
    print(f"kind: {spec.kind}")
    print(f"config_hash: {config_hash(spec)}")
    print("effective configuration (defaults included):")
    print(json.dumps(canonical_dict(spec), indent=2, sort_keys=True))
    print("ok")
    return 0


def cmd_sweep(args) -> int:
    spec_paths = sorted(
        os.path.join(args.spec_dir, name)
        for name in os.listdir(args.spec_dir)
        if name.endswith((".yaml", ".yml"))
    )
    if not spec_paths:
        print(f"no spec files under {args.spec_dir}", file=sys.stderr)
        return 1
    base_out = args.out or "out"
    for path in spec_paths:
        spec = _apply_overrides(load_spec(path), args.seed, args.tables)
        tables = run_experiment(spec)
        for written in write_outputs(spec, tables, os.path.join(base_out, spec.name)):
            print(written)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="repdpos",
        description="Reputation-weighted DPoS consensus experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment spec")
    run_p.add_argument("spec")
    run_p.add_argument("--out", help="output directory (default out/<name>)")
    run_p.add_argument("--seed", type=int, help="override the spec seed")
    run_p.add_argument("--tables", help="comma-separated table subset")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check a spec without running it")
    val_p.add_argument("spec")
    val_p.set_defaults(func=cmd_validate)

    sweep_p = sub.add_parser("sweep", help="run every spec in a directory")
    sweep_p.add_argument("spec_dir")
    sweep_p.add_argument("--out", help="output root (default out/)")
    sweep_p.add_argument("--seed", type=int, help="override every spec seed")
    sweep_p.add_argument("--tables", help="comma-separated table subset")
    sweep_p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractInfeasibleError, SimulationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
