"""Command line entry point.

    qamp simulate --config run.cfg [--out DIR]
    qamp reproduce fig5 [--out DIR] [--fast] [--jobs N]
    qamp semiclassical --config run.cfg [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 integrator abort.
Without ``--out`` artifacts go under ``$QAMP_OUTPUT_ROOT`` (default
``./qamp_output``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import load_config
from .errors import ConfigError, DegenerateSteadyStateError, QampError
from .scenario import PRESET_NAMES, _clean, output_root, reproduce_preset, run_scenario
from .semiclassical import SemiclassicalModel, semiclassical_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def build_parser():
    ap = argparse.ArgumentParser(prog="qamp", description="Three-level quantum amplifier simulator")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario from a config file")
    sim.add_argument("--config", required=True, help="key = value file, or a meta.json from an earlier run")
    sim.add_argument("--out", help="output directory (overrides output_dir in the config)")

    rep = sub.add_parser("reproduce", help="run a figure preset")
    rep.add_argument("preset", choices=PRESET_NAMES)
    rep.add_argument("--out", help="output root; the preset writes to <out>/<preset>[_fast]")
    rep.add_argument("--fast", action="store_true", help="CI-scale variant (lambda/Gamma = 100, N = 60)")
    rep.add_argument("--jobs", type=int, default=None, help="parallel branches (default: one per branch)")

    sc = sub.add_parser("semiclassical", help="closed-form vs numeric semiclassical currents as JSON")
    sc.add_argument("--config", required=True)
    sc.add_argument("--out", help="write the JSON here instead of stdout")
    return ap


def _simulate(args):
    config = load_config(args.config)
    result = run_scenario(config, args.out)
    fw = result.meta["final_window"] or {}
    print(f"{config.scenario_id}: {result.status}, eta = {fw.get('eta')}, output in {result.out_dir}")
    if result.status != "ok":
        print(f"error: {result.meta['error']['message']}", file=sys.stderr)
    return result.exit_code


def _reproduce(args):
    root = args.out or output_root()
    code = reproduce_preset(args.preset, root, fast=args.fast, jobs=args.jobs)
    print(f"{args.preset}{'_fast' if args.fast else ''}: {'ok' if code == 0 else 'aborted'}, output in {root}")
    return code


def _semiclassical(args):
    config = load_config(args.config)
    try:
        report = semiclassical_report(SemiclassicalModel.from_amplifier(config.build_model()))
    except (ValueError, DegenerateSteadyStateError) as err:
        raise ConfigError(str(err)) from err
    text = json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = {"simulate": _simulate, "reproduce": _reproduce, "semiclassical": _semiclassical}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except QampError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
