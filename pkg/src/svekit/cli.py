"""Command-line entry point.

    svekit run <config.yaml> [--out DIR] [--seed N] [--workers N]
    svekit audit <config.yaml>
    svekit show <manifest.json>

Exit codes: 0 success, 1 analysis failure, 2 validation error, 3 runtime
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import load_config
from .errors import ConfigValidationError, SvekitError
from .runner import run_audit, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svekit",
        description="Simulation and verification toolkit for stochastic "
                    "Volterra equations")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the analyses in a config file")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="override output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument("--workers", type=int, default=1)

    audit_p = sub.add_parser("audit", help="kernel/coefficient audits only")
    audit_p.add_argument("config")
    audit_p.add_argument("--out", default=None, help="write the report here "
                                                     "instead of stdout")

    show_p = sub.add_parser("show", help="summarize a manifest")
    show_p.add_argument("manifest")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=args.seed)
    code, manifest = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    for entry in manifest["analyses"]:
        mark = "ok " if entry["status"] == "ok" else "FAIL"
        print(f"[{mark}] {entry['name']}"
              + (f": {entry['error']}" if entry["status"] == "error" else ""))
    for note in manifest["assumption_warnings"]:
        print(f"[note] {note}")
    return code


def _cmd_audit(args) -> int:
    cfg = load_config(args.config)
    code, report = run_audit(cfg)
    text = json.dumps(report, sort_keys=True, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


def _cmd_show(args) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    print(f"experiment: {manifest.get('name')}")
    print(f"config:     {manifest.get('config_sha256')}")
    for note in manifest.get("assumption_warnings", []):
        print(f"warning:    {note}")
    for entry in manifest.get("analyses", []):
        print(f"  {entry['status']:5s} {entry['name']} "
              f"({len(entry.get('artifacts', []))} artifacts)")
        if entry["status"] == "error":
            print(f"        {entry.get('error')}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "audit":
            return _cmd_audit(args)
        return _cmd_show(args)
    except ConfigValidationError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except SvekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
