"""Command line entry point: ``wormholes run|verify-all|distance|entropy|fmt``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import entropy_scan
from .config import ConfigError, parse_config
from .experiment import ExperimentError, render_report, run_experiment, sidecar, verify_all


def _load(path: str):
    p = Path(path)
    return parse_config(p.read_text("utf-8"), name=p.stem)


def cmd_run(args) -> int:
    out = run_experiment(_load(args.file))
    sys.stdout.write(render_report(out))
    if args.json:
        Path(args.json).write_text(sidecar(out), "utf-8")
    return 0 if out.passed else 1


def cmd_verify_all(args) -> int:
    text, ok = verify_all()
    sys.stdout.write(text)
    return 0 if ok else 1


def cmd_distance(args) -> int:
    from .analysis import distance_bounded
    out = run_experiment(_load(args.file))
    d = distance_bounded(out.engine.frame, args.wmax)
    print(f"n={out.engine.frame.n} k={out.engine.frame.k} d={d}")
    return 0


def cmd_entropy(args) -> int:
    cfg = _load(args.file)
    shapes = [tuple(int(v) for v in s.split("x")) for s in args.shapes.split(",")]
    for row in entropy_scan(cfg.L, shapes, cfg.layout, entangled=not args.control):
        print(row.line())
    return 0


def cmd_fmt(args) -> int:
    text = Path(args.file).read_text("utf-8")
    canon = parse_config(text).text()
    if args.write:
        Path(args.file).write_text(canon, "utf-8")
    else:
        sys.stdout.write(canon)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wormholes", description="Defect and wormhole experiments on the toric code.")
    sub = ap.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", help="run an experiment file and print its report")
    p.add_argument("file")
    p.add_argument("--json", help="also write a structured sidecar to this path")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify-all", help="run the bundled experiments")
    p.set_defaults(func=cmd_verify_all)
    p = sub.add_parser("distance", help="code distance after running the script")
    p.add_argument("file")
    p.add_argument("--wmax", type=int, default=4)
    p.set_defaults(func=cmd_distance)
    p = sub.add_parser("entropy", help="mouth entropy scan on the file's lattice")
    p.add_argument("file")
    p.add_argument("--shapes", default="1x3,2x2,1x4,2x3,1x5,2x4")
    p.add_argument("--control", action="store_true", help="unpaired punctures instead of a wormhole")
    p.set_defaults(func=cmd_entropy)
    p = sub.add_parser("fmt", help="print the canonical form of an experiment file")
    p.add_argument("file")
    p.add_argument("--write", action="store_true", help="rewrite the file in place")
    p.set_defaults(func=cmd_fmt)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        return 2
    except ExperimentError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
