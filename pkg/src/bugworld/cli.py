"""Command line entry point: serve, gen, validate, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .datasets import ScheduleEntry, generate, validate
from .envs import BEHAVIOURS, ENV_IDS


def _parse_bug_arg(text: str) -> ScheduleEntry:
    """Parse a --bug argument of the form name@step[:off][?k=v&k=v]."""
    params = None
    if "?" in text:
        text, raw = text.split("?", 1)
        params = {}
        for pair in raw.split("&"):
            k, v = pair.split("=", 1)
            try:
                params[k] = json.loads(v)
            except json.JSONDecodeError:
                params[k] = v
    if "@" not in text:
        raise argparse.ArgumentTypeError(
            f"expected name@step, got {text!r}")
    name, rest = text.split("@", 1)
    enabled = True
    if rest.endswith(":off"):
        enabled = False
        rest = rest[:-4]
    try:
        step = int(rest)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad step in {text!r}")
    return ScheduleEntry(step=step, name=name, enabled=enabled, params=params)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bugworld")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("serve", help="run the environment server")
    sp.add_argument("--env", choices=ENV_IDS, default=None,
                    help="preconfigure each session with this environment")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8723)
    sp.add_argument("--resolution", type=int, default=128)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--viewer", default=None,
                    help="serve static viewer files from this directory")

    gp = sub.add_parser("gen", help="generate a labelled dataset")
    gp.add_argument("--env", choices=ENV_IDS, required=True)
    gp.add_argument("--behaviour", choices=BEHAVIOURS, default="nav")
    gp.add_argument("--steps", type=int, required=True)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--resolution", type=int, default=128)
    gp.add_argument("--bug", action="append", default=[], type=_parse_bug_arg,
                    metavar="NAME@STEP",
                    help="enable a bug at a step (repeatable; NAME@STEP:off disables)")
    gp.add_argument("--out", required=True)

    vp = sub.add_parser("validate", help="check a dataset directory")
    vp.add_argument("dir")

    rp = sub.add_parser("report", help="summarize a dataset (CSV + figures)")
    rp.add_argument("dir")
    rp.add_argument("--out", default=None,
                    help="write artifacts here instead of the dataset dir")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "serve":
        from .server import serve

        server = serve(host=args.host, port=args.port, default_env=args.env,
                       default_config={"resolution": args.resolution},
                       default_seed=args.seed, viewer_dir=args.viewer)
        print(f"listening on {server.host}:{server.port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            server.stop()
        return 0

    if args.command == "gen":
        manifest = generate(
            args.env, args.out, steps=args.steps, seed=args.seed,
            behaviour=args.behaviour, schedule=args.bug,
            config={"resolution": args.resolution})
        print(f"wrote {manifest['frame_count']} frames to {args.out}")
        return 0

    if args.command == "validate":
        report = validate(args.dir)
        if report.ok:
            print(f"{args.dir}: OK")
            return 0
        for prob in report.problems:
            print(f"{prob['code']}\t{prob['detail']}")
        return 1

    if args.command == "report":
        from .report import build_report

        result = build_report(args.dir, args.out)
        print(result["csv"])
        for fig in result["figures"]:
            print(fig)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
