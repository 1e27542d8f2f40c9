"""Command line entry point: ``holowidths <subcommand> [--config FILE] ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex

DEFAULTS = {
    "known": dict(m_grid=[8, 16, 32, 64, 128, 256, 512], dims=10_000),
    "unknown": dict(m_grid=[16, 32, 64, 128, 256], dims=1000, trials=10),
    "widths": dict(m_grid=[1, 2, 4, 8, 16, 32, 64, 128, 256], dims=1000),
    "impossibility": dict(m_grid=[16, 32, 64, 128, 256], trials=5),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holowidths",
                                     description="Sampling widths and sparse polynomial recovery experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("known", "unknown", "widths", "impossibility", "selftest"):
        sp = sub.add_parser(name)
        if name == "widths":
            sp.add_argument("what", nargs="?", choices=["table"], default="table")
        sp.add_argument("--config", type=Path, help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", type=Path, help="output directory for CSV and SVG files")
        sp.add_argument("--verbose", "-v", action="store_true")
        sp.add_argument("--no-plot", action="store_true", help="skip SVG output")
    return parser


def _config(args) -> ex.ExperimentConfig:
    if args.config is not None:
        data = json.loads(args.config.read_text())
        data.setdefault("pipeline", args.command)
        if data["pipeline"] != args.command:
            raise SystemExit(f"config pipeline {data['pipeline']!r} does not match subcommand {args.command!r}")
        cfg = ex.ExperimentConfig.from_dict(data)
    else:
        cfg = ex.ExperimentConfig(pipeline=args.command, **DEFAULTS[args.command])
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    elif cfg.output_dir is None:
        cfg = replace(cfg, output_dir="results")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "selftest":
        out = args.out or Path("selftest_out")
        seed = 0 if args.seed is None else args.seed
        for path in ex.selftest(seed, out, plots=not args.no_plot):
            print(path)
        return 0

    cfg = _config(args)
    table = ex.run(cfg)
    out = Path(cfg.output_dir)
    paths = table.write(out)
    if not args.no_plot:
        svg = ex.plot_table(table, out / f"{table.name}.svg")
        if svg is not None:
            paths.append(svg)
    for key, fit in sorted(table.fits.items()):
        print(f"{key}: slope={fit.slope:.4f} r2={fit.r_squared:.4f}")
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
