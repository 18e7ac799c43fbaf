#!/usr/bin/env python3
"""Run every shipped scenario through its CLI subcommand.

    python scripts/reproduce_figures.py --out results [--only fig3 fig7b] [--runs 20]

Each scenario writes into <out>/<name>/.  Existing outputs are overwritten.
"""

import argparse
import sys
import time

from qrsim import cli

SCENARIOS = {
    "fig2": "sweep-tau",
    "fig3": "ensemble",
    "fig4a": "run",
    "fig4b": "run",
    "fig4c": "run",
    "fig5": "sweep-gain",
    "fig6a": "run",
    "fig6b": "run",
    "fig7a": "two-user",
    "fig7b": "two-user",
    "fig7c": "two-user",
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="*", choices=sorted(SCENARIOS), default=None)
    ap.add_argument("--runs", type=int, help="override the ensemble size of fig3")
    ap.add_argument("--seed", help="seed passed to every scenario")
    args = ap.parse_args(argv)

    status = 0
    for name in args.only or SCENARIOS:
        cmd = [SCENARIOS[name], "--config", name, "--out", f"{args.out}/{name}", "--force"]
        if args.runs is not None:
            cmd += ["--runs", str(args.runs)]
        if args.seed is not None:
            cmd += ["--seed", args.seed]
        t0 = time.perf_counter()
        rc = cli.main(cmd)
        print(f"[{name}] qrsim {' '.join(cmd)} -> exit {rc} ({time.perf_counter() - t0:.1f} s)")
        status = status or rc
    return status


if __name__ == "__main__":
    sys.exit(main())
