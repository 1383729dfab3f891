"""Run experiments 1-6 with one config, writing everything under one directory.

    python3 scripts/run_all.py --config scripts/example_config.json --output results
"""

import argparse
import sys
import time

from causalwind.cli import main


def run(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", required=True)
    p.add_argument("--output", default="results")
    p.add_argument("--jobs", default=None)
    p.add_argument("--only", type=int, nargs="*", default=[1, 2, 3, 4, 5, 6])
    args = p.parse_args(argv)
    for n in args.only:
        t0 = time.perf_counter()
        cmd = ["experiment", str(n), "--config", args.config, "--output", args.output]
        if args.jobs:
            cmd += ["--jobs", args.jobs]
        code = main(cmd)
        print(f"experiment {n}: exit {code} in {time.perf_counter() - t0:.0f} s", file=sys.stderr)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
