#!/usr/bin/env python3

import argparse
import sys
import warnings
from pathlib import Path

from ..utils.errors import CutPatchError, DegenerateCutWarning
from ..utils.log import configure_logging
from .config import STUDIES, build_config, parse_value
from .problems import PROBLEM_NAMES
from .studies import (
    STUDY_RUNNERS,
    check_study,
    run_boundary_example,
    write_csv,
    write_gnuplot_script,
    write_solution,
)


class CutPatchCLI:
    def __init__(self):
        self.config = None
        self.usage_text = f"""
cutpatch - stabilized cut finite elements on multipatch surfaces

Runs one study and writes its results as CSV.

Usage:
    cutpatch convergence --problem sphere --order 1 --meshes 8,16,32
    cutpatch rotation --problem sphere --samples 20 --seed 42
    cutpatch condition --problem sphere --gammas 1e-6,1e-4,1e-2,1
    cutpatch boundary --problem flat_mixed --order 2

Studies:
    {', '.join(STUDIES)}

Problems:
    {', '.join(PROBLEM_NAMES)}

A config file (--config) holds 'key = value' lines with the long flag names
as keys and overrides the flags. CUTPATCH_OUT sets the default output path.
With --check the study's acceptance checks run and a failure exits with 1.
"""

    def parse_args(self, argv=None):
        parser = argparse.ArgumentParser(
            prog="cutpatch",
            description="Laplace-Beltrami studies with cut finite elements on trimmed patches",
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog=self.usage_text)

        parser.add_argument("study", nargs="?", choices=STUDIES,
                            help="Study to run")
        parser.add_argument("--problem", help="Model problem (default: sphere)")
        parser.add_argument("--order", type=int, help="Polynomial order p (default: 1)")
        parser.add_argument("--meshes", help="Comma-separated grid sizes (default: 8,16,32,64 for p=1)")
        parser.add_argument("--beta", type=float, help="Nitsche penalty (default: 100)")
        parser.add_argument("--gamma", help="Ghost-penalty weight, one value or one per order (default: 1e-2)")
        parser.add_argument("--gammas", help="Comma-separated gamma sweep for the condition study")
        parser.add_argument("--samples", type=int, help="Random placements (default: 20)")
        parser.add_argument("--seed", type=int, help="Random seed (default: 42)")
        parser.add_argument("--scale", type=float, help="Size of the placed patch squares (default: 0.7)")
        parser.add_argument("--out", help="Output CSV path (default: $CUTPATCH_OUT or results.csv)")
        parser.add_argument("--config", help="Key-value config file overriding the flags")
        parser.add_argument("--check", action="store_true", default=None,
                            help="Run acceptance checks and exit with 1 on failure")
        parser.add_argument("--timing", action="store_true", default=None,
                            help="Record wall times (makes the CSV run-dependent)")
        parser.add_argument("--gnuplot", action="store_true", default=None,
                            help="Also write a gnuplot script next to the CSV")
        parser.add_argument("-v", "--verbose", action="store_true", help="Show progress logging")
        parser.add_argument("-q", "--quiet", action="store_true", help="Only log errors")

        args = parser.parse_args(argv)
        configure_logging(verbose=args.verbose, quiet=args.quiet)
        if args.quiet:
            warnings.simplefilter("ignore", DegenerateCutWarning)

        if args.study is None:
            return args

        flags = {
            "study": args.study,
            "problem": args.problem,
            "order": args.order,
            "beta": args.beta,
            "samples": args.samples,
            "seed": args.seed,
            "scale": args.scale,
            "out": args.out,
            "check": args.check,
            "timing": args.timing,
            "gnuplot": args.gnuplot,
        }
        try:
            for key in ("meshes", "gamma", "gammas"):
                value = getattr(args, key)
                flags[key] = parse_value(key, value) if value is not None else None
            self.config = build_config(flags, args.config)
        except CutPatchError as e:
            print(f"Error: {e}")
            sys.exit(1)
        return args

    def run_study(self, cfg):
        """Run the configured study, write its outputs, then run the checks; returns the rows."""
        print(f"Running {cfg.study} study: problem={cfg.problem} p={cfg.order} meshes={cfg.meshes}")
        if cfg.study == "boundary":
            rows, state = run_boundary_example(cfg)
            if state is not None:
                dump = Path(cfg.out).with_suffix(".solution.csv")
                write_solution(state, dump)
                print(f"Solution written to {dump}")
        else:
            rows = STUDY_RUNNERS[cfg.study](cfg)
        write_csv(rows, cfg.out)
        print(f"Results written to {cfg.out}")
        if cfg.gnuplot:
            script = Path(cfg.out).with_suffix(".gp")
            write_gnuplot_script(cfg.out, cfg.study, script)
            print(f"Plot script written to {script}")
        failed = [r for r in rows if "error" in r]
        if failed:
            print(f"WARNING: {len(failed)} configuration(s) failed; see the 'error' column.")
        if cfg.check:
            check_study(cfg, rows)
        return rows

    def run(self, argv=None):
        args = self.parse_args(argv)

        if args.study is None:
            print("No study specified.")
            print(self.usage_text)
            sys.exit(1)

        try:
            self.run_study(self.config)
        except CutPatchError as e:
            print(f"Error: {e}")
            sys.exit(1)
        if self.config.check:
            print("All checks passed.")


def main():
    """Main entry point for the CLI."""
    cli = CutPatchCLI()
    cli.run()


if __name__ == "__main__":
    main()
