"""Command-line front end.

    glidepath run DIR [--workers N] [--seed S] [--export-csv PATH]
                      [--random-horizon LIFETABLE] [--scenario K [--start NAME]]

DIR must hold control.txt and gp.txt; the optimal glidepath goes to
DIR/output.txt.  Progress goes to standard error.
"""
import argparse
import logging
import os
from pathlib import Path
import sys

from .exceptions import GlidepathError
from .files import (CONTROL_FILE, GLIDEPATH_FILE, OUTPUT_FILE, ControlFile, export_csv,
                    read_control, read_glidepath, write_glidepath, write_output)
from .optimizer import optimize
from .random_horizon import load_lifetable
from .scenarios import scenario, starting_glidepaths

log = logging.getLogger("glidepath")


def write_scenario(directory, number, start="random1", force=False):
    """Write control.txt and gp.txt for one of the eight preset scenarios."""
    sc = scenario(number)
    starts = starting_glidepaths()
    if start not in starts:
        raise GlidepathError(f"unknown start {start!r}; choose from {', '.join(starts)}")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    targets = [d / CONTROL_FILE, d / GLIDEPATH_FILE]
    if not force and any(p.exists() for p in targets):
        raise GlidepathError(f"{d} already has input files; pass --force to overwrite them")
    cf = ControlFile(sc.params, sc.horizon, sc.withdrawal_rate, sc.epsilon, sc.method, "dp",
                     precision=sc.dp_precision, rf_max=sc.dp_rf_max)
    targets[0].write_text(cf.to_text())
    write_glidepath(targets[1], starts[start])


def run(directory, workers=None, seed=0, export=None, lifetable=None, renormalize=False):
    """Optimize the glidepath described by DIR/control.txt starting from DIR/gp.txt."""
    d = Path(directory)
    cf = read_control(d / CONTROL_FILE)
    mortality = None
    if lifetable is not None:
        mortality = load_lifetable(lifetable, renormalize=renormalize)
        if mortality.max_horizon != cf.horizon:
            raise GlidepathError(
                f"lifetable covers {mortality.max_horizon} withdrawal times but T_D is {cf.horizon}")
    initial = read_glidepath(d / GLIDEPATH_FILE, cf.horizon)
    if workers is None:
        workers = os.cpu_count() or 1
    res = optimize(cf.params, initial, cf.withdrawal_rate, cf.config(seed=seed, workers=workers),
                   mortality)
    write_output(d / OUTPUT_FILE, res.probability, res.glidepath)
    log.info("min Hessian eigenvalue %.6e, max Hessian eigenvalue %.6e",
             res.min_eigenvalue, res.max_eigenvalue)
    if export is not None:
        export_csv(export, res.glidepath, res.diagnostics)
    return res


def _parser():
    p = argparse.ArgumentParser(prog="glidepath", description="Optimal static retirement glidepaths.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="optimize the glidepath in a run directory")
    r.add_argument("directory")
    r.add_argument("--workers", type=int, default=None,
                   help="threads for the estimators (default: all cores)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--export-csv", metavar="PATH", default=None)
    r.add_argument("--random-horizon", metavar="LIFETABLE", default=None)
    r.add_argument("--renormalize", action="store_true",
                   help="rescale a lifetable whose probabilities do not sum to one")
    r.add_argument("--scenario", type=int, choices=range(1, 9), default=None,
                   help="write preset control.txt and gp.txt before running")
    r.add_argument("--start", default="random1",
                   help="starting glidepath for --scenario (rising, declining, constant, random1, random2)")
    r.add_argument("--force", action="store_true", help="let --scenario overwrite input files")
    r.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=logging.WARNING if args.quiet else logging.INFO)
    try:
        if args.workers is not None and args.workers < 1:
            raise GlidepathError("--workers must be at least 1")
        if args.scenario is not None:
            write_scenario(args.directory, args.scenario, args.start, args.force)
        res = run(args.directory, args.workers, args.seed, args.export_csv, args.random_horizon,
                  args.renormalize)
    except (GlidepathError, ValueError) as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    print(f"--> Success probability for this Glide-Path = {res.probability:.12f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
