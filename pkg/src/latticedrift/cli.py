"""Command-line front end.

One subcommand per experiment class; every run writes plot-ready tables,
the resolved configuration and a manifest. ``--figure`` selects a bundled
parameter preset (see README for the catalog). Exit codes: 0 success,
2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticedrift",
        description=(
            "Dynamics of a charged lattice particle in crossed electric and "
            "magnetic fields: propagation, spectra, transporting states, "
            "classical maps and disorder ensembles."
        ),
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    kinds = (
        ("evolve1d", "evolve the reduced 1D equation"),
        ("evolve2d", "evolve the full 2D lattice"),
        ("spectrum", "eigenvalues, currents and sum rule at fixed tilt"),
        ("transport", "diabatic families and drifting states"),
        ("classical-map", "stroboscopic sections and island probe"),
        ("ensemble", "incoherent-packet averages and spreading fits"),
        ("compare", "matched 1D vs 2D ensembles"),
    )
    for kind, help_text in kinds:
        k = sub.add_parser(kind, help=help_text)
        k.add_argument("--config", metavar="PATH", help="key: value configuration file")
        k.add_argument("--seed", type=int, help="reproducibility seed")
        k.add_argument("--out", metavar="DIR",
                       help="output directory (default $LATTICEDRIFT_OUT or ./out)")
        k.add_argument("--format", choices=("csv", "ndjson"), help="table format")
        k.add_argument("--threads", type=int, metavar="N",
                       help="BLAS/OpenMP thread cap for this run")
        k.add_argument("--figure", metavar="NAME", help="bundled parameter preset")
        k.add_argument("-p", "--param", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from . import runner

    try:
        return runner.execute(args)
    except runner.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - structured CLI error surface
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
