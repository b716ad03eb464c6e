import argparse
import sys

from .core import PlotError, render_field, render_rates


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plot", description="render homlab results")
    sub = parser.add_subparsers(dest="command", required=True)

    rates = sub.add_parser("rates", help="log-log rate plot from results.csv")
    rates.add_argument("csv", help="path to results.csv")
    rates.add_argument("experiment", help="experiment id to plot")
    rates.add_argument("--out", required=True, help="output image path")

    field = sub.add_parser("field", help="heatmap/profile from a grid dump")
    field.add_argument("sidecar", help="path to the dump's .json sidecar")
    field.add_argument("--out", required=True, help="output image path")

    args = parser.parse_args(argv)
    try:
        if args.command == "rates":
            render_rates(args.csv, args.experiment, args.out)
        else:
            render_field(args.sidecar, args.out)
    except (PlotError, OSError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
