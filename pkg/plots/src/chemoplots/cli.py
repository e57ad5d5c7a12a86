"""Overlay columns from chemorep series CSVs into deterministic PNG figures.

This package talks to the simulator only through its published CSV layout;
the schema below is the contract, not an import.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# Column layout of a chemorep series.csv, in file order.
SCHEMA = (
    "t",
    "mass_lumped",
    "mass_consistent",
    "v_integral",
    "E_mod",
    "E_exact",
    "RE_exact",
    "min_u",
    "neg_norm_u",
    "picard_iters",
)

EXIT_OK = 0
EXIT_USAGE = 2


class SchemaError(ValueError):
    """A CSV does not follow the published series layout."""


@dataclass(frozen=True)
class SeriesBundle:
    """What to draw: labeled CSVs, one column, one output image."""

    series: tuple  # of (label, csv path)
    column: str
    out_path: str
    x_column: str = "t"
    log_y: bool = False
    title: str = ""


def load_series(path: str) -> dict:
    """Read one CSV into {column: list of floats}; validates the header."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path}: empty file") from None
            if tuple(header) != SCHEMA:
                raise SchemaError(
                    f"{path}: header {header!r} does not match the series schema")
            cols = {name: [] for name in SCHEMA}
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(SCHEMA):
                    raise SchemaError(
                        f"{path}:{lineno}: expected {len(SCHEMA)} fields, "
                        f"got {len(row)}")
                for name, tok in zip(SCHEMA, row):
                    try:
                        cols[name].append(float(tok))
                    except ValueError:
                        raise SchemaError(
                            f"{path}:{lineno}: bad number {tok!r} in "
                            f"column {name}") from None
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not cols["t"]:
        raise SchemaError(f"{path}: no data rows")
    return cols


def plot_series(bundle: SeriesBundle) -> int:
    """Render the bundle to PNG; returns the number of curves drawn."""
    if bundle.column not in SCHEMA:
        raise SchemaError(f"unknown column {bundle.column!r}; "
                          f"expected one of {', '.join(SCHEMA)}")
    if bundle.x_column not in SCHEMA:
        raise SchemaError(f"unknown x column {bundle.x_column!r}")
    if not bundle.series:
        raise SchemaError("no input series")

    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=120)
    try:
        for label, path in bundle.series:
            cols = load_series(path)
            ys = cols[bundle.column]
            if bundle.log_y:
                # a log axis cannot show zero or negative samples; drop them
                # instead of letting the backend warn nondeterministically
                pts = [(x, y) for x, y in zip(cols[bundle.x_column], ys) if y > 0.0]
                if not pts:
                    raise SchemaError(
                        f"{path}: column {bundle.column} has no positive values "
                        "to place on a log axis")
                xs, ys = zip(*pts)
            else:
                xs = cols[bundle.x_column]
            ax.plot(xs, ys, label=label, linewidth=1.4)
        if bundle.log_y:
            ax.set_yscale("log")
        ax.set_xlabel(bundle.x_column)
        ax.set_ylabel(bundle.column)
        if bundle.title:
            ax.set_title(bundle.title)
        ax.legend(loc="best", frameon=False)
        ax.grid(True, alpha=0.3)
        n_curves = len(ax.lines)
        fig.tight_layout()
        # strip the library version stamp so identical input gives identical bytes
        fig.savefig(bundle.out_path, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return n_curves


def _parse_series(tokens: list) -> tuple:
    out = []
    for tok in tokens:
        label, sep, path = tok.partition("=")
        if not sep:
            # bare path: label it by the file stem
            path = tok
            label = tok.rsplit("/", 1)[-1]
            label = label[:-4] if label.endswith(".csv") else label
        if not path:
            raise SchemaError(f"bad series {tok!r}; expected LABEL=PATH")
        out.append((label, path))
    return tuple(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chemorep-plot",
        description="Overlay one column from several chemorep series CSVs "
                    "into a PNG figure")
    parser.add_argument("--series", action="append", required=True,
                        metavar="LABEL=PATH",
                        help="labeled input CSV; repeat for more curves")
    parser.add_argument("--column", required=True,
                        help=f"column to draw, one of: {', '.join(SCHEMA)}")
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--x-column", default="t", dest="x_column")
    parser.add_argument("--log-y", action="store_true", dest="log_y")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)
    try:
        bundle = SeriesBundle(series=_parse_series(args.series),
                              column=args.column, out_path=args.out,
                              x_column=args.x_column, log_y=args.log_y,
                              title=args.title)
        n = plot_series(bundle)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {args.out} with {n} curve(s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
