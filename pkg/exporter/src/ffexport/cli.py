"""Command-line entry points: export-weights and export-dataset."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .checkpoint import export_weights
from .datasets import export_dataset, load_dataset_arrays
from .serialize import ExportError

__all__ = ["export_weights_main", "export_dataset_main"]


def _report_manifest(manifest, out: str) -> None:
    shapes = ", ".join(f"{r}x{c}" for r, c in manifest.shapes)
    print(f"wrote {out} ({len(manifest.shapes)} layer(s): {shapes})")
    print(f"manifest: {out}.manifest.json")
    for entry in manifest.dropped:
        print(f"dropped: {entry}")


def export_weights_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-weights",
        description="Convert a linear/ReLU checkpoint (.pt/.pth/.npz) to the "
        "analysis tool's weight JSON. Models with biases, convolutions, "
        "normalization layers, or non-ReLU activations are rejected, never "
        "approximated.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("source", help="checkpoint file (.pt, .pth, or .npz)")
    parser.add_argument("out", help="weight JSON to write")
    args = parser.parse_args(argv)
    try:
        manifest = export_weights(args.source, args.out)
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    _report_manifest(manifest, args.out)
    return 0


def export_dataset_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-dataset",
        description="Convert a dataset (.npz with inputs/labels arrays, or a "
        "numeric CSV whose last column is the label) to the analysis tool's "
        "dataset JSON.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("source", help="dataset file (.npz or .csv)")
    parser.add_argument("out", help="dataset JSON to write")
    parser.add_argument(
        "--num-classes",
        type=int,
        default=None,
        help="class count (default: max label + 1; may only widen)",
    )
    args = parser.parse_args(argv)
    try:
        inputs, labels, dropped = load_dataset_arrays(args.source)
        manifest = export_dataset(
            inputs,
            labels,
            args.out,
            num_classes=args.num_classes,
            source_path=args.source,
            dropped=dropped,
        )
    except ExportError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    rows = manifest.extra["rows"]
    print(f"wrote {args.out} ({rows} rows, {manifest.extra['dim']} features, "
          f"{manifest.extra['num_classes']} classes)")
    print(f"B (max row l2 norm) = {manifest.extra['max_row_norm']:.17g}")
    print(f"manifest: {args.out}.manifest.json")
    for entry in manifest.dropped:
        print(f"dropped: {entry}")
    return 0
