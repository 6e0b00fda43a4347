"""pemb-export command line: image folder -> .pemb/.meta.jsonl pair."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .exporter import ExporterError, ExportManifest, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pemb-export",
        description="embed a class-per-directory image tree into a .pemb dataset",
    )
    parser.add_argument("--images", required=True, help="image root (one subdirectory per class)")
    parser.add_argument("--model", default="stub",
                        help="'stub' (deterministic path-hash embeddings) or a torchvision model name")
    parser.add_argument("--seed", type=int, default=0, help="split-assignment seed")
    parser.add_argument("--dim", type=int, default=384, help="embedding width in stub mode")
    parser.add_argument("--out", required=True, help="output path base")
    parser.add_argument("--train-frac", type=float, default=0.70)
    parser.add_argument("--val-frac", type=float, default=0.15)
    parser.add_argument("--test-frac", type=float, default=0.15)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    manifest = ExportManifest(
        model=args.model,
        image_root=Path(args.images),
        out_base=Path(args.out),
        seed=args.seed,
        dim=args.dim,
        split_fractions=(args.train_frac, args.val_frac, args.test_frac),
    )
    try:
        result = export(manifest)
    except ExporterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.rows} rows over {len(result.classes)} classes")
    print(f"  {result.pemb_path}")
    print(f"  {result.meta_path}")
    if result.skipped:
        print(f"  skipped {len(result.skipped)} unreadable image(s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
