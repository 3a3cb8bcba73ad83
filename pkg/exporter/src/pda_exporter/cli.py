"""Exporter command line.

    pda-export --ckpt model.pt --data /datasets/office/dslr --domain dslr \
               --backbone resnet50 --bn full --out bundles/a2d

Exit codes: 0 success, 1 usage error, 2 export failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ExporterError
from .export import BN_MODES, LAYERS, ExportSpec, export
from .model import BACKBONES


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pda-export",
                     description="Export a feature bundle from a pretrained "
                                 "backbone over an image folder.")
    parser.add_argument("--ckpt", required=True, help="checkpoint file")
    parser.add_argument("--data", required=True,
                        help="dataset root (one subdirectory per class)")
    parser.add_argument("--domain", required=True, help="domain name for the metadata")
    parser.add_argument("--backbone", default="resnet50", choices=BACKBONES)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--bn", default="off", choices=BN_MODES,
                        help="BN recalibration: off, full (exact one-pass "
                             "statistics) or momentum")
    parser.add_argument("--bn-momentum", type=float, default=0.1)
    parser.add_argument("--layer", default="penultimate", choices=LAYERS,
                        help="feature tap: classifier-head input (default) or "
                             "pre-bottleneck pooled backbone output")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--out", required=True, help="bundle output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = ExportSpec(
        checkpoint=args.ckpt,
        data_root=args.data,
        domain=args.domain,
        backbone=args.backbone,
        out=args.out,
        batch_size=args.batch_size,
        bn_mode=args.bn,
        bn_momentum=args.bn_momentum,
        layer=args.layer,
        device=args.device,
    )
    try:
        out = export(spec)
    except ExporterError as exc:
        print(f"pda-export: error: {exc}", file=sys.stderr)
        return 2
    print(f"bundle written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
