"""Command-line entry point.

    encode --manifest PATH --out PATH [--model ID] [--batch N]

Exit status 0 on success, 2 on any anticipated failure (bad usage, unreadable
or malformed manifest, model load failure, dimension mismatch, write errors).
The human-readable summary goes to stderr; the vector file is the output.
"""

from __future__ import annotations

import argparse
import sys

from .core import DEFAULT_BATCH, EmbedJob, encode_manifest
from .encoder import DEFAULT_MODEL
from .errors import EmbedClientError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="encode",
        description=(
            "Encode the texts of a JSONL manifest with a sentence-embedding "
            "model and write the companion binary vector file."
        ),
    )
    p.add_argument("--manifest", required=True, help="JSONL manifest to encode")
    p.add_argument("--out", required=True, help="vector file to write")
    p.add_argument("--model", default=DEFAULT_MODEL, help=f"model id (default {DEFAULT_MODEL})")
    p.add_argument("--batch", type=int, default=DEFAULT_BATCH, help="texts per forward pass")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = EmbedJob(
            manifest_path=args.manifest,
            output_vectors_path=args.out,
            model=args.model,
            batch_size=args.batch,
        )
        report = encode_manifest(job)
    except (EmbedClientError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(
        f"encoded {report.count} texts -> {args.out} "
        f"(dim {report.dim}, model {report.model})",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
