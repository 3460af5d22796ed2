"""Manifest reading: extract the text of each record, in line order.

A manifest is UTF-8 JSONL, one object per line. This reader validates only
what encoding needs — each line must be a JSON object whose ``text`` value is
a non-empty string. Other keys (labels, language codes, task names, anything
extra) are passed over untouched; the consuming engine owns their rules, and
its text rules match the ones enforced here, so any manifest accepted there
is accepted here.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IoFailure, ManifestError


def read_texts(manifest_path) -> list[str]:
    """Return the ``text`` field of every record, one per line, in order.

    Raises ManifestError (with a 1-based line number) on the first
    unparseable record, and on an empty manifest since there would be
    nothing to encode.
    """
    path = Path(manifest_path)
    texts: list[str] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for i, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if line == "":
                    raise ManifestError(i, "empty line")
                texts.append(_text_of(line, i))
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    if not texts:
        raise ManifestError(None, "no records")
    return texts


def _text_of(line: str, line_no: int) -> str:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise ManifestError(line_no, f"invalid JSON ({e.msg})") from e
    if not isinstance(rec, dict):
        raise ManifestError(line_no, "record is not an object")
    if "text" not in rec:
        raise ManifestError(line_no, "missing key 'text'")
    text = rec["text"]
    if not isinstance(text, str) or text == "":
        raise ManifestError(line_no, "text must be a non-empty string")
    return text
