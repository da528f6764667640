"""Corpus file IO.

Format: UTF-8 lines of `source<TAB>target<TAB>alignment`, where source and
target are space-joined tokens and alignment is the gold selection mask as
a bit string over the source tokens.  The alignment column is optional.
"""

from __future__ import annotations

import numpy as np

from .synth import Example


def save_corpus(examples: list[Example], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            bits = "".join(str(int(b)) for b in ex.gold_mask)
            f.write(f"{' '.join(ex.source)}\t{' '.join(ex.target)}\t{bits}\n")


def load_corpus(
    path: str,
    max_source_len: int = 64,
    max_target_len: int = 64,
) -> list[Example]:
    """Stream (source, target[, gold mask]) triples, validating lengths.

    Raises ParseError naming the offending line, or LengthExceeded when a
    sequence is longer than the configured maximum.
    """
    from ..errors import LengthExceeded, ParseError

    out: list[Example] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 2 or 3 tab-separated columns, got {len(cols)}")
            source = cols[0].split()
            target = cols[1].split()
            if not source or not target:
                raise ParseError(f"{path}:{lineno}: empty source or target")
            if len(source) > max_source_len:
                raise LengthExceeded(f"{path}:{lineno}: source has {len(source)} tokens (max {max_source_len})")
            if len(target) > max_target_len:
                raise LengthExceeded(f"{path}:{lineno}: target has {len(target)} tokens (max {max_target_len})")
            if len(cols) == 3:
                bits = cols[2]
                if len(bits) != len(source) or set(bits) - {"0", "1"}:
                    raise ParseError(f"{path}:{lineno}: alignment column does not match the source tokens")
                mask = np.array([int(b) for b in bits], dtype=np.uint8)
            else:
                mask = np.zeros(len(source), dtype=np.uint8)
            out.append(Example(source, target, mask))
    return out
