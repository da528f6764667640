"""Seed-deterministic synthetic corpus generation with gold alignments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grammar import GrammarSpec, _SLOT


@dataclass
class Record:
    """One structured record plus its serialized source form.

    `alignment[i]` names the field that source token i realizes, or None
    for labels/punctuation, which are stopwords by construction.
    """

    values: dict[str, str]
    source: list[str]
    alignment: list[str | None]


@dataclass
class Example:
    source: list[str]
    target: list[str]
    gold_mask: np.ndarray       # uint8 over source tokens; 1 = gold-selected
    subset: tuple[str, ...] = ()

    def __post_init__(self):
        self.gold_mask = np.asarray(self.gold_mask, dtype=np.uint8)


def serialize_record(values: dict[str, str], fields: list[str]) -> Record:
    source: list[str] = []
    alignment: list[str | None] = []
    for i, f in enumerate(fields):
        if i > 0:
            source.append(",")
            alignment.append(None)
        source.extend([f, values[f]])
        alignment.extend([None, f])
    return Record(values=values, source=source, alignment=alignment)


def realize(template: str, values: dict[str, str]) -> list[str]:
    return _SLOT.sub(lambda m: values[m.group(1)], template).split()


def generate_corpus(grammar: GrammarSpec, size: int, seed: int) -> list[Example]:
    """Sample `size` (record, reference, gold mask) triples.

    Each example pairs a fresh record with one reference drawn from a
    weighted field subset and a uniform paraphrase; the gold mask marks the
    source tokens whose field belongs to that subset.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng(seed)
    weights = np.array([r.weight for r in grammar.subsets], dtype=np.float64)
    weights = weights / weights.sum()
    out: list[Example] = []
    for _ in range(size):
        values = {
            f: grammar.lexicons[f][int(rng.integers(len(grammar.lexicons[f])))]
            for f in grammar.fields
        }
        record = serialize_record(values, grammar.fields)
        rule = grammar.subsets[int(rng.choice(len(grammar.subsets), p=weights))]
        template = rule.templates[int(rng.integers(len(rule.templates)))]
        target = realize(template, values)
        mask = np.array(
            [1 if a in rule.fields else 0 for a in record.alignment], dtype=np.uint8
        )
        out.append(Example(record.source, target, mask, rule.fields))
    return out
