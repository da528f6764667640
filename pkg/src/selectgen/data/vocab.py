"""Closed vocabulary with reserved control tokens and a stopword set."""

from __future__ import annotations

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3

RESERVED = ["<pad>", "<s>", "</s>", "<unk>"]


class Vocabulary:
    """Bijective token<->id map over a closed lexicon.

    ids 0..3 are reserved (pad, start, end, unknown); everything else is
    assigned in sorted token order so the map is deterministic for a given
    lexicon.
    """

    def __init__(self, tokens: list[str], stopwords: set[str]):
        seen = set(RESERVED)
        ordered = []
        for t in sorted(tokens):
            if t not in seen:
                seen.add(t)
                ordered.append(t)
        self.tokens: list[str] = RESERVED + ordered
        self.ids: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        self.stopwords: set[str] = set(stopwords)

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.ids.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self.tokens[i] for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)]

    def is_stopword(self, token: str) -> bool:
        return token in self.stopwords

    def to_dict(self) -> dict:
        return {"tokens": self.tokens[len(RESERVED):], "stopwords": sorted(self.stopwords)}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(list(d["tokens"]), set(d["stopwords"]))
