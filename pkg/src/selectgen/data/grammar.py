"""Declarative grammar for the synthetic record-to-text corpus.

A grammar names a fixed set of record fields, a closed single-token lexicon
per field, a stopword/filler vocabulary, and a weighted list of field
subsets, each carrying several paraphrase templates.  Field values are the
only content tokens; every filler, field label and punctuation mark is a
stopword.  Lexicons are mutually disjoint and disjoint from the stopwords,
which is what makes source/target token overlap an exact recovery of the
gold selection.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .vocab import Vocabulary

_SLOT = re.compile(r"<(\w+)>")


@dataclass
class SubsetRule:
    fields: tuple[str, ...]          # which record fields this subset realizes
    weight: float                    # unnormalized sampling weight
    templates: list[str]             # ">= 2 paraphrases, slots as <field>"


@dataclass
class GrammarSpec:
    fields: list[str]                          # record field order
    lexicons: dict[str, list[str]]             # field -> candidate value tokens
    stopwords: list[str]                       # fillers, labels, punctuation
    subsets: list[SubsetRule] = field(default_factory=list)

    def validate(self) -> None:
        stop = set(self.stopwords)
        all_values: set[str] = set()
        for f in self.fields:
            lex = self.lexicons.get(f, [])
            if not lex:
                raise ValueError(f"field {f!r} has an empty lexicon")
            values = set(lex)
            if len(values) != len(lex):
                raise ValueError(f"field {f!r} lexicon has duplicates")
            if values & stop:
                raise ValueError(f"field {f!r} lexicon collides with stopwords")
            if values & all_values:
                raise ValueError(f"field {f!r} lexicon overlaps another field")
            all_values |= values
        for rule in self.subsets:
            if len(rule.templates) < 2:
                raise ValueError(f"subset {rule.fields} needs >= 2 paraphrases")
            for tpl in rule.templates:
                slots = set(_SLOT.findall(tpl))
                if slots != set(rule.fields):
                    raise ValueError(f"template {tpl!r} does not realize exactly {rule.fields}")
                for tok in _SLOT.sub(" ", tpl).split():
                    if tok not in stop:
                        raise ValueError(f"template filler {tok!r} is not a declared stopword")

    def build_vocab(self) -> Vocabulary:
        tokens = list(self.stopwords)
        for lex in self.lexicons.values():
            tokens.extend(lex)
        return Vocabulary(tokens, set(self.stopwords))

    def to_dict(self) -> dict:
        return {
            "fields": self.fields,
            "lexicons": self.lexicons,
            "stopwords": self.stopwords,
            "subsets": [
                {"fields": list(r.fields), "weight": r.weight, "templates": r.templates}
                for r in self.subsets
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GrammarSpec":
        spec = cls(
            fields=list(d["fields"]),
            lexicons={k: list(v) for k, v in d["lexicons"].items()},
            stopwords=list(d["stopwords"]),
            subsets=[
                SubsetRule(tuple(r["fields"]), float(r["weight"]), list(r["templates"]))
                for r in d["subsets"]
            ],
        )
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str) -> "GrammarSpec":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


_NAMES = [
    "mira", "arvid", "tomas", "ingrid", "sasha", "nadia", "karim", "lena",
    "piotr", "yusuf", "amara", "dolores", "henrik", "chiara", "matteo",
    "freya", "oskar", "zainab", "ravi", "salma", "bruno", "eliza", "stefan",
    "noor", "dara", "vera", "milan", "petra", "idris", "sonja", "tarek",
    "wanda", "elio", "greta", "hamid", "lucia",
]
_EVENTS = [
    "concert", "regatta", "workshop", "festival", "marathon", "auction",
    "parade", "lecture", "tournament", "banquet", "exhibit", "recital",
    "summit", "fair", "derby", "premiere", "seminar", "gala",
]
_PLACES = [
    "oslo", "dakar", "lima", "kyoto", "porto", "tunis", "quito", "bergen",
    "riga", "malmo", "zagreb", "havana", "beirut", "manila", "accra",
    "tbilisi", "leipzig", "cusco", "hanoi", "tampere", "dresden", "matera",
    "salta", "varna",
]
_MONTHS = [
    "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december",
]
_COUNTS = [
    "twelve", "fifteen", "twenty", "thirty", "forty", "fifty", "sixty",
    "seventy", "eighty", "ninety",
]

_STOPWORDS = [
    # field labels used when serializing a record
    "name", "event", "place", "month", "count",
    # template fillers
    "the", "a", "was", "is", "held", "hosted", "opened", "ran", "led", "by",
    "in", "to", "came", "visited", "welcomed", "brought", "happened",
    "drew", "guests", "people", "joined", "for", "there", "it", "were",
    "venue", "date", "crowd", "busy", "arrived", "and",
    # punctuation
    ",", ".",
]


def default_grammar() -> GrammarSpec:
    """The built-in five-field grammar used by tests and the quickstart.

    Every nonempty field subset is realizable with at least two paraphrases,
    so any selection mask has a faithful surface form and distinct content
    choices never share one.  Weights concentrate references on pairs and
    triples; singletons and near-full records stay rare.
    """
    spec = GrammarSpec(
        fields=["name", "event", "place", "month", "count"],
        lexicons={
            "name": _NAMES,
            "event": _EVENTS,
            "place": _PLACES,
            "month": _MONTHS,
            "count": _COUNTS,
        },
        stopwords=_STOPWORDS,
        subsets=[
            # singletons
            SubsetRule(("name",), 0.5, [
                "<name> was there .",
                "there was <name> .",
            ]),
            SubsetRule(("event",), 0.5, [
                "the <event> was held .",
                "a <event> happened .",
            ]),
            SubsetRule(("place",), 0.5, [
                "the venue was <place> .",
                "it happened in <place> .",
            ]),
            SubsetRule(("month",), 0.5, [
                "the date was <month> .",
                "it happened in <month> .",
            ]),
            SubsetRule(("count",), 0.5, [
                "there were <count> guests .",
                "the crowd was <count> people .",
            ]),
            # pairs
            SubsetRule(("name", "event"), 2.0, [
                "<name> hosted the <event> .",
                "the <event> was led by <name> .",
                "<name> opened the <event> .",
            ]),
            SubsetRule(("name", "place"), 2.0, [
                "<name> visited <place> .",
                "<place> welcomed <name> .",
            ]),
            SubsetRule(("name", "month"), 2.0, [
                "<name> arrived in <month> .",
                "in <month> , <name> arrived .",
            ]),
            SubsetRule(("name", "count"), 2.0, [
                "<name> drew <count> guests .",
                "<name> welcomed <count> people .",
            ]),
            SubsetRule(("event", "place"), 2.0, [
                "the <event> happened in <place> .",
                "<place> held a <event> .",
                "a <event> came to <place> .",
            ]),
            SubsetRule(("event", "month"), 2.0, [
                "the <event> happened in <month> .",
                "<month> brought the <event> .",
            ]),
            SubsetRule(("event", "count"), 2.0, [
                "the <event> drew <count> guests .",
                "<count> people joined the <event> .",
            ]),
            SubsetRule(("place", "month"), 2.0, [
                "<place> was busy in <month> .",
                "in <month> , <place> was busy .",
            ]),
            SubsetRule(("place", "count"), 2.0, [
                "<place> drew <count> guests .",
                "<count> people came to <place> .",
            ]),
            SubsetRule(("month", "count"), 2.0, [
                "<month> drew <count> guests .",
                "in <month> , <count> people came .",
            ]),
            # triples
            SubsetRule(("name", "event", "place"), 1.5, [
                "<name> hosted the <event> in <place> .",
                "the <event> in <place> was led by <name> .",
                "in <place> , <name> opened the <event> .",
                "<name> brought the <event> to <place> .",
            ]),
            SubsetRule(("name", "event", "month"), 1.5, [
                "<name> ran the <event> in <month> .",
                "in <month> , <name> hosted the <event> .",
            ]),
            SubsetRule(("name", "event", "count"), 1.5, [
                "<name> hosted the <event> for <count> guests .",
                "the <event> by <name> drew <count> people .",
            ]),
            SubsetRule(("name", "place", "month"), 1.5, [
                "<name> visited <place> in <month> .",
                "in <month> , <place> welcomed <name> .",
            ]),
            SubsetRule(("name", "place", "count"), 1.5, [
                "<name> drew <count> guests to <place> .",
                "in <place> , <name> welcomed <count> people .",
            ]),
            SubsetRule(("name", "month", "count"), 1.5, [
                "<name> welcomed <count> guests in <month> .",
                "in <month> , <name> drew <count> people .",
            ]),
            SubsetRule(("event", "place", "month"), 1.5, [
                "the <event> came to <place> in <month> .",
                "in <month> , <place> held the <event> .",
            ]),
            SubsetRule(("event", "place", "count"), 1.5, [
                "the <event> in <place> drew <count> guests .",
                "<count> people joined the <event> in <place> .",
            ]),
            SubsetRule(("event", "month", "count"), 1.5, [
                "the <event> in <month> drew <count> guests .",
                "in <month> , <count> people joined the <event> .",
            ]),
            SubsetRule(("place", "month", "count"), 1.5, [
                "<place> drew <count> guests in <month> .",
                "in <month> , <count> people came to <place> .",
            ]),
            # four fields
            SubsetRule(("name", "event", "place", "month"), 0.5, [
                "<name> hosted the <event> in <place> in <month> .",
                "in <month> , the <event> in <place> was led by <name> .",
            ]),
            SubsetRule(("name", "event", "place", "count"), 0.5, [
                "<name> hosted the <event> in <place> for <count> guests .",
                "the <event> in <place> by <name> drew <count> people .",
            ]),
            SubsetRule(("name", "event", "month", "count"), 0.5, [
                "in <month> , <name> hosted the <event> for <count> guests .",
                "the <event> by <name> drew <count> people in <month> .",
            ]),
            SubsetRule(("name", "place", "month", "count"), 0.5, [
                "<name> drew <count> guests to <place> in <month> .",
                "in <month> , <place> welcomed <name> and <count> people .",
            ]),
            SubsetRule(("event", "place", "month", "count"), 0.5, [
                "the <event> in <place> drew <count> guests in <month> .",
                "in <month> , <count> people joined the <event> in <place> .",
            ]),
            # the full record
            SubsetRule(("name", "event", "place", "month", "count"), 0.5, [
                "in <month> , <name> hosted the <event> in <place> for <count> guests .",
                "the <event> in <place> by <name> drew <count> people in <month> .",
            ]),
        ],
    )
    spec.validate()
    return spec
