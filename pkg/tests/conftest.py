"""Shared fixtures and the acceptance result banner.

Acceptance tests record one line per criterion into a registry; the
terminal-summary hook prints every recorded line at the end of the run so
the pass/fail status of each criterion is visible even when output
capturing is on.
"""

from __future__ import annotations

import numpy as np
import pytest

from selectgen.data.grammar import default_grammar
from selectgen.data.synth import generate_corpus
from selectgen.data.vocab import Vocabulary
from selectgen.model import Model, ModelConfig

ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_criterion(number: int, name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    ACCEPTANCE_LINES.append((number, f"criterion {number:2d} {name}: {status}{suffix}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grammar():
    g = default_grammar()
    g.validate()
    return g


@pytest.fixture(scope="session")
def vocab(grammar):
    return grammar.build_vocab()


@pytest.fixture(scope="session")
def corpus(grammar):
    return generate_corpus(grammar, 40, seed=101)


@pytest.fixture(scope="session")
def tiny_vocab():
    """A vocabulary small enough for sub-5k-parameter models."""
    tokens = [f"w{i}" for i in range(12)] + [",", "."]
    return Vocabulary(tokens, {","})


def make_tiny_model(vocab_size: int, seed: int = 0, **overrides) -> Model:
    base = dict(embed_dim=6, hidden=8, selector_hidden=6,
                target_embed_dim=5, target_hidden=5, dropout=0.0)
    base.update(overrides)
    cfg = ModelConfig(vocab_size=vocab_size, **base)
    return Model(cfg, np.random.default_rng(seed))


@pytest.fixture
def tiny_model(tiny_vocab):
    return make_tiny_model(len(tiny_vocab))


@pytest.fixture(scope="session")
def desk_corpus_dir(tmp_path_factory):
    """Synthetic corpus shared by training-dependent tests."""
    from selectgen.cli import main

    out = tmp_path_factory.mktemp("corpus")
    rc = main(["synth", "--out", str(out), "--size", "2000", "--seed", "0"])
    assert rc == 0
    return out
