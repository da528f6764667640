"""Command-line entry points.

Verbs: synth (make a corpus), train, eval, sample, posterior, serve.  All
argument parsing and printing lives here; the work happens in the training
loop, the metric battery, and the shared inference engine.  Exit codes:
0 success, 1 configuration or input error, 2 training divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data.corpus import load_corpus, save_corpus
from .data.grammar import default_grammar
from .data.synth import generate_corpus
from .errors import (
    AllMaskedError,
    ConfigError,
    EnumerationTooLarge,
    LengthExceeded,
    NonFiniteGradient,
    NonFiniteLoss,
    ParseError,
)
from .model.checkpoint import load_checkpoint
from .service.engine import Engine


def _cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grammar = default_grammar()
    grammar.save(out / "grammar.json")
    examples = generate_corpus(grammar, args.size, args.seed)
    n_train = int(args.size * 0.8)
    n_valid = int(args.size * 0.1)
    splits = {
        "train.tsv": examples[:n_train],
        "valid.tsv": examples[n_train:n_train + n_valid],
        "test.tsv": examples[n_train + n_valid:],
    }
    for name, part in splits.items():
        save_corpus(part, out / name)
    print(f"wrote grammar + {args.size} examples "
          f"({', '.join(f'{len(v)} {k}' for k, v in splits.items())}) to {out}")
    return 0


def _cmd_train(args) -> int:
    from .training.config import load_run_config
    from .training.loop import train_run

    cfg = load_run_config(args.config)
    result = train_run(cfg)
    print(f"checkpoint {result.checkpoint_id[:12]} -> {result.checkpoint_path}")
    print(f"metrics log -> {result.metrics_path}")
    return 0


def _cmd_eval(args) -> int:
    from .data.grammar import GrammarSpec
    from .metrics.battery import build_report, write_report
    from .training.config import load_run_config
    from .training.loop import prepare_examples

    cfg = load_run_config(args.config)
    ckpt_path = Path(args.checkpoint) if args.checkpoint else (
        Path(cfg.run.out_dir) / cfg.run.checkpoint_name)
    if not ckpt_path.exists():
        raise ConfigError(f"checkpoint not found: {ckpt_path}")
    model, vocab, _meta, ckpt_id = load_checkpoint(ckpt_path)
    grammar = GrammarSpec.load(cfg.data.grammar)
    test_path = cfg.data.test or cfg.data.valid or cfg.data.train
    examples = load_corpus(test_path, max_source_len=cfg.data.max_source_len,
                           max_target_len=cfg.data.max_target_len)
    prepared = prepare_examples(examples, grammar, vocab, "overlap")
    report = build_report(model, vocab, prepared, cfg.eval, ckpt_id,
                          grammar.stopwords)
    report_path = Path(cfg.run.out_dir) / cfg.eval.report_name
    write_report(report, report_path)
    print(f"report -> {report_path}")
    return 0


def _parse_bitstring(raw: str) -> list[int]:
    if not raw or any(ch not in "01" for ch in raw):
        raise ParseError(f"mask must be a 0/1 bit-string, got {raw!r}")
    return [int(ch) for ch in raw]


def _heatmap(tokens: list[str], values: list[float],
             bits: list[int] | None = None) -> str:
    width = max(len(t) for t in tokens)
    lines = []
    for i, (tok, v) in enumerate(zip(tokens, values)):
        mark = "" if bits is None else f"  {'[x]' if bits[i] else '[ ]'}"
        lines.append(f"  {tok:<{width}}  {v:0.3f}{mark}")
    return "\n".join(lines)


def _cmd_sample(args) -> int:
    engine = Engine.load(args.checkpoint)
    tokens, gamma = engine.encode(args.source)
    if args.mask is not None:
        bits = _parse_bitstring(args.mask)
        if len(bits) != len(tokens):
            raise ParseError(f"mask length {len(bits)} does not match "
                             f"token count {len(tokens)}")
        if not any(bits):
            raise AllMaskedError("mask selects no tokens")
    else:
        bits = engine.sample_masks(args.source, 1, args.seed)[0]
    if args.beam:
        mode = "beam"
    elif args.samples > 1:
        mode = "sample"
    else:
        mode = "greedy"
    outs = engine.generate(args.source, bits, mode, args.samples, args.seed,
                           args.temperature, args.beam_width)
    print("selection probabilities:")
    print(_heatmap(tokens, gamma, bits))
    print(f"mask: {''.join(str(b) for b in bits)}  mode: {mode}")
    for i, o in enumerate(outs, start=1):
        print(f"[{i}] ({o.score:0.3f}) {o.text}")
    return 0


def _cmd_posterior(args) -> int:
    engine = Engine.load(args.checkpoint)
    tokens, _gamma = engine.encode(args.source)
    q, best = engine.posterior(args.source, args.target)
    if args.json:
        print(json.dumps({"tokens": tokens, "q": q, "best_mask": best},
                         sort_keys=True))
        return 0
    print("posterior selection probabilities:")
    print(_heatmap(tokens, q, best))
    print(f"best_mask: {''.join(str(b) for b in best)}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    app = create_app(args.checkpoint)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selectgen")
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("synth", help="generate the synthetic corpus")
    sp.add_argument("--out", default="data")
    sp.add_argument("--size", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_synth)

    tp = sub.add_parser("train", help="train a model from a config file")
    tp.add_argument("--config", required=True)
    tp.set_defaults(func=_cmd_train)

    ep = sub.add_parser("eval", help="run the metric battery on a checkpoint")
    ep.add_argument("--config", required=True)
    ep.add_argument("--checkpoint", default=None)
    ep.set_defaults(func=_cmd_eval)

    gp = sub.add_parser("sample", help="inspect selection and generate")
    gp.add_argument("--checkpoint", required=True)
    gp.add_argument("--source", required=True)
    gp.add_argument("--mask", default=None, help="explicit 0/1 bit-string")
    gp.add_argument("--samples", type=int, default=1)
    gp.add_argument("--beam", action="store_true")
    gp.add_argument("--beam-width", type=int, default=5)
    gp.add_argument("--temperature", type=float, default=1.0)
    gp.add_argument("--seed", type=int, default=0)
    gp.set_defaults(func=_cmd_sample)

    pp = sub.add_parser("posterior", help="infer selection from a target")
    pp.add_argument("--checkpoint", required=True)
    pp.add_argument("--source", required=True)
    pp.add_argument("--target", required=True)
    pp.add_argument("--json", action="store_true")
    pp.set_defaults(func=_cmd_posterior)

    vp = sub.add_parser("serve", help="run the HTTP service")
    vp.add_argument("--checkpoint", required=True)
    vp.add_argument("--host", default="127.0.0.1")
    vp.add_argument("--port", type=int, default=8040)
    vp.set_defaults(func=_cmd_serve)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NonFiniteLoss, NonFiniteGradient) as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 2
    except (ConfigError, ParseError, LengthExceeded, AllMaskedError,
            EnumerationTooLarge, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
