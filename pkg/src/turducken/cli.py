"""Command-line surface.

Machine-readable JSON goes to stdout; progress and human summaries go to
stderr.  Exit codes: 0 success, 1 operational failure, 2 usage error.

Flag defaults can come from a JSON config file (``--config``) and from
environment variables prefixed ``TURDUCKEN_`` (e.g. ``TURDUCKEN_BRIDGE_ADDR``);
explicit flags win over the environment, which wins over the config file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import __version__
from .checkers import (
    AcceptAllChecker,
    ExternalChecker,
    ExternalCheckerConfig,
    ParseChecker,
)
from .corpus import (
    Sample,
    SplitSpec,
    build_training_pairs,
    convert_external,
    load_jsonl,
    make_mtl_pairs,
    stats,
    write_jsonl,
)
from .decode import DecodeOpts, beam, greedy, sample, sf_beam
from .errors import TurduckenError
from .grammar import parse
from .metrics import EvalPair, KeywordWeights, SqlMatcher, evaluate_pairs
from .model import ModelConfig, ToyScorer
from .prompts import PROMPT_KINDS, PromptTemplate, TaskId, build_prompt
from .sat import SatSequence, TagPolicy, parse_rendered, render, sat_decode, sat_encode
from .scorers import TableScorer
from .synthetic import synthetic_corpus
from .syntax_tree import has_error
from .training import TrainConfig, load_checkpoint, save_checkpoint, train_toy
from .vocab import Vocabulary

ENV_PREFIX = "TURDUCKEN_"


def _read_source(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _emit(doc) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve(args: argparse.Namespace, name: str, default=None):
    """flag > TURDUCKEN_<NAME> env > config file > default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    env = os.environ.get(ENV_PREFIX + name.upper())
    if env is not None:
        return env
    if getattr(args, "_config_doc", None) and name in args._config_doc:
        return args._config_doc[name]
    return default


def _tag_policy(args: argparse.Namespace) -> TagPolicy:
    raw = _resolve(args, "tag_length", 3)
    tag_length = raw if raw == "full" else int(raw)
    return TagPolicy(tag_length=tag_length)


def _build_checker(spec: str, timeout_ms: float):
    if spec == "accept-all":
        return AcceptAllChecker()
    if spec.startswith("parse:"):
        return ParseChecker(spec[len("parse:"):])
    if spec.startswith("cmd:"):
        cfg = ExternalCheckerConfig(command_template=spec[len("cmd:"):], timeout_ms=timeout_ms)
        return ExternalChecker(cfg)
    raise TurduckenError(f"unknown checker spec {spec!r} (use accept-all | parse:<grammar> | cmd:<template>)")


def _build_scorer(spec: str, args: argparse.Namespace):
    """Returns (scorer, closer)."""
    if not spec:
        raise TurduckenError("generate needs --scorer (toy:<ckpt> | bridge:<addr> | table:<json>)")
    if spec.startswith("toy:"):
        model, vocab = load_checkpoint(spec[len("toy:"):])
        tpl = PromptTemplate(kind=_resolve(args, "prompt", "standard"))
        task = TaskId(_resolve(args, "task", "origin"))
        desc = _resolve(args, "desc")
        if not desc:
            raise TurduckenError("generate with a toy scorer needs --desc")
        text, _ = build_prompt(tpl, task, desc)
        return ToyScorer(model, vocab, text), lambda: None
    if spec == "bridge" or spec.startswith("bridge:"):
        from .bridge_client import BridgeScorer

        address = spec[len("bridge:"):] if spec.startswith("bridge:") else ""
        address = address or os.environ.get(ENV_PREFIX + "BRIDGE_ADDR", "")
        if not address:
            raise TurduckenError("no bridge address: use bridge:<addr> or set TURDUCKEN_BRIDGE_ADDR")
        scorer = BridgeScorer(address)
        return scorer, scorer.close
    if spec.startswith("table:"):
        return TableScorer.load(spec[len("table:"):]), lambda: None
    raise TurduckenError(f"unknown scorer spec {spec!r} (use toy:<ckpt> | bridge:<addr> | table:<json>)")


# --- subcommands ------------------------------------------------------------


def _cmd_sat_encode(args) -> int:
    policy = _tag_policy(args)
    source = _read_source(args.file)
    tree = parse(source, _resolve(args, "grammar", "mini_python"))
    if has_error(tree):
        raise TurduckenError("source does not parse cleanly; cannot encode")
    seq = sat_encode(tree, policy)
    if args.json:
        _emit(seq.to_json_dict())
    else:
        print(render(seq))
        if seq.string_table and args.table_out:
            with open(args.table_out, "w", encoding="utf-8") as fh:
                json.dump(list(seq.string_table), fh)
    return 0


def _cmd_sat_decode(args) -> int:
    text = _read_source(args.file)
    seq = parse_rendered(text)
    if args.table:
        with open(args.table, encoding="utf-8") as fh:
            table = tuple(json.load(fh))
        seq = SatSequence(tokens=seq.tokens, string_table=table, tag_policy=seq.tag_policy)
    print(" ".join(sat_decode(seq)))
    return 0


def _cmd_generate(args) -> int:
    strategy = _resolve(args, "strategy", "beam")
    opts = DecodeOpts(
        strategy=strategy,
        beam_k=int(_resolve(args, "beam_k", 10)),
        max_len=int(_resolve(args, "max_len", 256)),
        seed=None if args.seed is None else int(args.seed),
        temperature=float(_resolve(args, "temperature", 1.0)),
    )
    task = TaskId(_resolve(args, "task", "origin"))
    scorer, closer = _build_scorer(_resolve(args, "scorer", ""), args)
    try:
        detok = getattr(scorer, "detokenize", None)
        if strategy == "sf_beam":
            checker = _build_checker(
                _resolve(args, "checker", "parse:mini_python"), float(_resolve(args, "timeout", 10000))
            )
            cand, outcome = sf_beam(scorer, task, opts, checker, parallel=args.parallel)
            _emit(
                {
                    "strategy": strategy,
                    "ids": list(cand.ids),
                    "text": detok(cand.ids) if detok else None,
                    "logprob": cand.logprob,
                    "executable": outcome.executable,
                    "checker_id": outcome.checker_id,
                    "diagnostics": outcome.diagnostics[-500:],
                }
            )
        elif strategy == "beam":
            cands = beam(scorer, task, opts)
            _emit(
                {
                    "strategy": strategy,
                    "candidates": [
                        {"ids": list(c.ids), "text": detok(c.ids) if detok else None, "logprob": c.logprob}
                        for c in cands
                    ],
                }
            )
        else:
            cand = greedy(scorer, task, opts) if strategy == "greedy" else sample(scorer, task, opts)
            _emit(
                {
                    "strategy": strategy,
                    "ids": list(cand.ids),
                    "text": detok(cand.ids) if detok else None,
                    "logprob": cand.logprob,
                }
            )
    finally:
        closer()
    return 0


def _cmd_evaluate(args) -> int:
    with open(args.pairs, encoding="utf-8") as fh:
        raw = [json.loads(line) for line in fh if line.strip()]
    pairs = [EvalPair(id=str(d.get("id", i)), candidate=d["candidate"], reference=d["reference"]) for i, d in enumerate(raw)]
    metrics = _resolve(args, "metrics")
    names = [m.strip() for m in metrics.split(",")] if metrics else None
    keywords = _resolve(args, "keywords", "none")
    kw = KeywordWeights.uniform() if keywords == "none" else KeywordWeights.for_language(keywords)
    checker = None
    checker_spec = _resolve(args, "checker")
    if checker_spec:
        checker = _build_checker(checker_spec, float(_resolve(args, "timeout", 10000)))
    trivial = None
    if args.trivial_from:
        from .metrics import TrivialNGramSet, code_tokens

        grammar = _resolve(args, "grammar", "mini_python")
        background = load_jsonl(args.trivial_from).all_samples()
        trivial = TrivialNGramSet.from_corpus(
            [code_tokens(s.code, grammar) for s in background], k=int(args.trivial_k or 500)
        )
    report = evaluate_pairs(
        pairs,
        keyword_weights=kw,
        trivial=trivial,
        sql_matcher=SqlMatcher(style=_resolve(args, "sql_style", "native_sql")),
        grammar_id=_resolve(args, "grammar", "mini_python"),
        checker=checker,
        checker_id=getattr(checker, "checker_id", None),
        **({"metrics": names} if names else {}),
    )
    out = report.to_json()
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
        _note(f"report written to {args.report}")
    else:
        print(out)
    for name, value in report.aggregates.items():
        _note(f"{name:>20}: {value:.4f}")
    if report.code_executable is not None:
        _note(f"{'code_executable':>20}: {report.code_executable:.4f}")
    return 0


def _cmd_train_toy(args) -> int:
    seed = int(_resolve(args, "seed", 1234))
    steps = int(_resolve(args, "steps", 500))
    if args.synthetic:
        samples = synthetic_corpus(int(args.synthetic), seed=seed)
    elif args.corpus:
        samples = list(load_jsonl(args.corpus).train)
    else:
        raise TurduckenError("train-toy needs --synthetic N or --corpus PATH")
    tpl = PromptTemplate(kind=_resolve(args, "prompt", "standard"))
    policy = _tag_policy(args)
    pairs, skipped = build_training_pairs(samples, policy, tpl)
    if skipped:
        _note(f"skipped {len(skipped)} unparseable samples")
    texts = [t for p in pairs for t in (p.primary_input, p.primary_target, p.auxiliary_input, p.auxiliary_target)]
    vocab = Vocabulary.from_texts(texts)
    overrides = dict(args._config_doc.get("model", {})) if getattr(args, "_config_doc", None) else {}
    model_cfg = ModelConfig(vocab_size=len(vocab), n_soft=tpl.n_soft, **overrides)
    train_cfg = TrainConfig(
        steps=steps,
        lr=float(_resolve(args, "lr", TrainConfig.lr)),
        batch_size=int(_resolve(args, "batch_size", 16)),
        seed=seed,
    )
    _note(f"training on {len(pairs)} pairs, vocab {len(vocab)}, {steps} steps, lr {train_cfg.lr}")
    model, history = train_toy(pairs, vocab, model_cfg, train_cfg)
    if args.out:
        save_checkpoint(args.out, model, vocab)
        _note(f"checkpoint written to {args.out}")
    _emit(
        {
            "steps": steps,
            "initial_loss": history.initial_loss,
            "final_loss": history.final_loss,
            "losses": [round(s.loss, 6) for s in history.steps[:: max(1, steps // 50)]],
            "model_config": asdict(model_cfg),
            "seed": seed,
        }
    )
    return 0


def _cmd_stats(args) -> int:
    split = load_jsonl(args.path)
    doc = {}
    for name in ("train", "valid", "test"):
        samples = getattr(split, name)
        if samples:
            doc[name] = stats(samples).to_json_dict()
    _emit(doc)
    return 0


def _cmd_check(args) -> int:
    source = _read_source(args.file)
    checker = _build_checker(
        _resolve(args, "checker", "parse:mini_python"), float(_resolve(args, "timeout", 10000))
    )
    outcome = checker(source)
    _emit(
        {
            "executable": outcome.executable,
            "checker_id": outcome.checker_id,
            "duration_ms": round(outcome.duration_ms, 3),
            "diagnostics": outcome.diagnostics[-2000:],
        }
    )
    return 0


def _cmd_convert(args) -> int:
    samples = convert_external(
        args.input,
        nl_key=args.nl_key,
        code_key=args.code_key,
        id_key=args.id_key,
        language=args.language,
        style=args.style,
    )
    write_jsonl(args.output, samples)
    _note(f"wrote {len(samples)} samples to {args.output}")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turducken",
        description="Syntax-guided code generation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file supplying flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    sat = sub.add_parser("sat", help="tag-annotated traversal of source code")
    sat_sub = sat.add_subparsers(dest="sat_command", required=True)
    enc = sat_sub.add_parser("encode", help="source -> rendered tag sequence")
    enc.add_argument("file", nargs="?", help="source file ('-' or absent: stdin)")
    enc.add_argument("--grammar", default=None)
    enc.add_argument("--tag-length", dest="tag_length", default=None, help="'full' or prefix length (default 3)")
    enc.add_argument("--json", action="store_true", help="emit the full sequence as JSON")
    enc.add_argument("--table-out", help="write the string side-table to this JSON file")
    enc.set_defaults(func=_cmd_sat_encode)
    dec = sat_sub.add_parser("decode", help="rendered tag sequence -> token stream")
    dec.add_argument("file", nargs="?", help="rendered text file ('-' or absent: stdin)")
    dec.add_argument("--table", help="JSON string side-table to restore placeholders from")
    dec.set_defaults(func=_cmd_sat_decode)

    gen = sub.add_parser("generate", help="decode from a scorer")
    gen.add_argument("--scorer", default=None, help="toy:<ckpt> | bridge:<addr> | table:<json>")
    gen.add_argument("--desc", default=None, help="functional description (toy scorer)")
    gen.add_argument("--task", default=None, choices=[t.value for t in TaskId])
    gen.add_argument("--prompt", default=None, choices=list(PROMPT_KINDS))
    gen.add_argument("--strategy", default=None, choices=["greedy", "sampling", "beam", "sf_beam"])
    gen.add_argument("--beam-k", dest="beam_k", default=None, type=int)
    gen.add_argument("--max-len", dest="max_len", default=None, type=int)
    gen.add_argument("--seed", default=None, type=int)
    gen.add_argument("--temperature", default=None, type=float)
    gen.add_argument("--checker", default=None, help="accept-all | parse:<grammar> | cmd:<template>")
    gen.add_argument("--timeout", default=None, type=float, help="checker timeout in ms")
    gen.add_argument("--parallel", action="store_true", help="fan out sf_beam checks concurrently")
    gen.set_defaults(func=_cmd_generate)

    ev = sub.add_parser("evaluate", help="score candidate/reference pairs")
    ev.add_argument("--pairs", required=True, help="JSONL of {id, candidate, reference}")
    ev.add_argument("--report", default=None, help="write the JSON report here (default stdout)")
    ev.add_argument("--metrics", default=None, help="comma-separated metric names")
    ev.add_argument("--keywords", default=None, choices=["python", "java", "none"])
    ev.add_argument("--sql-style", dest="sql_style", default=None, choices=["native_sql", "orm"])
    ev.add_argument("--grammar", default=None)
    ev.add_argument("--checker", default=None, help="also compute the executable rate with this checker")
    ev.add_argument("--timeout", default=None, type=float)
    ev.add_argument("--trivial-from", dest="trivial_from", default=None,
                    help="background corpus (JSONL) for the trivially-shared n-gram filter")
    ev.add_argument("--trivial-k", dest="trivial_k", default=None, type=int)
    ev.set_defaults(func=_cmd_evaluate)

    tr = sub.add_parser("train-toy", help="train the toy model from scratch")
    tr.add_argument("--synthetic", default=None, type=int, help="generate N synthetic samples")
    tr.add_argument("--corpus", default=None, help="JSONL file or split directory")
    tr.add_argument("--steps", default=None, type=int)
    tr.add_argument("--seed", default=None, type=int)
    tr.add_argument("--lr", default=None, type=float)
    tr.add_argument("--batch-size", dest="batch_size", default=None, type=int)
    tr.add_argument("--prompt", default=None, choices=list(PROMPT_KINDS))
    tr.add_argument("--tag-length", dest="tag_length", default=None)
    tr.add_argument("--out", default=None, help="checkpoint path")
    tr.set_defaults(func=_cmd_train_toy)

    st = sub.add_parser("stats", help="dataset statistics")
    st.add_argument("path", help="JSONL file or split directory")
    st.set_defaults(func=_cmd_stats)

    ck = sub.add_parser("check", help="run one source file through a checker")
    ck.add_argument("file", nargs="?", help="source file ('-' or absent: stdin)")
    ck.add_argument("--checker", default=None)
    ck.add_argument("--timeout", default=None, type=float)
    ck.set_defaults(func=_cmd_check)

    cv = sub.add_parser("convert", help="convert an external dataset layout to the JSONL schema")
    cv.add_argument("input")
    cv.add_argument("output")
    cv.add_argument("--nl-key", default="nl")
    cv.add_argument("--code-key", default="code")
    cv.add_argument("--id-key", default=None)
    cv.add_argument("--language", default="python", choices=["python", "java"])
    cv.add_argument("--style", default="native_sql", choices=["native_sql", "orm"])
    cv.set_defaults(func=_cmd_convert)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._config_doc = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                args._config_doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return 1
    try:
        return args.func(args)
    except TurduckenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
