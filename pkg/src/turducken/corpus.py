"""Dataset loading, statistics, and construction of the dual-task pairs.

The on-disk format is JSONL, one sample per line::

    {"id": str, "nl": str, "code": str,
     "language": "python"|"java", "style": "native_sql"|"orm"}

A split directory holds ``train.jsonl``/``valid.jsonl``/``test.jsonl``.
Reported token counts use plain whitespace tokenization; comparisons against
published per-split averages inherit that assumption.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CorpusFormatError
from .grammar import parse
from .prompts import PromptTemplate, TaskId, build_prompt
from .sat import TagPolicy, render, sat_encode
from .syntax_tree import has_error, leaf_tokens
from .training import MtlPair

log = logging.getLogger(__name__)

LANGUAGES = ("python", "java")
STYLES = ("native_sql", "orm")
SPLIT_FILES = {"train": "train.jsonl", "valid": "valid.jsonl", "test": "test.jsonl"}


@dataclass(frozen=True)
class Sample:
    id: str
    nl: str
    code: str
    language: str = "python"
    style: str = "native_sql"

    def __post_init__(self):
        if not self.id or not self.nl or not self.code:
            raise ValueError("id, nl and code must be non-empty")
        if self.language not in LANGUAGES:
            raise ValueError(f"unknown language {self.language!r}")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")


@dataclass(frozen=True)
class SplitSpec:
    train: tuple[Sample, ...] = ()
    valid: tuple[Sample, ...] = ()
    test: tuple[Sample, ...] = ()

    def __post_init__(self):
        seen: dict[str, str] = {}
        for split_name in ("train", "valid", "test"):
            for sample in getattr(self, split_name):
                if sample.id in seen:
                    raise CorpusFormatError(
                        f"duplicate sample id {sample.id!r} in {split_name} (already in {seen[sample.id]})"
                    )
                seen[sample.id] = split_name

    def all_samples(self) -> tuple[Sample, ...]:
        return self.train + self.valid + self.test


def _load_file(path: str) -> tuple[Sample, ...]:
    samples: list[Sample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON: {exc.msg}", line_no=line_no, path=path) from exc
            if not isinstance(doc, dict):
                raise CorpusFormatError("each line must be a JSON object", line_no=line_no, path=path)
            try:
                sample = Sample(
                    id=str(doc["id"]),
                    nl=doc["nl"],
                    code=doc["code"],
                    language=doc.get("language", "python"),
                    style=doc.get("style", "native_sql"),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"bad sample: {exc}", line_no=line_no, path=path) from exc
            if sample.id in seen:
                raise CorpusFormatError(f"duplicate sample id {sample.id!r}", line_no=line_no, path=path)
            seen.add(sample.id)
            samples.append(sample)
    return tuple(samples)


def load_jsonl(path: str) -> SplitSpec:
    """Load a split directory (train/valid/test JSONL files, missing ones
    count as empty) or a single JSONL file (loaded as the train split)."""
    if os.path.isdir(path):
        parts = {}
        for name, filename in SPLIT_FILES.items():
            full = os.path.join(path, filename)
            parts[name] = _load_file(full) if os.path.exists(full) else ()
        if not any(parts.values()):
            raise CorpusFormatError(f"no split files found under {path}")
        return SplitSpec(**parts)
    return SplitSpec(train=_load_file(path))


@dataclass(frozen=True)
class SplitStats:
    count: int
    mean_nl_tokens: float
    mean_code_tokens: float

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_nl_tokens": round(self.mean_nl_tokens, 2),
            "mean_code_tokens": round(self.mean_code_tokens, 2),
        }


def stats(samples: Sequence[Sample]) -> SplitStats:
    """Counts and whitespace-token means for one split."""
    if not samples:
        raise ValueError("empty split")
    nl_total = sum(len(s.nl.split()) for s in samples)
    code_total = sum(len(s.code.split()) for s in samples)
    return SplitStats(
        count=len(samples),
        mean_nl_tokens=nl_total / len(samples),
        mean_code_tokens=code_total / len(samples),
    )


def make_mtl_pairs(
    sample: Sample,
    policy: TagPolicy | None = None,
    tpl: PromptTemplate | None = None,
    grammar_id: str = "mini_python",
) -> MtlPair:
    """Build the (primary, auxiliary) supervised views of one sample.

    The primary target is the code's flat leaf-token stream; the auxiliary
    target is the rendered tag-annotated traversal of the same parse tree.
    Unparseable code raises ValueError (batch builders skip and count it).
    """
    policy = policy or TagPolicy()
    tpl = tpl or PromptTemplate()
    tree = parse(sample.code, grammar_id)
    if has_error(tree):
        raise ValueError(f"sample {sample.id!r} does not parse under {grammar_id}")
    primary_input, _ = build_prompt(tpl, TaskId.ORIGIN, sample.nl)
    auxiliary_input, _ = build_prompt(tpl, TaskId.SYNTAX, sample.nl)
    code_tokens = " ".join(v for _, v in leaf_tokens(tree) if v)
    syntax_target = render(sat_encode(tree, policy))
    return MtlPair(
        primary_input=primary_input,
        primary_target=code_tokens,
        auxiliary_input=auxiliary_input,
        auxiliary_target=syntax_target,
    )


def build_training_pairs(
    samples: Iterable[Sample],
    policy: TagPolicy | None = None,
    tpl: PromptTemplate | None = None,
    grammar_id: str = "mini_python",
) -> tuple[list[MtlPair], list[str]]:
    """make_mtl_pairs over a corpus; returns (pairs, skipped sample ids)."""
    pairs: list[MtlPair] = []
    skipped: list[str] = []
    for sample in samples:
        try:
            pairs.append(make_mtl_pairs(sample, policy, tpl, grammar_id))
        except ValueError:
            skipped.append(sample.id)
            log.warning("skipping unparseable sample %s", sample.id)
    return pairs, skipped


def write_jsonl(path: str, samples: Iterable[Sample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {"id": s.id, "nl": s.nl, "code": s.code, "language": s.language, "style": s.style}
                )
                + "\n"
            )


def convert_external(
    path: str,
    *,
    nl_key: str = "nl",
    code_key: str = "code",
    id_key: str | None = None,
    language: str = "python",
    style: str = "native_sql",
) -> tuple[Sample, ...]:
    """Converter stub for externally published dataset layouts: maps a JSON
    or JSONL file with configurable field names onto :class:`Sample` rows."""
    with open(path, encoding="utf-8") as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "[":
            docs = json.load(fh)
        else:
            docs = [json.loads(line) for line in fh if line.strip()]
    samples = []
    for i, doc in enumerate(docs):
        samples.append(
            Sample(
                id=str(doc[id_key]) if id_key else f"conv-{i:05d}",
                nl=doc[nl_key],
                code=doc[code_key],
                language=language,
                style=style,
            )
        )
    return tuple(samples)
