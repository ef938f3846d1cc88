"""Scripted scorers backed by explicit probability tables.

A table scorer maps each decoding prefix to a fixed next-token distribution.
It serves three purposes: deterministic unit-test fixtures, the stub model
behind the wire bridge (both sides load the same JSON file), and brute-force
oracle checks where the whole search space is enumerable.

Table JSON schema::

    {"model_name": str, "vocab": [token, ...],
     "bos_id": int|null, "eos_id": int, "pad_id": int|null,
     "rows": {"", "0", "0,1", ...: [prob, ...]},    # prefix -> probabilities
     "default": [prob, ...]}

Row keys are comma-joined prefix ids; probabilities are normalized on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class TableScorer:
    """Immutable after construction; safe for concurrent calls."""

    vocab: list[str]
    rows: dict[tuple[int, ...], np.ndarray]  # log-probabilities
    default: np.ndarray
    eos_id: int
    bos_id: int | None = None
    pad_id: int | None = None
    model_name: str = "stub-table"

    def __post_init__(self):
        self.vocab_size = len(self.vocab)

    def next_distribution(self, prefix_ids: Sequence[int], task) -> np.ndarray:
        # task-independent by design: the table scripts one distribution per prefix
        return self.rows.get(tuple(prefix_ids), self.default)

    def detokenize(self, ids: Sequence[int]) -> str:
        specials = {self.eos_id, self.bos_id, self.pad_id}
        return " ".join(self.vocab[i] for i in ids if i not in specials)

    # --- construction ----------------------------------------------------

    @classmethod
    def from_probs(
        cls,
        rows: dict[tuple[int, ...], Sequence[float]],
        *,
        vocab: list[str] | None = None,
        eos_id: int | None = None,
        default: Sequence[float] | None = None,
        **kw,
    ) -> "TableScorer":
        some_row = next(iter(rows.values()))
        size = len(some_row)
        vocab = vocab or [f"t{i}" for i in range(size - 1)] + ["</s>"]
        eos_id = size - 1 if eos_id is None else eos_id
        log_rows = {k: _normalized_log(v) for k, v in rows.items()}
        default_log = _normalized_log(default if default is not None else [1.0] * size)
        return cls(vocab=vocab, rows=log_rows, default=default_log, eos_id=eos_id, **kw)

    @classmethod
    def random(
        cls,
        vocab_size: int,
        max_len: int,
        seed: int,
        *,
        eos_id: int | None = None,
        min_prob: float = 0.05,
    ) -> "TableScorer":
        """A fully scripted scorer with a random distribution for every
        reachable prefix (non-eos tokens, length < max_len)."""
        if vocab_size < 2:
            raise ValueError("need at least one content token plus eos")
        eos = vocab_size - 1 if eos_id is None else eos_id
        rng = np.random.default_rng(seed)
        content = [t for t in range(vocab_size) if t != eos]
        rows: dict[tuple[int, ...], Sequence[float]] = {}
        frontier: list[tuple[int, ...]] = [()]
        for _ in range(max_len):
            next_frontier: list[tuple[int, ...]] = []
            for prefix in frontier:
                rows[prefix] = rng.random(vocab_size) + min_prob
                if len(prefix) + 1 < max_len:
                    next_frontier.extend(prefix + (t,) for t in content)
            frontier = next_frontier
        return cls.from_probs(rows, eos_id=eos)

    # --- JSON round-trip (shared with the bridge stub model) -------------

    def to_json_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "vocab": self.vocab,
            "bos_id": self.bos_id,
            "eos_id": self.eos_id,
            "pad_id": self.pad_id,
            "rows": {
                ",".join(map(str, k)): [float(p) for p in np.exp(v)]
                for k, v in self.rows.items()
            },
            "default": [float(p) for p in np.exp(self.default)],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TableScorer":
        rows = {
            tuple(int(x) for x in key.split(",") if x != ""): _normalized_log(probs)
            for key, probs in doc["rows"].items()
        }
        return cls(
            vocab=list(doc["vocab"]),
            rows=rows,
            default=_normalized_log(doc["default"]),
            eos_id=int(doc["eos_id"]),
            bos_id=doc.get("bos_id"),
            pad_id=doc.get("pad_id"),
            model_name=doc.get("model_name", "stub-table"),
        )

    @classmethod
    def load(cls, path: str) -> "TableScorer":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def _normalized_log(probs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64)
    if np.any(arr < 0) or arr.sum() <= 0:
        raise ValueError("probabilities must be non-negative with positive sum")
    arr = arr / arr.sum()
    with np.errstate(divide="ignore"):
        return np.log(arr)
