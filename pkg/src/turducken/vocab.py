"""Whole-token vocabulary derived from a corpus (no subword merging at toy
scale; whitespace is the token boundary)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    pad_id: int = field(default=0, init=False)
    bos_id: int = field(default=1, init=False)
    eos_id: int = field(default=2, init=False)
    unk_id: int = field(default=3, init=False)

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "Vocabulary":
        seen: set[str] = set()
        for text in texts:
            seen.update(text.split())
        return cls(tokens=SPECIALS + tuple(sorted(seen)))

    def encode(self, text: str) -> list[int]:
        unk = self.unk_id
        return [self.index.get(tok, unk) for tok in text.split()]

    def decode(self, ids: Sequence[int], skip_special: bool = True) -> str:
        specials = {self.pad_id, self.bos_id, self.eos_id} if skip_special else set()
        return " ".join(self.tokens[i] for i in ids if i not in specials)
