"""Hard/soft/mixed prompt construction for the two generation tasks.

The input surface for both tasks is a short instruction prefix followed by
the functional description.  The default ("standard") template reads
``Generate {task} code : {description}``; the remaining variants reproduce
the ablation grid (no prompt, task name only, long form, soft prefix, and
soft prefix + standard text).  Soft variants contribute no extra text; they
report how many learned virtual embeddings the model should prepend.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Literal

PromptKind = Literal["none", "task_only", "standard", "long", "soft", "mixed"]

PROMPT_KINDS: tuple[PromptKind, ...] = ("none", "task_only", "standard", "long", "soft", "mixed")

DEFAULT_N_SOFT = 4


class TaskId(str, enum.Enum):
    """The two jointly learned tasks: plain code ("origin") and
    tag-annotated code ("syntax")."""

    ORIGIN = "origin"
    SYNTAX = "syntax"

    def __str__(self) -> str:  # tokenizer-visible surface
        return self.value


@dataclass(frozen=True)
class PromptTemplate:
    """Which instruction surface to build.

    ``n_soft`` counts learned virtual prefix tokens and is meaningful only
    for the soft/mixed kinds; it is normalized to 0 otherwise.
    """

    kind: PromptKind = "standard"
    n_soft: int = DEFAULT_N_SOFT

    def __post_init__(self):
        if self.kind not in PROMPT_KINDS:
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        if self.n_soft < 0:
            raise ValueError("n_soft must be non-negative")
        if self.kind not in ("soft", "mixed"):
            object.__setattr__(self, "n_soft", 0)
        elif self.n_soft == 0:
            raise ValueError(f"kind {self.kind!r} requires n_soft >= 1")


def build_prompt(tpl: PromptTemplate, task: TaskId, description: str) -> tuple[str, int]:
    """Return (input text, number of virtual prefix positions).

    Spacing around ``:`` is a single space on both sides; the surface is
    tokenizer-visible, so the exact form matters.  The ``none`` and ``soft``
    kinds do not mention the task: with those templates task routing relies
    entirely on the task-specific output heads.
    """
    if not description:
        raise ValueError("description must be non-empty")
    kind = tpl.kind
    if kind == "none":
        return description, 0
    if kind == "task_only":
        return f"{task} : {description}", 0
    if kind == "standard":
        return f"Generate {task} code : {description}", 0
    if kind == "long":
        return f"Generate Turducken-Style code under {task} : {description}", 0
    if kind == "soft":
        return f": {description}", tpl.n_soft
    # mixed: virtual tokens ahead of the standard text
    return f"Generate {task} code : {description}", tpl.n_soft
