"""Joint training of the two tasks, checkpoint IO, and batch assembly.

One optimizer step consumes a paired batch: the same samples viewed as the
primary task (description -> code tokens) and as the auxiliary task
(description -> tag-annotated tokens), summed into the joint loss.  All
randomness (init, shuffling) flows from one seed, so a fixed seed reproduces
parameters bitwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import torch

from .errors import SequenceLengthError, TrainingError
from .model import ModelConfig, MultiTaskSeq2Seq, TaskBatch, build_model
from .prompts import TaskId
from .vocab import Vocabulary

CHECKPOINT_FORMAT_VERSION = 1

# Optimizer family and learning rate follow the reference setup (AdamW,
# 5e-5); that rate suits fine-tuning a pretrained model, so toy-from-scratch
# runs usually pass something larger explicitly.
DEFAULT_LR = 5e-5


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 500
    batch_size: int = 16
    lr: float = DEFAULT_LR
    weight_decay: float = 0.01
    seed: int = 1234
    log_every: int = 50


@dataclass(frozen=True)
class MtlPair:
    """One sample's two supervised views, already rendered to token text."""

    primary_input: str
    primary_target: str
    auxiliary_input: str
    auxiliary_target: str


@dataclass
class StepResult:
    step: int
    loss: float
    ce_primary: float
    ce_auxiliary: float


@dataclass
class TrainingHistory:
    steps: list[StepResult] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.steps[0].loss

    @property
    def final_loss(self) -> float:
        return self.steps[-1].loss


def encode_task_batch(
    items: Sequence[tuple[str, str]],
    task: TaskId,
    vocab: Vocabulary,
    cfg: ModelConfig,
    dtype: torch.dtype = torch.float32,
) -> TaskBatch:
    """Pad and tensorize (input_text, target_text) pairs for one task."""
    if not items:
        raise ValueError("empty batch")
    src_rows = [vocab.encode(src) for src, _ in items]
    tgt_rows = [vocab.encode(tgt) for _, tgt in items]
    for row in src_rows:
        if len(row) > cfg.max_input_len:
            raise SequenceLengthError(f"encoder input length {len(row)} exceeds {cfg.max_input_len}")
    for row in tgt_rows:
        if len(row) + 1 > cfg.max_output_len:
            raise SequenceLengthError(f"decoder length {len(row) + 1} exceeds {cfg.max_output_len}")

    s = max(len(r) for r in src_rows)
    t = max(len(r) for r in tgt_rows) + 1  # room for bos/eos shift
    pad = vocab.pad_id
    src = torch.full((len(items), s), pad, dtype=torch.long)
    src_mask = torch.zeros((len(items), s), dtype=torch.bool)
    tgt_in = torch.full((len(items), t), pad, dtype=torch.long)
    labels = torch.full((len(items), t), pad, dtype=torch.long)
    tgt_mask = torch.zeros((len(items), t), dtype=torch.bool)
    for i, (s_row, t_row) in enumerate(zip(src_rows, tgt_rows)):
        src[i, : len(s_row)] = torch.tensor(s_row, dtype=torch.long)
        src_mask[i, : len(s_row)] = True
        din = [vocab.bos_id, *t_row]
        lab = [*t_row, vocab.eos_id]
        tgt_in[i, : len(din)] = torch.tensor(din, dtype=torch.long)
        labels[i, : len(lab)] = torch.tensor(lab, dtype=torch.long)
        tgt_mask[i, : len(lab)] = True
    return TaskBatch(task=task, src_ids=src, src_mask=src_mask, tgt_in=tgt_in, labels=labels, tgt_mask=tgt_mask)


def make_joint_batch(
    pairs: Sequence[MtlPair], vocab: Vocabulary, cfg: ModelConfig
) -> tuple[TaskBatch, TaskBatch]:
    primary = encode_task_batch(
        [(p.primary_input, p.primary_target) for p in pairs], TaskId.ORIGIN, vocab, cfg
    )
    auxiliary = encode_task_batch(
        [(p.auxiliary_input, p.auxiliary_target) for p in pairs], TaskId.SYNTAX, vocab, cfg
    )
    return primary, auxiliary


def train_step(
    model: MultiTaskSeq2Seq,
    optimizer: torch.optim.Optimizer,
    primary: TaskBatch,
    auxiliary: TaskBatch,
    step: int = 0,
) -> StepResult:
    """One joint gradient step; raises TrainingError on a non-finite loss."""
    model.train()
    optimizer.zero_grad(set_to_none=True)
    total, ce_pri, ce_aux = model.joint_loss(primary, auxiliary)
    if not torch.isfinite(total):
        raise TrainingError(
            f"non-finite loss at step {step}: total={total.item()} "
            f"(primary={ce_pri.item()}, auxiliary={ce_aux.item()})"
        )
    total.backward()
    optimizer.step()
    return StepResult(step=step, loss=total.item(), ce_primary=ce_pri.item(), ce_auxiliary=ce_aux.item())


def train_toy(
    pairs: Sequence[MtlPair],
    vocab: Vocabulary,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
) -> tuple[MultiTaskSeq2Seq, TrainingHistory]:
    """Train from scratch on an in-memory corpus, cycling shuffled batches."""
    if not pairs:
        raise ValueError("no training pairs")
    model = build_model(model_cfg, seed=train_cfg.seed)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=train_cfg.lr, weight_decay=train_cfg.weight_decay
    )
    rng = np.random.default_rng(train_cfg.seed)
    history = TrainingHistory()
    order: list[int] = []
    for step in range(train_cfg.steps):
        if len(order) < train_cfg.batch_size:
            order.extend(rng.permutation(len(pairs)).tolist())
        take, order = order[: train_cfg.batch_size], order[train_cfg.batch_size :]
        batch_pairs = [pairs[i] for i in take]
        primary, auxiliary = make_joint_batch(batch_pairs, vocab, model_cfg)
        history.steps.append(train_step(model, optimizer, primary, auxiliary, step))
    return model, history


# --- checkpoints ----------------------------------------------------------


def save_checkpoint(path: str, model: MultiTaskSeq2Seq, vocab: Vocabulary) -> None:
    torch.save(
        {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "model_config": asdict(model.cfg),
            "vocab_tokens": list(vocab.tokens),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[MultiTaskSeq2Seq, Vocabulary]:
    payload = torch.load(path, weights_only=True)
    version = payload.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise TrainingError(f"unsupported checkpoint format version {version!r}")
    cfg = ModelConfig(**payload["model_config"])
    model = MultiTaskSeq2Seq(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    vocab = Vocabulary(tokens=tuple(payload["vocab_tokens"]))
    return model, vocab
