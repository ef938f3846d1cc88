"""Toy-scale dual-head encoder-decoder with relative-position attention and
gated fusion of the auxiliary head into the primary head.

The network follows the reference architecture at laptop scale: a shared
token embedding, encoder and decoder stacks whose attention adds a learned
relative-position component P to both keys and values,

    attention(Q, K, V) = softmax(Q (K + P)^T / sqrt(d_k)) (V + P),

and two task heads on top of the shared trunk.  The auxiliary ("syntax")
head is a single affine map; the primary ("origin") head multiplies its own
affine map elementwise with a sigmoid gate computed from the auxiliary head's
projection, so syntax knowledge learned by the auxiliary task shapes the
primary distribution and the primary loss back-propagates into the auxiliary
weights.  The joint objective is the plain sum of the two token-mean
cross-entropies.

Blocks are pre-norm for attention (Q, K, V come from a layer norm of the
stream) with a residual from the unnormalized stream; the feed-forward
sub-layer closes the block with LayerNorm(x + FFN(x)).  The feed-forward
hidden width is 4 x d_model with ReLU.  No dropout: forward passes are
deterministic, which the loss-additivity and seed-reproducibility contracts
rely on.

Soft prompting prepends ``n_soft`` learned embedding rows to the encoder
input.  No absolute position encoding exists anywhere; ordering information
enters only through the relative-position tables (one per attention module).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .errors import SequenceLengthError
from .prompts import TaskId

NEG_INF = -1e9

# Paper-scale values are 768 wide / 12 layers; toy defaults keep the same
# shape at a size that trains in seconds on a CPU.
TOY_D_MODEL = 64
TOY_N_LAYERS = 2
TOY_N_HEADS = 4


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = TOY_D_MODEL
    n_heads: int = TOY_N_HEADS
    n_layers: int = TOY_N_LAYERS
    max_rel_distance: int = 16
    n_soft: int = 0
    max_input_len: int = 150
    max_output_len: int = 256

    def __post_init__(self):
        if min(self.vocab_size, self.d_model, self.n_heads, self.n_layers, self.max_rel_distance) < 1:
            raise ValueError("all size fields must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.n_soft < 0:
            raise ValueError("n_soft must be non-negative")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads


def attention(q: Tensor, k: Tensor, v: Tensor, p: Tensor | None = None, mask: Tensor | None = None) -> Tensor:
    """softmax(Q (K+P)^T / sqrt(d_k)) (V+P).

    ``p`` is either a matrix shaped like one key row set (added to K and V
    directly) or a per-edge tensor (q_len, k_len, d) from a relative-position
    table.  ``mask`` is additive (0 for allowed, a large negative number for
    blocked) and broadcastable onto the score shape.
    """
    d = q.shape[-1]
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ValueError(f"non-conformable attention shapes {q.shape}, {k.shape}, {v.shape}")
    scale = 1.0 / math.sqrt(d)
    if p is None or p.dim() == k.dim():
        k_eff = k if p is None else k + p
        v_eff = v if p is None else v + p
        scores = q @ k_eff.transpose(-2, -1) * scale
        if mask is not None:
            scores = scores + mask
        weights = torch.softmax(scores, dim=-1)
        return weights @ v_eff
    if p.dim() != 3 or p.shape != (q.shape[-2], k.shape[-2], d):
        raise ValueError(f"edge bias must be (q_len, k_len, d), got {tuple(p.shape)}")
    scores = (q @ k.transpose(-2, -1) + torch.einsum("...qd,qkd->...qk", q, p)) * scale
    if mask is not None:
        scores = scores + mask
    weights = torch.softmax(scores, dim=-1)
    return weights @ v + torch.einsum("...qk,qkd->...qd", weights, p)


class RelativePositionBias(nn.Module):
    """Learned (2*max_distance+1, d_head) table of edge vectors, indexed by
    the clamped signed distance key_pos - query_pos (symmetric buckets;
    distances beyond the bound share the extreme buckets)."""

    def __init__(self, max_distance: int, d_head: int):
        super().__init__()
        self.max_distance = max_distance
        self.table = nn.Parameter(torch.empty(2 * max_distance + 1, d_head))
        nn.init.normal_(self.table, std=0.02)

    def forward(self, q_len: int, k_len: int) -> Tensor:
        device = self.table.device
        rel = torch.arange(k_len, device=device)[None, :] - torch.arange(q_len, device=device)[:, None]
        idx = rel.clamp(-self.max_distance, self.max_distance) + self.max_distance
        return self.table[idx]


class MultiHeadAttention(nn.Module):
    """Per-head projections of one shared input, edge bias shared across
    heads, concatenated heads projected by an output matrix (all bias-free)."""

    def __init__(self, d_model: int, n_heads: int, max_rel_distance: int):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.wq = nn.Linear(d_model, d_model, bias=False)
        self.wk = nn.Linear(d_model, d_model, bias=False)
        self.wv = nn.Linear(d_model, d_model, bias=False)
        self.wo = nn.Linear(d_model, d_model, bias=False)
        self.rel = RelativePositionBias(max_rel_distance, self.d_head)

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.d_head).transpose(1, 2)

    def forward(self, q_in: Tensor, k_in: Tensor, v_in: Tensor, mask: Tensor | None = None) -> Tensor:
        q, k, v = self._split(self.wq(q_in)), self._split(self.wk(k_in)), self._split(self.wv(v_in))
        p = self.rel(q.shape[-2], k.shape[-2])
        out = attention(q, k, v, p, mask)
        b, _, t, _ = out.shape
        return self.wo(out.transpose(1, 2).reshape(b, t, -1))


class FeedForward(nn.Module):
    def __init__(self, d_model: int):
        super().__init__()
        self.up = nn.Linear(d_model, 4 * d_model)
        self.down = nn.Linear(4 * d_model, d_model)

    def forward(self, x: Tensor) -> Tensor:
        return self.down(torch.relu(self.up(x)))


class EncoderBlock(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.max_rel_distance)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model)

    def forward(self, x: Tensor, mask: Tensor | None) -> Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h, h, mask)
        return self.ln2(x + self.ffn(x))


class DecoderBlock(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.self_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.max_rel_distance)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.cross_attn = MultiHeadAttention(cfg.d_model, cfg.n_heads, cfg.max_rel_distance)
        self.ln3 = nn.LayerNorm(cfg.d_model)
        self.ffn = FeedForward(cfg.d_model)

    def forward(self, y: Tensor, memory: Tensor, self_mask: Tensor | None, cross_mask: Tensor | None) -> Tensor:
        h = self.ln1(y)
        y = y + self.self_attn(h, h, h, self_mask)
        h = self.ln2(y)
        y = y + self.cross_attn(h, memory, memory, cross_mask)
        return self.ln3(y + self.ffn(y))


@dataclass
class TaskBatch:
    """One task's teacher-forcing batch: encoder ids + padding mask, decoder
    input (begins with bos) and labels (ends with eos), both padded."""

    task: TaskId
    src_ids: Tensor  # (B, S) long
    src_mask: Tensor  # (B, S) bool, True where real tokens
    tgt_in: Tensor  # (B, T) long
    labels: Tensor  # (B, T) long
    tgt_mask: Tensor  # (B, T) bool, True where labels count

    def __post_init__(self):
        self.task = TaskId(self.task)
        if self.src_ids.shape[0] == 0:
            raise ValueError("empty batch")


class MultiTaskSeq2Seq(nn.Module):
    """Shared-trunk encoder-decoder with task-specific output heads."""

    def __init__(self, cfg: ModelConfig, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.cfg = cfg
        self.embed = nn.Embedding(cfg.vocab_size, cfg.d_model)
        nn.init.normal_(self.embed.weight, std=0.02)
        if cfg.n_soft > 0:
            self.soft_prompt = nn.Parameter(torch.empty(cfg.n_soft, cfg.d_model))
            nn.init.normal_(self.soft_prompt, std=0.02)
        else:
            self.soft_prompt = None
        self.encoder = nn.ModuleList(EncoderBlock(cfg) for _ in range(cfg.n_layers))
        self.decoder = nn.ModuleList(DecoderBlock(cfg) for _ in range(cfg.n_layers))
        self.aux_head = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.pri_head = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.to(dtype)

    # --- forward pieces ---------------------------------------------------

    def _check_ids(self, ids: Tensor, limit: int, what: str) -> None:
        if ids.shape[-1] > limit:
            raise SequenceLengthError(f"{what} length {ids.shape[-1]} exceeds limit {limit}")
        if ids.numel() and int(ids.max()) >= self.cfg.vocab_size:
            raise ValueError(f"{what} contains id >= vocab_size")

    def encode(self, src_ids: Tensor, src_mask: Tensor | None = None) -> tuple[Tensor, Tensor]:
        """Returns (memory, memory_mask); memory has n_soft extra leading
        positions when soft prompting is enabled."""
        self._check_ids(src_ids, self.cfg.max_input_len, "encoder input")
        if src_mask is None:
            src_mask = torch.ones_like(src_ids, dtype=torch.bool)
        x = self.embed(src_ids)
        mask = src_mask
        if self.soft_prompt is not None:
            b = x.shape[0]
            prefix = self.soft_prompt.unsqueeze(0).expand(b, -1, -1)
            x = torch.cat([prefix.to(x.dtype), x], dim=1)
            mask = torch.cat([torch.ones(b, self.cfg.n_soft, dtype=torch.bool, device=x.device), mask], dim=1)
        attn_mask = _key_mask(mask).to(x.dtype)
        for block in self.encoder:
            x = block(x, attn_mask)
        return x, mask

    def decode_hidden(
        self,
        memory: Tensor,
        memory_mask: Tensor,
        tgt_in: Tensor,
        tgt_mask: Tensor | None = None,
    ) -> Tensor:
        self._check_ids(tgt_in, self.cfg.max_output_len, "decoder input")
        if tgt_mask is None:
            tgt_mask = torch.ones_like(tgt_in, dtype=torch.bool)
        y = self.embed(tgt_in)
        t = tgt_in.shape[1]
        causal = torch.triu(torch.full((t, t), NEG_INF, dtype=y.dtype, device=y.device), diagonal=1)
        self_mask = causal[None, None, :, :] + _key_mask(tgt_mask).to(y.dtype)
        cross_mask = _key_mask(memory_mask).to(y.dtype)
        for block in self.decoder:
            y = block(y, memory, self_mask, cross_mask)
        return y

    def head_logits(self, y_hidden: Tensor, task: TaskId | str) -> Tensor:
        """Auxiliary task: plain affine map.  Primary task: affine map gated
        elementwise by the sigmoid of the auxiliary projection."""
        task = TaskId(task)
        aux = self.aux_head(y_hidden)
        if task is TaskId.SYNTAX:
            return aux
        return self.pri_head(y_hidden) * torch.sigmoid(aux)

    def gate_values(self, y_hidden: Tensor) -> Tensor:
        """Sigmoid gate activations, strictly inside (0, 1)."""
        return torch.sigmoid(self.aux_head(y_hidden))

    # --- losses -------------------------------------------------------

    def task_loss(self, batch: TaskBatch) -> Tensor:
        memory, memory_mask = self.encode(batch.src_ids, batch.src_mask)
        y_hidden = self.decode_hidden(memory, memory_mask, batch.tgt_in, batch.tgt_mask)
        logits = self.head_logits(y_hidden, batch.task)
        return sequence_cross_entropy(logits, batch.labels, batch.tgt_mask)

    def joint_loss(self, primary: TaskBatch, auxiliary: TaskBatch) -> tuple[Tensor, Tensor, Tensor]:
        """(total, primary CE, auxiliary CE); the total is exactly their sum."""
        if TaskId(primary.task) is not TaskId.ORIGIN or TaskId(auxiliary.task) is not TaskId.SYNTAX:
            raise ValueError("expected (origin, syntax) batches")
        ce_pri = self.task_loss(primary)
        ce_aux = self.task_loss(auxiliary)
        return ce_pri + ce_aux, ce_pri, ce_aux

    # --- stepwise decoding -------------------------------------------

    @torch.no_grad()
    def decode_step(self, memory: Tensor, memory_mask: Tensor, decoder_prefix: Sequence[int], task) -> Tensor:
        """Logits over the vocabulary for the next position after
        ``decoder_prefix`` (which must already include bos)."""
        if len(decoder_prefix) >= self.cfg.max_output_len:
            raise SequenceLengthError("decoder prefix reached max_output_len")
        device = memory.device
        tgt = torch.tensor([list(decoder_prefix)], dtype=torch.long, device=device)
        y = self.decode_hidden(memory, memory_mask, tgt)
        return self.head_logits(y, task)[0, -1]


def _key_mask(mask: Tensor) -> Tensor:
    """(B, S) bool -> (B, 1, 1, S) additive mask blocking padded keys."""
    return torch.where(mask[:, None, None, :], 0.0, NEG_INF)


def sequence_cross_entropy(logits: Tensor, labels: Tensor, mask: Tensor) -> Tensor:
    """Token-mean cross-entropy over unmasked positions."""
    if not bool(mask.any()):
        raise ValueError("batch has no unmasked target tokens")
    logp = torch.log_softmax(logits, dim=-1)
    picked = logp.gather(-1, labels.unsqueeze(-1)).squeeze(-1)
    picked = picked * mask.to(picked.dtype)
    return -(picked.sum() / mask.sum())


def build_model(cfg: ModelConfig, seed: int = 1234, dtype: torch.dtype = torch.float32) -> MultiTaskSeq2Seq:
    """Deterministic construction: the same (config, seed) always yields
    bitwise-identical initial parameters."""
    torch.manual_seed(seed)
    return MultiTaskSeq2Seq(cfg, dtype=dtype)


def zero_model(cfg: ModelConfig, dtype: torch.dtype = torch.float64) -> MultiTaskSeq2Seq:
    """All learned parameters zero except layer-norm scales (kept at 1).  In
    this state both heads emit uniform distributions and the joint loss is
    exactly 2 ln(vocab_size)."""
    model = MultiTaskSeq2Seq(cfg, dtype=dtype)
    with torch.no_grad():
        for param in model.parameters():
            param.zero_()
        for module in model.modules():
            if isinstance(module, nn.LayerNorm):
                module.weight.fill_(1.0)
    return model


class ToyScorer:
    """Adapt a trained model plus one encoded source to the scorer contract
    used by the decoding strategies.

    Safe for sequential reuse; concurrent calls on one instance are not
    supported (share the model and build one scorer per thread instead).
    """

    def __init__(self, model: MultiTaskSeq2Seq, vocab, source_text: str):
        self.model = model
        self.vocab = vocab
        self.vocab_size = len(vocab)
        self.bos_id = vocab.bos_id
        self.eos_id = vocab.eos_id
        self.pad_id = vocab.pad_id
        model.eval()
        src = torch.tensor([vocab.encode(source_text)], dtype=torch.long)
        with torch.no_grad():
            self.memory, self.memory_mask = model.encode(src)

    def next_distribution(self, prefix_ids: Sequence[int], task) -> np.ndarray:
        logits = self.model.decode_step(
            self.memory, self.memory_mask, [self.bos_id, *prefix_ids], task
        )
        logp = torch.log_softmax(logits.to(torch.float64), dim=-1)
        return logp.numpy()

    def detokenize(self, ids: Sequence[int]) -> str:
        return self.vocab.decode(ids)
