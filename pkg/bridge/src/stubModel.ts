// Scripted stub model backed by a probability table (the same JSON schema
// the core toolkit's table scorer reads, so both sides of an equivalence
// test can load one file).
//
//   {"model_name": str, "vocab": [token, ...],
//    "bos_id": int|null, "eos_id": int, "pad_id": int|null,
//    "rows": {"": [...], "0": [...], "0,1": [...]},   // prefix -> probs
//    "default": [...]}

import { readFileSync } from "node:fs";

export interface ModelInfo {
  modelName: string;
  vocabSize: number;
  bosId: number | null;
  eosId: number;
  padId: number | null;
}

export interface ScoredToken {
  token_id: number;
  logprob: number;
}

export interface Model {
  info(): ModelInfo;
  /** Top-k next-token log-probabilities, sorted by logprob descending then
   *  token id; the full distribution (k = vocab size) is normalized. */
  nextTokens(prefixIds: number[], task: string, k: number): ScoredToken[];
  detokenize(ids: number[]): string;
}

interface TableFile {
  model_name?: string;
  vocab: string[];
  bos_id: number | null;
  eos_id: number;
  pad_id: number | null;
  rows: Record<string, number[]>;
  default: number[];
}

function normalizedLog(probs: number[], vocabSize: number): number[] {
  if (probs.length !== vocabSize) {
    throw new Error(`row length ${probs.length} != vocab size ${vocabSize}`);
  }
  let sum = 0;
  for (const p of probs) {
    if (!(p >= 0)) {
      throw new Error("probabilities must be non-negative");
    }
    sum += p;
  }
  if (sum <= 0) {
    throw new Error("probabilities must have positive sum");
  }
  return probs.map((p) => Math.log(p / sum));
}

export class TableModel implements Model {
  private readonly vocab: string[];
  private readonly rows: Map<string, number[]>;
  private readonly fallback: number[];
  private readonly meta: ModelInfo;

  constructor(doc: TableFile) {
    this.vocab = doc.vocab;
    this.meta = {
      modelName: doc.model_name ?? "stub-table",
      vocabSize: doc.vocab.length,
      bosId: doc.bos_id ?? null,
      eosId: doc.eos_id,
      padId: doc.pad_id ?? null,
    };
    this.rows = new Map();
    for (const [key, probs] of Object.entries(doc.rows)) {
      this.rows.set(key, normalizedLog(probs, this.meta.vocabSize));
    }
    this.fallback = normalizedLog(doc.default, this.meta.vocabSize);
  }

  static load(path: string): TableModel {
    return new TableModel(JSON.parse(readFileSync(path, "utf-8")) as TableFile);
  }

  info(): ModelInfo {
    return this.meta;
  }

  nextTokens(prefixIds: number[], _task: string, k: number): ScoredToken[] {
    for (const id of prefixIds) {
      if (!Number.isInteger(id) || id < 0 || id >= this.meta.vocabSize) {
        throw new Error(`prefix id ${id} out of range`);
      }
    }
    const row = this.rows.get(prefixIds.join(",")) ?? this.fallback;
    const scored = row.map((logprob, token_id) => ({ token_id, logprob }));
    scored.sort((a, b) => b.logprob - a.logprob || a.token_id - b.token_id);
    return scored.slice(0, Math.max(1, Math.min(k, scored.length)));
  }

  detokenize(ids: number[]): string {
    const specials = new Set([this.meta.bosId, this.meta.eosId, this.meta.padId]);
    return ids
      .filter((id) => !specials.has(id))
      .map((id) => {
        const token = this.vocab[id];
        if (token === undefined) {
          throw new Error(`token id ${id} out of range`);
        }
        return token;
      })
      .join(" ");
  }
}
