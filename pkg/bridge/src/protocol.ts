// Wire protocol types: newline-delimited JSON, UTF-8, one object per line.
// Every request carries a client-chosen `id`; the response echoes it.
// Responses to the same connection never reorder relative to requests.

export const PROTOCOL_VERSION = 1;

export interface HelloRequest {
  id: number;
  op: "hello";
}

export interface NextTokensRequest {
  id: number;
  op: "next_tokens";
  prefix_ids: number[];
  task: string;
  k: number;
}

export interface DetokenizeRequest {
  id: number;
  op: "detokenize";
  ids: number[];
}

export interface ByeRequest {
  id: number;
  op: "bye";
}

export type Request = HelloRequest | NextTokensRequest | DetokenizeRequest | ByeRequest;

export interface Handshake {
  id: number;
  protocol_version: number;
  vocab_size: number;
  bos_id: number | null;
  eos_id: number;
  pad_id: number | null;
  model_name: string;
}

export interface ScoredToken {
  token_id: number;
  logprob: number;
}

export interface NextTokensResponse {
  id: number;
  tokens: ScoredToken[];
}

export interface DetokenizeResponse {
  id: number;
  text: string;
}

export interface ByeResponse {
  id: number;
  ok: true;
}

export interface ErrorResponse {
  id: number | null;
  error: string;
}

export type Response =
  | Handshake
  | NextTokensResponse
  | DetokenizeResponse
  | ByeResponse
  | ErrorResponse;
