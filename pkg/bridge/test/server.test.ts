import assert from "node:assert/strict";
import * as net from "node:net";
import { test } from "node:test";
import { Handshake, NextTokensResponse } from "../src/protocol.js";
import { handleLine, serveTcp } from "../src/server.js";
import { TableModel } from "../src/stubModel.js";

function demoModel(): TableModel {
  return new TableModel({
    model_name: "demo",
    vocab: ["a", "b", "c", "</s>"],
    bos_id: null,
    eos_id: 3,
    pad_id: null,
    rows: {
      "": [0.4, 0.3, 0.2, 0.1],
      "0": [0.1, 0.1, 0.1, 0.7],
      "0,1": [0.25, 0.25, 0.25, 0.25],
    },
    default: [1, 1, 1, 1],
  });
}

function call(model: TableModel, request: unknown) {
  return handleLine(model, JSON.stringify(request));
}

test("hello echoes the request id and declares the model", () => {
  const { response, close } = call(demoModel(), { id: 7, op: "hello" });
  const handshake = response as Handshake;
  assert.equal(handshake.id, 7);
  assert.equal(handshake.protocol_version, 1);
  assert.equal(handshake.vocab_size, 4);
  assert.equal(handshake.eos_id, 3);
  assert.equal(handshake.bos_id, null);
  assert.equal(handshake.model_name, "demo");
  assert.equal(close, false);
});

test("full-distribution log-probabilities normalize", () => {
  const model = demoModel();
  for (const prefix of [[], [0], [0, 1], [2, 2]]) {
    const { response } = call(model, {
      id: 1,
      op: "next_tokens",
      prefix_ids: prefix,
      task: "origin",
      k: 4,
    });
    const tokens = (response as NextTokensResponse).tokens;
    assert.equal(tokens.length, 4);
    const logsumexp = Math.log(
      tokens.reduce((acc, t) => acc + Math.exp(t.logprob), 0),
    );
    assert.ok(Math.abs(logsumexp) < 1e-3, `logsumexp ${logsumexp}`);
  }
});

test("top-k is sorted by logprob then token id", () => {
  const { response } = call(demoModel(), {
    id: 2,
    op: "next_tokens",
    prefix_ids: [0, 1],
    task: "origin",
    k: 3,
  });
  const tokens = (response as NextTokensResponse).tokens;
  assert.deepEqual(
    tokens.map((t) => t.token_id),
    [0, 1, 2],
  );
  assert.ok(tokens[0].logprob >= tokens[1].logprob);
});

test("detokenize skips special ids", () => {
  const { response } = call(demoModel(), { id: 3, op: "detokenize", ids: [0, 1, 3] });
  assert.deepEqual(response, { id: 3, text: "a b" });
});

test("unknown op answers an error and keeps the connection", () => {
  const { response, close } = call(demoModel(), { id: 4, op: "frobnicate" });
  assert.equal((response as { id: number }).id, 4);
  assert.match((response as { error: string }).error, /unknown op/);
  assert.equal(close, false);
});

test("model failure answers an error and keeps the connection", () => {
  const { response, close } = call(demoModel(), {
    id: 5,
    op: "next_tokens",
    prefix_ids: [99],
    task: "origin",
    k: 4,
  });
  assert.match((response as { error: string }).error, /out of range/);
  assert.equal(close, false);
});

test("invalid JSON answers an error", () => {
  const { response } = handleLine(demoModel(), "{nope");
  assert.match((response as { error: string }).error, /invalid JSON/);
});

test("bye acknowledges and closes", () => {
  const { response, close } = call(demoModel(), { id: 6, op: "bye" });
  assert.deepEqual(response, { id: 6, ok: true });
  assert.equal(close, true);
});

test("tcp connection is lockstep: response ids follow request order", async () => {
  const server = serveTcp(demoModel(), "127.0.0.1", 0);
  await new Promise<void>((resolve) => server.once("listening", resolve));
  const address = server.address() as net.AddressInfo;

  const socket = net.createConnection(address.port, "127.0.0.1");
  socket.setEncoding("utf-8");
  const received: number[] = [];
  let buffered = "";
  const done = new Promise<void>((resolve) => {
    socket.on("data", (chunk: string) => {
      buffered += chunk;
      const lines = buffered.split("\n");
      buffered = lines.pop() ?? "";
      for (const line of lines) {
        if (line.trim()) {
          received.push(JSON.parse(line).id as number);
        }
      }
      if (received.length >= 21) {
        resolve();
      }
    });
  });

  socket.write('{"id": 0, "op": "hello"}\n');
  for (let i = 1; i <= 20; i++) {
    socket.write(
      JSON.stringify({ id: i, op: "next_tokens", prefix_ids: [], task: "origin", k: 4 }) + "\n",
    );
  }
  await done;
  assert.deepEqual(
    received,
    Array.from({ length: 21 }, (_, i) => i),
  );
  socket.end();
  server.close();
});
