// Request dispatch and the two transports (stdio, TCP).
//
// Connections are lockstep: lines are handled strictly in arrival order and
// each produces exactly one response line, so responses can never reorder.
// A model failure yields an {id, error} response and keeps the connection
// open; only "bye" (or the peer closing) ends it.

import * as net from "node:net";
import { LineSplitter } from "./framing.js";
import { PROTOCOL_VERSION, Request, Response } from "./protocol.js";
import { Model } from "./stubModel.js";

export function handleLine(model: Model, line: string): { response: Response; close: boolean } {
  let request: Request;
  try {
    request = JSON.parse(line) as Request;
  } catch {
    return { response: { id: null, error: "invalid JSON" }, close: false };
  }
  const id = typeof request.id === "number" ? request.id : null;
  try {
    switch (request.op) {
      case "hello": {
        const info = model.info();
        return {
          response: {
            id: id as number,
            protocol_version: PROTOCOL_VERSION,
            vocab_size: info.vocabSize,
            bos_id: info.bosId,
            eos_id: info.eosId,
            pad_id: info.padId,
            model_name: info.modelName,
          },
          close: false,
        };
      }
      case "next_tokens": {
        const tokens = model.nextTokens(
          request.prefix_ids ?? [],
          request.task ?? "origin",
          request.k ?? model.info().vocabSize,
        );
        return { response: { id: id as number, tokens }, close: false };
      }
      case "detokenize":
        return {
          response: { id: id as number, text: model.detokenize(request.ids ?? []) },
          close: false,
        };
      case "bye":
        return { response: { id: id as number, ok: true }, close: true };
      default:
        return {
          response: { id, error: `unknown op ${JSON.stringify((request as { op?: string }).op)}` },
          close: false,
        };
    }
  } catch (err) {
    return { response: { id, error: err instanceof Error ? err.message : String(err) }, close: false };
  }
}

type Writer = (line: string) => void;

function attach(model: Model, write: Writer, onClose: () => void) {
  const splitter = new LineSplitter();
  return (chunk: string) => {
    let lines: string[];
    try {
      lines = splitter.push(chunk);
    } catch (err) {
      write(JSON.stringify({ id: null, error: err instanceof Error ? err.message : String(err) }));
      onClose();
      return;
    }
    for (const line of lines) {
      const { response, close } = handleLine(model, line);
      write(JSON.stringify(response));
      if (close) {
        onClose();
        return;
      }
    }
  };
}

export function serveStdio(model: Model): void {
  process.stdin.setEncoding("utf-8");
  const feed = attach(
    model,
    (line) => process.stdout.write(line + "\n"),
    () => process.exit(0),
  );
  process.stdin.on("data", feed);
  process.stdin.on("end", () => process.exit(0));
}

export function serveTcp(model: Model, host: string, port: number): net.Server {
  const server = net.createServer((socket) => {
    socket.setEncoding("utf-8");
    const feed = attach(
      model,
      (line) => socket.write(line + "\n"),
      () => socket.end(),
    );
    socket.on("data", feed);
    socket.on("error", () => socket.destroy());
  });
  server.listen(port, host);
  return server;
}
