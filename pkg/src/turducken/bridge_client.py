"""Client for the scorer bridge wire protocol.

The bridge exposes a sequence-to-sequence model as a scorer over
newline-delimited JSON (UTF-8, one object per line), over either a spawned
child process's stdio or a TCP connection.  Requests carry a client-chosen
``id`` which the response echoes; one request is in flight at a time per
connection (lockstep).

Ops::

    -> {"id": n, "op": "hello"}
    <- {"id": n, "protocol_version": 1, "vocab_size": V, "bos_id": int|null,
        "eos_id": int, "pad_id": int|null, "model_name": str}
    -> {"id": n, "op": "next_tokens", "prefix_ids": [...], "task": str, "k": int}
    <- {"id": n, "tokens": [{"token_id": int, "logprob": float}, ...]}
    -> {"id": n, "op": "detokenize", "ids": [...]}
    <- {"id": n, "text": str}
    -> {"id": n, "op": "bye"}
    <- {"id": n, "ok": true}

Errors come back as ``{"id": n, "error": str}`` and raise
:class:`BridgeProtocolError`; the connection stays usable.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BridgeProtocolError

PROTOCOL_VERSION = 1


class _StdioTransport:
    def __init__(self, argv: list[str]):
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            encoding="utf-8",
        )

    def send_line(self, line: str) -> None:
        assert self.proc.stdin is not None
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def recv_line(self) -> str:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if not line:
            raise BridgeProtocolError("bridge process closed its stdout")
        return line

    def close(self) -> None:
        try:
            if self.proc.stdin:
                self.proc.stdin.close()
            self.proc.wait(timeout=5)
        except Exception:
            self.proc.kill()


class _TcpTransport:
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        self.writer.write(line + "\n")
        self.writer.flush()

    def recv_line(self) -> str:
        line = self.reader.readline()
        if not line:
            raise BridgeProtocolError("bridge closed the connection")
        return line

    def close(self) -> None:
        for closer in (self.reader.close, self.writer.close, self.sock.close):
            try:
                closer()
            except OSError:
                pass


@dataclass(frozen=True)
class BridgeHandshake:
    protocol_version: int
    vocab_size: int
    bos_id: int | None
    eos_id: int
    pad_id: int | None
    model_name: str

    def __post_init__(self):
        for label, value in (("bos_id", self.bos_id), ("eos_id", self.eos_id), ("pad_id", self.pad_id)):
            if value is not None and not (0 <= value < self.vocab_size):
                raise BridgeProtocolError(f"{label}={value} outside vocab of size {self.vocab_size}")


class BridgeScorer:
    """Scorer backed by a remote bridge; satisfies the decoding contract.

    Address forms: ``stdio:<command line>`` spawns a child process,
    ``tcp:<host>:<port>`` connects to a listening server.
    """

    def __init__(self, address: str):
        if address.startswith("stdio:"):
            self._transport = _StdioTransport(shlex.split(address[len("stdio:"):]))
        elif address.startswith("tcp:"):
            host, _, port = address[len("tcp:"):].rpartition(":")
            if not host or not port.isdigit():
                raise ValueError(f"bad tcp address {address!r}, expected tcp:host:port")
            self._transport = _TcpTransport(host, int(port))
        else:
            raise ValueError(f"bad bridge address {address!r}, expected stdio:... or tcp:host:port")
        self._next_id = 0
        self.handshake = self._hello()
        self.vocab_size = self.handshake.vocab_size
        self.bos_id = self.handshake.bos_id
        self.eos_id = self.handshake.eos_id
        self.pad_id = self.handshake.pad_id

    # --- protocol ---------------------------------------------------------

    def _call(self, op: str, **params) -> dict:
        self._next_id += 1
        request_id = self._next_id
        self._transport.send_line(json.dumps({"id": request_id, "op": op, **params}))
        raw = self._transport.recv_line()
        try:
            response = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"bridge sent invalid JSON: {raw!r}") from exc
        if response.get("id") != request_id:
            raise BridgeProtocolError(
                f"response id {response.get('id')!r} does not match request id {request_id}"
            )
        if "error" in response:
            raise BridgeProtocolError(f"bridge error for op {op!r}: {response['error']}")
        return response

    def _hello(self) -> BridgeHandshake:
        doc = self._call("hello")
        try:
            handshake = BridgeHandshake(
                protocol_version=doc["protocol_version"],
                vocab_size=doc["vocab_size"],
                bos_id=doc.get("bos_id"),
                eos_id=doc["eos_id"],
                pad_id=doc.get("pad_id"),
                model_name=doc.get("model_name", "?"),
            )
        except KeyError as exc:
            raise BridgeProtocolError(f"handshake missing field {exc}") from exc
        if handshake.protocol_version != PROTOCOL_VERSION:
            raise BridgeProtocolError(f"unsupported protocol version {handshake.protocol_version}")
        return handshake

    # --- scorer contract ----------------------------------------------------

    def next_distribution(self, prefix_ids: Sequence[int], task) -> np.ndarray:
        doc = self._call(
            "next_tokens",
            prefix_ids=[int(t) for t in prefix_ids],
            task=str(task),
            k=self.vocab_size,
        )
        logp = np.full(self.vocab_size, -np.inf, dtype=np.float64)
        for entry in doc.get("tokens", ()):
            tok = entry["token_id"]
            if not 0 <= tok < self.vocab_size:
                raise BridgeProtocolError(f"token_id {tok} out of range")
            logp[tok] = float(entry["logprob"])
        return logp

    def detokenize(self, ids: Sequence[int]) -> str:
        return self._call("detokenize", ids=[int(t) for t in ids])["text"]

    def close(self) -> None:
        try:
            self._call("bye")
        except BridgeProtocolError:
            pass
        finally:
            self._transport.close()

    def __enter__(self) -> "BridgeScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
