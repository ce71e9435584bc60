"""Newline-delimited JSON wire protocol between harness and scoring backends.

Messages (UTF-8, one JSON object per line):

    -> {"type": "handshake"}
    <- {"type": "info", "name": ..., "kind": "ngram|neural|mock",
        "context_window": int|null, "version": ..., "protocol": 1}

    -> {"type": "score", "id": N, "sentences": ["...", ...]}
    <- {"type": "scores", "id": N, "results": [
           {"tokens": [{"text": ..., "surprisal_bits": ...,
                        "start": ..., "end": ...}, ...]}, ...]}

    <- {"type": "error", "id": N?, "message": "..."}

All offsets are character indices into the exact request string.  The
harness may pipeline several score requests; replies are matched by id and
may arrive out of order.  The same messages run over standard streams
(``exec:`` backends) or a TCP socket (``tcp:`` backends).
"""
from __future__ import annotations

import json
import shlex
import socket
import socketserver
import subprocess
import sys
from typing import Sequence

from .errors import ProtocolViolation, TransportError
from .scoring import Backend, BackendInfo, SentenceScore, TokenScore

PROTOCOL_VERSION = 1


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def encode_score(result: SentenceScore) -> dict:
    return {"tokens": [{"text": t.text, "surprisal_bits": t.surprisal_bits,
                        "start": t.start, "end": t.end} for t in result.tokens]}


def decode_score(sentence: str, payload: dict) -> SentenceScore:
    try:
        tokens = tuple(TokenScore(t["text"], float(t["surprisal_bits"]),
                                  int(t["start"]), int(t["end"]))
                       for t in payload["tokens"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolViolation(f"malformed token payload: {e}") from None
    total = sum(t.surprisal_bits for t in tokens)
    return SentenceScore(sentence, tokens, total)


# ---------------------------------------------------------------------------
# Server side

def handle_message(backend: Backend, msg: dict) -> dict:
    mtype = msg.get("type")
    if mtype == "handshake":
        info = backend.info()
        return {"type": "info", "name": info.name, "kind": info.kind,
                "context_window": info.context_window, "version": info.version,
                "protocol": PROTOCOL_VERSION}
    if mtype == "score":
        req_id = msg.get("id")
        sentences = msg.get("sentences")
        if not isinstance(sentences, list) or not all(isinstance(s, str) for s in sentences):
            return {"type": "error", "id": req_id,
                    "message": "score request needs a list of sentences"}
        if any(not s.strip() for s in sentences):
            return {"type": "error", "id": req_id, "message": "empty sentence"}
        try:
            results = backend.score_sentences(sentences)
        except Exception as e:  # surface scoring failures as protocol errors
            return {"type": "error", "id": req_id, "message": str(e)}
        return {"type": "scores", "id": req_id,
                "results": [encode_score(r) for r in results]}
    return {"type": "error", "message": f"unknown message type {mtype!r}"}


def serve_stream(backend: Backend, rfile, wfile) -> None:
    """Answer requests from a line stream until EOF."""
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply = {"type": "error", "message": "malformed JSON request"}
        else:
            reply = handle_message(backend, msg)
        wfile.write(_dump(reply) + "\n")
        wfile.flush()


def serve_stdio(backend: Backend) -> None:
    serve_stream(backend, sys.stdin, sys.stdout)


def serve_tcp(backend: Backend, host: str, port: int, ready_file=None) -> None:
    """Serve connections sequentially; blocks forever."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            rfile = self.rfile
            wfile = self.wfile

            class W:
                @staticmethod
                def write(s: str):
                    wfile.write(s.encode("utf-8"))

                @staticmethod
                def flush():
                    wfile.flush()

            serve_stream(backend, (line.decode("utf-8") for line in rfile), W)

    with socketserver.TCPServer((host, port), Handler) as srv:
        if ready_file is not None:
            ready_file.write(f"listening {srv.server_address[0]}:{srv.server_address[1]}\n")
            ready_file.flush()
        srv.serve_forever()


# ---------------------------------------------------------------------------
# Client side

class WireBackend(Backend):
    """Client for a backend reachable over the line protocol.

    Subclasses provide ``_readline``/``_writeline``.  Replies are matched by
    request id, so pipelined requests may be answered out of order.
    """

    def __init__(self):
        self._next_id = 0
        self._pending: dict[int, dict] = {}
        self._info: BackendInfo | None = None

    # transport primitives -------------------------------------------------
    def _writeline(self, line: str) -> None:
        raise NotImplementedError

    def _readline(self) -> str:
        raise NotImplementedError

    def _describe(self) -> str:
        return "wire backend"

    # protocol -------------------------------------------------------------
    def _send(self, msg: dict) -> None:
        try:
            self._writeline(_dump(msg) + "\n")
        except (BrokenPipeError, OSError) as e:
            raise TransportError(f"{self._describe()}: send failed: {e}") from None

    def _recv(self) -> dict:
        try:
            line = self._readline()
        except OSError as e:
            raise TransportError(f"{self._describe()}: receive failed: {e}") from None
        if not line:
            raise TransportError(f"{self._describe()}: connection closed")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolViolation(
                f"{self._describe()}: malformed reply {line!r}") from None
        if not isinstance(msg, dict):
            raise ProtocolViolation(f"{self._describe()}: malformed reply {line!r}")
        return msg

    def _wait_for(self, req_id: int) -> dict:
        while True:
            if req_id in self._pending:
                return self._pending.pop(req_id)
            msg = self._recv()
            mtype = msg.get("type")
            if mtype == "error":
                err_id = msg.get("id")
                text = msg.get("message", "unspecified backend error")
                if err_id is None or err_id == req_id:
                    raise TransportError(f"{self._describe()}: backend error: {text}")
                self._pending[err_id] = msg
            elif mtype == "scores":
                self._pending[msg.get("id")] = msg
            else:
                raise ProtocolViolation(
                    f"{self._describe()}: unexpected reply type {mtype!r}")

    def info(self) -> BackendInfo:
        if self._info is None:
            self._send({"type": "handshake"})
            msg = self._recv()
            if msg.get("type") == "error":
                raise TransportError(
                    f"{self._describe()}: handshake failed: {msg.get('message')}")
            if msg.get("type") != "info":
                raise ProtocolViolation(
                    f"{self._describe()}: handshake returned {msg.get('type')!r}")
            proto = msg.get("protocol")
            if proto != PROTOCOL_VERSION:
                raise TransportError(
                    f"{self._describe()}: protocol version mismatch: "
                    f"backend speaks {proto!r}, harness speaks {PROTOCOL_VERSION}")
            cw = msg.get("context_window")
            self._info = BackendInfo(
                name=str(msg.get("name", "")), kind=str(msg.get("kind", "")),
                version=str(msg.get("version", "")),
                context_window=int(cw) if cw is not None else None)
        return self._info

    def submit(self, sentences: Sequence[str]) -> int:
        """Send one score request; returns its id for :meth:`collect`."""
        self.info()  # handshake before first request
        req_id = self._next_id
        self._next_id += 1
        self._send({"type": "score", "id": req_id, "sentences": list(sentences)})
        return req_id

    def collect(self, req_id: int, sentences: Sequence[str]) -> list[SentenceScore]:
        msg = self._wait_for(req_id)
        if msg.get("type") == "error":
            raise TransportError(
                f"{self._describe()}: backend error: {msg.get('message')}")
        results = msg.get("results")
        if not isinstance(results, list) or len(results) != len(sentences):
            raise ProtocolViolation(
                f"{self._describe()}: reply has {len(results) if isinstance(results, list) else 'no'} "
                f"results for {len(sentences)} sentences")
        return [decode_score(s, payload) for s, payload in zip(sentences, results)]

    def score_sentences(self, sentences: Sequence[str]) -> list[SentenceScore]:
        req_id = self.submit(sentences)
        return self.collect(req_id, sentences)


class ExecBackend(WireBackend):
    """Backend spawned as a subprocess, speaking the protocol on stdio."""

    def __init__(self, command: str):
        super().__init__()
        self.command = command
        try:
            self._proc = subprocess.Popen(
                shlex.split(command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, text=True, encoding="utf-8", bufsize=1)
        except OSError as e:
            raise TransportError(f"cannot spawn backend {command!r}: {e}") from None

    def _describe(self) -> str:
        return f"exec:{self.command}"

    def _writeline(self, line: str) -> None:
        assert self._proc.stdin is not None
        self._proc.stdin.write(line)
        self._proc.stdin.flush()

    def _readline(self) -> str:
        assert self._proc.stdout is not None
        return self._proc.stdout.readline()

    def close(self) -> None:
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()


class TcpBackend(WireBackend):
    """Backend reachable over a TCP socket."""

    def __init__(self, host: str, port: int):
        super().__init__()
        self._addr = f"{host}:{port}"
        try:
            self._sock = socket.create_connection((host, port), timeout=30)
        except OSError as e:
            raise TransportError(f"cannot connect to {self._addr}: {e}") from None
        self._rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._wfile = self._sock.makefile("w", encoding="utf-8", newline="\n")

    def _describe(self) -> str:
        return f"tcp:{self._addr}"

    def _writeline(self, line: str) -> None:
        self._wfile.write(line)
        self._wfile.flush()

    def _readline(self) -> str:
        return self._rfile.readline()

    def close(self) -> None:
        for f in (self._rfile, self._wfile):
            try:
                f.close()
            except OSError:
                pass
        try:
            self._sock.close()
        except OSError:
            pass
