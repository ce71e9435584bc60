"""Line-protocol endpoint wrapping :class:`CausalScorer`.

One JSON object per line, UTF-8:

    -> {"type": "handshake"}
    <- {"type": "info", "name", "kind": "neural", "context_window": null,
        "version", "protocol": 1}
    -> {"type": "score", "id", "sentences": [...]}
    <- {"type": "scores", "id", "results": [{"tokens": [...]}]}
    <- {"type": "error", "id"?, "message"}

Offsets are character indices into the exact request string.  A sentence
whose offsets cannot be reconstructed fails the request with an error
naming that sentence; other requests are unaffected.
"""
from __future__ import annotations

import json
import socketserver
import sys

from .scorer import CausalScorer, ScoredToken, SentenceScoringError

PROTOCOL_VERSION = 1


def info_payload(scorer: CausalScorer) -> dict:
    return {
        "type": "info",
        "name": scorer.config.model,
        "kind": "neural",
        "context_window": None,
        "version": scorer.version(),
        "protocol": PROTOCOL_VERSION,
    }


def _encode_tokens(tokens: list[ScoredToken]) -> dict:
    return {"tokens": [{"text": t.text, "surprisal_bits": t.surprisal_bits,
                        "start": t.start, "end": t.end} for t in tokens]}


def handle_message(scorer: CausalScorer, msg: dict) -> dict:
    mtype = msg.get("type")
    if mtype == "handshake":
        return info_payload(scorer)
    if mtype == "score":
        req_id = msg.get("id")
        sentences = msg.get("sentences")
        if (not isinstance(sentences, list)
                or not all(isinstance(s, str) for s in sentences)):
            return {"type": "error", "id": req_id,
                    "message": "score request needs a list of sentences"}
        if any(not s.strip() for s in sentences):
            return {"type": "error", "id": req_id, "message": "empty sentence"}
        try:
            results = scorer.score_sentences(sentences)
        except SentenceScoringError as e:
            return {"type": "error", "id": req_id, "message": str(e)}
        return {"type": "scores", "id": req_id,
                "results": [_encode_tokens(r) for r in results]}
    return {"type": "error", "message": f"unknown message type {mtype!r}"}


def serve_lines(scorer: CausalScorer, rfile, wfile) -> None:
    for line in rfile:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            reply = {"type": "error", "message": "malformed JSON request"}
        else:
            reply = handle_message(scorer, msg)
        wfile.write(json.dumps(reply, ensure_ascii=False) + "\n")
        wfile.flush()


def serve_stdio(scorer: CausalScorer) -> None:
    serve_lines(scorer, sys.stdin, sys.stdout)


def serve_tcp(scorer: CausalScorer, host: str, port: int) -> None:
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            wfile = self.wfile

            class W:
                @staticmethod
                def write(s):
                    wfile.write(s.encode("utf-8"))

                @staticmethod
                def flush():
                    wfile.flush()

            serve_lines(scorer,
                        (line.decode("utf-8") for line in self.rfile), W)

    with socketserver.TCPServer((host, port), Handler) as srv:
        sys.stderr.write(f"listening {srv.server_address[0]}:"
                         f"{srv.server_address[1]}\n")
        sys.stderr.flush()
        srv.serve_forever()
