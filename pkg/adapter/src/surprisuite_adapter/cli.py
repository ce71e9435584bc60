"""Command-line entry point: serve a causal LM on the scoring protocol."""
from __future__ import annotations

import argparse

from .scorer import AdapterConfig, CausalScorer
from .server import serve_stdio, serve_tcp


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="surprisuite-adapter",
        description="Serve per-token surprisals from a pretrained causal "
                    "language model over the line protocol.")
    parser.add_argument("--model", required=True,
                        help="model id or local checkpoint path")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--transport", choices=["stdio", "tcp"],
                        default="stdio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    args = parser.parse_args(argv)

    scorer = CausalScorer(AdapterConfig(model=args.model, device=args.device,
                                        batch_size=args.batch_size))
    if args.transport == "stdio":
        serve_stdio(scorer)
    else:
        serve_tcp(scorer, args.host, args.port)


if __name__ == "__main__":
    main()
