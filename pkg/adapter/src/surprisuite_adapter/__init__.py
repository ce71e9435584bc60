"""surprisuite-adapter: causal-LM scoring server for the wire protocol."""

__version__ = "0.1.0"

from .scorer import AdapterConfig, CausalScorer, ScoredToken, SentenceScoringError
from .server import handle_message, serve_stdio, serve_tcp

__all__ = ["AdapterConfig", "CausalScorer", "ScoredToken",
           "SentenceScoringError", "handle_message", "serve_stdio",
           "serve_tcp", "__version__"]
