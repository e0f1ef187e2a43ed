"""Patent convergence analytics: graph-learned embeddings, depth and
breadth metrics, entropy-weighted composite scoring, and reporting."""

__version__ = "0.1.0"
