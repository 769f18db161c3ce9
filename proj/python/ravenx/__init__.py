"""Vector-symbolic abductive rule learning on Raven's progressive matrices."""

from ._core import (
    Codebook,
    Puzzle,
    Reasoner,
    bind,
    generate,
    llm,
    load_dataset,
    similarity,
    train,
    unbind,
)

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "Puzzle",
    "Reasoner",
    "bind",
    "generate",
    "llm",
    "load_dataset",
    "similarity",
    "train",
    "unbind",
]
