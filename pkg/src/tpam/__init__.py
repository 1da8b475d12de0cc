"""Threshold phasor associative memories: recall dynamics, capacity
measurements, a spiking implementation, an image indexing pipeline and
sequence memories."""

from .core import (
    DimensionError,
    RecallTrace,
    SymmetryError,
    ThresholdPolicy,
    TransferKind,
    energy,
    learn_conjugate_outer,
    overlaps,
    recall,
    similarity,
    step,
    transfer,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "RecallTrace",
    "SymmetryError",
    "ThresholdPolicy",
    "TransferKind",
    "energy",
    "learn_conjugate_outer",
    "overlaps",
    "recall",
    "similarity",
    "step",
    "transfer",
]
