"""EDFA gain-spectrum models with a C++ core.

Quick start::

    import edfa_ssnn as ed
    m = ed.Manifest.profile("smoke")
    ed.generate(m, "runs/smoke")
    ed.train(m, "runs/smoke", devices=["B01"])
"""

from ._core import (
    N_CHANNELS,
    ConfigError,
    Dataset,
    GainModel,
    Manifest,
    ParseError,
    TrainingError,
    generate,
    load_split,
    matrix,
    report,
    selu,
    simulate,
    summarize,
    train,
    train_direct,
    transfer,
    transfer_model,
)

__all__ = [
    "N_CHANNELS",
    "ConfigError",
    "Dataset",
    "GainModel",
    "Manifest",
    "ParseError",
    "TrainingError",
    "generate",
    "load_split",
    "matrix",
    "report",
    "selu",
    "simulate",
    "summarize",
    "train",
    "train_direct",
    "transfer",
    "transfer_model",
]
