"""Neural procedure-code predictor: embeddings, dense stack, manual gradients."""

from .adam import AdamState, ShapeMismatchError, adam_step
from .io import (
    BadMagicError,
    ChecksumMismatchError,
    ModelIOError,
    VersionMismatchError,
    load_model,
    save_model,
)
from .kernels import BACKEND
from .net import (
    ClaimFeatures,
    FeatureBatch,
    LengthMismatchError,
    VocabMismatchError,
    backward,
    featurize_claim,
    featurize_claims,
    forward,
    forward_batch,
    loss,
    predict_topk,
    targets_dense,
)
from .params import BadDimsError, Dims, ModelParams, init_model
from .train import EpochStats, TrainHyper, train

__all__ = [
    "AdamState",
    "BACKEND",
    "BadDimsError",
    "BadMagicError",
    "ChecksumMismatchError",
    "ClaimFeatures",
    "Dims",
    "EpochStats",
    "FeatureBatch",
    "LengthMismatchError",
    "ModelIOError",
    "ModelParams",
    "ShapeMismatchError",
    "TrainHyper",
    "VersionMismatchError",
    "VocabMismatchError",
    "adam_step",
    "backward",
    "featurize_claim",
    "featurize_claims",
    "forward",
    "forward_batch",
    "init_model",
    "load_model",
    "loss",
    "predict_topk",
    "save_model",
    "targets_dense",
    "train",
]
