"""Forward pass, multi-label loss, hand-derived gradients, and top-k prediction.

Architecture: each diagnosis code is embedded per character position and
the seven position vectors are concatenated; the per-diagnosis vectors are
summed over the claim (in canonical code order, so the result is invariant
to input permutation bit for bit), concatenated with the provider
embedding row, and pushed through four affine layers with ReLU after the
first three. The final layer emits one logit per procedure label; sigmoid
is applied only at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..codes import CHAR_VOCAB_SIZE, ICD_MAX_LEN, icd_indices
from ..dataset import Claim, Vocabularies
from . import kernels
from .params import ModelParams


class VocabMismatchError(ValueError):
    """Features or data were prepared against different vocabularies than the model."""


class LengthMismatchError(ValueError):
    pass


@dataclass
class ClaimFeatures:
    """Encoded inputs for one claim: character indices per ICD plus provider row."""

    icd_idx: np.ndarray  # (n_icds, 7) int32, rows in canonical (sorted-code) order
    provider_index: int
    fingerprint: str | None = None


@dataclass
class FeatureBatch:
    """Claims encoded as padded arrays; slots at or past icd_counts[i] are inert."""

    icd_idx: np.ndarray  # (N, S, 7) int32
    icd_counts: np.ndarray  # (N,) int32
    providers: np.ndarray  # (N,) int32
    label_rows: list[np.ndarray] | None = None  # per-claim label indices
    fingerprint: str | None = None

    def __len__(self) -> int:
        return self.icd_idx.shape[0]

    def take(self, indices) -> "FeatureBatch":
        return FeatureBatch(
            icd_idx=np.ascontiguousarray(self.icd_idx[indices]),
            icd_counts=np.ascontiguousarray(self.icd_counts[indices]),
            providers=np.ascontiguousarray(self.providers[indices]),
            label_rows=None if self.label_rows is None else [self.label_rows[i] for i in indices],
            fingerprint=self.fingerprint,
        )


def featurize_claim(claim: Claim, vocabs: Vocabularies) -> ClaimFeatures:
    idx = np.array([icd_indices(code) for code in claim.icds], dtype=np.int32)
    return ClaimFeatures(
        icd_idx=idx,
        provider_index=vocabs.provider_row(claim.provider_id),
        fingerprint=vocabs.fingerprint(),
    )


def featurize_claims(claims, vocabs: Vocabularies, with_labels: bool = False) -> FeatureBatch:
    claims = list(claims)
    n = len(claims)
    n_slots = max(len(c.icds) for c in claims)
    idx = np.zeros((n, n_slots, ICD_MAX_LEN), dtype=np.int32)
    counts = np.zeros(n, dtype=np.int32)
    providers = np.zeros(n, dtype=np.int32)
    label_rows: list[np.ndarray] | None = [] if with_labels else None
    for i, claim in enumerate(claims):
        counts[i] = len(claim.icds)
        for s, code in enumerate(claim.icds):
            idx[i, s] = icd_indices(code)
        providers[i] = vocabs.provider_row(claim.provider_id)
        if label_rows is not None:
            rows = [vocabs.label_index[c] for c in claim.cpts if c in vocabs.label_index]
            label_rows.append(np.array(sorted(rows), dtype=np.int64))
    return FeatureBatch(
        icd_idx=idx,
        icd_counts=counts,
        providers=providers,
        label_rows=label_rows,
        fingerprint=vocabs.fingerprint(),
    )


def targets_dense(label_rows, label_count: int, dtype=np.float32) -> np.ndarray:
    out = np.zeros((len(label_rows), label_count), dtype=dtype)
    for i, rows in enumerate(label_rows):
        out[i, rows] = 1.0
    return out


def _check_fingerprint(model: ModelParams, fingerprint: str | None) -> None:
    if fingerprint is not None and fingerprint != model.fingerprint:
        raise VocabMismatchError("features were built against different vocabularies")


def _forward_arrays(model: ModelParams, icd_idx, icd_counts, providers):
    pooled = kernels.pool_chars_forward(model.char_embed, icd_idx, icd_counts)
    pvec = model.provider_embed[providers]
    x = np.concatenate([pooled, pvec], axis=1)
    w1, w2, w3, w4 = model.weights
    b1, b2, b3, b4 = model.biases
    h1 = np.maximum(x @ w1 + b1, 0)
    h2 = np.maximum(h1 @ w2 + b2, 0)
    h3 = np.maximum(h2 @ w3 + b3, 0)
    logits = h3 @ w4 + b4
    return logits, (x, h1, h2, h3)


def forward(model: ModelParams, features: ClaimFeatures) -> np.ndarray:
    """Raw logits (one per label) for a single claim."""
    _check_fingerprint(model, features.fingerprint)
    icd_idx = np.ascontiguousarray(features.icd_idx[np.newaxis, :, :], dtype=np.int32)
    counts = np.array([features.icd_idx.shape[0]], dtype=np.int32)
    providers = np.array([features.provider_index], dtype=np.int32)
    logits, _ = _forward_arrays(model, icd_idx, counts, providers)
    return logits[0]


def forward_batch(model: ModelParams, batch: FeatureBatch) -> np.ndarray:
    _check_fingerprint(model, batch.fingerprint)
    logits, _ = _forward_arrays(model, batch.icd_idx, batch.icd_counts, batch.providers)
    return logits


def _sigmoid64(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss(logits, targets) -> float:
    """Mean per-claim sigmoid cross-entropy, accumulated in float64.

    Per element the numerically stable form max(z,0) - z*y + log1p(exp(-|z|))
    is used; per claim the elements are summed, and a batch averages claims.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise LengthMismatchError(f"logits {z.shape} vs targets {y.shape}")
    terms = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    per_claim = terms.sum(axis=-1)
    return float(per_claim.mean())


def backward(model: ModelParams, batch: FeatureBatch, targets) -> tuple[float, dict]:
    """Batch-mean loss and exact gradients for every parameter tensor.

    Embedding rows not touched by the batch get exactly zero gradient
    (scatter kernels only write touched rows).
    """
    _check_fingerprint(model, batch.fingerprint)
    logits, (x, h1, h2, h3) = _forward_arrays(
        model, batch.icd_idx, batch.icd_counts, batch.providers
    )
    loss_val = loss(logits, targets)
    dt = model.dtype
    n = logits.shape[0]

    dz = ((_sigmoid64(logits) - np.asarray(targets, dtype=np.float64)) / n).astype(dt)
    w1, w2, w3, w4 = model.weights
    grads: dict[str, np.ndarray] = {}

    grads["w4"] = h3.T @ dz
    grads["b4"] = dz.sum(axis=0, dtype=np.float64).astype(dt)
    da3 = (dz @ w4.T) * (h3 > 0)
    grads["w3"] = h2.T @ da3
    grads["b3"] = da3.sum(axis=0, dtype=np.float64).astype(dt)
    da2 = (da3 @ w3.T) * (h2 > 0)
    grads["w2"] = h1.T @ da2
    grads["b2"] = da2.sum(axis=0, dtype=np.float64).astype(dt)
    da1 = (da2 @ w2.T) * (h1 > 0)
    grads["w1"] = x.T @ da1
    grads["b1"] = da1.sum(axis=0, dtype=np.float64).astype(dt)

    dx = da1 @ w1.T
    n_pool = ICD_MAX_LEN * model.dims.d_c
    d_pooled = np.ascontiguousarray(dx[:, :n_pool])
    d_prov = np.ascontiguousarray(dx[:, n_pool:])
    grads["char_embed"] = kernels.pool_chars_backward(
        d_pooled, batch.icd_idx, batch.icd_counts, CHAR_VOCAB_SIZE
    )
    grads["provider_embed"] = kernels.scatter_rows(
        d_prov, batch.providers, model.provider_embed.shape[0]
    )
    return loss_val, grads


_PROB_EPS = 1e-12


def predict_topk(model: ModelParams, features: ClaimFeatures, k: int) -> list[tuple[str, float]]:
    """Top-k labels by sigmoid probability; ties broken by ascending label index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    logits = forward(model, features)
    probs = np.clip(_sigmoid64(logits), _PROB_EPS, 1.0 - _PROB_EPS)
    order = np.argsort(-probs, kind="stable")[:k]
    labels = model.vocabs.cpt_labels
    return [(labels[i], float(probs[i])) for i in order]
