"""Pure-numpy fallback for the embedding pool/scatter kernels.

Accumulation order matches the compiled extension exactly: pooling adds
ICD slots in ascending slot order, and gradient scatter walks slots in the
outer loop with claims in batch order inside (np.add.at applies updates in
index order). That makes both backends bit-identical in float32.
"""

from __future__ import annotations

import numpy as np


def pool_chars_forward(char_embed, icd_idx, icd_counts):
    """Sum the concatenated per-position character embeddings over each claim's ICDs.

    char_embed: (P, V, d); icd_idx: (B, S, P) int32; icd_counts: (B,) int32.
    Returns (B, P*d) in char_embed's dtype.
    """
    n_batch, n_slots, n_pos = icd_idx.shape
    d = char_embed.shape[2]
    out = np.zeros((n_batch, n_pos * d), dtype=char_embed.dtype)
    for s in range(n_slots):
        active = np.flatnonzero(icd_counts > s)
        if active.size == 0:
            break
        for p in range(n_pos):
            out[active, p * d : (p + 1) * d] += char_embed[p, icd_idx[active, s, p], :]
    return out


def pool_chars_backward(d_pooled, icd_idx, icd_counts, vocab_size):
    """Scatter pooled-vector gradients back onto the character embedding rows."""
    n_batch, n_slots, n_pos = icd_idx.shape
    d = d_pooled.shape[1] // n_pos
    grad = np.zeros((n_pos, vocab_size, d), dtype=d_pooled.dtype)
    for s in range(n_slots):
        active = np.flatnonzero(icd_counts > s)
        if active.size == 0:
            break
        for p in range(n_pos):
            np.add.at(grad[p], icd_idx[active, s, p], d_pooled[active, p * d : (p + 1) * d])
    return grad


def scatter_rows(d_rows, indices, n_rows):
    """Accumulate per-claim row gradients into an (n_rows, d) table."""
    out = np.zeros((n_rows, d_rows.shape[1]), dtype=d_rows.dtype)
    np.add.at(out, indices, d_rows)
    return out
