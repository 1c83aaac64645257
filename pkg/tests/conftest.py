"""Shared toy fixtures for the test suite."""

import numpy as np
import pytest

import cptcoder.nn as nn
from cptcoder.dataset import Vocabularies, make_claim


@pytest.fixture
def toy_vocabs():
    return Vocabularies(
        cpt_labels=("11111", "22222", "33333"),
        providers=("pA", "pB"),
        icd_count=4,
    )


@pytest.fixture
def toy_model(toy_vocabs):
    dims = nn.Dims(d_c=3, d_p=2, hidden=(4, 4, 3))
    return nn.init_model(toy_vocabs, dims, seed=7)


def random_toy_model(rng, max_labels=5, max_dim=4):
    """Random small model with every tensor redrawn (non-zero biases included)."""
    n_labels = int(rng.integers(2, max_labels + 1))
    n_providers = int(rng.integers(1, 4))
    vocabs = Vocabularies(
        cpt_labels=tuple(f"{10000 + i}" for i in range(n_labels)),
        providers=tuple(f"p{i}" for i in range(n_providers)),
        icd_count=3,
    )
    dims = nn.Dims(
        d_c=int(rng.integers(2, max_dim + 1)),
        d_p=int(rng.integers(2, max_dim + 1)),
        hidden=(
            int(rng.integers(2, max_dim + 1)),
            int(rng.integers(2, max_dim + 1)),
            int(rng.integers(2, max_dim + 1)),
        ),
    )
    model = nn.init_model(vocabs, dims, seed=int(rng.integers(1 << 31)))
    for t in model.tensors().values():
        t[...] = rng.uniform(-0.6, 0.6, size=t.shape).astype(np.float32)
    return model


def random_toy_batch(rng, model, max_batch=3):
    n = int(rng.integers(1, max_batch + 1))
    n_slots = int(rng.integers(1, 3))
    idx = rng.integers(0, 37, size=(n, n_slots, 7)).astype(np.int32)
    counts = rng.integers(1, n_slots + 1, size=n).astype(np.int32)
    providers = rng.integers(0, model.provider_embed.shape[0], size=n).astype(np.int32)
    targets = (rng.random((n, model.label_count)) < 0.4).astype(np.float64)
    batch = nn.FeatureBatch(icd_idx=idx, icd_counts=counts, providers=providers)
    return batch, targets


def make_training_claims(n, providers=("pA", "pB"), cpts=("11111", "22222", "33333")):
    claims = []
    icd_pool = ["E119", "A001", "Z990", "M545"]
    for i in range(n):
        icd = icd_pool[i % len(icd_pool)]
        cpt = cpts[i % len(cpts)]
        claims.append(
            make_claim(f"c{i}", providers[i % len(providers)], 20 + (i % 60),
                       "M" if i % 2 else "F", [icd], [cpt])
        )
    return claims
