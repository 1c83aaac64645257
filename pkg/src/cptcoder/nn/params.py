"""Model parameters: per-position character embeddings, provider embedding, dense stack."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codes import CHAR_VOCAB_SIZE, ICD_MAX_LEN
from ..dataset import Vocabularies


class BadDimsError(ValueError):
    pass


@dataclass(frozen=True)
class Dims:
    """Embedding and hidden-layer sizes. Input to the dense stack is 7*d_c + d_p."""

    d_c: int = 8
    d_p: int = 16
    hidden: tuple[int, int, int] = (256, 256, 128)

    def validate(self) -> None:
        if self.d_c < 1 or self.d_p < 1 or len(self.hidden) != 3 or min(self.hidden) < 1:
            raise BadDimsError(f"bad dims: {self}")

    @property
    def input_dim(self) -> int:
        return ICD_MAX_LEN * self.d_c + self.d_p


@dataclass
class ModelParams:
    """All learnable tensors plus the vocabularies they are bound to.

    char_embed holds one (37, d_c) matrix per character position; row 36 of
    each is the PAD row. provider_embed has one extra trailing row reserved
    for unknown providers.
    """

    dims: Dims
    vocabs: Vocabularies
    char_embed: np.ndarray  # (7, 37, d_c)
    provider_embed: np.ndarray  # (provider_count + 1, d_p)
    weights: list[np.ndarray]  # W1..W4, each (fan_in, fan_out)
    biases: list[np.ndarray]

    @property
    def fingerprint(self) -> str:
        return self.vocabs.fingerprint()

    @property
    def label_count(self) -> int:
        return self.vocabs.label_count

    @property
    def dtype(self):
        return self.char_embed.dtype

    def tensors(self) -> dict[str, np.ndarray]:
        """Named views of every trainable tensor, in a fixed order."""
        out = {"char_embed": self.char_embed, "provider_embed": self.provider_embed}
        for i, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            dims=self.dims,
            vocabs=self.vocabs,
            char_embed=self.char_embed.copy(),
            provider_embed=self.provider_embed.copy(),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def astype(self, dtype) -> "ModelParams":
        """Same parameters in another float dtype (used by the gradient checker)."""
        return ModelParams(
            dims=self.dims,
            vocabs=self.vocabs,
            char_embed=self.char_embed.astype(dtype),
            provider_embed=self.provider_embed.astype(dtype),
            weights=[w.astype(dtype) for w in self.weights],
            biases=[b.astype(dtype) for b in self.biases],
        )

    def assert_finite(self) -> None:
        for name, t in self.tensors().items():
            if not np.all(np.isfinite(t)):
                raise FloatingPointError(f"non-finite values in {name}")


def init_model(vocabs: Vocabularies, dims: Dims | None = None, seed: int = 0) -> ModelParams:
    """Uniform init scaled by 1/sqrt(fan_in); embeddings use their vocabulary size
    as fan-in (the one-hot view). Biases start at zero. Deterministic under seed."""
    dims = dims or Dims()
    dims.validate()
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape).astype(np.float32)

    char_embed = uniform((ICD_MAX_LEN, CHAR_VOCAB_SIZE, dims.d_c), CHAR_VOCAB_SIZE)
    n_provider_rows = vocabs.provider_count + 1
    provider_embed = uniform((n_provider_rows, dims.d_p), n_provider_rows)

    sizes = [dims.input_dim, *dims.hidden, vocabs.label_count]
    weights = [uniform((sizes[i], sizes[i + 1]), sizes[i]) for i in range(4)]
    biases = [np.zeros(sizes[i + 1], dtype=np.float32) for i in range(4)]

    return ModelParams(
        dims=dims,
        vocabs=vocabs,
        char_embed=char_embed,
        provider_embed=provider_embed,
        weights=weights,
        biases=biases,
    )
