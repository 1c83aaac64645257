"""Versioned binary model files.

Layout: 4-byte magic, little-endian u32 format version, u64 header length,
a JSON header (dims, label list, provider list, vocabulary fingerprint,
tensor shapes), the tensors as little-endian float32 in declared order,
and a trailing sha256 digest of everything before it. Round-trips are
bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from ..dataset import Vocabularies
from .params import Dims, ModelParams

MAGIC = b"CPTN"
FORMAT_VERSION = 1
_DIGEST_LEN = 32


class ModelIOError(Exception):
    pass


class BadMagicError(ModelIOError):
    pass


class VersionMismatchError(ModelIOError):
    pass


class ChecksumMismatchError(ModelIOError):
    pass


def save_model(model: ModelParams, path) -> None:
    tensors = model.tensors()
    header = {
        "dims": {"d_c": model.dims.d_c, "d_p": model.dims.d_p, "hidden": list(model.dims.hidden)},
        "labels": list(model.vocabs.cpt_labels),
        "providers": list(model.vocabs.providers),
        "icd_count": model.vocabs.icd_count,
        "fingerprint": model.fingerprint,
        "tensors": [[name, list(t.shape)] for name, t in tensors.items()],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", FORMAT_VERSION)
    body += struct.pack("<Q", len(header_bytes))
    body += header_bytes
    for t in tensors.values():
        body += np.ascontiguousarray(t, dtype="<f4").tobytes()
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(body))
        fh.write(digest)


def load_model(path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 + 4 + 8 + _DIGEST_LEN:
        raise ChecksumMismatchError(f"{path}: file truncated")
    body, digest = blob[:-_DIGEST_LEN], blob[-_DIGEST_LEN:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatchError(f"{path}: checksum mismatch (corrupt or truncated)")
    if body[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a model file")
    (version,) = struct.unpack_from("<I", body, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    (header_len,) = struct.unpack_from("<Q", body, 8)
    header_start = 16
    header_end = header_start + header_len
    if header_end > len(body):
        raise ChecksumMismatchError(f"{path}: header overruns file")
    header = json.loads(body[header_start:header_end].decode("utf-8"))

    dims = Dims(
        d_c=header["dims"]["d_c"],
        d_p=header["dims"]["d_p"],
        hidden=tuple(header["dims"]["hidden"]),
    )
    vocabs = Vocabularies(
        cpt_labels=tuple(header["labels"]),
        providers=tuple(header["providers"]),
        icd_count=header["icd_count"],
    )
    if vocabs.fingerprint() != header["fingerprint"]:
        raise ChecksumMismatchError(f"{path}: stored fingerprint does not match vocabularies")

    arrays: dict[str, np.ndarray] = {}
    offset = header_end
    for name, shape in header["tensors"]:
        size = int(np.prod(shape)) * 4
        if offset + size > len(body):
            raise ChecksumMismatchError(f"{path}: tensor {name} overruns file")
        flat = np.frombuffer(body, dtype="<f4", count=int(np.prod(shape)), offset=offset)
        arrays[name] = flat.reshape(shape).astype(np.float32, copy=True)
        offset += size
    if offset != len(body):
        raise ChecksumMismatchError(f"{path}: trailing bytes after tensors")

    weights = [arrays[f"w{i}"] for i in range(1, 5)]
    biases = [arrays[f"b{i}"] for i in range(1, 5)]
    return ModelParams(
        dims=dims,
        vocabs=vocabs,
        char_embed=arrays["char_embed"],
        provider_embed=arrays["provider_embed"],
        weights=weights,
        biases=biases,
    )
