# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled embedding pool/scatter kernels.

Loop order is pinned to match the numpy fallback bit for bit: pooling
accumulates ICD slots in ascending order per claim; scatter walks slots in
the outer loop and claims in batch order inside.
"""

import numpy as np

ctypedef fused floating:
    float
    double


def pool_chars_forward(floating[:, :, ::1] char_embed, int[:, :, ::1] icd_idx, int[::1] icd_counts):
    cdef Py_ssize_t n_batch = icd_idx.shape[0]
    cdef Py_ssize_t n_slots = icd_idx.shape[1]
    cdef Py_ssize_t n_pos = icd_idx.shape[2]
    cdef Py_ssize_t d = char_embed.shape[2]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n_batch, n_pos * d), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t b, s, p, j
    cdef int row
    with nogil:
        for b in range(n_batch):
            for s in range(icd_counts[b]):
                for p in range(n_pos):
                    row = icd_idx[b, s, p]
                    for j in range(d):
                        out[b, p * d + j] += char_embed[p, row, j]
    return out_arr


def pool_chars_backward(floating[:, ::1] d_pooled, int[:, :, ::1] icd_idx, int[::1] icd_counts, Py_ssize_t vocab_size):
    cdef Py_ssize_t n_batch = icd_idx.shape[0]
    cdef Py_ssize_t n_slots = icd_idx.shape[1]
    cdef Py_ssize_t n_pos = icd_idx.shape[2]
    cdef Py_ssize_t d = d_pooled.shape[1] // n_pos
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    grad_arr = np.zeros((n_pos, vocab_size, d), dtype=dtype)
    cdef floating[:, :, ::1] grad = grad_arr
    cdef Py_ssize_t b, s, p, j
    cdef int row
    with nogil:
        for s in range(n_slots):
            for b in range(n_batch):
                if icd_counts[b] > s:
                    for p in range(n_pos):
                        row = icd_idx[b, s, p]
                        for j in range(d):
                            grad[p, row, j] += d_pooled[b, p * d + j]
    return grad_arr


def scatter_rows(floating[:, ::1] d_rows, int[::1] indices, Py_ssize_t n_rows):
    cdef Py_ssize_t n_batch = d_rows.shape[0]
    cdef Py_ssize_t d = d_rows.shape[1]
    if floating is float:
        dtype = np.float32
    else:
        dtype = np.float64
    out_arr = np.zeros((n_rows, d), dtype=dtype)
    cdef floating[:, ::1] out = out_arr
    cdef Py_ssize_t b, j
    cdef int row
    with nogil:
        for b in range(n_batch):
            row = indices[b]
            for j in range(d):
                out[row, j] += d_rows[b, j]
    return out_arr
