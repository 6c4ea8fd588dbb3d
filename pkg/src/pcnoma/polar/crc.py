"""CRC-16 with generator D^16 + D^12 + D^5 + 1, zero initial state.

The CRC is appended after the message bits, most significant bit first.
Batches are handled through the (linear) parity matrix of the code.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

CRC_LEN = 16
CRC_POLY = 0x1021  # D^12 + D^5 + 1; the D^16 term is implicit


def crc_remainder(bits) -> np.ndarray:
    """Shift-register CRC of a single bit vector."""
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8):
        fb = ((reg >> (CRC_LEN - 1)) & 1) ^ int(b)
        reg = (reg << 1) & 0xFFFF
        if fb:
            reg ^= CRC_POLY
    return np.array([(reg >> (CRC_LEN - 1 - i)) & 1 for i in range(CRC_LEN)], dtype=np.uint8)


@lru_cache(maxsize=64)
def _parity_matrix(k: int) -> np.ndarray:
    eye = np.eye(k, dtype=np.uint8)
    P = np.array([crc_remainder(row) for row in eye], dtype=np.uint8).reshape(k, CRC_LEN)
    P.setflags(write=False)
    return P


def crc_bits(messages) -> np.ndarray:
    m = np.asarray(messages, dtype=np.uint8)
    P = _parity_matrix(m.shape[-1])
    return ((m.astype(np.int64) @ P) & 1).astype(np.uint8)


def crc_attach(messages) -> np.ndarray:
    m = np.asarray(messages, dtype=np.uint8)
    return np.concatenate([m, crc_bits(m)], axis=-1)


def crc_check(bits) -> np.ndarray:
    """True where the trailing 16 bits match the CRC of the rest."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape[-1] <= CRC_LEN:
        raise ValueError("sequence shorter than the CRC")
    return np.all(crc_bits(b[..., :-CRC_LEN]) == b[..., -CRC_LEN:], axis=-1)
