"""Polar transform and code specification.

The transform is x = u F^{(x)n} over GF(2) with F = [[1, 0], [1, 1]] in
natural index order (no bit-reversal). Leaf (u-domain) indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crc import CRC_LEN, crc_attach


def _log2_exact(N: int) -> int:
    if N < 1 or N & (N - 1):
        raise ValueError(f"block length {N} is not a power of two")
    return N.bit_length() - 1


def polar_transform(u) -> np.ndarray:
    """Apply F^{(x)n} along the last axis; the map is its own inverse."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    _log2_exact(N)
    lead = x.shape[:-1]
    step = N // 2
    while step >= 1:
        v = x.reshape(lead + (N // (2 * step), 2, step))
        v[..., 0, :] ^= v[..., 1, :]
        step //= 2
    return x


@dataclass(frozen=True)
class PolarCodeSpec:
    N: int
    info_set: tuple[int, ...]
    crc_len: int = CRC_LEN

    def __post_init__(self):
        _log2_exact(self.N)
        info = tuple(sorted(int(i) for i in self.info_set))
        if len(set(info)) != len(info) or (info and not 0 <= info[0] <= info[-1] < self.N):
            raise ValueError("info set must hold distinct leaf indices in [0, N)")
        if self.crc_len not in (0, CRC_LEN):
            raise ValueError(f"unsupported CRC length {self.crc_len}")
        if self.crc_len and len(info) < self.crc_len + 1:
            raise ValueError(f"K={len(info)} leaves no room for a message with CRC-{self.crc_len}")
        object.__setattr__(self, "info_set", info)

    @property
    def n(self) -> int:
        return _log2_exact(self.N)

    @property
    def K(self) -> int:
        return len(self.info_set)

    @property
    def message_len(self) -> int:
        return self.K - self.crc_len

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[list(self.info_set)] = False
        return mask


def encode(messages, spec: PolarCodeSpec) -> np.ndarray:
    """Messages (..., K - crc_len) to codewords (..., N); frozen bits are 0."""
    messages = np.asarray(messages, dtype=np.uint8)
    if messages.shape[-1] != spec.message_len:
        raise ValueError(f"message length {messages.shape[-1]} != {spec.message_len}")
    info = crc_attach(messages) if spec.crc_len else messages
    u = np.zeros(messages.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., list(spec.info_set)] = info
    return polar_transform(u)


def extract_message(u, spec: PolarCodeSpec) -> np.ndarray:
    return np.asarray(u)[..., list(spec.info_set)][..., : spec.message_len]
