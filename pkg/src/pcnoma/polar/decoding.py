"""Successive cancellation (SC) and CRC-aided list (CA-SCL) polar decoding.

Both decoders work on batches: input LLRs have shape (B, N) and positive
LLRs favour bit 0. The list decoder keeps per-path arrays of shape (B, L, .)
and returns the u-domain decisions of the selected path.
"""

from __future__ import annotations

import numpy as np

from .codec import PolarCodeSpec, polar_transform
from .crc import CRC_LEN, crc_check

LLR_CLIP = 40.0


def _boxplus(a, b):
    """Exact check-node combination of two LLRs."""
    s = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return s + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _prepare(llrs, N):
    llrs = np.asarray(llrs, dtype=float)
    single = llrs.ndim == 1
    llrs = np.atleast_2d(llrs)
    if llrs.shape[-1] != N:
        raise ValueError(f"expected {N} LLRs per block, got {llrs.shape[-1]}")
    return np.clip(llrs, -LLR_CLIP, LLR_CLIP), single


def _sc(alpha, frozen):
    B, m = alpha.shape
    if frozen.all():
        z = np.zeros((B, m), dtype=np.uint8)
        return z, z
    if m == 1:
        u = (alpha < 0).astype(np.uint8)
        return u, u
    h = m // 2
    a1, a2 = alpha[:, :h], alpha[:, h:]
    u_left, x_left = _sc(_boxplus(a1, a2), frozen[:h])
    u_right, x_right = _sc(a2 + (1.0 - 2.0 * x_left) * a1, frozen[h:])
    return (np.concatenate([u_left, u_right], axis=1),
            np.concatenate([x_left ^ x_right, x_right], axis=1))


def sc_decode(llrs, spec: PolarCodeSpec) -> np.ndarray:
    """u-domain SC decisions, (B, N) or (N,) like the input."""
    llrs, single = _prepare(llrs, spec.N)
    u, _ = _sc(llrs, spec.frozen_mask)
    return u[0] if single else u


class _ListState:
    def __init__(self, B, L):
        self.L = L
        self.rows = np.arange(B)[:, None]
        self.pm = np.full((B, L), np.inf)
        self.pm[:, 0] = 0.0
        self.identity = np.broadcast_to(np.arange(L), (B, L))


def _scl(alpha, frozen, st: _ListState):
    """Returns the partial codeword (B, L, m) of the surviving paths and the
    map from surviving paths to the paths that entered this node."""
    B, L, m = alpha.shape
    if frozen.all():
        st.pm = st.pm + _softplus(-alpha).sum(axis=-1)
        return np.zeros((B, L, m), dtype=np.uint8), st.identity
    if m == 1:
        a = alpha[..., 0]
        cand = np.concatenate([st.pm + _softplus(-a), st.pm + _softplus(a)], axis=1)
        pick = np.argsort(cand, axis=1, kind="stable")[:, :L]
        st.pm = np.take_along_axis(cand, pick, axis=1)
        parent = pick % L
        bit = (pick // L).astype(np.uint8)
        return bit[..., None], parent
    h = m // 2
    x_left, p_left = _scl(_boxplus(alpha[..., :h], alpha[..., h:]), frozen[:h], st)
    alpha = alpha[st.rows, p_left]
    x_right, p_right = _scl(alpha[..., h:] + (1.0 - 2.0 * x_left) * alpha[..., :h], frozen[h:], st)
    x_left = x_left[st.rows, p_right]
    parent = np.take_along_axis(p_left, p_right, axis=1)
    return np.concatenate([x_left ^ x_right, x_right], axis=-1), parent


def ca_scl_decode(llrs, spec: PolarCodeSpec, list_size: int = 8):
    """List decoding with CRC-based path selection.

    Returns ``(u, crc_ok)``. Among surviving paths the best-metric path that
    passes the CRC is chosen; if none passes, the best-metric path is
    returned with ``crc_ok`` False. Without a CRC, ``crc_ok`` is all True.
    """
    if list_size < 1:
        raise ValueError("list size must be at least 1")
    llrs, single = _prepare(llrs, spec.N)
    B = llrs.shape[0]
    st = _ListState(B, list_size)
    alpha = np.broadcast_to(llrs[:, None, :], (B, list_size, spec.N))
    x, _ = _scl(alpha, spec.frozen_mask, st)
    u = polar_transform(x)
    finite = np.isfinite(st.pm)
    if spec.crc_len:
        info = u[..., list(spec.info_set)]
        ok = crc_check(info) & finite
    else:
        ok = finite
    metric = np.where(ok, st.pm, np.inf)
    best_ok = np.argmin(metric, axis=1)
    best_any = np.argmin(st.pm, axis=1)
    any_ok = ok.any(axis=1)
    choice = np.where(any_ok, best_ok, best_any)
    u_best = u[np.arange(B), choice]
    crc_ok = any_ok if spec.crc_len else np.ones(B, dtype=bool)
    if single:
        return u_best[0], bool(crc_ok[0])
    return u_best, crc_ok
