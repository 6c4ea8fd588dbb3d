"""Gaussian-approximation reliability of polar bit channels with
heterogeneous leaf means, and global information-set selection.

Check-node updates go through

    phi(x) = 1 - E[tanh(l/2)] = E[2 / (1 + exp(l))],   l ~ N(x, 2x),

evaluated by Gauss-Hermite quadrature below PHI_SWITCH and by the usual
asymptotic form sqrt(pi/x) exp(-x/4) (1 - 10/(7x)) above it. The two agree to
about 3e-5 (relative) at the switch.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import expit

PHI_SWITCH = 100.0
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(200)
_GH_WEIGHTS = _GH_WEIGHTS / _GH_WEIGHTS.sum()
_LOG_X_MIN = np.log(1e-12)


class ConstructionInfeasible(ValueError):
    """A user received too few information bits to carry its CRC."""


def _log_phi_tail(x):
    return 0.5 * np.log(np.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x))


def _phi_head(x):
    l = x[..., None] + np.sqrt(2.0 * x)[..., None] * _GH_NODES
    return (2.0 * expit(-l)) @ _GH_WEIGHTS


def phi(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    head = (x > 0) & (x < PHI_SWITCH)
    tail = x >= PHI_SWITCH
    out[head] = _phi_head(x[head])
    out[tail] = np.exp(_log_phi_tail(x[tail]))
    return out


def phi_inv(y) -> np.ndarray:
    """Inverse of :func:`phi`; y >= 1 maps to 0."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    head_floor = float(phi(np.array(PHI_SWITCH)))
    head = (y > head_floor) & (y < 1.0)
    if head.any():
        # bisection on log(x); phi is decreasing
        target = y[head]
        lo = np.full(target.shape, _LOG_X_MIN)
        hi = np.full(target.shape, np.log(PHI_SWITCH))
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            above = _phi_head(np.exp(mid)) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[head] = np.exp(0.5 * (lo + hi))
    tail = y <= head_floor
    if tail.any():
        target = np.log(np.maximum(y[tail], 1e-300))
        lo = np.full(target.shape, PHI_SWITCH)
        hi = np.full(target.shape, 1e5)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = _log_phi_tail(mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        out[tail] = 0.5 * (lo + hi)
    return out


def check_node_mean(a, b) -> np.ndarray:
    pa, pb = phi(a), phi(b)
    return phi_inv(pa + pb - pa * pb)


def leaf_means(level_means: Sequence[float], N: int) -> np.ndarray:
    """Coded-bit means: position i belongs to bit level i mod J."""
    level_means = np.asarray(level_means, dtype=float)
    J = level_means.size
    if J == 0 or N % J:
        raise ValueError(f"N={N} is not a multiple of J={J}")
    return np.tile(level_means, N // J)


def ga_construct(level_means: Sequence[float], N: int) -> np.ndarray:
    """GA LLR means of the N bit polarized channels, in leaf order."""
    m = leaf_means(level_means, N)
    if (m < 0).any():
        raise ValueError("LLR means must be non-negative")
    cur = m.reshape(1, N)
    h = N // 2
    while h >= 1:
        a, b = cur[:, :h], cur[:, h:]
        cur = np.stack([check_node_mean(a, b), a + b], axis=1).reshape(-1, h)
        h //= 2
    return cur.reshape(N)


def select_info_sets(reliabilities: Sequence[np.ndarray], total_K: int,
                     crc_len: int = 16) -> list[tuple[int, ...]]:
    """Globally pick the ``total_K`` largest means over all users.

    Ties go to the lower user index, then the lower leaf index.
    """
    rel = [np.asarray(r, dtype=float) for r in reliabilities]
    sizes = [r.size for r in rel]
    if not 0 <= total_K <= sum(sizes):
        raise ValueError(f"K={total_K} exceeds the {sum(sizes)} available bit channels")
    means = np.concatenate(rel)
    users = np.concatenate([np.full(s, v) for v, s in enumerate(sizes)])
    leaves = np.concatenate([np.arange(s) for s in sizes])
    order = np.lexsort((leaves, users, -means))[:total_K]
    sets = [tuple(sorted(int(i) for i in leaves[order][users[order] == v])) for v in range(len(rel))]
    if crc_len:
        short = [v + 1 for v, s in enumerate(sets) if len(s) < crc_len + 1]
        if short:
            raise ConstructionInfeasible(
                f"users {short} get fewer than {crc_len + 1} information bits "
                f"(allocation {[len(s) for s in sets]})"
            )
    return sets
