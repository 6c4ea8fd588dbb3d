"""Mutual-information tools: the BI-AWGN capacity function, its inverse,
Monte-Carlo extrinsic-information estimation and LLR-mean conversion.

The capacity function of a consistent Gaussian LLR (mean sigma^2/2, variance
sigma^2) is

    omega(sigma) = 1 - E[log2(1 + exp(-l))],   l ~ N(sigma^2/2, sigma^2).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .detector import DEFAULT_ITERATIONS, mpa_detect
from .noma_phy import NomaSystem, draw_symbols, gen_channel, noise_var_from_snr, superpose

SIGMA_MAX = 60.0
QUAD_TOL = 1e-9
BISECT_TOL = 1e-8
MIN_SAMPLES = 100
# Symbols per Monte-Carlo chunk; each chunk owns a seed stream, so results do
# not depend on how chunks are distributed over workers.
CHUNK = 5000
DEFAULT_SAMPLES = 50_000
# below this sigma the low-SNR series replaces quadrature (error O(sigma^6))
SMALL_SIGMA = 1e-3


def _density(l, sigma):
    mu = sigma * sigma / 2.0
    return math.exp(-((l - mu) ** 2) / (2.0 * sigma * sigma)) / (math.sqrt(2.0 * math.pi) * sigma)


def _integrand(l, sigma):
    # log2(1 + e^-l), overflow-safe
    return _density(l, sigma) * (max(-l, 0.0) + math.log1p(math.exp(-abs(l)))) / math.log(2.0)


def _gain_integrand(l, sigma):
    # 1 - log2(1 + e^-l) = log2(2 / (1 + e^-l))
    return _density(l, sigma) * (math.log(2.0) - max(-l, 0.0) - math.log1p(math.exp(-abs(l)))) / math.log(2.0)


def _adaptive_simpson(fn, a, b, tol):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2.0, depth - 1))

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)


def _integrate(fn, sigma):
    """Adaptive Simpson over [mu - 12 sigma, mu + 12 sigma], tolerance relative
    to the size of the result once that drops below 1."""
    mu = sigma * sigma / 2.0
    edges = np.linspace(mu - 12.0 * sigma, mu + 12.0 * sigma, 9)
    panels = list(zip(edges[:-1], edges[1:]))
    # seed the recursion with a few panels so the narrow peak is never missed
    crude = sum((hi - lo) / 6.0 * (fn(lo) + 4.0 * fn(0.5 * (lo + hi)) + fn(hi)) for lo, hi in panels)
    tol = min(QUAD_TOL, 1e-9 * abs(crude)) / len(panels)
    return sum(_adaptive_simpson(fn, lo, hi, max(tol, 1e-300)) for lo, hi in panels)


def omega_loss(sigma: float) -> float:
    """1 - omega(sigma), integrated directly so it keeps relative accuracy near 1."""
    sigma = float(sigma)
    return _integrate(lambda l: _integrand(l, sigma), sigma)


@lru_cache(maxsize=4096)
def omega(sigma: float) -> float:
    """Capacity of a BI-AWGN channel whose LLR std-dev is ``sigma``."""
    sigma = float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return 0.0
    if math.isinf(sigma):
        return 1.0
    if sigma < SMALL_SIGMA:
        s2 = sigma * sigma
        return s2 / (8.0 * math.log(2.0)) - s2 * s2 / (64.0 * math.log(2.0))
    if sigma < 1.0:
        return float(min(max(_integrate(lambda l: _gain_integrand(l, sigma), sigma), 0.0), 1.0))
    return float(min(max(1.0 - omega_loss(sigma), 0.0), 1.0))


def omega_inv(i: float) -> float:
    """Inverse of :func:`omega` by bisection on [0, SIGMA_MAX]."""
    i = float(i)
    if not 0.0 <= i <= 1.0:
        raise ValueError(f"mutual information {i} outside [0, 1]")
    if i == 0.0:
        return 0.0
    if i >= omega(SIGMA_MAX):
        return SIGMA_MAX
    lo, hi = 0.0, SIGMA_MAX
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if omega(mid) < i:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def llr_means_from_ie(ie) -> np.ndarray:
    """Equivalent BI-AWGN LLR means, mu = omega_inv(I)^2 / 2, element-wise."""
    ie = np.asarray(ie, dtype=float)
    out = np.array([omega_inv(x) ** 2 / 2.0 for x in ie.ravel()])
    return out.reshape(ie.shape)


def mutual_info_from_llrs(llrs: np.ndarray, bits: np.ndarray) -> float:
    """Sample-mean estimate of I(B; L) for LLRs with positive-means-zero sign."""
    signed = (1.0 - 2.0 * np.asarray(bits, dtype=float)) * np.asarray(llrs, dtype=float)
    return float(1.0 - np.mean(np.logaddexp(0.0, -signed)) / math.log(2.0))


def estimate_ie(system: NomaSystem, snr_db: float, priors, num_blocks: int = DEFAULT_SAMPLES,
                seed: int = 0, channel: str = "awgn",
                iterations: int = DEFAULT_ITERATIONS) -> np.ndarray:
    """Monte-Carlo extrinsic mutual information per (user, bit level).

    ``priors`` is a V x J (or length-V) binary table. Users with prior 1 are
    treated as known: they are cancelled from the received signal and removed
    from the graph, and their entries in the result are set to 1. The other
    users are detected jointly by message passing on the pruned graph over
    ``num_blocks`` random symbol transmissions.
    """
    if num_blocks < MIN_SAMPLES:
        raise ValueError(f"num_blocks={num_blocks} < {MIN_SAMPLES}: estimate too noisy")
    V, J = system.num_users, system.bits_per_symbol
    priors = np.asarray(priors)
    if priors.ndim == 1:
        priors = np.repeat(priors[:, None], J, axis=1)
    if priors.shape != (V, J) or not np.isin(priors, (0, 1)).all():
        raise ValueError("priors must be a binary V x J table")
    known_users = priors.all(axis=1)
    if (priors.any(axis=1) & ~known_users).any():
        raise ValueError("a user's bit levels must share one prior value")
    known = [v + 1 for v in range(V) if known_users[v]]
    active = [v for v in range(V) if not known_users[v]]

    out = np.ones((V, J))
    if not active:
        return out
    n0 = noise_var_from_snr(snr_db)
    root = np.random.SeedSequence(seed)
    acc = np.zeros((V, J))
    done = 0
    for c, child in enumerate(root.spawn((num_blocks + CHUNK - 1) // CHUNK)):
        n = min(CHUNK, num_blocks - c * CHUNK)
        rng = np.random.default_rng(child)
        labels, bits = draw_symbols(system, n, rng)
        gains = gen_channel(channel, V, system.num_pre, n, rng)
        tx = system.codeword_table()[np.arange(V)[None, :], labels]  # (n, V, F)
        y = superpose(tx, gains, n0, rng)
        # perfectly known users are subtracted exactly
        for v in known:
            y = y - gains[:, v - 1, :] * tx[:, v - 1, :]
        llr = mpa_detect(y, system, gains, n0, detected=known, iterations=iterations)
        for v in active:
            signed = (1.0 - 2.0 * bits[:, v, :]) * llr[:, v, :]
            acc[v] += np.logaddexp(0.0, -signed).sum(axis=0)
        done += n
    out[active] = 1.0 - acc[active] / done / math.log(2.0)
    return np.clip(out, 0.0, 1.0)


def estimate_user_capacity(ie, v: int) -> float:
    """Sum over bit levels of the estimates for 1-based user ``v``."""
    return float(np.sum(np.asarray(ie)[v - 1]))


def chain_sum(ie_by_level: Sequence[np.ndarray], order: Sequence[int]) -> float:
    """Sum of the per-level estimates recorded along a detecting order."""
    return float(sum(np.sum(ie[s - 1]) for ie, s in zip(ie_by_level, order)))
