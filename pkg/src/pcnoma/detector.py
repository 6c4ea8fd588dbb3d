"""Log-domain message passing detection on (pruned) NOMA factor graphs.

All routines are vectorised over a leading symbol (time-slot) axis. Bit LLRs
are ln P(b=0)/P(b=1), so positive values favour bit 0.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from .noma_phy import NomaSystem, label_bits

DEFAULT_ITERATIONS = 3
# Keeps the Gaussian metric finite on noiseless inputs.
MIN_NOISE_VAR = 1e-10


def max_star(values: Sequence[float]) -> float:
    """Jacobian logarithm ln(sum(exp(a_i))), computed exactly."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("max* of an empty sequence")
    m = a.max()
    if np.isneginf(m):
        return float("-inf")
    return float(m + np.log(np.sum(np.exp(a - m))))


def cancel_received(y: np.ndarray, gains: np.ndarray, codewords: dict[int, np.ndarray]) -> np.ndarray:
    """Subtract reconstructed codewords of decoded users.

    ``codewords`` maps a 1-based user to its (..., F) codeword estimates;
    ``gains`` has shape (..., V, F).
    """
    out = np.array(y, dtype=complex, copy=True)
    for v, x in codewords.items():
        x = np.asarray(x)
        if x.shape != out.shape:
            raise ValueError(f"codeword shape {x.shape} != received shape {out.shape}")
        out -= gains[..., v - 1, :] * x
    return out


def _normalize(msg: np.ndarray) -> np.ndarray:
    return msg - logsumexp(msg, axis=-1, keepdims=True)


def _bit_llrs(belief: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """(n, M) label log-beliefs to (n, J) bit LLRs."""
    J = bits.shape[1]
    out = np.empty(belief.shape[:-1] + (J,))
    for j in range(J):
        zero = belief[..., bits[:, j] == 0]
        one = belief[..., bits[:, j] == 1]
        out[..., j] = logsumexp(zero, axis=-1) - logsumexp(one, axis=-1)
    return out


def mpa_beliefs(y: np.ndarray, system: NomaSystem, gains: np.ndarray, noise_var: float,
                detected: Iterable[int] = (), iterations: int = DEFAULT_ITERATIONS,
                trace: list | None = None) -> dict[int, np.ndarray]:
    """Run ``iterations`` flooding rounds; return per-user label log-beliefs.

    ``y`` has shape (n, F) and must already have the detected users'
    contributions removed. Returns {user: (n, M) array} for undetected users.
    When ``trace`` is a list, every message table produced is appended to it.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    n, F = y.shape
    gains = np.asarray(gains).reshape(n, system.num_users, F)
    detected = set(detected)
    active = [v for v in range(1, system.num_users + 1) if v not in detected]
    mat = system.graph.matrix
    table = system.codeword_table()
    M = table.shape[1]
    n0 = max(float(noise_var), MIN_NOISE_VAR)

    fn_users = {f: [v for v in active if mat[f, v - 1]] for f in range(F)}
    vn_fns = {v: [f for f in range(F) if mat[f, v - 1]] for v in active}

    # Gaussian metric per FN over the joint labels of its active neighbours
    xi = {}
    for f, users in fn_users.items():
        if not users:
            continue
        d = len(users)
        s = np.zeros((n,) + (M,) * d, dtype=complex)
        for i, v in enumerate(users):
            shape = [n] + [1] * d
            shape[i + 1] = M
            s = s + (gains[:, v - 1, f][:, None] * table[v - 1, :, f][None, :]).reshape(shape)
        diff = y[:, f].reshape((n,) + (1,) * d) - s
        xi[f] = -(diff.real ** 2 + diff.imag ** 2) / n0

    v2f = {(v, f): np.full((n, M), -np.log(M)) for v in active for f in vn_fns[v]}
    f2v = {}
    for _ in range(iterations):
        for f, users in fn_users.items():
            if not users:
                continue
            d = len(users)
            for i, v in enumerate(users):
                acc = xi[f]
                for k, u in enumerate(users):
                    if k == i:
                        continue
                    shape = [n] + [1] * d
                    shape[k + 1] = M
                    acc = acc + v2f[(u, f)].reshape(shape)
                axes = tuple(a + 1 for a in range(d) if a != i)
                msg = logsumexp(acc, axis=axes) if axes else acc
                f2v[(f, v)] = _normalize(msg)
        for v in active:
            for f in vn_fns[v]:
                others = [f2v[(h, v)] for h in vn_fns[v] if h != f]
                msg = np.sum(others, axis=0) if others else np.zeros((n, M))
                v2f[(v, f)] = _normalize(msg)
        if trace is not None:
            trace.append({"f2v": dict(f2v), "v2f": dict(v2f)})

    return {v: np.sum([f2v[(h, v)] for h in vn_fns[v]], axis=0) for v in active}


def mpa_detect(y, system: NomaSystem, gains, noise_var: float, detected: Iterable[int] = (),
               iterations: int = DEFAULT_ITERATIONS) -> np.ndarray:
    """Bit LLRs (n, V, J) for all undetected users; detected entries are 0."""
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    beliefs = mpa_beliefs(y, system, gains, noise_var, detected, iterations)
    bits = label_bits(system.bits_per_symbol)
    out = np.zeros((y.shape[0], system.num_users, system.bits_per_symbol))
    for v, b in beliefs.items():
        out[:, v - 1, :] = _bit_llrs(b, bits)
    return out


def sc_mpa(y_hat, system: NomaSystem, gains, noise_var: float, detected: Iterable[int],
           target: int, iterations: int = DEFAULT_ITERATIONS) -> np.ndarray:
    """Bit LLRs (n, J) of ``target`` on the graph pruned by ``detected``.

    ``y_hat`` is the received signal after cancellation of ``detected``.
    """
    detected = list(detected)
    if target in detected or not 1 <= target <= system.num_users:
        raise ValueError(f"target user {target} is not an undetected user")
    return mpa_detect(y_hat, system, gains, noise_var, detected, iterations)[:, target - 1, :]


def standard_mpa(y, system: NomaSystem, gains, noise_var: float,
                 iterations: int = DEFAULT_ITERATIONS) -> np.ndarray:
    """Bit LLRs (n, V, J) of every user on the full graph."""
    return mpa_detect(y, system, gains, noise_var, (), iterations)


def exhaustive_llrs(y, system: NomaSystem, gains, noise_var: float,
                    detected: Iterable[int] = ()) -> np.ndarray:
    """Exact bit posteriors by enumerating all joint labels of undetected users.

    Reference only; cost grows as M**V.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    n, F = y.shape
    gains = np.asarray(gains).reshape(n, system.num_users, F)
    detected = set(detected)
    active = [v for v in range(1, system.num_users + 1) if v not in detected]
    table = system.codeword_table()
    M = table.shape[1]
    J = system.bits_per_symbol
    joint = np.array(np.meshgrid(*[np.arange(M)] * len(active), indexing="ij")).reshape(len(active), -1).T
    s = np.zeros((n, joint.shape[0], F), dtype=complex)
    for i, v in enumerate(active):
        s += gains[:, v - 1, None, :] * table[v - 1][joint[:, i]][None, :, :]
    n0 = max(float(noise_var), MIN_NOISE_VAR)
    metric = -np.sum(np.abs(y[:, None, :] - s) ** 2, axis=-1) / n0
    bits = label_bits(J)
    out = np.zeros((n, system.num_users, J))
    for i, v in enumerate(active):
        for j in range(J):
            b = bits[joint[:, i], j]
            out[:, v - 1, j] = logsumexp(metric[:, b == 0], axis=1) - logsumexp(metric[:, b == 1], axis=1)
    return out
