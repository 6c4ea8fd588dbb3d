"""Transmitter and the two multiuser receivers.

Bit layout: coded bit i of a user belongs to bit level i mod J and to natural
slot i // J. Each (user, level) stream of N/J bits is permuted over slots by
a seeded interleaver before mapping, so slot t carries bit j of label t from
position ``perm[j][t']`` with ``perm[j][t'] = t``.

Arrays carry a leading block axis B so that many blocks are detected and
decoded together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .detector import DEFAULT_ITERATIONS, mpa_detect
from .noma_phy import NomaSystem, bits_to_label, complex_noise, gen_channel
from .polar import PolarCodeSpec, ca_scl_decode, encode, extract_message, polar_transform

MODES = ("jsc", "psc")


def make_interleavers(seed: int, num_users: int, bits_per_symbol: int, num_slots: int) -> np.ndarray:
    """(V, J, slots) permutations, one stream per (seed, user, level)."""
    perms = np.empty((num_users, bits_per_symbol, num_slots), dtype=np.int64)
    for v in range(num_users):
        for j in range(bits_per_symbol):
            rng = np.random.default_rng(np.random.SeedSequence([seed, v + 1, j + 1]))
            perms[v, j] = rng.permutation(num_slots)
    return perms


@dataclass(frozen=True)
class SystemSpec:
    system: NomaSystem
    codes: tuple[PolarCodeSpec, ...]
    interleavers: np.ndarray
    mode: str = "jsc"
    order: tuple[int, ...] | None = None
    list_size: int = 8
    iterations: int = DEFAULT_ITERATIONS

    def __post_init__(self):
        V, J = self.system.num_users, self.system.bits_per_symbol
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if len(self.codes) != V:
            raise ValueError("need one polar code per user")
        N = self.codes[0].N
        if any(c.N != N for c in self.codes) or N % J:
            raise ValueError("all users need the same block length, a multiple of J")
        if self.interleavers.shape != (V, J, N // J):
            raise ValueError(f"interleavers must have shape {(V, J, N // J)}")
        for row in self.interleavers.reshape(-1, N // J):
            if not np.array_equal(np.sort(row), np.arange(N // J)):
                raise ValueError("interleaver rows must be permutations")
        if self.mode == "jsc":
            order = tuple(self.order) if self.order is not None else tuple(range(1, V + 1))
            if sorted(order) != list(range(1, V + 1)):
                raise ValueError(f"{order} is not a detecting order for {V} users")
            object.__setattr__(self, "order", order)

    @property
    def N(self) -> int:
        return self.codes[0].N

    @property
    def num_slots(self) -> int:
        return self.N // self.system.bits_per_symbol


def interleave(codeword: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """(B, N) coded bits to (B, slots, J) slot bits."""
    J, slots = perms.shape
    B = codeword.shape[0]
    out = np.empty((B, slots, J), dtype=codeword.dtype)
    for j in range(J):
        out[:, perms[j], j] = codeword[:, j::J]
    return out


def deinterleave(slot_values: np.ndarray, perms: np.ndarray) -> np.ndarray:
    """(B, slots, J) per-slot values back to (B, N) coded-bit order."""
    J, slots = perms.shape
    B = slot_values.shape[0]
    out = np.empty((B, slots * J), dtype=slot_values.dtype)
    for j in range(J):
        out[:, j::J] = slot_values[:, perms[j], j]
    return out


def modulate(codeword: np.ndarray, spec: SystemSpec, user: int) -> np.ndarray:
    """(B, N) coded bits of a user to (B, slots, F) transmitted codewords."""
    labels = bits_to_label(interleave(codeword, spec.interleavers[user - 1]))
    return spec.system.codeword_table()[user - 1][labels]


@dataclass
class Transmission:
    messages: list[np.ndarray]   # per user (B, K_v - crc)
    codewords: list[np.ndarray]  # per user (B, N) coded bits
    symbols: np.ndarray          # (B, slots, V, F)
    gains: np.ndarray            # (B, slots, V, F)
    received: np.ndarray         # (B, slots, F)
    noise_var: float


def transmit(messages: Sequence[np.ndarray], spec: SystemSpec, noise_var: float,
             gains: np.ndarray | None = None, noise: np.ndarray | None = None,
             rng=None, channel: str = "awgn") -> Transmission:
    """Encode, interleave, map and superpose a batch of blocks.

    ``noise`` is unit-variance complex noise of shape (B, slots, F), scaled
    here by sqrt(noise_var); when omitted it is drawn from ``rng``. Gains are
    drawn from ``rng`` for the given channel model when not supplied.
    """
    V = spec.system.num_users
    if len(messages) != V:
        raise ValueError("need one message batch per user")
    messages = [np.atleast_2d(np.asarray(m, dtype=np.uint8)) for m in messages]
    B = messages[0].shape[0]
    codewords, symbols = [], []
    for v, (m, code) in enumerate(zip(messages, spec.codes), start=1):
        if m.shape[1] != code.message_len:
            raise ValueError(f"user {v}: message length {m.shape[1]} != {code.message_len}")
        c = encode(m, code)
        codewords.append(c)
        symbols.append(modulate(c, spec, v))
    symbols = np.stack(symbols, axis=2)
    shape = (B, spec.num_slots, spec.system.num_pre)
    if gains is None:
        gains = gen_channel(channel, V, spec.system.num_pre, B * spec.num_slots, rng)
        gains = gains.reshape(B, spec.num_slots, V, spec.system.num_pre)
    y = np.sum(gains * symbols, axis=2)
    if noise_var > 0:
        if noise is None:
            noise = complex_noise(shape, 1.0, rng)
        y = y + np.sqrt(noise_var) * noise
    return Transmission(messages, codewords, symbols, gains, y, noise_var)


@dataclass
class Reception:
    u_hat: list[np.ndarray]     # per user (B, N) u-domain decisions
    messages: list[np.ndarray]  # per user (B, K_v - crc)
    crc_ok: np.ndarray          # (B, V)
    llrs: list[np.ndarray]      # per user (B, N) detector LLRs in coded-bit order


def _detect(y, gains, spec: SystemSpec, noise_var, detected):
    B, S, F = y.shape
    V = spec.system.num_users
    llr = mpa_detect(y.reshape(B * S, F), spec.system, gains.reshape(B * S, V, F),
                     noise_var, detected, spec.iterations)
    return llr.reshape(B, S, V, -1)


def jsc_receive(received: np.ndarray, gains: np.ndarray, noise_var: float, spec: SystemSpec) -> Reception:
    """Joint successive cancellation detection and decoding along spec.order."""
    if spec.mode != "jsc":
        raise ValueError("jsc_receive needs a system built for the jsc mode")
    V = spec.system.num_users
    B = received.shape[0]
    y_hat = np.array(received, dtype=complex, copy=True)
    u_hat, msgs, llrs = [None] * V, [None] * V, [None] * V
    crc_ok = np.zeros((B, V), dtype=bool)
    detected: list[int] = []
    for s in spec.order:
        llr = _detect(y_hat, gains, spec, noise_var, detected)[:, :, s - 1, :]
        coded_llr = deinterleave(llr, spec.interleavers[s - 1])
        u, ok = ca_scl_decode(coded_llr, spec.codes[s - 1], spec.list_size)
        u_hat[s - 1], crc_ok[:, s - 1], llrs[s - 1] = u, ok, coded_llr
        msgs[s - 1] = extract_message(u, spec.codes[s - 1])
        # hard feedback of the reconstructed codewords, whatever the CRC says
        x_hat = modulate(polar_transform(u), spec, s)
        y_hat -= gains[:, :, s - 1, :] * x_hat
        detected.append(s)
    return Reception(u_hat, msgs, crc_ok, llrs)


def psc_receive(received: np.ndarray, gains: np.ndarray, noise_var: float, spec: SystemSpec) -> Reception:
    """One pass of standard MPA, then independent list decoding per user."""
    V = spec.system.num_users
    B = received.shape[0]
    llr = _detect(received, gains, spec, noise_var, ())
    u_hat, msgs, llrs = [], [], []
    crc_ok = np.zeros((B, V), dtype=bool)
    for v in range(1, V + 1):
        coded_llr = deinterleave(llr[:, :, v - 1, :], spec.interleavers[v - 1])
        u, ok = ca_scl_decode(coded_llr, spec.codes[v - 1], spec.list_size)
        u_hat.append(u)
        msgs.append(extract_message(u, spec.codes[v - 1]))
        llrs.append(coded_llr)
        crc_ok[:, v - 1] = ok
    return Reception(u_hat, msgs, crc_ok, llrs)


def receive(received, gains, noise_var, spec: SystemSpec) -> Reception:
    if spec.mode == "jsc":
        return jsc_receive(received, gains, noise_var, spec)
    return psc_receive(received, gains, noise_var, spec)
