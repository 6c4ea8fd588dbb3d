"""Codebooks, NOMA mapping, superposition and channel generation.

Labels follow natural binary order with the first bit of a J-bit vector as
the most significant bit: label = sum_j b_j * 2**(J - j).

SNR bookkeeping: with unit codeword energy, snr_db = 10*log10(1/N0), so the
noise variance per PRE equals the noise-to-power ratio used by the scheduler.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .factor_graph import FactorGraph

ENERGY_TOL = 1e-6


def label_bits(J: int) -> np.ndarray:
    """(2**J, J) table of the bits carried by each label."""
    labels = np.arange(2 ** J)
    return (labels[:, None] >> (J - 1 - np.arange(J))[None, :]) & 1


def bits_to_label(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    J = bits.shape[-1]
    return bits @ (1 << (J - 1 - np.arange(J)))


@dataclass(frozen=True)
class Codebook:
    user: int
    codewords: np.ndarray  # (2**J, F) complex

    def __post_init__(self):
        cw = np.array(self.codewords, dtype=complex)
        if cw.ndim != 2:
            raise ValueError("codewords must be a (2**J, F) array")
        M = cw.shape[0]
        if M < 2 or M & (M - 1):
            raise ValueError(f"codebook size {M} is not a power of two")
        if len({tuple(np.round(c, 12)) for c in cw}) != M:
            raise ValueError(f"codebook of user {self.user} is not one-to-one")
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def J(self) -> int:
        return int(self.codewords.shape[0]).bit_length() - 1

    @property
    def F(self) -> int:
        return self.codewords.shape[1]

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.codewords).max(axis=0) > 0)

    @property
    def average_energy(self) -> float:
        return float(np.mean(np.sum(np.abs(self.codewords) ** 2, axis=1)))

    def bit_maps(self) -> np.ndarray:
        return label_bits(self.J)


def map_bits(codebook: Codebook, bits: Sequence[int]) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape != (codebook.J,):
        raise ValueError(f"expected {codebook.J} bits, got shape {bits.shape}")
    return codebook.codewords[int(bits_to_label(bits))]


def _qpsk(bits: np.ndarray) -> np.ndarray:
    return ((1 - 2 * bits[:, 0]) + 1j * (1 - 2 * bits[:, 1])) / math.sqrt(2.0)


def spread_qpsk_codebook(graph: FactorGraph, user: int, rotation: float = 0.0) -> Codebook:
    """Gray QPSK replicated on every PRE of ``user`` with power split 1/d_v."""
    col = graph.matrix[:, user - 1]
    d_v = int(col.sum())
    sym = _qpsk(label_bits(2)) * np.exp(1j * rotation) / math.sqrt(d_v)
    return Codebook(user, sym[:, None] * col[None, :])


def pdma_codebooks(graph: FactorGraph) -> list[Codebook]:
    return [spread_qpsk_codebook(graph, v) for v in range(1, graph.num_users + 1)]


def placeholder_scma_codebooks(graph: FactorGraph) -> list[Codebook]:
    """Stand-in SCMA codebooks: spread QPSK rotated by pi*(v-1)/8 per user.

    Not an optimised SCMA constellation.
    """
    return [spread_qpsk_codebook(graph, v, rotation=math.pi * (v - 1) / 8)
            for v in range(1, graph.num_users + 1)]


def codebook_to_json(cb: Codebook) -> dict:
    return {
        "user": cb.user,
        "J": cb.J,
        "F": cb.F,
        "codewords": [[[float(z.real), float(z.imag)] for z in row] for row in cb.codewords],
    }


def codebook_from_json(obj: dict, normalize: bool = False) -> Codebook:
    cw = np.array([[complex(re, im) for re, im in row] for row in obj["codewords"]])
    if cw.shape != (2 ** int(obj["J"]), int(obj["F"])):
        raise ValueError(f"codeword table shape {cw.shape} disagrees with J={obj['J']}, F={obj['F']}")
    if normalize:
        cw = cw / math.sqrt(np.mean(np.sum(np.abs(cw) ** 2, axis=1)))
    return Codebook(int(obj["user"]), cw)


def load_codebooks(path, normalize: bool = False) -> list[Codebook]:
    """Read a JSON file holding one codebook object or a list of them."""
    obj = json.loads(Path(path).read_text())
    objs = obj if isinstance(obj, list) else [obj]
    return [codebook_from_json(o, normalize) for o in objs]


def save_codebooks(codebooks: Sequence[Codebook], path) -> None:
    Path(path).write_text(json.dumps([codebook_to_json(cb) for cb in codebooks], indent=1))


@dataclass(frozen=True)
class NomaSystem:
    """A factor graph with one codebook per user (sorted by user label)."""

    graph: FactorGraph
    codebooks: tuple[Codebook, ...]

    def __post_init__(self):
        cbs = tuple(sorted(self.codebooks, key=lambda c: c.user))
        object.__setattr__(self, "codebooks", cbs)
        g = self.graph
        if [c.user for c in cbs] != list(range(1, g.num_users + 1)):
            raise ValueError("need exactly one codebook per user")
        if len({c.J for c in cbs}) != 1:
            raise ValueError("all users must share the modulation order J")
        for c in cbs:
            if c.F != g.num_pre:
                raise ValueError(f"codebook of user {c.user} has F={c.F}, graph has {g.num_pre}")
            col = set(np.flatnonzero(g.matrix[:, c.user - 1]))
            if not set(c.support) <= col:
                raise ValueError(f"codebook of user {c.user} leaves its factor-graph column")
            if abs(c.average_energy - 1.0) > ENERGY_TOL:
                raise ValueError(f"codebook of user {c.user} has average energy {c.average_energy}")
        table = np.stack([c.codewords for c in cbs])
        table.setflags(write=False)
        object.__setattr__(self, "_table", table)

    @property
    def num_users(self) -> int:
        return self.graph.num_users

    @property
    def num_pre(self) -> int:
        return self.graph.num_pre

    @property
    def bits_per_symbol(self) -> int:
        return self.codebooks[0].J

    def codeword_table(self) -> np.ndarray:
        """(V, 2**J, F) array of all codewords."""
        return self._table

    def map_labels(self, labels: np.ndarray) -> np.ndarray:
        """(..., V) labels to (..., V, F) codewords."""
        return self._table[np.arange(self.num_users), labels]


def default_system(graph: FactorGraph) -> NomaSystem:
    """Spread-QPSK codebooks for PDMA graphs, rotated placeholder otherwise."""
    if graph.name.startswith("scma"):
        return NomaSystem(graph, tuple(placeholder_scma_codebooks(graph)))
    return NomaSystem(graph, tuple(pdma_codebooks(graph)))


def noise_var_from_snr(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # (slots, V, F) complex
    noise_var: float


def gen_channel(model: str, num_users: int, num_pre: int, num_slots: int, rng) -> np.ndarray:
    """Per-slot channel gains, shape (num_slots, V, F)."""
    shape = (num_slots, num_users, num_pre)
    if model == "awgn":
        return np.ones(shape, dtype=complex)
    if model == "rayleigh":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    raise ValueError(f"unknown channel model {model!r}")


def complex_noise(shape, noise_var: float, rng) -> np.ndarray:
    scale = math.sqrt(noise_var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def superpose(codewords: np.ndarray, gains: np.ndarray, noise_var: float, rng=None) -> np.ndarray:
    """y = sum_v diag(h_v) x_v + z over the user axis (second to last).

    ``codewords`` and ``gains`` have shape (..., V, F); noise is skipped when
    ``noise_var`` is zero.
    """
    codewords = np.asarray(codewords)
    gains = np.asarray(gains)
    if codewords.shape != gains.shape:
        raise ValueError(f"codeword shape {codewords.shape} != gain shape {gains.shape}")
    y = np.sum(gains * codewords, axis=-2)
    if noise_var > 0:
        if rng is None:
            raise ValueError("a random generator is required when noise_var > 0")
        y = y + complex_noise(y.shape, noise_var, rng)
    return y


def draw_symbols(system: NomaSystem, n: int, rng):
    """Uniform random labels (n, V) and their bits (n, V, J)."""
    J = system.bits_per_symbol
    labels = rng.integers(0, 2 ** J, size=(n, system.num_users))
    return labels, label_bits(J)[labels]
