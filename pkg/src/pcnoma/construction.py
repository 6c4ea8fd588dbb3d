"""Offline code construction for the two user-partition schemes.

Sequential partition (SUP): users are detected one after another; the bit
channels of the k-th user are estimated with the earlier users known. The
order either comes from the Monte-Carlo worst-goes-first search ("exit-mc"),
from the SINR surrogate ("sinr-greedy", or "as" for best-goes-first), or is
given explicitly.

Parallel partition (PUP): every user is estimated with no prior knowledge.

Both then turn the per-level mutual information into equivalent LLR means,
run GA on each user's polar code and pick the information sets globally.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exit_analysis import DEFAULT_SAMPLES, estimate_ie, llr_means_from_ie
from .noma_phy import NomaSystem, noise_var_from_snr
from .polar import CRC_LEN, PolarCodeSpec, ga_construct, select_info_sets
from .scheduling import average_scheduling, greedy_sinr_schedule

SCHEDULERS = ("exit-mc", "sinr-greedy", "as", "explicit")


@dataclass
class McParams:
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    channel: str = "awgn"
    iterations: int = 3


@dataclass
class ConstructionResult:
    scheme: str                      # "sup" or "pup"
    N: int
    total_K: int
    design_snr_db: float
    ie: np.ndarray                   # (V, J) recorded mutual information
    llr_means: np.ndarray            # (V, J)
    reliabilities: np.ndarray        # (V, N) GA means
    info_sets: list[tuple[int, ...]]
    order: tuple[int, ...] | None = None
    crc_len: int = CRC_LEN
    metadata: dict = field(default_factory=dict)

    def codes(self) -> tuple[PolarCodeSpec, ...]:
        return tuple(PolarCodeSpec(self.N, s, self.crc_len) for s in self.info_sets)

    @property
    def user_K(self) -> list[int]:
        return [len(s) for s in self.info_sets]

    def check(self) -> None:
        """Raise if the info sets disagree with the stored reliabilities."""
        expect = select_info_sets(list(self.reliabilities), self.total_K, self.crc_len)
        if [tuple(s) for s in self.info_sets] != expect:
            raise ValueError("info sets are inconsistent with the stored reliabilities")

    def to_json(self) -> dict:
        d = asdict(self)
        for k in ("ie", "llr_means", "reliabilities"):
            d[k] = np.asarray(getattr(self, k)).tolist()
        d["info_sets"] = [list(s) for s in self.info_sets]
        d["order"] = list(self.order) if self.order is not None else None
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ConstructionResult":
        res = cls(
            scheme=obj["scheme"], N=int(obj["N"]), total_K=int(obj["total_K"]),
            design_snr_db=float(obj["design_snr_db"]),
            ie=np.array(obj["ie"], dtype=float),
            llr_means=np.array(obj["llr_means"], dtype=float),
            reliabilities=np.array(obj["reliabilities"], dtype=float),
            info_sets=[tuple(s) for s in obj["info_sets"]],
            order=tuple(obj["order"]) if obj.get("order") is not None else None,
            crc_len=int(obj.get("crc_len", CRC_LEN)),
            metadata=dict(obj.get("metadata", {})),
        )
        res.check()
        return res

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "ConstructionResult":
        return cls.from_json(json.loads(Path(path).read_text()))


def total_info_bits(rate: float, N: int, num_users: int) -> int:
    K = rate * N * num_users
    if abs(K - round(K)) > 1e-9:
        raise ValueError(f"R*N*V = {K} is not an integer")
    return int(round(K))


def _estimate(system, snr_db, priors, mc: McParams):
    return estimate_ie(system, snr_db, priors, mc.samples, mc.seed, mc.channel, mc.iterations)


def _finish(system, scheme, ie, order, design_snr_db, N, rate, mc, crc_len, extra):
    K = total_info_bits(rate, N, system.num_users)
    means = llr_means_from_ie(ie)
    rel = np.stack([ga_construct(means[v], N) for v in range(system.num_users)])
    sets = select_info_sets(list(rel), K, crc_len)
    meta = {
        "graph": system.graph.name,
        "graph_matrix": system.graph.matrix.tolist(),
        "rate": rate,
        "seed": mc.seed,
        "samples": mc.samples,
        "channel": mc.channel,
        "iterations": mc.iterations,
    }
    meta.update(extra)
    return ConstructionResult(scheme, N, K, float(design_snr_db), ie, means, rel, sets,
                              tuple(order) if order is not None else None, crc_len, meta)


def sup_levels(system: NomaSystem, design_snr_db: float, order: Sequence[int],
               mc: McParams) -> np.ndarray:
    """Per-level estimates along a fixed order; row v holds user v's level."""
    V, J = system.num_users, system.bits_per_symbol
    ie = np.zeros((V, J))
    priors = np.zeros(V, dtype=int)
    for s in order:
        ie[s - 1] = _estimate(system, design_snr_db, priors, mc)[s - 1]
        priors[s - 1] = 1
    return ie


def exit_mc_order(system: NomaSystem, design_snr_db: float, mc: McParams):
    """Worst-goes-first by Monte-Carlo mutual information.

    Returns (order, ie) where ie[v-1] was recorded at the level v was picked.
    Ties go to the lower user label.
    """
    V, J = system.num_users, system.bits_per_symbol
    ie = np.zeros((V, J))
    priors = np.zeros(V, dtype=int)
    order: list[int] = []
    for _ in range(V):
        est = _estimate(system, design_snr_db, priors, mc)
        remaining = [v for v in range(1, V + 1) if v not in order]
        pick = min(remaining, key=lambda v: (est[v - 1].sum(), v))
        ie[pick - 1] = est[pick - 1]
        order.append(pick)
        priors[pick - 1] = 1
    return tuple(order), ie


def construct_sup(system: NomaSystem, design_snr_db: float, N: int, rate: float,
                  mc: McParams | None = None, scheduler: str = "exit-mc",
                  order: Sequence[int] | None = None, crc_len: int = CRC_LEN) -> ConstructionResult:
    mc = mc or McParams()
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; choose from {SCHEDULERS}")
    lam = noise_var_from_snr(design_snr_db)
    if scheduler == "exit-mc":
        order, ie = exit_mc_order(system, design_snr_db, mc)
    else:
        if scheduler == "sinr-greedy":
            order = greedy_sinr_schedule(system.graph, lam).order
        elif scheduler == "as":
            order = average_scheduling(system.graph, lam).order
        elif order is None:
            raise ValueError("the explicit scheduler needs an order")
        order = tuple(int(v) for v in order)
        if sorted(order) != list(range(1, system.num_users + 1)):
            raise ValueError(f"{order} is not a detecting order")
        ie = sup_levels(system, design_snr_db, order, mc)
    return _finish(system, "sup", ie, order, design_snr_db, N, rate, mc, crc_len,
                   {"scheduler": scheduler})


def construct_pup(system: NomaSystem, design_snr_db: float, N: int, rate: float,
                  mc: McParams | None = None, crc_len: int = CRC_LEN) -> ConstructionResult:
    mc = mc or McParams()
    ie = _estimate(system, design_snr_db, np.zeros(system.num_users, dtype=int), mc)
    return _finish(system, "pup", ie, None, design_snr_db, N, rate, mc, crc_len, {})
