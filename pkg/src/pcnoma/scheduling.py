"""Detecting-SINR bookkeeping and detecting-order search.

A detecting order is a permutation of the 1-based user labels. For a fixed
graph the mean of the detecting SINR sequence does not depend on the order,
so orders are ranked by ``theta``, the sum of squared detecting SINRs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .factor_graph import FactorGraph, fn_degrees

MAX_BRUTE_FORCE_USERS = 10
# Float comparisons on SINRs; regular graphs produce exact ties.
TIE_TOL = 1e-12


class CapacityRefused(ValueError):
    """Raised when an exhaustive search would be too large."""


@dataclass(frozen=True)
class SinrSchedule:
    order: tuple[int, ...]
    sinr_sequence: tuple[float, ...]

    @property
    def mean(self) -> float:
        return float(np.mean(self.sinr_sequence))

    @property
    def theta(self) -> float:
        return float(np.sum(np.square(self.sinr_sequence)))

    @property
    def variance(self) -> float:
        return self.theta / len(self.sinr_sequence) - self.mean ** 2

    def as_dict(self) -> dict:
        return {
            "order": list(self.order),
            "sinr_sequence": list(self.sinr_sequence),
            "mean": self.mean,
            "variance": self.variance,
            "theta": self.theta,
        }


def _check_lambda(lam: float) -> float:
    if not lam > 0:
        raise ValueError(f"noise-to-power ratio must be positive, got {lam}")
    return float(lam)


def _check_order(graph: FactorGraph, order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(1, graph.num_users + 1)):
        raise ValueError(f"{order} is not a permutation of 1..{graph.num_users}")
    return order


def instantaneous_sinr(graph: FactorGraph, detected: Iterable[int], v: int, lam: float) -> float:
    """SINR of undetected user ``v`` once ``detected`` has been cancelled."""
    lam = _check_lambda(lam)
    detected = list(detected)
    if v in detected:
        raise ValueError(f"user {v} is already detected")
    if not 1 <= v <= graph.num_users:
        raise ValueError(f"user index {v} outside 1..{graph.num_users}")
    deg = fn_degrees(graph, detected)
    pres = np.flatnonzero(graph.matrix[:, v - 1])
    return float(np.sum(1.0 / ((deg[pres] - 1) + lam)))


def detecting_sinr_sequence(graph: FactorGraph, order: Sequence[int], lam: float) -> SinrSchedule:
    order = _check_order(graph, order)
    lam = _check_lambda(lam)
    seq = [instantaneous_sinr(graph, order[:k], s, lam) for k, s in enumerate(order)]
    return SinrSchedule(order, tuple(seq))


def closed_form_mean(graph: FactorGraph, lam: float) -> float:
    """Order-independent mean of the detecting SINR sequence."""
    lam = _check_lambda(lam)
    total = 0.0
    for d in graph.matrix.sum(axis=1):
        total += sum(1.0 / ((d - t) + lam) for t in range(1, d + 1))
    return total / graph.num_users


def _all_orders(graph: FactorGraph):
    if graph.num_users > MAX_BRUTE_FORCE_USERS:
        raise CapacityRefused(
            f"{graph.num_users}! orders exceed the enumeration limit "
            f"({MAX_BRUTE_FORCE_USERS} users)"
        )
    return itertools.permutations(range(1, graph.num_users + 1))


def all_schedules(graph: FactorGraph, lam: float) -> list[SinrSchedule]:
    return [detecting_sinr_sequence(graph, p, lam) for p in _all_orders(graph)]


def brute_force_optimal_orders(graph: FactorGraph, lam: float, rtol: float = 1e-12):
    """All orders attaining the maximal theta, in lexicographic order.

    Returns ``(orders, theta_max)``.
    """
    schedules = all_schedules(graph, lam)
    best = max(s.theta for s in schedules)
    tol = rtol * max(1.0, best)
    return [s.order for s in schedules if s.theta >= best - tol], best


def satisfies_necessary_conditions(graph: FactorGraph, order: Sequence[int], lam: float) -> bool:
    """Adjacent-pair test: at every level the detected user is not better
    than the next one, both measured before either is cancelled."""
    order = _check_order(graph, order)
    for k in range(len(order) - 1):
        before = order[:k]
        g_k = instantaneous_sinr(graph, before, order[k], lam)
        g_next = instantaneous_sinr(graph, before, order[k + 1], lam)
        if g_k > g_next + TIE_TOL:
            return False
    return True


@dataclass(frozen=True)
class OrderStatistics:
    fraction_satisfactory: float
    fraction_optimal: float
    num_orders: int


def order_statistics(graph: FactorGraph, lam: float) -> OrderStatistics:
    orders = list(_all_orders(graph))
    optimal, _ = brute_force_optimal_orders(graph, lam)
    n_sat = sum(satisfies_necessary_conditions(graph, p, lam) for p in orders)
    return OrderStatistics(n_sat / len(orders), len(optimal) / len(orders), len(orders))


def _greedy(graph: FactorGraph, lam: float, worst_first: bool) -> SinrSchedule:
    lam = _check_lambda(lam)
    detected: list[int] = []
    remaining = list(range(1, graph.num_users + 1))
    while remaining:
        sinrs = [instantaneous_sinr(graph, detected, v, lam) for v in remaining]
        target = min(sinrs) if worst_first else max(sinrs)
        # lowest label among the (near-)ties
        pick = next(v for v, g in zip(remaining, sinrs) if abs(g - target) <= TIE_TOL)
        detected.append(pick)
        remaining.remove(pick)
    return detecting_sinr_sequence(graph, detected, lam)


def greedy_sinr_schedule(graph: FactorGraph, lam: float) -> SinrSchedule:
    """Worst-goes-first order: at each level detect the weakest user."""
    return _greedy(graph, lam, worst_first=True)


def average_scheduling(graph: FactorGraph, lam: float) -> SinrSchedule:
    """Best-goes-first baseline on the same SINR metric."""
    return _greedy(graph, lam, worst_first=False)


def swap_test(graph: FactorGraph, order: Sequence[int], k: int, lam: float) -> float:
    """Theta of ``order`` with 1-based positions k and k+1 exchanged."""
    order = list(_check_order(graph, order))
    if not 1 <= k <= len(order) - 1:
        raise ValueError(f"swap position {k} outside 1..{len(order) - 1}")
    order[k - 1], order[k] = order[k], order[k - 1]
    return detecting_sinr_sequence(graph, order, lam).theta
