"""Factor graphs of code-domain NOMA systems and their pruning under SIC.

Rows are function nodes (PREs), columns are variable nodes (users). User and
PRE labels in the public API are 1-based, as in the usual matrix notation;
the underlying ``matrix`` is an ordinary 0-based numpy array.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class FactorGraph:
    """Binary F x V incidence matrix of PREs versus users."""

    matrix: np.ndarray
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.int8)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("factor graph matrix must be a non-empty 2-D array")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("factor graph matrix must be binary")
        if (m.sum(axis=0) == 0).any():
            raise ValueError("every user must occupy at least one PRE")
        if (m.sum(axis=1) == 0).any():
            raise ValueError("every PRE must carry at least one user")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_pre(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_users(self) -> int:
        return self.matrix.shape[1]

    @property
    def overloading(self) -> float:
        return self.num_users / self.num_pre

    @property
    def vn_degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def __hash__(self):
        return hash(self.matrix.tobytes() + bytes(self.matrix.shape))

    def __eq__(self, other):
        return isinstance(other, FactorGraph) and np.array_equal(self.matrix, other.matrix)


def _check_detected(graph: FactorGraph, detected: Iterable[int]) -> list[int]:
    members = list(detected)
    if len(set(members)) != len(members):
        raise ValueError(f"detected set has duplicates: {members}")
    for v in members:
        if not 1 <= v <= graph.num_users:
            raise ValueError(f"user index {v} outside 1..{graph.num_users}")
    return members


def pruned_matrix(graph: FactorGraph, detected: Iterable[int] = ()) -> np.ndarray:
    """Incidence matrix with the detected users' columns zeroed."""
    members = _check_detected(graph, detected)
    m = graph.matrix.copy()
    m[:, [v - 1 for v in members]] = 0
    return m


def prune(graph: FactorGraph, detected: Iterable[int] = ()) -> np.ndarray:
    """Return the pruned incidence matrix; dimensions are unchanged.

    The result is a plain array rather than a ``FactorGraph`` because a fully
    pruned graph has empty rows and columns.
    """
    m = pruned_matrix(graph, detected)
    m.setflags(write=False)
    return m


def fn_degrees(graph: FactorGraph, detected: Iterable[int] = ()) -> np.ndarray:
    return pruned_matrix(graph, detected).sum(axis=1)


def neighbors_of_fn(graph: FactorGraph, f: int, detected: Iterable[int] = ()) -> set[int]:
    if not 1 <= f <= graph.num_pre:
        raise ValueError(f"PRE index {f} outside 1..{graph.num_pre}")
    row = pruned_matrix(graph, detected)[f - 1]
    return {int(v) + 1 for v in np.flatnonzero(row)}


def neighbors_of_vn(graph: FactorGraph, v: int) -> set[int]:
    if not 1 <= v <= graph.num_users:
        raise ValueError(f"user index {v} outside 1..{graph.num_users}")
    return {int(f) + 1 for f in np.flatnonzero(graph.matrix[:, v - 1])}


def scma_4x6() -> FactorGraph:
    return FactorGraph(
        [[0, 1, 1, 0, 1, 0],
         [1, 0, 1, 0, 0, 1],
         [0, 1, 0, 1, 0, 1],
         [1, 0, 0, 1, 1, 0]],
        name="scma4x6",
    )


def pdma_2x3() -> FactorGraph:
    return FactorGraph([[1, 1, 0], [1, 0, 1]], name="pdma2x3")


def pdma_3x6() -> FactorGraph:
    return FactorGraph(
        [[1, 1, 0, 1, 0, 0],
         [1, 0, 1, 0, 1, 0],
         [0, 1, 1, 0, 0, 1]],
        name="pdma3x6",
    )


BUILTIN_GRAPHS = {"scma4x6": scma_4x6, "pdma2x3": pdma_2x3, "pdma3x6": pdma_3x6}


def get_graph(spec: str) -> FactorGraph:
    """Resolve a built-in graph id or a path to a graph file."""
    if spec in BUILTIN_GRAPHS:
        return BUILTIN_GRAPHS[spec]()
    path = Path(spec)
    if path.is_file():
        return load_graph(path)
    raise KeyError(f"unknown graph id {spec!r} (built-ins: {', '.join(BUILTIN_GRAPHS)})")


def format_graph(graph: FactorGraph) -> str:
    lines = [f"{graph.num_pre} {graph.num_users}"]
    lines += [" ".join(str(int(x)) for x in row) for row in graph.matrix]
    return "\n".join(lines) + "\n"


def parse_graph(text: str, name: str = "custom") -> FactorGraph:
    """Parse the plain-text format: ``F V`` then F rows of V 0/1 digits."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 2:
        raise ValueError("graph file must start with 'F V'")
    f, v = (int(x) for x in lines[0])
    rows = lines[1:]
    if len(rows) != f or any(len(r) != v for r in rows):
        raise ValueError(f"graph file body does not match header {f}x{v}")
    return FactorGraph([[int(x) for x in r] for r in rows], name=name)


def load_graph(path) -> FactorGraph:
    path = Path(path)
    return parse_graph(path.read_text(), name=path.stem)


def save_graph(graph: FactorGraph, path) -> None:
    Path(path).write_text(format_graph(graph))
