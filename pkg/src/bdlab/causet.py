"""Finite causal sets as transitively closed DAGs over bit matrices.

Elements are labeled 1..n.  The strict relation is held as an n x n 0/1
matrix A with A[i-1, j-1] = 1 iff i precedes j.  Rows and columns of the
reflexive matrix (A plus the identity) are additionally kept as packed
bit strings so that inclusive-volume queries reduce to word-parallel
popcounts.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import (
    CycleError,
    IndexOutOfRange,
    InvalidParameter,
    ReflexiveError,
    TransitivityError,
)

GENERATOR_MODELS = ("chain", "antichain", "random_order", "layered")


def _rng(seed: int) -> np.random.Generator:
    """Counter-based stream so that parallel derivations stay reproducible."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _popcount_rows(packed: np.ndarray) -> np.ndarray:
    return np.bitwise_count(packed).sum(axis=-1, dtype=np.int64)


@dataclass(frozen=True)
class CausalSet:
    """An irreflexive, asymmetric, transitively closed relation on n elements."""

    n: int
    adjacency: np.ndarray  # (n, n) uint8, strict relation

    def __post_init__(self):
        a = np.ascontiguousarray(self.adjacency, dtype=np.uint8)
        if a.shape != (self.n, self.n):
            raise InvalidParameter(f"adjacency must be {self.n}x{self.n}")
        if np.any(a > 1):
            raise InvalidParameter("adjacency entries must be 0 or 1")
        if np.any(np.diagonal(a)):
            raise ReflexiveError("relation must be irreflexive")
        if np.any(a & a.T):
            raise CycleError("relation must be asymmetric")
        reach = (a.astype(np.int64) @ a.astype(np.int64)) > 0
        if np.any(reach & (a == 0)):
            raise TransitivityError("relation must be transitively closed")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @cached_property
    def reflexive_adjacency(self) -> np.ndarray:
        """A plus the identity; invertible, unitriangular under topological order."""
        bar = self.adjacency.copy()
        np.fill_diagonal(bar, 1)
        bar.setflags(write=False)
        return bar

    @cached_property
    def _row_bits(self) -> np.ndarray:
        return np.packbits(self.reflexive_adjacency, axis=1)

    @cached_property
    def _col_bits(self) -> np.ndarray:
        return np.packbits(self.reflexive_adjacency.T, axis=1)

    @cached_property
    def related_pairs(self) -> int:
        return int(self.adjacency.sum())

    @cached_property
    def edges(self) -> np.ndarray:
        """Related pairs as 1-indexed (i, j) rows in row-major order."""
        return np.argwhere(self.adjacency != 0) + 1

    def precedes(self, i: int, j: int) -> bool:
        self._check_index(i, j)
        return bool(self.adjacency[i - 1, j - 1])

    def row_string(self, i: int) -> tuple[int, ...]:
        """Row i of the reflexive matrix as an n-bit tuple (leftmost = element 1)."""
        self._check_index(i)
        return tuple(int(b) for b in self.reflexive_adjacency[i - 1])

    def col_string(self, j: int) -> tuple[int, ...]:
        """Column j of the reflexive matrix as an n-bit tuple."""
        self._check_index(j)
        return tuple(int(b) for b in self.reflexive_adjacency[:, j - 1])

    def _check_index(self, *indices: int):
        for idx in indices:
            if not 1 <= idx <= self.n:
                raise IndexOutOfRange(f"element index {idx} outside 1..{self.n}")


def inclusive_volume(c: CausalSet, i: int, j: int) -> int:
    """Number of elements z with i <= z <= j, i.e. the row-i . column-j dot product
    of the reflexive matrix."""
    c._check_index(i, j)
    word = c._row_bits[i - 1] & c._col_bits[j - 1]
    return int(np.bitwise_count(word).sum())


def volume_row(c: CausalSet, i: int) -> np.ndarray:
    """Inclusive volumes between element i and every element, as one streamed row."""
    c._check_index(i)
    return _popcount_rows(c._row_bits[i - 1][None, :] & c._col_bits)


def transitive_closure(matrix: np.ndarray) -> np.ndarray:
    """Boolean reachability closure by repeated squaring."""
    reach = matrix.astype(bool)
    while True:
        nxt = reach | (reach.astype(np.int64) @ reach.astype(np.int64) > 0)
        if np.array_equal(nxt, reach):
            return nxt.astype(np.uint8)
        reach = nxt


def _check_acyclic(matrix: np.ndarray):
    """Kahn-style peel; raises CycleError if some cycle survives."""
    indeg = matrix.sum(axis=0).astype(np.int64)
    active = np.ones(len(matrix), dtype=bool)
    queue = [i for i in range(len(matrix)) if indeg[i] == 0]
    seen = 0
    while queue:
        v = queue.pop()
        active[v] = False
        seen += 1
        for w in np.nonzero(matrix[v])[0]:
            indeg[w] -= 1
            if indeg[w] == 0 and active[w]:
                queue.append(int(w))
    if seen != len(matrix):
        raise CycleError("relation contains a cycle")


def _validate_matrix(matrix: np.ndarray, n: int, mode: str) -> CausalSet:
    if mode not in ("strict", "close"):
        raise InvalidParameter(f"unknown validation mode {mode!r}")
    if np.any(np.diagonal(matrix)):
        raise ReflexiveError("input relates an element to itself")
    _check_acyclic(matrix)
    if mode == "close":
        return CausalSet(n, transitive_closure(matrix))
    reach = (matrix.astype(np.int64) @ matrix.astype(np.int64)) > 0
    missing = reach & (matrix == 0)
    if np.any(missing):
        i, j = np.argwhere(missing)[0] + 1
        raise TransitivityError(f"pair ({i}, {j}) implied but absent")
    return CausalSet(n, matrix)


def validate_or_close(pairs: Iterable[tuple[int, int]], n: int, mode: str = "strict") -> CausalSet:
    """Build a CausalSet from ordered pairs.

    strict mode rejects any violation of irreflexivity, acyclicity, or
    transitivity; close mode transitively closes acyclic input instead.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    matrix = np.zeros((n, n), dtype=np.uint8)
    for i, j in pairs:
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexOutOfRange(f"pair ({i}, {j}) outside 1..{n}")
        matrix[i - 1, j - 1] = 1
    return _validate_matrix(matrix, n, mode)


def topological_order(c: CausalSet) -> list[int]:
    """Kahn's algorithm; ties broken toward the smallest original label."""
    indeg = c.adjacency.sum(axis=0).astype(np.int64)
    heap = [i + 1 for i in range(c.n) if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for w in np.nonzero(c.adjacency[v - 1])[0]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, int(w) + 1)
    return order


def generate(n: int, model: str, seed: int = 0, p: float | None = None,
             width: int | None = None) -> CausalSet:
    """Deterministic test-instance generator.

    random_order relates each pair i < j with probability p and closes;
    layered stacks antichain layers of the given width.
    """
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if model == "chain":
        matrix = np.triu(np.ones((n, n), dtype=np.uint8), k=1)
    elif model == "antichain":
        matrix = np.zeros((n, n), dtype=np.uint8)
    elif model == "random_order":
        if p is None or not 0.0 <= p <= 1.0:
            raise InvalidParameter("random_order requires p in [0, 1]")
        draw = _rng(seed).random((n, n)) < p
        matrix = transitive_closure(np.triu(draw, k=1).astype(np.uint8))
    elif model == "layered":
        if width is None or width < 1:
            raise InvalidParameter("layered requires width >= 1")
        layer = np.arange(n) // width
        matrix = (layer[:, None] < layer[None, :]).astype(np.uint8)
    else:
        raise InvalidParameter(f"unknown model {model!r}; expected one of {GENERATOR_MODELS}")
    return CausalSet(n, matrix)


# -- text format ---------------------------------------------------------------
#
# Either   n=<int> followed by one "i j" line per related pair,
# or       n=<int>, a "matrix:" line, then n rows of n characters in {0,1}.

def format_causet(c: CausalSet, matrix_form: bool = False) -> str:
    lines = [f"n={c.n}"]
    if matrix_form:
        lines.append("matrix:")
        lines.extend("".join(str(int(b)) for b in row) for row in c.adjacency)
    else:
        lines.extend(f"{i} {j}" for i, j in c.edges)
    return "\n".join(lines) + "\n"


def parse_causet(text: str, mode: str = "strict") -> CausalSet:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise InvalidParameter("first line must be n=<int>")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise InvalidParameter(f"bad element count {lines[0]!r}") from None
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    if len(lines) > 1 and lines[1] == "matrix:":
        rows = lines[2:]
        if len(rows) != n or any(len(r) != n or set(r) - {"0", "1"} for r in rows):
            raise InvalidParameter("matrix block must be n rows of n characters in {0,1}")
        matrix = np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)
        return _validate_matrix(matrix, n, mode)
    pairs = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise InvalidParameter(f"bad pair line {ln!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise InvalidParameter(f"bad pair line {ln!r}") from None
    return validate_or_close(pairs, n, mode)


def read_causet(path, mode: str = "strict") -> CausalSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_causet(fh.read(), mode)


def write_causet(c: CausalSet, path, matrix_form: bool = False):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_causet(c, matrix_form))


def check_invariants(c: CausalSet):
    """Exhaustive O(n^3) re-check of the defining properties; test support."""
    a = c.adjacency
    for i in range(c.n):
        assert a[i, i] == 0
        for j in range(c.n):
            if a[i, j]:
                assert not a[j, i]
                for k in range(c.n):
                    if a[j, k]:
                        assert a[i, k]
