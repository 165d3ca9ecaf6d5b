"""Concrete finite structures and the random objects built from them.

Elements of a host of size ``m`` are labelled ``1..m``; arrays are indexed
from zero internally. All structures are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

STAR = -1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OrderedGraph:
    """Simple graph on ``1..m`` with the natural vertex order."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if adj.diagonal().any():
            raise ValueError("adjacency must be irreflexive")
        object.__setattr__(self, "adjacency", _frozen(adj))

    @property
    def size(self) -> int:
        return self.adjacency.shape[0]

    def adjacent(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i - 1, j - 1])

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(i) + 1, int(j) + 1) for i, j in zip(rows, cols)]

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[tuple[int, int]]) -> OrderedGraph:
        adj = np.zeros((m, m), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError(f"loop at vertex {i}")
            adj[i - 1, j - 1] = adj[j - 1, i - 1] = True
        return cls(adj)

    @classmethod
    def complete(cls, m: int) -> OrderedGraph:
        return cls(~np.eye(m, dtype=bool))

    @classmethod
    def empty(cls, m: int) -> OrderedGraph:
        return cls(np.zeros((m, m), dtype=bool))

    def __eq__(self, other):
        return isinstance(other, OrderedGraph) and np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self):
        return hash((self.size, self.adjacency.tobytes()))

    def dumps(self) -> str:
        lines = [f"m={self.size}"] + [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> OrderedGraph:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        m = _read_header(lines)
        edges = []
        for ln in lines[1:]:
            i, j = (int(t) for t in ln.split())
            if not (1 <= i < j <= m):
                raise ValueError(f"bad edge line {ln!r}")
            edges.append((i, j))
        return cls.from_edges(m, edges)


@dataclass(frozen=True, eq=False)
class TernaryFunction:
    """Three-place function ``[m]^3 -> [m]``; ``table[x-1, y-1, z-1]`` holds the value."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        m = t.shape[0] if t.ndim else 0
        if t.shape != (m, m, m) or m < 1:
            raise ValueError("table must have shape (m, m, m) with m >= 1")
        if t.min() < 1 or t.max() > m:
            raise ValueError("entries must lie in 1..m")
        object.__setattr__(self, "table", _frozen(t))

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def __call__(self, x: int, y: int, z: int) -> int:
        return int(self.table[x - 1, y - 1, z - 1])

    def dumps(self) -> str:
        m = self.size
        lines = [f"m={m}"]
        for x in range(1, m + 1):
            for y in range(1, m + 1):
                for z in range(1, m + 1):
                    lines.append(f"{x} {y} {z} -> {self(x, y, z)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> TernaryFunction:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        m = _read_header(lines)
        table = np.zeros((m, m, m), dtype=np.int64)
        seen = 0
        for ln in lines[1:]:
            lhs, rhs = ln.split("->")
            x, y, z = (int(t) for t in lhs.split())
            table[x - 1, y - 1, z - 1] = int(rhs)
            seen += 1
        if seen != m ** 3:
            raise ValueError(f"expected {m ** 3} entries, got {seen}")
        return cls(table)


@dataclass(frozen=True, eq=False)
class BinaryFunction:
    """Total two-place function on ``1..n``."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("table must be square")
        if t.size and (t.min() < 1 or t.max() > t.shape[0]):
            raise ValueError("entries must lie in 1..n")
        object.__setattr__(self, "table", _frozen(t))

    @property
    def size(self) -> int:
        return self.table.shape[0]

    def __call__(self, x: int, y: int) -> int:
        return int(self.table[x - 1, y - 1])


@dataclass(frozen=True, eq=False)
class PartialBinaryFunction:
    """Two-place partial function on a subset ``domain`` of a host.

    ``table[a, b]`` is the value at ``(domain[a], domain[b])`` as a host label,
    or 0 when undefined.
    """

    domain: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(int(d) for d in self.domain))
        object.__setattr__(self, "table", _frozen(np.asarray(self.table, dtype=np.int64)))
        k = len(self.domain)
        if self.table.shape != (k, k):
            raise ValueError("table shape does not match domain")
        members = set(self.domain)
        if any(int(v) not in members for v in self.table.ravel() if v != 0):
            raise ValueError("defined entries must lie in the domain")

    @property
    def totally_defined(self) -> bool:
        return bool((self.table != 0).all())

    def __call__(self, x: int, y: int) -> int | None:
        pos = {d: i for i, d in enumerate(self.domain)}
        v = int(self.table[pos[x], pos[y]])
        return v or None

    def relabelled(self) -> BinaryFunction:
        """Order-preserving copy on ``1..|domain|``; requires totality."""
        if not self.totally_defined:
            raise ValueError("cannot relabel a partial function")
        lookup = np.zeros(max(self.domain, default=0) + 1, dtype=np.int64)
        lookup[list(self.domain)] = np.arange(1, len(self.domain) + 1)
        return BinaryFunction(lookup[self.table])


@dataclass(frozen=True)
class SubsetSelection:
    host_size: int
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(int(x) for x in self.members)
        if list(members) != sorted(set(members)):
            raise ValueError("members must be strictly increasing")
        if members and (members[0] < 1 or members[-1] > self.host_size):
            raise ValueError("members must lie in 1..host_size")
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    def indicator(self) -> np.ndarray:
        z = np.zeros(self.host_size, dtype=bool)
        z[[x - 1 for x in self.members]] = True
        return z

    @classmethod
    def from_indicator(cls, z: Sequence[bool]) -> SubsetSelection:
        return cls(len(z), tuple(i + 1 for i, b in enumerate(z) if b))

    def compose(self, inner: SubsetSelection) -> SubsetSelection:
        """Subset picked by ``inner`` positions inside this selection, in host labels."""
        if inner.host_size != len(self):
            raise ValueError("inner selection must be drawn from this selection")
        return SubsetSelection(self.host_size, tuple(self.members[i - 1] for i in inner.members))


@dataclass(frozen=True, eq=False)
class Restriction:
    """Partial assignment ``[m] -> {0, 1, *}``; stars are stored as ``STAR``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1 or not np.isin(v, (0, 1, STAR)).all():
            raise ValueError("restriction values must be 0, 1 or STAR")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def all_stars(cls, m: int) -> Restriction:
        return cls(np.full(m, STAR, dtype=np.int8))

    @property
    def host_size(self) -> int:
        return len(self.values)

    def __getitem__(self, var: int) -> int:
        return int(self.values[var - 1])

    def __eq__(self, other):
        return isinstance(other, Restriction) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def stars(self) -> list[int]:
        return [int(i) + 1 for i in np.flatnonzero(self.values == STAR)]

    def count(self, value: int) -> int:
        return int((self.values == value).sum())

    def balanced(self) -> bool:
        return self.count(0) == self.count(1)

    def extends(self, base: Restriction) -> bool:
        """True when every position where ``self`` differs from ``base`` is a star of ``base``."""
        diff = self.values != base.values
        return bool((base.values[diff] == STAR).all())

    def merged(self, other: Restriction) -> Restriction:
        """Fill this restriction's stars from ``other``; decided values win."""
        if other.host_size != self.host_size:
            raise ValueError("host sizes differ")
        return Restriction(np.where(self.values == STAR, other.values, self.values))

    def complete(self, star_values: Sequence[bool]) -> np.ndarray:
        """Total assignment obtained by filling the stars in increasing order."""
        out = self.values.astype(bool)
        stars = np.flatnonzero(self.values == STAR)
        out[stars] = np.asarray(star_values, dtype=bool)
        return out

    def __str__(self) -> str:
        return "".join("*" if v == STAR else str(int(v)) for v in self.values)


def _read_header(lines: list[str]) -> int:
    if not lines or not lines[0].startswith("m="):
        raise ValueError("first line must be 'm=<int>'")
    return int(lines[0][2:])


# --- samplers -------------------------------------------------------------

def sample_graph(m: int, p: float, rng: np.random.Generator) -> OrderedGraph:
    if m < 1:
        raise ValueError("m must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    upper = np.triu(rng.random((m, m)) < p, 1)
    return OrderedGraph(upper | upper.T)


def sample_subset_exact(m: int, i: int, rng: np.random.Generator) -> SubsetSelection:
    """Uniform ``i``-subset of ``1..m`` by a partial Fisher-Yates shuffle."""
    if not 0 <= i <= m:
        raise ValueError("need 0 <= i <= m")
    pool = list(range(1, m + 1))
    for k in range(i):
        j = k + int(rng.integers(m - k))
        pool[k], pool[j] = pool[j], pool[k]
    return SubsetSelection(m, tuple(sorted(pool[:i])))


def sample_ternary_function(m: int, rng: np.random.Generator) -> TernaryFunction:
    if m < 1:
        raise ValueError("m must be positive")
    return TernaryFunction(rng.integers(1, m + 1, size=(m, m, m)))


def sample_binary_function(n: int, rng: np.random.Generator) -> BinaryFunction:
    return BinaryFunction(rng.integers(1, n + 1, size=(n, n)) if n else np.zeros((0, 0)))


# --- derived structures ------------------------------------------------------

def induced_substructure(g: OrderedGraph, s: SubsetSelection) -> OrderedGraph:
    if s.host_size != g.size:
        raise ValueError("subset was drawn from a host of a different size")
    idx = [x - 1 for x in s.members]
    return OrderedGraph(g.adjacency[np.ix_(idx, idx)])


def project_function(f: TernaryFunction, s: SubsetSelection) -> PartialBinaryFunction:
    """For ``x, y`` in ``s``, take ``f(x, y, z)`` at the least ``z`` whose value lies in ``s``.

    Check ``.totally_defined`` on the result before evaluating sentences.
    """
    if s.host_size != f.size:
        raise ValueError("subset was drawn from a host of a different size")
    if not s.members:
        raise ValueError("subset must be nonempty")
    idx = [x - 1 for x in s.members]
    rows = f.table[np.ix_(idx, idx)]                 # (k, k, m): the z-sequence per pair
    hit = s.indicator()[rows - 1]
    first = hit.argmax(axis=2)
    values = np.take_along_axis(rows, first[..., None], axis=2)[..., 0]
    table = np.where(hit.any(axis=2), values, 0)
    return PartialBinaryFunction(s.members, table)


def undefinedness_bound(m: int, i: int) -> float:
    """Union bound on P(projection onto an ``i``-set is not total): ``i^2 ((m-i)/m)^m``."""
    return i * i * ((m - i) / m) ** m
