"""Finitely supported multi-indices and the index sets built from them.

A multi-index ``nu`` lives in the infinite product of the non-negative
integers but only ever has finitely many nonzero entries, so it is stored
as a sparse ``dim -> exponent`` map with 1-based dimensions. Index sets are
immutable, duplicate free and iterate in a fixed graded order (total degree
first, then lexicographically on the dense entries with earlier dimensions
carrying more weight, so ``e1`` precedes ``e2``).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class MultiIndex:
    """Sparse multi-index with 1-based dimensions.

    ``items`` holds ``(dim, exponent)`` pairs sorted by dimension, with every
    exponent at least 1. Use :meth:`from_map`, :meth:`from_dense` or
    :meth:`unit` rather than building ``items`` by hand.
    """

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = 0
        for dim, exp in self.items:
            if dim <= prev:
                raise ValueError(f"dimensions must be strictly increasing and >= 1: {self.items}")
            if exp < 1:
                raise ValueError(f"stored exponents must be >= 1: {self.items}")
            prev = dim

    @classmethod
    def from_map(cls, entries: Mapping[int, int]) -> "MultiIndex":
        return cls(tuple(sorted((int(d), int(e)) for d, e in entries.items() if e != 0)))

    @classmethod
    def from_dense(cls, dense: Sequence[int]) -> "MultiIndex":
        return cls(tuple((k + 1, int(e)) for k, e in enumerate(dense) if e != 0))

    @classmethod
    def unit(cls, dim: int) -> "MultiIndex":
        return cls(((int(dim), 1),))

    @classmethod
    def zero(cls) -> "MultiIndex":
        return cls(())

    def __getitem__(self, dim: int) -> int:
        for d, e in self.items:
            if d == dim:
                return e
        return 0

    def __len__(self):
        # number of nonzero entries, ||nu||_0
        return len(self.items)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.items)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.items)

    @property
    def max_dim(self) -> int:
        return self.items[-1][0] if self.items else 0

    def is_zero(self) -> bool:
        return not self.items

    def unit_dim(self) -> int | None:
        """Return ``j`` when this index is the unit vector ``e_j``, else None."""
        if len(self.items) == 1 and self.items[0][1] == 1:
            return self.items[0][0]
        return None

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def dense(self, length: int | None = None) -> tuple[int, ...]:
        length = self.max_dim if length is None else length
        if length < self.max_dim:
            raise ValueError(f"length {length} too short for support up to dimension {self.max_dim}")
        out = [0] * length
        for d, e in self.items:
            out[d - 1] = e
        return tuple(out)

    def shifted(self, dim: int, delta: int = 1) -> "MultiIndex":
        """Return ``nu + delta * e_dim``."""
        entries = self.as_dict()
        new = entries.get(dim, 0) + delta
        if new < 0:
            raise ValueError(f"exponent in dimension {dim} would become negative")
        entries[dim] = new
        return MultiIndex.from_map(entries)

    def lower_neighbours(self) -> list["MultiIndex"]:
        return [self.shifted(d, -1) for d in self.support]

    def __le__(self, other: "MultiIndex") -> bool:
        # componentwise partial order
        theirs = other.as_dict()
        return all(theirs.get(d, 0) >= e for d, e in self.items)

    def __ge__(self, other: "MultiIndex") -> bool:
        return other <= self

    def sort_key(self) -> tuple:
        # graded, then descending lex on the dense vector; within one degree
        # no item list is a strict prefix of another, so the sparse pairs
        # compare exactly like the dense vectors would
        return (self.degree, tuple((d, -e) for d, e in self.items))

    def to_text(self) -> str:
        return " ".join(f"{d}:{e}" for d, e in self.items)

    @classmethod
    def from_text(cls, line: str) -> "MultiIndex":
        line = line.strip()
        if not line:
            return cls.zero()
        entries = {}
        for tok in line.split():
            d, e = tok.split(":")
            entries[int(d)] = int(e)
        return cls.from_map(entries)

    def __repr__(self):
        return f"MultiIndex({{{', '.join(f'{d}: {e}' for d, e in self.items)}}})"


class IndexSet:
    """Immutable, ordered collection of distinct multi-indices."""

    __slots__ = ("_members", "_pos")

    def __init__(self, members: Iterable[MultiIndex] = ()):
        unique = set(members)
        self._members = tuple(sorted(unique, key=MultiIndex.sort_key))
        self._pos = {nu: i for i, nu in enumerate(self._members)}

    @property
    def members(self) -> tuple[MultiIndex, ...]:
        return self._members

    def __len__(self):
        return len(self._members)

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._members)

    def __getitem__(self, i: int) -> MultiIndex:
        return self._members[i]

    def __contains__(self, nu) -> bool:
        return nu in self._pos

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self._members == other._members

    def __hash__(self):
        return hash(self._members)

    def __repr__(self):
        return f"IndexSet(<{len(self)} members>)"

    def index(self, nu: MultiIndex) -> int:
        return self._pos[nu]

    @property
    def cardinality(self) -> int:
        return len(self._members)

    @property
    def dims(self) -> tuple[int, ...]:
        """Sorted union of supports."""
        return tuple(sorted({d for nu in self._members for d in nu.support}))

    @property
    def max_dim(self) -> int:
        return max((nu.max_dim for nu in self._members), default=0)

    @property
    def max_degree(self) -> int:
        """Largest single-coordinate exponent over the set."""
        return max((e for nu in self._members for _, e in nu.items), default=0)

    def issubset(self, other: "IndexSet") -> bool:
        return all(nu in other for nu in self._members)

    def union(self, other: Iterable[MultiIndex]) -> "IndexSet":
        return IndexSet(list(self._members) + list(other))

    def to_text(self) -> str:
        return "".join(nu.to_text() + "\n" for nu in self._members)

    @classmethod
    def from_text(cls, text: str) -> "IndexSet":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines = lines[:-1]
        return cls(MultiIndex.from_text(line) for line in lines)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "IndexSet":
        return cls.from_text(Path(path).read_text())


def hyperbolic_cross(n: int) -> IndexSet:
    """Hyperbolic cross ``{nu : prod_{nu_k != 0} (nu_k + 1) <= n, nu_k = 0 for k >= n}``.

    Generated depth first over dimensions ``1..n-1`` with the running
    product pruning each branch, so the bounding box is never enumerated.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    found: list[MultiIndex] = [MultiIndex.zero()]

    def grow(first_dim: int, prod: int, items: tuple) -> None:
        for k in range(first_dim, n):
            if 2 * prod > n:
                return
            e = 1
            while prod * (e + 1) <= n:
                nxt = items + ((k, e),)
                found.append(MultiIndex(nxt))
                grow(k + 1, prod * (e + 1), nxt)
                e += 1

    grow(1, 1, ())
    return IndexSet(found)


def hyperbolic_cross_size_bound(n: int) -> float:
    """Upper bound ``e * n^(2 + log(n-1)/log 2)`` on the cross cardinality (n >= 2)."""
    if n < 2:
        raise ValueError("the cardinality bound is stated for n >= 2")
    return float(np.e * n ** (2.0 + np.log(n - 1) / np.log(2.0)))


def _as_set(S) -> set:
    return set(S.members) if isinstance(S, IndexSet) else set(S)


def is_lower(S) -> bool:
    """True iff ``S`` is closed under the componentwise order.

    Checking immediate predecessors suffices: every ``mu <= nu`` is reached
    from ``nu`` by a chain of single-unit decrements.
    """
    members = _as_set(S)
    return all(lo in members for nu in members for lo in nu.lower_neighbours())


def is_anchored(S) -> bool:
    """True iff ``S`` is lower and ``e_j in S`` forces ``e_1, ..., e_j in S``."""
    members = _as_set(S)
    if not is_lower(members):
        return False
    for nu in members:
        j = nu.unit_dim()
        if j is not None and any(MultiIndex.unit(i) not in members for i in range(1, j)):
            return False
    return True


def monotone_majorant(z) -> np.ndarray:
    """Minimal nonincreasing majorant, ``out_i = sup_{j >= i} |z_j|``."""
    a = np.abs(np.asarray(z, dtype=float))
    if a.size == 0:
        return a
    return np.maximum.accumulate(a[::-1])[::-1]


def anchored_majorant(index_set: IndexSet, values) -> np.ndarray:
    """Minimal anchored majorant of a coefficient family over a finite lower set.

    ``values`` is either a vector of block norms or an ``(N, K)`` array of
    blocks (norms are taken row-wise). For a non-unit ``nu`` the entry is the
    largest norm over ``mu >= nu``; for ``e_j`` it is the largest norm over
    all ``mu`` that dominate some ``e_i`` with ``i >= j``. Suprema run over
    the given set only.
    """
    if not is_lower(index_set):
        raise ValueError("anchored majorant needs a lower index set")
    vals = np.asarray(values, dtype=float)
    norms = np.linalg.norm(vals, axis=1) if vals.ndim == 2 else np.abs(vals)
    if norms.shape[0] != len(index_set):
        raise ValueError(f"{norms.shape[0]} values for {len(index_set)} indices")
    members = index_set.members
    out = np.zeros(len(members))
    for i, nu in enumerate(members):
        j = nu.unit_dim()
        if j is None:
            mask = [nu <= mu for mu in members]
        else:
            mask = [mu.max_dim >= j for mu in members]
        out[i] = norms[np.asarray(mask)].max()
    return out


def anchored_frontier(members: set) -> list[MultiIndex]:
    """Indices that can be added to an anchored set keeping it anchored."""
    top = max((nu.max_dim for nu in members), default=0)
    cands = set()
    for nu in members:
        for k in range(1, top + 2):
            cand = nu.shifted(k)
            if cand not in members:
                cands.add(cand)
    out = []
    for cand in cands:
        if any(lo not in members for lo in cand.lower_neighbours()):
            continue
        j = cand.unit_dim()
        if j is not None and j > 1 and MultiIndex.unit(j - 1) not in members:
            continue
        out.append(cand)
    out.sort(key=MultiIndex.sort_key)
    return out


def random_anchored_set(size: int, rng: np.random.Generator) -> IndexSet:
    """Grow an anchored set from ``{0}`` by uniform picks from the anchored frontier."""
    if size < 1:
        raise ValueError("size must be >= 1")
    members = {MultiIndex.zero()}
    while len(members) < size:
        frontier = anchored_frontier(members)
        members.add(frontier[int(rng.integers(len(frontier)))])
    return IndexSet(members)
