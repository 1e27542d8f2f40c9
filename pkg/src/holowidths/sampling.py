"""Sampling operators for known and unknown anisotropy.

Known anisotropy: pick an index set ``S`` from ``b`` and sample the
Legendre coefficients on ``S`` directly. Unknown anisotropy: take the
hyperbolic cross ``Lambda`` sized from ``m`` alone and observe ``A c_Lambda``
for a seeded Gaussian matrix ``A``.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anisotropy import AnisotropySequence
from .legendre import (CoefficientVector, TestFunction, compute_coefficients,
                       expansion_function, DEFAULT_NODE_BUDGET)
from .multiindex import IndexSet, MultiIndex, hyperbolic_cross, monotone_majorant

WEIGHT_FLOOR = 1e-12
# theoretical constant of the measurement-count condition; desk runs use 1
THEORETICAL_MEASUREMENT_CONSTANT = 80.098 * (2.0 * math.sqrt(2.0) + 1.0) ** 2


def _dim_weights(b: AnisotropySequence, ndims: int) -> np.ndarray:
    # log(1 + 1/b~_k) on the monotone majorant, so weights increase with k
    bt = np.maximum(monotone_majorant(np.append(b.entries(ndims), 0.0))[:ndims], WEIGHT_FLOOR)
    return np.log1p(1.0 / bt)


def choose_set_known(b: AnisotropySequence, s: int, family: str = "holomorphic") -> IndexSet:
    """Anchored index set of size ``s`` ranked by a surrogate weight.

    Each index gets ``u_nu = sum_k nu_k log(1 + 1/max(b~_k, 1e-12))`` with
    ``b~`` the monotone majorant of ``b``; smaller is more important. Ties
    are broken by the graded order of :class:`IndexSet`.

    ``family="holomorphic"`` grows the set best-first over the anchored
    frontier, so the result is always anchored and the sets are nested in
    ``s``. ``family="order_one"`` restricts candidates to ``{0} u {e_k}``,
    matching functions whose expansion lives there.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    zero = MultiIndex.zero()
    if family == "order_one":
        k = s - 1
        w = _dim_weights(b, max(k, 1))
        order = np.argsort(w[:k], kind="stable")
        return IndexSet([zero] + [MultiIndex.unit(int(i) + 1) for i in order])
    if family != "holomorphic":
        raise ValueError(f"unknown family {family!r}")

    cache = {"w": _dim_weights(b, 8)}

    def weight(k: int) -> float:
        w = cache["w"]
        if k > len(w):
            cache["w"] = w = _dim_weights(b, 2 * k)
        return float(w[k - 1])

    def u(nu: MultiIndex) -> float:
        return sum(e * weight(d) for d, e in nu.items)

    chosen: set = set()
    heap: list = []
    top = 0

    def push(nu):
        if nu not in chosen:
            heapq.heappush(heap, (u(nu), nu.sort_key(), nu))

    push(zero)
    while len(chosen) < s and heap:
        _, _, nu = heapq.heappop(heap)
        if nu in chosen or any(lo not in chosen for lo in nu.lower_neighbours()):
            continue
        j = nu.unit_dim()
        if j is not None and j > 1 and MultiIndex.unit(j - 1) not in chosen:
            continue
        chosen.add(nu)
        top = max(top, nu.max_dim)
        for k in range(1, top + 1):
            push(nu.shifted(k))
        if nu.is_zero() or j == top:
            push(MultiIndex.unit(top + 1))
    return IndexSet(chosen)


def known_sample(f: TestFunction, S: IndexSet, q: int, node_budget: int = DEFAULT_NODE_BUDGET) -> CoefficientVector:
    """Coefficients ``(<f, Psi_nu>)_{nu in S}``."""
    return compute_coefficients(f, S, q, node_budget)


def known_reconstruct(coeffs: CoefficientVector) -> TestFunction:
    """``sum_{nu in S} c_nu Psi_nu`` as an evaluable function."""
    return expansion_function(coeffs)


@dataclass
class SketchOperator:
    """Seeded ``m x N`` Gaussian matrix with entries ``N(0, 1)/sqrt(m)``.

    The matrix is regenerated from ``seed`` on first use; it is never
    stored on disk.
    """

    m: int
    index_set: IndexSet
    seed: int
    _matrix: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.index_set) < 1:
            raise ValueError("index set must be nonempty")

    @property
    def N(self) -> int:
        return len(self.index_set)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            rng = np.random.default_rng(self.seed)
            A = rng.standard_normal((self.m, self.N)) / math.sqrt(self.m)
            A.setflags(write=False)
            self._matrix = A
        return self._matrix

    def apply(self, blocks) -> np.ndarray:
        """Blockwise action ``(A z)_i = sum_j a_ij z_j`` on an ``(N, K)`` array."""
        Z = np.asarray(blocks, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        if Z.shape[0] != self.N:
            raise ValueError(f"expected {self.N} blocks, got {Z.shape[0]}")
        return self.matrix @ Z

    def to_text(self) -> str:
        return f"{self.m} {self.N} {self.seed}\n" + self.index_set.to_text()

    @classmethod
    def from_text(cls, text: str) -> "SketchOperator":
        header, _, rest = text.partition("\n")
        m, N, seed = (int(x) for x in header.split())
        S = IndexSet.from_text(rest)
        if len(S) != N:
            raise ValueError(f"header says N={N} but index set has {len(S)} members")
        return cls(m, S, seed)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "SketchOperator":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Measurements:
    blocks: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.blocks, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        object.__setattr__(self, "blocks", B)

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "k", "value"])
        for i, row in enumerate(self.blocks):
            for k, v in enumerate(row):
                w.writerow([i, k, format(float(v), ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Measurements":
        rows = list(csv.DictReader(io.StringIO(text)))
        m = max(int(r["i"]) for r in rows) + 1
        K = max(int(r["k"]) for r in rows) + 1
        B = np.zeros((m, K))
        for r in rows:
            B[int(r["i"]), int(r["k"])] = float(r["value"])
        return cls(B)


def gaussian_sketch(m: int, index_set: IndexSet, seed: int) -> SketchOperator:
    return SketchOperator(m, index_set, int(seed))


def cross_size_for(m: int) -> int:
    """``ceil(m / log(m)**2)`` with the natural log."""
    if m < 3:
        raise ValueError("m must be >= 3")
    return math.ceil(m / math.log(m) ** 2)


def unknown_sample(f: TestFunction, m: int, seed: int, q: int,
                   node_budget: int = DEFAULT_NODE_BUDGET):
    """Gaussian-sketch measurements ``A c_Lambda`` on the hyperbolic cross.

    Returns ``(Measurements, SketchOperator, Lambda)``.
    """
    Lam = hyperbolic_cross(cross_size_for(m))
    coeffs = compute_coefficients(f, Lam, q, node_budget)
    A = gaussian_sketch(m, Lam, seed)
    return Measurements(A.apply(coeffs.blocks)), A, Lam


def measurement_bound(s: int, N: int, eps: float, c_const: float = 1.0) -> int:
    """``ceil(c (s log(2N/s) + log(2/eps)))`` with natural logs; ``s = 0`` drops the first term."""
    if s < 0 or N < 1 or not 0 < eps < 1 or c_const <= 0:
        raise ValueError("need s >= 0, N >= 1, 0 < eps < 1, c > 0")
    first = s * math.log(2.0 * N / s) if s > 0 else 0.0
    return math.ceil(c_const * (first + math.log(2.0 / eps)))
