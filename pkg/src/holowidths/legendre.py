"""Tensor Legendre expansions under the uniform probability measure.

The univariate basis is ``Psi_n = sqrt(2n+1) P_n`` with ``P_n(1) = 1``,
orthonormal for ``dy/2`` on ``[-1, 1]``; multivariate functions use the
product ``Psi_nu(y) = prod_k Psi_{nu_k}(y_k)``. Codomain values live in
``R^K`` with the Euclidean norm.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .anisotropy import AnisotropySequence
from .multiindex import IndexSet, MultiIndex

DEFAULT_NODE_BUDGET = 10 ** 8
_CHUNK = 1 << 15


class NodeBudgetError(RuntimeError):
    """Raised when a tensor quadrature grid would exceed the node budget."""


def legendre_table(max_degree: int, y) -> np.ndarray:
    """Orthonormal Legendre values, shape ``(max_degree + 1,) + y.shape``."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1.0):
        raise ValueError("Legendre evaluation is only defined on [-1, 1]")
    out = np.empty((max_degree + 1,) + y.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = y
    # classical three-term recurrence, then scale all rows at once
    for n in range(1, max_degree):
        out[n + 1] = ((2 * n + 1) * y * out[n] - n * out[n - 1]) / (n + 1)
    scale = np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return out * scale.reshape((-1,) + (1,) * y.ndim)


def legendre_eval(degree: int, y: float) -> float:
    if degree < 0:
        raise ValueError("degree must be >= 0")
    return float(legendre_table(degree, y)[degree])


def tensor_legendre_eval(nu: MultiIndex, y) -> float:
    """``Psi_nu(y)`` where ``y[k-1]`` is coordinate ``k``."""
    y = np.asarray(y, dtype=float)
    if nu.max_dim > y.shape[-1]:
        raise ValueError(f"point has {y.shape[-1]} coordinates, index needs dimension {nu.max_dim}")
    val = 1.0
    for d, e in nu.items:
        val *= legendre_eval(e, y[d - 1])
    return val


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return len(self.nodes)


def gauss_legendre_rule(q: int, tol: float = 1e-14, max_newton: int = 100) -> QuadratureRule:
    """``q``-point Gauss-Legendre rule with weights summing to one.

    Nodes are roots of ``P_q`` found by Newton's method from the usual
    cosine initial guesses.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    i = np.arange(1, q + 1)
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(max_newton):
        p0, p1 = np.ones_like(x), x.copy()
        for n in range(1, q):
            p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
        if q == 1:
            p0, p1 = np.ones_like(x), x
        dp = q * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    # derivative at the converged nodes
    p0, p1 = np.ones_like(x), x.copy()
    for n in range(1, q):
        p0, p1 = p1, ((2 * n + 1) * x * p1 - n * p0) / (n + 1)
    if q == 1:
        p0 = np.ones_like(x)
    dp = q * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    return QuadratureRule(nodes=x, weights=w / w.sum())


@dataclass(frozen=True)
class CoefficientVector:
    """One codomain block per index of ``index_set``; ``blocks`` has shape (N, K)."""

    index_set: IndexSet
    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.atleast_2d(np.asarray(self.blocks, dtype=float))
        if len(self.index_set) == 0:
            blocks = blocks.reshape(0, blocks.shape[-1] if blocks.size else 1)
        if blocks.shape[0] != len(self.index_set):
            raise ValueError(f"{blocks.shape[0]} blocks for {len(self.index_set)} indices")
        if not np.all(np.isfinite(blocks)):
            raise ValueError("blocks must be finite")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def zeros(cls, index_set: IndexSet, K: int = 1) -> "CoefficientVector":
        return cls(index_set, np.zeros((len(index_set), K)))

    @property
    def K(self) -> int:
        return self.blocks.shape[1]

    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.blocks, axis=1)

    def norm(self, p: float = 2.0) -> float:
        """Mixed norm ``||c||_{p;V}``."""
        return float(np.linalg.norm(self.block_norms(), ord=p)) if len(self.index_set) else 0.0

    def get(self, nu: MultiIndex) -> np.ndarray:
        if nu in self.index_set:
            return self.blocks[self.index_set.index(nu)]
        return np.zeros(self.K)

    def restrict(self, index_set: IndexSet) -> "CoefficientVector":
        """Coefficients on ``index_set`` (zero where absent here)."""
        return CoefficientVector(index_set, np.array([self.get(nu) for nu in index_set]).reshape(-1, self.K))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "k", "value"])
        for nu, row in zip(self.index_set, self.blocks):
            for k, v in enumerate(row):
                w.writerow([nu.to_text(), k, format(float(v), ".17g")])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CoefficientVector":
        rows = list(csv.DictReader(io.StringIO(text)))
        order: list[MultiIndex] = []
        vals: dict = {}
        K = 0
        for r in rows:
            nu = MultiIndex.from_text(r["index"])
            k = int(r["k"])
            if nu not in vals:
                order.append(nu)
                vals[nu] = {}
            vals[nu][k] = float(r["value"])
            K = max(K, k + 1)
        S = IndexSet(order)
        blocks = np.zeros((len(S), max(K, 1)))
        for nu, d in vals.items():
            for k, v in d.items():
                blocks[S.index(nu), k] = v
        return cls(S, blocks)

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path) -> "CoefficientVector":
        return cls.from_csv(Path(path).read_text())


def l2_distance(a: CoefficientVector, b: CoefficientVector) -> float:
    """``L2`` distance of two expansions, via Parseval on the union of supports."""
    union = a.index_set.union(b.index_set)
    return float(np.linalg.norm(a.restrict(union).blocks - b.restrict(union).blocks))


@dataclass(frozen=True)
class TestFunction:
    """Map from ``[-1,1]^d`` to ``R^K`` with optional ground truth.

    ``evaluate`` takes points of shape ``(P, d)`` and returns ``(P, K)``.
    ``multiaffine`` declares that ``f`` is affine in each coordinate
    separately; quadrature can then integrate out unused coordinates by
    fixing them at 0, which is exact and avoids full tensor grids in high
    dimension.
    """

    __test__ = False  # keep pytest from collecting this class

    active_dims: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    K: int = 1
    truth_coeffs: Optional[CoefficientVector] = None
    anisotropy: Optional[AnisotropySequence] = None
    sup_bound: Optional[float] = None
    multiaffine: bool = False

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        Y = np.atleast_2d(y)
        if Y.shape[1] < self.active_dims:
            raise ValueError(f"points need {self.active_dims} coordinates, got {Y.shape[1]}")
        out = np.asarray(self.evaluate(Y[:, : self.active_dims]), dtype=float).reshape(len(Y), self.K)
        return out[0] if single else out

    def l2_norm(self) -> float:
        if self.truth_coeffs is None:
            raise ValueError("L2 norm by Parseval needs truth coefficients")
        return self.truth_coeffs.norm(2)


def evaluate_expansion(coeffs: CoefficientVector, Y: np.ndarray) -> np.ndarray:
    """``sum_nu c_nu Psi_nu(y)`` at points ``Y`` of shape ``(P, d)``."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    S = coeffs.index_set
    out = np.zeros((len(Y), coeffs.K))
    if len(S) == 0:
        return out
    dims = S.dims
    if dims and dims[-1] > Y.shape[1]:
        raise ValueError(f"points need {dims[-1]} coordinates, got {Y.shape[1]}")
    deg = max(S.max_degree, 0)
    tables = {d: legendre_table(deg, Y[:, d - 1]) for d in dims}
    for nu, block in zip(S, coeffs.blocks):
        if not block.any():
            continue
        psi = np.ones(len(Y))
        for d, e in nu.items:
            psi = psi * tables[d][e]
        out += np.outer(psi, block)
    return out


def expansion_function(coeffs: CoefficientVector, active_dims: Optional[int] = None) -> TestFunction:
    """Truncated expansion as a TestFunction carrying its own coefficients."""
    d = coeffs.index_set.max_dim if active_dims is None else active_dims
    return TestFunction(
        active_dims=max(d, 1),
        evaluate=lambda Y: evaluate_expansion(coeffs, Y),
        K=coeffs.K,
        truth_coeffs=coeffs,
        multiaffine=coeffs.index_set.max_degree <= 1,
    )


def _tensor_integrate(func, dims_count: int, rule: QuadratureRule, psi_rows, K: int) -> np.ndarray:
    """``sum_nodes w(y) func(y) psi_row(y)`` over a full tensor grid.

    ``psi_rows`` is a list of ``(local_dims, exps)`` pairs; each gives the
    test polynomial ``prod Psi_{e}(y_local_dim)``. Returns ``(len(psi_rows), K)``.
    """
    q = rule.order
    total = q ** dims_count
    V = legendre_table(q - 1, rule.nodes)  # (q, q): degree x node
    out = np.zeros((len(psi_rows), K))
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.array(np.unravel_index(flat, (q,) * dims_count)).T if dims_count else np.zeros((len(flat), 0), int)
        Y = rule.nodes[idx]
        w = np.prod(rule.weights[idx], axis=1)
        F = np.asarray(func(Y), dtype=float).reshape(len(flat), K) * w[:, None]
        for r, (ldims, exps) in enumerate(psi_rows):
            psi = np.ones(len(flat))
            for ld, e in zip(ldims, exps):
                psi = psi * V[e, idx[:, ld]]
            out[r] += psi @ F
    return out


def compute_coefficients(f: TestFunction, index_set: IndexSet, q: int,
                         node_budget: int = DEFAULT_NODE_BUDGET) -> CoefficientVector:
    """Legendre coefficients ``c_nu = int f Psi_nu`` by tensor Gauss quadrature.

    The per-dimension order is ``max(q, max degree + 1)``. Indices with a
    coordinate outside ``1..f.active_dims`` get exactly zero, since ``f``
    does not depend on that coordinate and ``Psi_k`` has mean zero for
    ``k >= 1``.

    For a general ``f`` the grid spans all ``f.active_dims`` coordinates.
    For a multi-affine ``f`` each support pattern ``T`` is handled on a grid
    over ``T`` only, with the remaining coordinates fixed at zero.

    Raises
    ------
    NodeBudgetError
        If the total number of function evaluations would exceed ``node_budget``.
    """
    d = f.active_dims
    qe = max(int(q), index_set.max_degree + 1, 1)
    rule = gauss_legendre_rule(qe)
    blocks = np.zeros((len(index_set), f.K))
    inside = [i for i, nu in enumerate(index_set) if nu.max_dim <= d]

    if f.multiaffine:
        groups: dict = {}
        for i in inside:
            groups.setdefault(index_set[i].support, []).append(i)
        cost = sum(qe ** len(T) for T in groups)
        if cost > node_budget:
            raise NodeBudgetError(f"quadrature needs {cost} evaluations, budget is {node_budget}")
        for T, members in groups.items():
            cols = np.asarray(T, dtype=int) - 1

            def restricted(Y, cols=cols):
                full = np.zeros((len(Y), d))
                full[:, cols] = Y
                return f(full)

            rows = [(tuple(range(len(T))), tuple(e for _, e in index_set[i].items)) for i in members]
            blocks[members] = _tensor_integrate(restricted, len(T), rule, rows, f.K)
    else:
        cost = qe ** d
        if cost > node_budget:
            raise NodeBudgetError(f"quadrature needs {qe}^{d} = {cost} evaluations, budget is {node_budget}")
        rows = [(tuple(k - 1 for k in index_set[i].support), tuple(e for _, e in index_set[i].items))
                for i in inside]
        if rows:
            blocks[inside] = _tensor_integrate(f, d, rule, rows, f.K)
    return CoefficientVector(index_set, blocks)


def gram_matrix(index_set: IndexSet, q: Optional[int] = None) -> np.ndarray:
    """``[int Psi_mu Psi_nu]`` over ``index_set`` by tensor quadrature."""
    dims = index_set.dims
    qe = q if q is not None else index_set.max_degree + 1
    rule = gauss_legendre_rule(max(qe, 1))
    local = {d: i for i, d in enumerate(dims)}
    q_ = rule.order
    V = legendre_table(q_ - 1, rule.nodes)
    D = len(dims)
    G = np.zeros((len(index_set), len(index_set)))
    total = q_ ** D
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.array(np.unravel_index(flat, (q_,) * D)).T if D else np.zeros((len(flat), 0), int)
        w = np.prod(rule.weights[idx], axis=1)
        P = np.ones((len(index_set), len(flat)))
        for r, nu in enumerate(index_set):
            for dd, e in nu.items:
                P[r] *= V[e, idx[:, local[dd]]]
        G += (P * w) @ P.T
    return G


def order_one_test_function(c, v, moments=(0.0, 1.0 / math.sqrt(3.0)),
                            anisotropy: Optional[AnisotropySequence] = None,
                            p: float = 1.0) -> TestFunction:
    """``f(y) = sum_i c_i v (y_i - tau) / sigma`` on ``[-1,1]^len(c)``.

    Parameters
    ----------
    c : sequence of float
        Coordinate weights; ``c_i`` multiplies coordinate ``i + 1``.
    v : array_like
        Codomain vector (length K), must be nonzero.
    moments : (tau, sigma)
        First moment and standard deviation of the one-dimensional measure.
    anisotropy : AnisotropySequence, optional
        When given, ``|c_i| <= b_i`` is enforced and the sequence is attached.
    p : float
        Exponent of ``||c||_p`` in the sup-norm bound.

    Notes
    -----
    Under the uniform measure ``Psi_{e_i}(y) = sqrt(3) y_i``, so the exact
    coefficients are ``c_i v / (sigma sqrt 3)`` at ``e_i`` and
    ``-(tau/sigma) sum_i c_i v`` at the zero index. Indices with ``c_i = 0``
    are left out of the stored truth.
    """
    c = np.asarray(c, dtype=float).ravel()
    v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if not np.any(v):
        raise ValueError("v must be nonzero")
    tau, sigma = float(moments[0]), float(moments[1])
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if anisotropy is not None:
        b = anisotropy.entries(len(c))
        if np.any(np.abs(c) > b * (1 + 1e-12)):
            raise ValueError("|c_i| <= b_i violated for the attached anisotropy")
    K = len(v)
    nz = np.flatnonzero(c)
    members = [MultiIndex.zero()] + [MultiIndex.unit(i + 1) for i in nz]
    S = IndexSet(members)
    blocks = np.zeros((len(S), K))
    blocks[S.index(MultiIndex.zero())] = -tau / sigma * c.sum() * v
    for i in nz:
        blocks[S.index(MultiIndex.unit(i + 1))] = c[i] * v / (sigma * math.sqrt(3.0))
    cn = c[nz]

    def evaluate(Y):
        if len(nz) == 0:
            return np.zeros((len(Y), K))
        s = ((Y[:, nz] - tau) / sigma) @ cn
        return np.outer(s, v)

    bound = float(np.linalg.norm(v) / sigma * (1.0 + (abs(tau) + 1.0) * np.linalg.norm(c, ord=p)))
    return TestFunction(active_dims=max(len(c), 1), evaluate=evaluate, K=K,
                        truth_coeffs=CoefficientVector(S, blocks), anisotropy=anisotropy,
                        sup_bound=bound, multiaffine=True)
