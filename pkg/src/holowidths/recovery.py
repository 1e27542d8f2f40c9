"""Block basis pursuit and the associated recovery constants.

Solves ``min sum_j ||z_j||_2  s.t.  A z = f`` for ``z`` in ``(R^K)^N`` with
a primal-dual (Chambolle-Pock) iteration. The proximal map of the block
1-norm is blockwise soft-thresholding; the equality constraint enters
through the dual variable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .legendre import CoefficientVector, TestFunction, expansion_function
from .multiindex import IndexSet
from .sampling import Measurements, SketchOperator


@dataclass(frozen=True)
class BPSolution:
    blocks: np.ndarray
    residual_norm: float
    objective: float
    iterations: int
    converged: bool

    def coefficients(self, index_set: IndexSet) -> CoefficientVector:
        return CoefficientVector(index_set, self.blocks)

    def save(self, csv_path, index_set: IndexSet) -> None:
        """Write the blocks as a coefficient CSV plus a ``.json`` sidecar."""
        csv_path = Path(csv_path)
        csv_path.write_text(self.coefficients(index_set).to_csv())
        meta = {"residual_norm": self.residual_norm, "objective": self.objective,
                "iterations": self.iterations, "converged": self.converged}
        csv_path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, csv_path) -> tuple["BPSolution", IndexSet]:
        csv_path = Path(csv_path)
        coeffs = CoefficientVector.load(csv_path)
        meta = json.loads(csv_path.with_suffix(".json").read_text())
        sol = cls(np.array(coeffs.blocks), float(meta["residual_norm"]), float(meta["objective"]),
                  int(meta["iterations"]), bool(meta["converged"]))
        return sol, coeffs.index_set


def block_soft_threshold(Z: np.ndarray, t: float) -> np.ndarray:
    """Proximal map of ``t * sum_j ||z_j||_2``."""
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    return Z * np.maximum(0.0, 1.0 - t / np.maximum(norms, 1e-300))


def operator_norm(A: np.ndarray, iters: int = 20) -> float:
    """Largest singular value by power iteration on ``A^T A`` from a fixed start."""
    x = np.ones(A.shape[1]) / math.sqrt(A.shape[1])
    s = 0.0
    for _ in range(iters):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        s = math.sqrt(ny)
    return s


def basis_pursuit_block(A, f, tol: float = 1e-9, max_iter: Optional[int] = None,
                        callback: Optional[Callable[[int, float, float], None]] = None,
                        norm_safety: float = 1.1) -> BPSolution:
    """Block basis pursuit by a primal-dual iteration.

    Parameters
    ----------
    A : SketchOperator or ndarray
        Measurement matrix, shape ``(m, N)``.
    f : Measurements or ndarray
        Observed blocks, shape ``(m, K)``.
    tol : float
        Stop once ``||A z - f|| <= tol * max(1, ||f||)`` and the relative
        change of the objective over one step is at most ``tol``.
    max_iter : int, optional
        Iteration cap, default ``50 N``. Hitting it is reported through
        ``converged=False`` rather than an exception.
    callback : callable, optional
        Called as ``callback(iteration, residual, objective)`` every 100
        iterations and at exit.
    """
    M = A.matrix if isinstance(A, SketchOperator) else np.asarray(A, dtype=float)
    F = f.blocks if isinstance(f, Measurements) else np.asarray(f, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    m, N = M.shape
    if F.shape[0] != m:
        raise ValueError(f"measurements have {F.shape[0]} rows, operator has {m}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    max_iter = 50 * N if max_iter is None else int(max_iter)
    K = F.shape[1]
    fnorm = float(np.linalg.norm(F))
    target = tol * max(1.0, fnorm)

    z = np.zeros((N, K))
    if fnorm == 0.0:
        return BPSolution(z, 0.0, 0.0, 0, True)

    L = operator_norm(M) * norm_safety
    tau = sigma = 1.0 / L
    y = np.zeros((m, K))
    zbar = z.copy()
    obj = 0.0
    res = fnorm
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        y = y + sigma * (M @ zbar - F)
        z_new = block_soft_threshold(z - tau * (M.T @ y), tau)
        zbar = 2.0 * z_new - z
        z = z_new
        new_obj = float(np.linalg.norm(z, axis=1).sum())
        res = float(np.linalg.norm(M @ z - F))
        change = abs(new_obj - obj) / max(new_obj, 1e-300)
        obj = new_obj
        if callback is not None and it % 100 == 0:
            callback(it, res, obj)
        if res <= target and change <= tol:
            converged = True
            break
    if callback is not None:
        callback(it, res, obj)
    return BPSolution(z, res, obj, it, converged)


def unknown_reconstruct(sol: BPSolution, index_set: IndexSet) -> TestFunction:
    """``sum_{nu in Lambda} z_nu Psi_nu`` from a basis pursuit solution."""
    return expansion_function(sol.coefficients(index_set))


def rnsp_constants(rho: float) -> tuple[float, float]:
    """``C1 = 2(1+rho)/(1-rho)`` and ``C2 = 2(1+rho)**2/(1-rho)``."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    return 2.0 * (1 + rho) / (1 - rho), 2.0 * (1 + rho) ** 2 / (1 - rho)


def rnsp_error_bounds(rho: float, s: int, sigma_s_1: float) -> tuple[float, float]:
    """``(C1 sigma, C2 sigma / sqrt(s))`` for the ℓ1 and ℓ2 recovery errors."""
    if s < 1:
        raise ValueError("s must be >= 1")
    if sigma_s_1 < 0:
        raise ValueError("sigma_s_1 must be >= 0")
    c1, c2 = rnsp_constants(rho)
    return c1 * sigma_s_1, c2 * sigma_s_1 / math.sqrt(s)


def block_best_s_term_l1(blocks: np.ndarray, s: int) -> float:
    """``sigma_s(x)_{1;V}``: sum of all but the ``s`` largest block norms."""
    norms = np.sort(np.linalg.norm(np.atleast_2d(blocks), axis=1))[::-1]
    return float(norms[s:].sum())
