"""Closed-form widths of weighted balls and lower bounds on sampling widths."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .anisotropy import (AnisotropySequence, best_s_term_error, log_normalization,
                         lp_norm, named_g)

_MOMENTS = {
    "uniform": (0.0, 1.0 / math.sqrt(3.0)),
    "chebyshev": (0.0, 1.0 / math.sqrt(2.0)),
}


@dataclass(frozen=True)
class WidthQuery:
    weights: tuple
    m: int
    p: float
    q: float

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w or any(not x > 0 for x in w):
            raise ValueError("weights must be strictly positive")
        if not 0 <= self.m < len(w):
            raise ValueError(f"need 0 <= m < N, got m={self.m}, N={len(w)}")
        object.__setattr__(self, "weights", w)

    @property
    def N(self) -> int:
        return len(self.weights)


def stesin_width(query: WidthQuery) -> float:
    """Width of a weighted ℓp ball measured in ℓq, ``1 <= q < p <= inf``.

    Equals ``(sum of the N - m smallest w**r)**(1/q - 1/p)`` with
    ``r = pq/(p - q)`` (``r = q`` when ``p = inf``). Maximising the sum
    raised to a negative power picks the smallest weights, so a sort is
    enough.
    """
    p, q = query.p, query.q
    if not 1 <= q < p:
        raise ValueError(f"need 1 <= q < p <= inf, got p={p}, q={q}")
    r = q if math.isinf(p) else p * q / (p - q)
    w = np.sort(np.asarray(query.weights))[: query.N - query.m]
    expo = 1.0 / q - (0.0 if math.isinf(p) else 1.0 / p)
    return float(np.sum(w ** r) ** expo)


def discrete_width_chain(b: AnisotropySequence, N: int, m: int) -> float:
    """``(sum_{j=m+1}^N b_{pi(j)}**2)**(1/2)`` over the ``N`` largest entries of ``b``.

    ``b`` must have at least ``N`` strictly positive entries among those
    inspected (the ``N`` largest of the head and first ``N`` tail entries).
    """
    if not 0 <= m < N:
        raise ValueError(f"need 0 <= m < N, got m={m}, N={N}")
    window = b.entries(b.head_len + (0 if b.tail.vanishes else N))
    top = np.sort(window)[::-1][:N]
    if len(top) < N:
        raise ValueError(f"sequence has fewer than N={N} entries")
    return float(np.sqrt(np.sum(top[m:] ** 2)))


def gelfand_lower_bound(N: int, m: int, p: float, q: float) -> float:
    """Lower bound on the Gelfand m-width of the unit ℓp ball of R^N in ℓq.

    ``(1/2)**(2/p - 1/q) * min(1, (2p/log(3**8 e)) log(eN/m) / m)**(1/p - 1/q)``;
    the minimum is 1 when ``m = 0``.
    """
    if not 0 < p <= 1:
        raise ValueError("need 0 < p <= 1")
    if not p < q:
        raise ValueError("need p < q <= inf")
    if not 0 <= m < N:
        raise ValueError(f"need 0 <= m < N, got m={m}, N={N}")
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    if m == 0:
        mn = 1.0
    else:
        mn = min(1.0, 2.0 * p / (8.0 * math.log(3.0) + 1.0) * math.log(math.e * N / m) / m)
    return 0.5 ** (2.0 / p - inv_q) * mn ** (1.0 / p - inv_q)


def measure_moments(measure: str) -> tuple[float, float]:
    """``(tau, sigma)``: mean and standard deviation of a named measure on [-1, 1]."""
    try:
        return _MOMENTS[measure]
    except KeyError:
        raise ValueError(f"unknown measure {measure!r}; choose from {sorted(_MOMENTS)}") from None


def known_constant(b: AnisotropySequence, moments, p: float = 1.0) -> float:
    """``sigma / (1 + (1 + |tau|) ||b||_p)``.

    ``p = 1`` gives the constant of the general known-anisotropy bound; other
    ``p`` give the variant used for the flat and log families.
    """
    tau, sigma = moments
    return sigma / (1.0 + (1.0 + abs(tau)) * lp_norm(b, p))


def theta_lower_bound_known(b: AnisotropySequence, m: int, moments) -> float:
    """``C(b, tau, sigma) * sigma_m(b)_2`` with ``C`` from :func:`known_constant` at p=1."""
    return known_constant(b, moments, 1.0) * best_s_term_error(b, m, 2.0)


def unknown_constant(moments) -> float:
    tau, sigma = moments
    return sigma / (2.0 + abs(tau))


def theta_lower_bound_unknown(p: float, moments) -> float:
    """``sigma/(2 + |tau|) * 2**(1/2 - 2/p)``; does not depend on ``m``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return unknown_constant(moments) * 2.0 ** (0.5 - 2.0 / p)


def log_b_rhs(p: float, g: str, m: int, moments, cutoff: int = 1000) -> float:
    """``c' g(2m)**(-1/p) m**(1/2 - 1/p)`` with ``c' = c 2**(-1/p) c_{p,g}``, ``c = sigma/(2+|tau|)``.

    The right-hand side of the lower bound for the log-weighted family.
    """
    c_pg = log_normalization(p, g, cutoff).c_pg
    c_prime = unknown_constant(moments) * 2.0 ** (-1.0 / p) * c_pg
    gv = float(named_g(g)(2 * m))
    return c_prime * gv ** (-1.0 / p) * m ** (0.5 - 1.0 / p)
