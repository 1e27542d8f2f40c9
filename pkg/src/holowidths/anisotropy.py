"""Anisotropy sequences: finite head plus a parametric tail.

Entries are indexed from 1. A sequence stores ``head = (b_1, ..., b_H)``
and a rule for ``b_i`` with ``i > H``:

* ``zero``: every later entry vanishes;
* ``algebraic``: ``b_i = scale * i**(-alpha)``;
* ``log``: ``b_i = scale * (i g(i))**(-1/p)`` for one of the named slowly
  growing functions ``g`` (the family produced by :func:`make_log_b`).

Tail power sums are evaluated in closed form (Hurwitz zeta) or by a
partial sum plus a midpoint integral estimate, never by truncation alone.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

# direct summation length before switching to the integral estimate
_LOG_DIRECT = 20000


class DivergentNormError(ValueError):
    """Raised when a requested norm or series does not converge."""


# ---------------------------------------------------------------------------
# slowly growing functions
#
# Each named g is g(n) = G(log(n + a)) with G(l) = l**2 ("log2") or
# G(l) = l (log l)**2 ("loglog"). The loglog family uses a = 2, i.e. it is
# shifted by one index, because log(n+1) (log log(n+1))**2 drops from n=1
# to n=2 and is only nondecreasing from n=2 on (see make_log_b).

_NAMED_G = {"log2": 1.0, "loglog": 2.0}


def _log_G(name: str, loglg):
    # log G(l) given log l
    if name == "log2":
        return 2.0 * loglg
    return loglg + 2.0 * np.log(loglg)


def named_g(name: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised ``g(n)`` for a named slow-growth function, shift included."""
    if name not in _NAMED_G:
        raise ValueError(f"unknown g {name!r}; choose from {sorted(_NAMED_G)}")
    a = _NAMED_G[name]
    return lambda n: np.exp(_log_G(name, np.log(np.log(np.asarray(n, dtype=float) + a))))


def _named_log_power_sum(name: str, start: int, r: float) -> tuple[float, float]:
    """``sum_{n >= start} (n g(n))**(-r)`` and an error estimate.

    Summed directly for ``_LOG_DIRECT`` terms, then the remainder is
    replaced by the midpoint integral from ``N + 1/2`` to infinity, taken
    in the variable ``s = log log x`` so that the slowly decaying
    integrands become ``1/s**2``-like and quad converges cleanly. All
    arithmetic stays in the log domain.
    """
    a = _NAMED_G[name]
    n = np.arange(start, start + _LOG_DIRECT, dtype=float)
    logterm = -r * (np.log(n) + _log_G(name, np.log(np.log(n + a))))
    direct = float(np.exp(logterm).sum())

    x0 = start + _LOG_DIRECT - 0.5

    def integrand(s):
        # x = exp(L), L = exp(s), dx = x L ds
        if s > 40.0:
            if r > 1.0:
                return 0.0
            loglg, L = s, None
        else:
            L = math.exp(s)
            loglg = math.log(L + math.log1p(a * math.exp(-L)))
        val = -r * float(_log_G(name, loglg)) + s
        if r != 1.0:
            val += (1.0 - r) * L
        return math.exp(val)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            tail, abserr = integrate.quad(integrand, math.log(math.log(x0)), np.inf,
                                          epsabs=1e-14, epsrel=1e-12, limit=200)
        except integrate.IntegrationWarning as exc:
            raise DivergentNormError(f"tail integral did not converge: {exc}") from None
    # midpoint rule error is about |f'(x0)|/24, bounded by f(x0)/x0
    f_last = math.exp(logterm[-1])
    return direct + tail, abserr + f_last / x0


def _callable_power_sum(g: Callable, start: int, r: float, cutoff: int) -> tuple[float, float]:
    """Partial sum to ``cutoff`` plus the midpoint tail integral in ``t = log x``.

    The integrand ``exp((1-r) t) / g(exp(t))**r`` is only evaluated while
    ``exp(t)`` is finite; if it is still non-negligible there the tail
    cannot be certified and the series is treated as divergent.
    """
    n = np.arange(start, cutoff + 1, dtype=float)
    gv = np.asarray(g(n), dtype=float)
    if np.any(~np.isfinite(gv)) or np.any(gv <= 0):
        raise ValueError("g must be positive and finite on the summation range")
    direct = float(((n * gv) ** (-r)).sum())
    t_max = 700.0

    def integrand(t):
        return math.exp((1.0 - r) * t) * float(g(math.exp(t))) ** (-r)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            tail, abserr = integrate.quad(integrand, math.log(cutoff + 0.5), t_max, limit=200)
        except integrate.IntegrationWarning as exc:
            raise DivergentNormError(f"series sum 1/(n g(n)) appears divergent: {exc}") from None
    leftover = integrand(t_max) * t_max
    if not np.isfinite(tail) or leftover > 1e-9:
        raise DivergentNormError("series sum 1/(n g(n)) appears divergent or too slowly convergent")
    # midpoint rule remainder, as in the named case
    f_last = float((n[-1] * gv[-1]) ** (-r))
    return direct + tail, abserr + leftover + f_last / (cutoff + 0.5)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailRule:
    kind: str = "zero"
    alpha: float = 0.0
    scale: float = 0.0
    # only for kind == "log"
    p: float = 0.0
    g: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "algebraic", "log"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("tail scale must be >= 0")
        if self.kind == "algebraic" and self.alpha <= 0:
            raise ValueError("algebraic tails need alpha > 0")
        if self.kind == "log" and (not 0 < self.p or self.g not in _NAMED_G):
            raise ValueError("log tails need p > 0 and a named g")

    @property
    def vanishes(self) -> bool:
        return self.kind == "zero" or self.scale == 0.0

    def entries(self, i: np.ndarray) -> np.ndarray:
        i = np.asarray(i, dtype=float)
        if self.vanishes:
            return np.zeros_like(i)
        if self.kind == "algebraic":
            return self.scale * i ** (-self.alpha)
        g = named_g(self.g)
        return self.scale * (i * g(i)) ** (-1.0 / self.p)

    def power_sum(self, start: int, q: float) -> float:
        """``sum_{i >= start} b_i**q`` for entries governed by this rule."""
        if self.vanishes:
            return 0.0
        if self.kind == "algebraic":
            if self.alpha * q <= 1:
                raise DivergentNormError(f"algebraic tail with alpha*q = {self.alpha * q} <= 1 diverges")
            return float(self.scale ** q * special.zeta(self.alpha * q, start))
        if q / self.p < 1:
            raise DivergentNormError("log tail power sum diverges for q < p")
        total, _ = _named_log_power_sum(self.g, start, q / self.p)
        return self.scale ** q * total


@dataclass(frozen=True)
class AnisotropySequence:
    """Non-negative sequence ``b = (b_1, b_2, ...)`` with a finite description."""

    head: tuple[float, ...]
    tail: TailRule = field(default_factory=TailRule)

    def __post_init__(self):
        arr = np.asarray(self.head, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(arr)) and np.all(arr >= 0)):
            raise ValueError("anisotropy entries must be finite and >= 0")
        object.__setattr__(self, "head", tuple(arr.tolist()))

    @classmethod
    def finite(cls, head: Sequence[float]) -> "AnisotropySequence":
        return cls(tuple(head))

    @property
    def head_len(self) -> int:
        return len(self.head)

    @property
    def finitely_supported(self) -> bool:
        return self.tail.vanishes

    def entries(self, n: int) -> np.ndarray:
        """First ``n`` entries ``b_1..b_n``."""
        h = np.asarray(self.head[:n], dtype=float)
        if n <= self.head_len:
            return h
        rest = self.tail.entries(np.arange(self.head_len + 1, n + 1))
        return np.concatenate([h, rest])

    def support_size(self) -> float:
        if not self.finitely_supported:
            return math.inf
        return int(np.count_nonzero(self.head))

    def to_json(self) -> str:
        tail = {"kind": self.tail.kind, "alpha": self.tail.alpha, "scale": self.tail.scale}
        if self.tail.kind == "log":
            tail.update(p=self.tail.p, g=self.tail.g)
        return json.dumps({"head": list(self.head), "tail": tail})

    @classmethod
    def from_json(cls, text: str) -> "AnisotropySequence":
        data = json.loads(text)
        t = data.get("tail", {"kind": "zero"})
        rule = TailRule(kind=t.get("kind", "zero"), alpha=float(t.get("alpha", 0.0)),
                        scale=float(t.get("scale", 0.0)), p=float(t.get("p", 0.0)),
                        g=str(t.get("g", "")))
        return cls(tuple(data["head"]), rule)


def lp_norm(b: AnisotropySequence, p: float) -> float:
    """``(sum_i b_i**p)**(1/p)``, or the supremum for ``p = inf``."""
    if not p > 0:
        raise ValueError("p must be > 0")
    head = np.asarray(b.head)
    if math.isinf(p):
        hmax = float(head.max()) if head.size else 0.0
        if b.tail.vanishes:
            return hmax
        # algebraic and log tails are decreasing, first tail entry is the max
        return max(hmax, float(b.tail.entries(np.array([b.head_len + 1]))[0]))
    total = float((head ** p).sum()) + b.tail.power_sum(b.head_len + 1, p)
    return total ** (1.0 / p)


def monotone_lp_norm(b: AnisotropySequence, p: float) -> float:
    """ℓp norm of the minimal monotone majorant of ``b``.

    The tails are nonincreasing, so only the head needs the running max,
    taken against the first tail entry.
    """
    from .multiindex import monotone_majorant

    if b.tail.vanishes:
        return lp_norm(AnisotropySequence(tuple(monotone_majorant(b.head))), p)
    first_tail = float(b.tail.entries(np.array([b.head_len + 1]))[0])
    ext = monotone_majorant(np.append(np.asarray(b.head), first_tail))
    return lp_norm(AnisotropySequence(tuple(ext[:-1]), b.tail), p)


def best_s_term_error(b: AnisotropySequence, s: int, q: float) -> float:
    """ℓq norm of ``b`` with its ``s`` largest entries removed.

    For a decreasing tail the ``s`` largest entries overall are among the
    head and the first ``s`` tail entries, so only that finite window is
    sorted; everything beyond it is summed through the tail rule. Ties are
    broken by original position (stable sort).
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if not 0 < q < math.inf:
        raise ValueError("q must lie in (0, inf)")
    window = b.head_len + (0 if b.tail.vanishes else s)
    vals = b.entries(window)
    order = np.argsort(-vals, kind="stable")
    leftover = vals[order[s:]]
    total = float((leftover ** q).sum()) + b.tail.power_sum(window + 1, q)
    return total ** (1.0 / q)


def stechkin_bound(b: AnisotropySequence, p: float, m: int) -> float:
    """``||b||_p (m+1)**(1/2 - 1/p)``, an upper bound on ``σ_m(b)_2`` for 0 < p < 2."""
    if not 0 < p < 2:
        raise ValueError("Stechkin's inequality needs 0 < p < 2")
    return lp_norm(b, p) * (m + 1) ** (0.5 - 1.0 / p)


def make_flat_b(m: int, p: float) -> AnisotropySequence:
    """``2m`` equal entries ``(2m)**(-1/p)``, normalised to unit ℓp norm."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return AnisotropySequence((2.0 * m) ** (-1.0 / p) * np.ones(2 * m))


def make_algebraic_b(p_star: float, scale: float, dims: int) -> AnisotropySequence:
    """``b_i = scale * i**(-1/p_star)`` for ``i <= dims``, zero beyond."""
    if not 0 < p_star < 1:
        raise ValueError("p_star must lie in (0, 1)")
    if scale <= 0:
        raise ValueError("scale must be > 0")
    i = np.arange(1, dims + 1, dtype=float)
    return AnisotropySequence(tuple(scale * i ** (-1.0 / p_star)))


@dataclass(frozen=True)
class LogNormalization:
    """Normalising constant for ``b_i = c (i g(i))**(-1/p)``.

    ``series_sum`` approximates ``sum_n 1/(n g(n))``, ``c_pg`` equals
    ``series_sum**(-1/p)`` and ``error`` bounds the absolute error of the
    series estimate (quadrature error plus midpoint-rule remainder).
    """

    c_pg: float
    series_sum: float
    error: float
    p: float


def log_normalization(p: float, g="log2", cutoff: int = 1000) -> LogNormalization:
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    if isinstance(g, str):
        if g not in _NAMED_G:
            raise ValueError(f"unknown g {g!r}; choose from {sorted(_NAMED_G)}")
        total, err = _named_log_power_sum(g, 1, 1.0)
    else:
        total, err = _callable_power_sum(g, 1, 1.0, cutoff)
    return LogNormalization(c_pg=total ** (-1.0 / p), series_sum=total, error=err, p=p)


def make_log_b(p: float, g="log2", cutoff: int = 1000) -> AnisotropySequence:
    """``b_i = c_{p,g} (i g(i))**(-1/p)`` with unit ℓp norm.

    ``g`` is ``"log2"`` for ``log(n+1)**2`` or ``"loglog"`` for
    ``log(n+1) (log log(n+1))**2``. The latter is not monotone at the start
    (it drops from n=1 to n=2), so it is used as ``n -> g(n+1)``, which is
    positive and nondecreasing from n=1. The first ``cutoff`` entries form
    the head; later entries follow the same formula through a ``log`` tail,
    so norms and best s-term errors see the whole sequence.

    A callable ``g`` is accepted for the normalising constant check but
    yields a truncated sequence (zero tail) since its tail cannot be
    described by a named rule.
    """
    if cutoff < 1000:
        raise ValueError("cutoff must be >= 1000")
    norm = log_normalization(p, g, cutoff)
    if norm.error > 1e-6:
        raise DivergentNormError(f"normalisation error {norm.error:.3g} exceeds 1e-6")
    i = np.arange(1, cutoff + 1, dtype=float)
    if isinstance(g, str):
        gv = named_g(g)(i)
        tail = TailRule(kind="log", scale=norm.c_pg, p=p, g=g)
    else:
        gv = np.asarray(g(i), dtype=float)
        tail = TailRule()
    head = norm.c_pg * (i * gv) ** (-1.0 / p)
    return AnisotropySequence(tuple(head), tail)
