import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from holowidths.anisotropy import (AnisotropySequence, best_s_term_error, log_normalization,
                                   make_flat_b, make_log_b, named_g)
from holowidths.legendre import gauss_legendre_rule
from holowidths.widths import (WidthQuery, discrete_width_chain, gelfand_lower_bound,
                               known_constant, log_b_rhs, measure_moments, stesin_width,
                               theta_lower_bound_known, theta_lower_bound_unknown,
                               unknown_constant)

UNIFORM = measure_moments("uniform")


def stesin_enum(w, m, p, q):
    """Maximum over (N-m)-subsets of the Stesin sum, by enumeration."""
    N = len(w)
    if math.isinf(p):
        return min(sum(w[i] ** q for i in J) ** (1 / q) for J in itertools.combinations(range(N), N - m))
    r = p * q / (p - q)
    best = max(sum(w[i] ** r for i in J) ** (1 / p - 1 / q) for J in itertools.combinations(range(N), N - m))
    return best ** -1


def test_stesin_example():
    assert stesin_width(WidthQuery((1, 2, 3), 1, 2, 1)) == pytest.approx(math.sqrt(5), abs=1e-12)
    assert stesin_enum((1, 2, 3), 1, 2, 1) == pytest.approx(math.sqrt(5), abs=1e-12)


@pytest.mark.parametrize("N,m", [(5, 0), (5, 3), (9, 4)])
def test_stesin_uniform(N, m):
    assert stesin_width(WidthQuery((1.0,) * N, m, 2, 1)) == pytest.approx(math.sqrt(N - m))


def test_stesin_random_small():
    rng = np.random.default_rng(8)
    for _ in range(30):
        N = int(rng.integers(1, 7))
        w = tuple(rng.uniform(0.1, 5, N))
        for m in range(N):
            for p, q in [(2, 1), (math.inf, 1), (math.inf, 2), (3, 2)]:
                assert stesin_width(WidthQuery(w, m, p, q)) == pytest.approx(stesin_enum(w, m, p, q), rel=1e-12)


def test_stesin_preconditions():
    with pytest.raises(ValueError):
        stesin_width(WidthQuery((1, 2), 0, 1, 2))
    with pytest.raises(ValueError):
        WidthQuery((1, 2), 2, 2, 1)
    with pytest.raises(ValueError):
        WidthQuery((1, 0), 0, 2, 1)


def test_width_chain_examples():
    for p in (0.4, 0.5, 0.8):
        for m in (1, 4, 30):
            b = make_flat_b(m, p)
            assert discrete_width_chain(b, 2 * m, m) == pytest.approx(2 ** (-1 / p) * m ** (0.5 - 1 / p), rel=1e-12)
    b = AnisotropySequence((0.9, 0.1, 0.5, 0.3))
    assert discrete_width_chain(b, 3, 2) == pytest.approx(0.3)


def test_width_chain_cross_module():
    rng = np.random.default_rng(1)
    for _ in range(50):
        h = rng.uniform(0.01, 1, int(rng.integers(2, 30)))
        b = AnisotropySequence(tuple(h))
        N = int(rng.integers(1, len(h) + 1))
        top = tuple(np.sort(h)[::-1][:N])
        for m in range(N):
            chain = discrete_width_chain(b, N, m)
            assert chain == pytest.approx(stesin_width(WidthQuery(top, m, 2, 1)), rel=1e-12)
            assert chain == pytest.approx(best_s_term_error(AnisotropySequence(top), m, 2), rel=1e-12)


def gelfand_exact(N, m, p, q):
    # high-precision reference with mpmath-free Fraction/log arithmetic
    from decimal import Decimal, getcontext

    getcontext().prec = 50
    inv_q = Decimal(0) if math.isinf(q) else Decimal(1) / Decimal(q)
    p = Decimal(str(p))
    e_ = Decimal(1).exp()
    mn = min(Decimal(1), 2 * p / (Decimal(3) ** 8 * e_).ln() * (e_ * N / m).ln() / m) if m else Decimal(1)
    return float(Decimal("0.5") ** (2 / p - inv_q) * mn ** (1 / p - inv_q))


def test_gelfand_examples():
    assert gelfand_lower_bound(10 ** 9, 1, 1, 2) == pytest.approx(2 ** -1.5, abs=1e-15)
    v = gelfand_lower_bound(100, 5, 1, 2)
    assert v == pytest.approx(0.142861854829, abs=1e-10)
    assert v == pytest.approx(gelfand_exact(100, 5, 1, 2), rel=1e-14)
    mn = 2 / math.log(3 ** 8 * math.e) * math.log(math.e * 20) / 5
    assert mn == pytest.approx(0.1633, abs=1e-4)


def test_gelfand_sweep():
    for p, q in [(1, 2), (0.5, 2), (0.5, math.inf), (1, math.inf)]:
        N = 400
        vals = [gelfand_lower_bound(N, m, p, q) for m in range(N)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert all(0 <= v <= 1 for v in vals)
        for m in (0, 1, 7, 133):
            assert vals[m] == pytest.approx(gelfand_exact(N, m, p, q), rel=1e-13)


def test_gelfand_clamping():
    # the min term saturates at 1 while (2p/log(3^8 e)) log(eN/m)/m >= 1
    c = 2 / math.log(3 ** 8 * math.e)
    N = 10 ** 12
    m_sat = [m for m in range(1, 20) if c * math.log(math.e * N / m) / m >= 1]
    for m in m_sat:
        assert gelfand_lower_bound(N, m, 1, 2) == 2 ** -1.5
    assert gelfand_lower_bound(N, max(m_sat) + 1, 1, 2) < 2 ** -1.5


def test_gelfand_preconditions():
    with pytest.raises(ValueError):
        gelfand_lower_bound(10, 2, 1.5, 2)
    with pytest.raises(ValueError):
        gelfand_lower_bound(10, 2, 1, 1)
    with pytest.raises(ValueError):
        gelfand_lower_bound(10, 10, 1, 2)


def test_moments_by_quadrature():
    r = gauss_legendre_rule(64)
    tau, sigma = measure_moments("uniform")
    assert tau == 0 and sigma == pytest.approx(math.sqrt(np.dot(r.weights, r.nodes ** 2)), abs=1e-15)
    assert sigma == pytest.approx(0.5773503, abs=1e-7)
    tau, sigma = measure_moments("chebyshev")
    second, _ = integrate.quad(lambda y: y * y / (math.pi * math.sqrt(1 - y * y)), -1, 1)
    assert tau == 0 and sigma == pytest.approx(math.sqrt(second), abs=1e-12)
    assert sigma == pytest.approx(0.7071068, abs=1e-7)
    with pytest.raises(ValueError):
        measure_moments("gaussian")


def test_theta_known_flat_example():
    b = make_flat_b(4, 0.5)
    assert known_constant(b, UNIFORM) == pytest.approx(0.513200, abs=1e-6)
    assert theta_lower_bound_known(b, 4, UNIFORM) == pytest.approx(0.0160375, abs=1e-7)


def test_theta_known_zero_and_scaling():
    b = AnisotropySequence((0.4, 0.2))
    assert theta_lower_bound_known(b, 2, UNIFORM) == 0
    b = make_flat_b(3, 0.5)
    tau, sigma = UNIFORM
    assert theta_lower_bound_known(b, 3, (tau, 2 * sigma)) == pytest.approx(2 * theta_lower_bound_known(b, 3, UNIFORM))


def test_theta_unknown():
    assert theta_lower_bound_unknown(0.5, UNIFORM) == pytest.approx(0.025516, abs=1e-6)
    ps = np.linspace(0.05, 0.95, 30)
    vals = [theta_lower_bound_unknown(p, UNIFORM) for p in ps]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        theta_lower_bound_unknown(1.0, UNIFORM)


def test_variant_constant():
    b = make_flat_b(5, 0.5)
    # ||b||_p = 1 for the flat family
    assert known_constant(b, UNIFORM, 0.5) == pytest.approx(UNIFORM[1] / 2)


@pytest.mark.parametrize("g", ["log2", "loglog"])
def test_log_b_rhs_is_below_sigma(g):
    p = 0.5
    b = make_log_b(p, g)
    c_pg = log_normalization(p, g).c_pg
    for m in (1, 2, 5, 16, 64, 128):
        rhs = log_b_rhs(p, g, m, UNIFORM)
        want = unknown_constant(UNIFORM) * 2 ** (-1 / p) * c_pg * float(named_g(g)(2 * m)) ** (-1 / p) * m ** (0.5 - 1 / p)
        assert rhs == pytest.approx(want, rel=1e-14)
        assert unknown_constant(UNIFORM) * best_s_term_error(b, m, 2) >= rhs
        assert theta_lower_bound_known(b, m, UNIFORM) >= rhs
