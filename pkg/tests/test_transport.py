import math

import numpy as np
import pytest
from hypothesis import given
from scipy import integrate as sci

from lcx.convolve import ConvolutionClosure
from lcx.density import (
    exponential,
    laplace,
    random_logconcave,
    sup_norm,
    truncated_exponential,
    uniform,
)
from lcx.errors import NotMonotone
from lcx.transport import (
    exponentialization_chain,
    expansion_check,
    interval_mass_comparison,
    pointwise_domination,
    pushforward_cdf,
    transport_map,
)

from strategies import densities


def monotone_pair(seed):
    x = random_logconcave(seed, 4, (0, 3), monotone=True)
    y = random_logconcave(seed + 1000, 4, (0, 3), monotone=True)
    return x, y


class TestTransportMap:
    def test_exponential_is_identity(self):
        m = transport_map(exponential(1.7))
        y = np.linspace(0, 20, 41)
        assert np.allclose(m(y), y, rtol=1e-13, atol=1e-14)
        assert np.allclose(m.inverse(y), y, rtol=1e-12, atol=1e-14)
        assert np.allclose(m.derivative(y), 1.0, rtol=1e-12)

    def test_uniform(self):
        m = transport_map(uniform())
        assert m(0.5) == pytest.approx(math.log(2), rel=1e-15)
        assert m.derivative(0.5) == pytest.approx(2.0, rel=1e-15)
        assert m(0.0) == 0.0 and m(-1.0) == 0.0
        assert m(1.0) == math.inf
        assert m.inverse(math.log(2)) == pytest.approx(0.5, rel=1e-14)

    def test_target(self):
        m = transport_map(truncated_exponential(2.0, 1.0))
        assert sup_norm(m.target) == pytest.approx(m.peak)
        assert m.peak == pytest.approx(2 / (1 - math.exp(-2)))

    def test_not_monotone(self):
        with pytest.raises(NotMonotone):
            transport_map(laplace())
        with pytest.raises(NotMonotone):
            transport_map(uniform(1, 2))

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_uniform_pushforward(self, t):
        assert pushforward_cdf(transport_map(uniform()), t)[0] == pytest.approx(
            1 - math.exp(-t), abs=1e-10)

    @given(densities(monotone=True))
    def test_pushforward_is_matched_exponential(self, d):
        m = transport_map(d)
        t = np.linspace(0.01, 25 / m.peak, 50)
        assert np.allclose(pushforward_cdf(m, t), 1 - np.exp(-m.peak * t), atol=1e-9, rtol=0)

    @given(densities(monotone=True))
    def test_map_shape(self, d):
        m = transport_map(d)
        hi = min(d.support[1], float(d.knots[-1]) + 20)
        y = np.linspace(0, hi, 120, endpoint=False)
        phi = m(y)
        excess = phi - y
        assert excess[0] == 0.0
        assert np.all(excess >= -1e-12)
        assert np.all(np.diff(excess) >= -1e-9)
        dphi = np.diff(phi)
        assert np.all(np.diff(dphi) >= -1e-9 * np.maximum(1, np.abs(dphi[1:])))

    @given(densities(monotone=True))
    def test_inverse_round_trip(self, d):
        m = transport_map(d)
        u = np.linspace(0, 20 / m.peak, 30)
        assert np.allclose(m(m.inverse(u)), u, atol=1e-8, rtol=1e-9)


class TestExpansion:
    def test_exponential(self):
        assert expansion_check(transport_map(exponential(3)), np.linspace(0, 10, 50)) == \
            pytest.approx(1.0, rel=1e-12)

    @given(densities(monotone=True))
    def test_at_least_one(self, d):
        m = transport_map(d)
        hi = min(d.support[1], float(d.knots[-1]) + 20)
        assert expansion_check(m, np.linspace(0, hi, 100)) >= 1 - 1e-10

    def test_random_grid(self):
        for seed in range(30):
            d = random_logconcave(seed, 5, (0, 4), monotone=True)
            assert expansion_check(transport_map(d), np.linspace(0, 6, 100)) >= 1 - 1e-10


class TestIntervalMass:
    def test_random_triples(self):
        rng = np.random.default_rng(7)
        for seed in range(50):
            x, y = monotone_pair(seed)
            m = transport_map(y)
            a = float(rng.uniform(0, 4))
            delta = float(rng.uniform(0.05, 3))
            hi = min(y.support[1], 4.0)
            yy = float(rng.uniform(0, hi))
            lhs, rhs = interval_mass_comparison(x, m, a, delta, yy)
            assert lhs <= rhs + 1e-10, (seed, a, delta, yy)

    def test_exponential_equality(self):
        m = transport_map(exponential(1))
        lhs, rhs = interval_mass_comparison(exponential(2), m, 1.0, 0.5, 0.7)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestPointwiseDomination:
    def test_exponential_equality(self):
        w = pointwise_domination(exponential(1), exponential(1), np.linspace(0, 10, 21))
        assert abs(w) <= 1e-13

    def test_exp_uniform_against_quadrature(self):
        ys = [0.25, 0.5, 1.0, 2.0]
        assert pointwise_domination(exponential(1), uniform(), ys) >= -1e-12
        m = transport_map(uniform())
        for y in ys:
            b = float(m.inverse(y))
            rhs = sci.quad(lambda s: math.exp(-(b - s)) if b >= s else 0.0, 0, min(b, 1))[0]
            lhs = sci.quad(lambda s: math.exp(-(y - s)) * math.exp(-s), 0, y)[0]
            assert lhs <= rhs + 1e-12
            got = ConvolutionClosure(exponential(1), uniform())(b)
            assert float(got) == pytest.approx(rhs, rel=1e-10)

    def test_uniform_pair(self):
        assert pointwise_domination(uniform(), uniform(), np.linspace(0.01, 5, 50)) >= -1e-12

    def test_random(self):
        for seed in range(10):
            x, y = monotone_pair(seed)
            assert pointwise_domination(x, y, np.linspace(0, 8, 40)) >= -1e-10


class TestChain:
    def test_exponential_pair(self):
        r = exponentialization_chain(exponential(1), exponential(1), [0.5, 1, 2, math.inf])
        assert np.allclose(r.h_xy, r.h_xw, atol=1e-10)
        assert np.allclose(r.h_xw, r.h_zw, atol=1e-10)
        assert r.holds

    def test_uniform_pair_infinity(self):
        r = exponentialization_chain(uniform(), uniform(), [math.inf])
        assert r.h_xy[0] == pytest.approx(0.0, abs=1e-10)
        assert r.h_zw[0] == pytest.approx(1.0, abs=1e-10)
        # middle term: sup of the Uniform[0,1] * Exp(1) density is 1 - e^-1 at x = 1
        assert r.h_xw[0] == pytest.approx(-math.log(1 - math.exp(-1)), abs=1e-10)
        assert r.h_xy[0] <= r.h_xw[0] <= r.h_zw[0]
        assert r.holds

    def test_seed_eleven(self):
        x, y = monotone_pair(11)
        r = exponentialization_chain(x, y, [0.5, 1, 2, math.inf])
        assert all(r.ordered) and r.step1.holds and r.step2.holds
        assert min(r.margins()) >= -max(r.budget)

    def test_not_monotone(self):
        with pytest.raises(NotMonotone):
            exponentialization_chain(laplace(), exponential(1), [2])
