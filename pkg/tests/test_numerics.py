import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmeter.errors import DomainError
from qmeter.numerics import (
    NATURAL,
    TWO,
    Entropy,
    ProbVector,
    assoc_laguerre,
    block_entropies,
    log_factorial,
    poisson_log_pmf,
    poisson_tail_bound,
    poisson_weights,
    shannon_entropy,
    thermal_entropy,
    thermal_weights,
    truncation_cutoff,
    vn_entropy_2x2,
)
from qmeter.states import QubitState


@st.composite
def qubit_states(draw):
    x, y, z = (draw(st.floats(-1, 1)) for _ in range(3))
    r = math.sqrt(x * x + y * y + z * z)
    shrink = draw(st.floats(0, 1))
    if r > 0:
        x, y, z = (shrink * c / max(r, 1.0) for c in (x, y, z))
    return QubitState.from_bloch(x, y, z)


prob_lists = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=30).filter(lambda w: sum(w) > 0)


def normalized(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


class TestProbVector:
    def test_rejects_negative_weight(self):
        with pytest.raises(DomainError):
            ProbVector([0.5, -0.1, 0.6])

    def test_rejects_excess_mass(self):
        with pytest.raises(DomainError):
            ProbVector([0.6, 0.6])

    def test_missing_mass_must_be_covered_by_tail(self):
        with pytest.raises(DomainError):
            ProbVector([0.5, 0.4])
        assert ProbVector([0.5, 0.4], tail_bound=0.1).total == pytest.approx(0.9)

    def test_weights_are_read_only(self):
        pv = ProbVector([0.25, 0.75])
        with pytest.raises(ValueError):
            pv.weights[0] = 1.0


class TestShannon:
    def test_deterministic(self):
        assert shannon_entropy(ProbVector([1.0])).value == 0.0

    def test_fair_coin_in_bits(self):
        assert shannon_entropy(ProbVector([0.5, 0.5]), TWO).value == pytest.approx(1.0, abs=1e-15)

    def test_negative_weight_is_domain_error(self):
        with pytest.raises(DomainError):
            shannon_entropy([0.5, -0.5])

    def test_poisson_9_against_high_precision_sum(self):
        lam = 9.0
        pv = poisson_weights(lam)
        assert pv.tail_bound <= 1e-10
        mpmath.mp.dps = 50
        ref = mpmath.mpf(0)
        for n in range(len(pv)):
            p = mpmath.e ** (-lam) * mpmath.mpf(lam) ** n / mpmath.factorial(n)
            ref -= p * mpmath.log(p)
        assert shannon_entropy(pv).value == pytest.approx(float(ref), abs=1e-10)

    @given(prob_lists)
    def test_bits_equal_nats_over_ln2(self, w):
        p = normalized(w)
        nats = shannon_entropy(p, NATURAL).value
        bits = shannon_entropy(p, TWO).value
        assert bits == pytest.approx(nats / math.log(2), rel=1e-12, abs=1e-15)
        assert nats >= 0

    @given(prob_lists, st.randoms(use_true_random=False))
    def test_permutation_invariance(self, w, rnd):
        p = list(normalized(w))
        q = p[:]
        rnd.shuffle(q)
        assert shannon_entropy(q).value == pytest.approx(shannon_entropy(p).value, abs=1e-13)

    def test_entropy_conversion(self):
        e = Entropy(math.log(2), NATURAL)
        assert e.bits == pytest.approx(1.0)
        assert e.to(TWO).to(NATURAL).value == pytest.approx(math.log(2))
        with pytest.raises(DomainError):
            Entropy(-1.0)


class TestVonNeumann:
    def test_pure_state(self):
        assert vn_entropy_2x2(QubitState.ground()).value == 0.0

    def test_maximally_mixed(self):
        assert vn_entropy_2x2(QubitState(0.5, 0.5, 0)).value == pytest.approx(math.log(2), abs=1e-15)

    def test_closed_form_value(self):
        c = 0.5 * math.exp(-4.5)
        mpmath.mp.dps = 40
        lam = [mpmath.mpf(1) / 2 + mpmath.mpf(c), mpmath.mpf(1) / 2 - mpmath.mpf(c)]
        ref = -sum(v * mpmath.log(v, 2) for v in lam)
        got = vn_entropy_2x2(QubitState(0.5, 0.5, c), TWO).value
        assert got == pytest.approx(float(ref), abs=1e-14)
        assert round(got, 5) == 0.99991

    def test_non_psd_is_rejected(self):
        with pytest.raises(DomainError):
            QubitState(0.5, 0.5, 0.6)

    @settings(max_examples=1000)
    @given(qubit_states())
    def test_matches_numeric_eigenvalues(self, q):
        ev = np.clip(np.linalg.eigvalsh(q.matrix()), 0, None)
        assert vn_entropy_2x2(q).value == pytest.approx(shannon_entropy(ev).value, abs=1e-12)

    def test_block_entropies_of_subnormalized_blocks(self):
        pg = np.array([0.2, 0.0, 0.1])
        pe = np.array([0.2, 0.0, 0.3])
        coh = np.array([0.0, 0.0, math.sqrt(0.03)])
        s = block_entropies(pg, pe, coh)
        assert s[0] == pytest.approx(math.log(2))
        assert s[1] == 0.0
        assert s[2] == pytest.approx(0.0, abs=1e-12)


class TestLogFactorial:
    def test_small(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(1) == 0.0

    @pytest.mark.parametrize("n", [170, 255, 256, 257, 1000, 12345])
    def test_against_big_integer(self, n):
        mpmath.mp.dps = 40
        ref = mpmath.log(mpmath.mpf(math.factorial(n)))
        assert log_factorial(n) == pytest.approx(float(ref), rel=1e-12)

    def test_vectorized_matches_scalar(self):
        ns = np.array([0, 3, 100, 256, 300, 5000])
        assert np.allclose(log_factorial(ns), [log_factorial(int(n)) for n in ns], rtol=0, atol=1e-12)

    def test_negative_is_error(self):
        with pytest.raises(DomainError):
            log_factorial(-1)


def laguerre_expansion(m, k, x):
    """L_m^k(x) = sum_i (-1)^i C(m+k, m-i) x^i / i!, evaluated in exact rationals."""
    xq = Fraction(x)
    total = Fraction(0)
    for i in range(m + 1):
        total += (-1) ** i * math.comb(m + k, m - i) * xq**i / math.factorial(i)
    return float(total)


class TestLaguerre:
    def test_degree_zero(self):
        assert assoc_laguerre(0, 3, 2.5) == 1.0

    def test_degree_one(self):
        assert assoc_laguerre(1, 0, 0.7) == pytest.approx(1 - 0.7)

    def test_l52_at_3_7(self):
        ref = laguerre_expansion(5, 2, "3.7")
        assert assoc_laguerre(5, 2, 3.7) == pytest.approx(ref, rel=1e-10)

    @given(st.integers(0, 25), st.integers(0, 10), st.floats(0, 30))
    def test_recurrence_matches_expansion(self, m, k, x):
        ref = laguerre_expansion(m, k, x)
        got = assoc_laguerre(m, k, x)
        scale = sum(math.comb(m + k, m - i) * x**i / math.factorial(i) for i in range(m + 1))
        assert abs(got - ref) <= 1e-11 * scale

    def test_broadcasts_over_k(self):
        ks = np.arange(4)
        got = assoc_laguerre(3, ks, 1.3)
        assert np.allclose(got, [laguerre_expansion(3, int(k), 1.3) for k in ks])


class TestPoisson:
    @pytest.mark.parametrize("lam", [0.0, 0.3, 9.0, 100.0, 2500.0])
    def test_truncation_rule_keeps_mass(self, lam):
        n_max = truncation_cutoff(lam)
        assert n_max == math.ceil(lam + 10 * math.sqrt(lam)) + 25
        w = np.exp(poisson_log_pmf(np.arange(n_max + 1), lam))
        assert math.fsum(w) >= 1 - 1e-12
        assert poisson_tail_bound(lam, n_max) <= 1e-10

    @pytest.mark.parametrize("lam", [60.0, 1e3, 2e5])
    def test_large_intensity_pmf_accuracy(self, lam):
        mpmath.mp.dps = 40
        for n in (1, int(lam) - 3 * int(math.sqrt(lam)), int(lam), int(lam + 5 * math.sqrt(lam))):
            ref = mpmath.e ** (n * mpmath.log(lam) - lam - mpmath.loggamma(n + 1))
            assert math.exp(poisson_log_pmf(np.array([n]), lam)[0]) == pytest.approx(float(ref), rel=1e-11)

    def test_tail_bound_dominates_true_tail(self):
        lam, n_max = 4.0, 12
        true_tail = 1 - math.fsum(np.exp(poisson_log_pmf(np.arange(n_max + 1), lam)))
        assert poisson_tail_bound(lam, n_max) >= true_tail

    def test_no_overflow_at_lambda_100(self):
        pv = poisson_weights(100.0)
        assert np.all(np.isfinite(pv.weights))
        assert pv.total == pytest.approx(1.0, abs=1e-12)


class TestThermal:
    def test_weights_and_tail(self):
        pv = thermal_weights(3.0)
        assert pv.tail_bound <= 1e-13
        assert pv.weights[0] == pytest.approx(1 - math.exp(-3))

    def test_entropy_matches_summation(self):
        bw = 0.7
        pv = thermal_weights(bw)
        assert thermal_entropy(bw) == pytest.approx(shannon_entropy(pv).value, abs=1e-11)
