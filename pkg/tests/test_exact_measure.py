"""Unit tests for closedsets.exact_measure."""

from fractions import Fraction

import numpy as np
import pytest

from closedsets.encoding import Params, iota_string
from closedsets.exact_measure import (
    Log2Prob,
    chain_prob,
    pair_chain_prob,
    pair_chain_prob_binary,
    pow2,
)


class TestPow2:
    """Test exact powers of two."""

    def test_integral_exponents_are_exact(self) -> None:
        """Integer exponents give Fractions."""
        assert pow2(Fraction(-5)) == Fraction(1, 32)
        assert pow2(Fraction(3)) == 8
        assert isinstance(pow2(Fraction(-5)), Fraction)

    def test_fractional_exponent_is_float(self) -> None:
        """Non-integral exponents fall back to floats."""
        assert pow2(Fraction(1, 2)) == pytest.approx(2**0.5)


class TestLog2Prob:
    """Test probabilities stored as base-2 exponents."""

    def test_multiplication_adds_exponents(self) -> None:
        """Independent events multiply."""
        assert (Log2Prob(Fraction(-2)) * Log2Prob(Fraction(-3))).value == Fraction(1, 32)

    def test_rejects_positive_exponent(self) -> None:
        """A probability cannot exceed 1."""
        with pytest.raises(ValueError):
            Log2Prob(Fraction(1))

    def test_ordering(self) -> None:
        """Smaller exponents are smaller probabilities."""
        assert Log2Prob(Fraction(-3)) < Log2Prob(Fraction(-1))


class TestChainProb:
    """Test the single-chain membership probability."""

    def test_chain(self) -> None:
        """A length-n chain is n independent events of probability 2^-ell."""
        assert chain_prob(3, Params(2, 1)).value == Fraction(1, 8)
        assert chain_prob(2, Params(2, 2)).value == Fraction(1, 16)

    def test_root_always_present(self) -> None:
        """The empty chain has probability 1."""
        assert chain_prob(0, Params(2, 1)).value == 1


class TestPairChainProb:
    """Test the probability that two prefix chains both lie in S."""

    def test_golden_value(self) -> None:
        """k=2, ell=1, n=3, m=1 gives 2^{-5} = 1/32."""
        prob = pair_chain_prob((3, 2, 1), (3, 0, 1), Params(2, 1))
        assert prob.value == Fraction(1, 32)

    def test_equal_strings_reduce_to_chain(self) -> None:
        """sigma = tau gives chain_prob."""
        params = Params(2, 1)
        assert pair_chain_prob((1, 2), (1, 2), params) == chain_prob(2, params)

    def test_disjoint_chains(self) -> None:
        """No common prefix gives 2^{-2 n ell}."""
        assert pair_chain_prob((0, 0, 0), (1, 0, 0), Params(2, 2)).value == Fraction(1, 2**12)

    def test_unequal_lengths(self) -> None:
        """Strings must have equal length."""
        with pytest.raises(ValueError):
            pair_chain_prob((1,), (1, 2), Params(2, 1))

    @pytest.mark.parametrize("k,ell", [(1, 1), (2, 1), (2, 2), (3, Fraction(1, 2))])
    def test_increases_with_common_prefix(self, k: int, ell: Fraction) -> None:
        """For fixed n, a longer common prefix is strictly more likely."""
        params = Params(k, ell)
        for n_hat in range(1, 6):
            sigma = (0,) * n_hat
            probs = [
                pair_chain_prob(sigma, (0,) * m_hat + (1,) + (0,) * (n_hat - m_hat - 1), params)
                for m_hat in range(n_hat)
            ]
            probs.append(pair_chain_prob(sigma, sigma, params))
            assert all(a < b for a, b in zip(probs, probs[1:]))

    @pytest.mark.parametrize("k,ell", [(1, 1), (2, 1), (3, 2)])
    def test_at_least_independent_chains(self, k: int, ell: int) -> None:
        """P(both) >= P(one)^2, with equality exactly when the first symbols differ."""
        params = Params(k, ell)
        rng = np.random.default_rng(k * 10 + ell)
        for _ in range(200):
            n_hat = int(rng.integers(1, 7))
            sigma = tuple(int(a) for a in rng.integers(0, params.K, n_hat))
            tau = tuple(int(a) for a in rng.integers(0, params.K, n_hat))
            pair = pair_chain_prob(sigma, tau, params)
            single = chain_prob(n_hat, params)
            assert pair >= single * single
            assert (pair == single * single) == (sigma[0] != tau[0])


class TestPairChainProbBinary:
    """Test the binary-string form with its two coarser bounds."""

    def test_matches_kary_form(self) -> None:
        """The exact value agrees with the K-ary pair probability."""
        params = Params(2, 1)
        sigma, tau = (3, 2, 1), (3, 0, 1)
        binary = pair_chain_prob_binary(iota_string(sigma, params), iota_string(tau, params), params)
        assert binary.exact == pair_chain_prob(sigma, tau, params)

    def test_bounds_are_ordered(self) -> None:
        """exact = m' bound <= m bound."""
        params = Params(2, 1)
        prob = pair_chain_prob_binary("1110", "1111", params)
        assert prob.exact == prob.m_prime_bound
        assert prob.m_prime_bound <= prob.m_bound
        assert prob.m_bound.exponent == Fraction(1, 2) * (3 - 8)

    def test_rejects_partial_blocks(self) -> None:
        """Binary length must be a multiple of k."""
        with pytest.raises(ValueError):
            pair_chain_prob_binary("111", "110", Params(2, 1))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_m_bound_tight_on_block_boundaries(self, k: int) -> None:
        """exact = m bound exactly when the common bit prefix is a whole number of blocks."""
        params = Params(k, 1)
        rng = np.random.default_rng(k)
        for _ in range(300):
            n = k * int(rng.integers(1, 6))
            sigma = "".join(str(b) for b in rng.integers(0, 2, n))
            # share a random number of leading bits, then maybe differ
            m = int(rng.integers(0, n + 1))
            tail = "".join(str(b) for b in rng.integers(0, 2, n - m))
            tau = sigma[:m] + tail
            prob = pair_chain_prob_binary(sigma, tau, params)
            assert prob.exact <= prob.m_bound
            assert (prob.exact == prob.m_bound) == (prob.depths.m % k == 0)
