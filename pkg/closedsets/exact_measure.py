"""Closed-form membership probabilities under lambda_{k,ell}.

Every string of the K-ary tree belongs to S independently with probability
2^-ell. The empty string is taken to be always present, so a chain of prefixes
of a length-n string consists of exactly n independent events.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from closedsets.encoding import BitString, Params, SplitDepths, common_prefix_length, split_depths

Number = Union[Fraction, float]


def pow2(exponent: Fraction) -> Number:
    """2**exponent, exact when the exponent is an integer."""
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        e = exponent.numerator
        return Fraction(2**e) if e >= 0 else Fraction(1, 2**-e)
    return float(2.0 ** float(exponent))


@dataclass(frozen=True, order=True)
class Log2Prob:
    """A probability stored as its exact base-2 exponent."""

    exponent: Fraction

    def __post_init__(self) -> None:
        exponent = Fraction(self.exponent)
        if exponent > 0:
            raise ValueError(f"log2 probability must be <= 0, got {exponent}")
        object.__setattr__(self, "exponent", exponent)

    def __mul__(self, other: Log2Prob) -> Log2Prob:
        return Log2Prob(self.exponent + other.exponent)

    @property
    def value(self) -> Number:
        return pow2(self.exponent)

    def __float__(self) -> float:
        return float(self.value)

    def to_dict(self) -> dict[str, object]:
        return {"exponent": str(self.exponent), "value": float(self)}


def chain_prob(n_hat: int, params: Params) -> Log2Prob:
    """Probability that a fixed length-n_hat string and all its prefixes are in S."""
    if n_hat < 0:
        raise ValueError(f"length must be nonnegative, got {n_hat}")
    return Log2Prob(-params.ell * n_hat)


def pair_chain_prob(sigma: Sequence[int], tau: Sequence[int], params: Params) -> Log2Prob:
    """Probability that two same-length prefix chains both lie in S: 2^{ell(m-2n)}."""
    if len(sigma) != len(tau):
        raise ValueError(f"strings have unequal lengths {len(sigma)} and {len(tau)}")
    n_hat = len(sigma)
    m_hat = common_prefix_length(sigma, tau)
    return Log2Prob(params.ell * (m_hat - 2 * n_hat))


@dataclass(frozen=True)
class PairProbability:
    depths: SplitDepths
    n: int
    exact: Log2Prob
    m_prime_bound: Log2Prob
    m_bound: Log2Prob

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "m": self.depths.m,
            "m_prime": self.depths.m_prime,
            "m_hat": self.depths.m_hat,
            "exact": self.exact.to_dict(),
            "m_prime_bound": self.m_prime_bound.to_dict(),
            "m_bound": self.m_bound.to_dict(),
        }


def pair_chain_prob_binary(sigma: BitString, tau: BitString, params: Params) -> PairProbability:
    """Pair probability for two binary strings of length n = k * n_hat.

    The exact value is 2^{gamma(m'-2n)}; the coarser 2^{gamma(m-2n)} is
    reported alongside it.
    """
    depths = split_depths(sigma, tau, params)
    n = len(sigma)
    if n % params.k:
        raise ValueError(f"binary length {n} is not a multiple of k={params.k}")
    n_hat = n // params.k
    exact = Log2Prob(params.ell * (depths.m_hat - 2 * n_hat))
    gamma = params.gamma
    return PairProbability(
        depths=depths,
        n=n,
        exact=exact,
        m_prime_bound=Log2Prob(gamma * (depths.m_prime - 2 * n)),
        m_bound=Log2Prob(gamma * (depths.m - 2 * n)),
    )
