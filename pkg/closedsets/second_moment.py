"""The Y_n statistic, its exact first and second moments, and the
Paley-Zygmund lower bound on hitting a clopen target.

Y_n sums mu(sigma) 2^{n gamma} over surviving binary strings sigma of length n
(n a multiple of k) whose cylinder meets the target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Optional

import numpy as np

from closedsets.dyadic_measure import (
    ClopenSet,
    DyadicMeasure,
    Mass,
    energy,
    measure_of_clopen,
)
from closedsets.encoding import Params
from closedsets.exact_measure import Number, pair_chain_prob_binary, pow2
from closedsets.sampler import Forest, SampledTree

logger = logging.getLogger(__name__)

# Hit lookups use a 2^n table up to this many bits
MAX_TABLE_BITS = 24


@lru_cache(maxsize=64)
def _hit_table(clopen: ClopenSet, n: int) -> np.ndarray:
    table = np.zeros(1 << n, dtype=bool)
    for c in clopen.cylinders:
        length, v = len(c), int(c, 2) if c else 0
        if length <= n:
            table[v << (n - length) : (v + 1) << (n - length)] = True
        else:
            table[v >> (length - n)] = True
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class HittingTarget:
    """A clopen target; a binary string hits it when its cylinder meets the set."""

    clopen: ClopenSet

    @classmethod
    def whole_space(cls) -> HittingTarget:
        return cls(ClopenSet.whole_space())

    def hits(self, sigma: str) -> bool:
        """True when the cylinder [sigma] meets the target."""
        return self.clopen.hits(sigma)

    def hit_mask(self, values: np.ndarray, n: int) -> np.ndarray:
        """Vectorized ``hits`` for n-bit strings given by their binary values."""
        values = np.asarray(values, dtype=np.int64)
        if n <= MAX_TABLE_BITS:
            return _hit_table(self.clopen, n)[values]
        mask = np.zeros(values.shape, dtype=bool)
        for c in self.clopen.cylinders:
            length, v = len(c), int(c, 2) if c else 0
            if length <= n:
                mask |= (values >> (n - length)) == v
            else:
                mask |= values == (v >> (length - n))
        return mask


def _check_depth(mu: DyadicMeasure, n: int, params: Params) -> None:
    if n % params.k:
        raise ValueError(f"binary depth {n} is not a multiple of k={params.k}")
    if not 0 <= n <= mu.depth:
        raise ValueError(f"binary depth {n} outside 0..{mu.depth} (measure depth)")


def y_statistic(
    tree: SampledTree, mu: DyadicMeasure, target: HittingTarget, n: Optional[int] = None
) -> float:
    """Y_n of one sampled tree, n = k * depth."""
    params = tree.params
    depth_bits = params.k * tree.depth
    if n is not None and n != depth_bits:
        raise ValueError(f"binary depth {n} does not match tree depth {tree.depth} (k={params.k})")
    _check_depth(mu, depth_bits, params)
    values = tree.level(tree.depth)
    hit = values[target.hit_mask(values, depth_bits)]
    return float(mu.level_array(depth_bits)[hit].sum()) * float(pow2(params.gamma * depth_bits))


def y_statistics(forest: Forest, mu: DyadicMeasure, target: HittingTarget, j: int) -> np.ndarray:
    """Y_{k j} for every tree of a forest."""
    params = forest.params
    n = params.k * j
    _check_depth(mu, n, params)
    if j == 0:
        owners = np.arange(forest.size, dtype=np.int64)
        values = np.zeros(forest.size, dtype=np.int64)
    else:
        owners, values = forest.levels[j - 1]
    weights = mu.level_array(n)[values] * target.hit_mask(values, n)
    y = np.bincount(owners, weights=weights, minlength=forest.size)
    return y * float(pow2(params.gamma * n))


def _hitting_masses(mu: DyadicMeasure, target: HittingTarget, n: int) -> np.ndarray:
    mask = target.hit_mask(np.arange(1 << n), n)
    return np.where(mask, mu.level_exact(n), Fraction(0))


def _total(values: np.ndarray) -> Mass:
    return sum(values.tolist(), Fraction(0))


def exact_first_moment(mu: DyadicMeasure, target: HittingTarget, n: int, params: Params) -> Mass:
    """E[Y_n]: the mass of the length-n cylinders that hit the target."""
    _check_depth(mu, n, params)
    return _total(_hitting_masses(mu, target, n))


def _split_weighted_sum(
    masses: np.ndarray, n: int, weight: Callable[[int], Number], diagonal: Number
) -> Number:
    """sum over pairs of masses weighted by the depth at which the pair splits."""
    total: Number = diagonal * _total(masses * masses)
    level = masses
    for m in range(n - 1, -1, -1):
        left, right = level[0::2], level[1::2]
        total += weight(m) * 2 * _total(left * right)
        level = left + right
    return total


def exact_second_moment(
    mu: DyadicMeasure, target: HittingTarget, n: int, params: Params, method: str = "tree"
) -> Number:
    """E[Y_n^2] with the exact pair exponent 2^{gamma m'}.

    ``method="tree"`` groups pairs by split node; ``method="pairs"`` is the
    direct double sum over pairs of hitting strings.
    """
    _check_depth(mu, n, params)
    masses = _hitting_masses(mu, target, n)
    if method == "tree":
        return _split_weighted_sum(
            masses,
            n,
            lambda m: pow2(params.ell * (m // params.k)),
            pow2(params.gamma * n),
        )
    if method != "pairs":
        raise ValueError(f"unknown method {method!r}")
    scale = pow2(2 * params.gamma * n)
    hitting = [
        (format(v, f"0{n}b") if n else "", m) for v, m in enumerate(masses.tolist()) if m
    ]
    total: Number = Fraction(0)
    for s, ms in hitting:
        for t, mt in hitting:
            total += ms * mt * scale * pair_chain_prob_binary(s, t, params).exact.value
    return total


def second_moment_m_bound(
    mu: DyadicMeasure, target: HittingTarget, n: int, params: Params
) -> Number:
    """The same double sum with 2^{gamma m} in place of 2^{gamma m'}."""
    _check_depth(mu, n, params)
    masses = _hitting_masses(mu, target, n)
    return _split_weighted_sum(
        masses, n, lambda m: pow2(params.gamma * m), pow2(params.gamma * n)
    )


def pz_bound(first: Number, second: Number) -> Number:
    """P{X > 0} >= E[X]^2 / E[X^2], clamped to [0, 1]."""
    if first < 0 or second < 0:
        raise ValueError(f"moments must be nonnegative, got {first} and {second}")
    if second == 0:
        if first > 0:
            raise ValueError(f"inconsistent moments: E[X]={first} > 0 but E[X^2]=0")
        return Fraction(0)
    ratio = first * first / second
    if ratio > 1:
        logger.warning("Paley-Zygmund ratio %s exceeds 1; clamped", float(ratio))
        return Fraction(1)
    return ratio


@dataclass(frozen=True)
class MomentReport:
    n: int
    first_moment: Number
    second_moment: Number
    second_moment_m_bound: Number
    pz_bound: Number
    mu_A: Number

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "first_moment": exact_and_decimal(self.first_moment),
            "second_moment": exact_and_decimal(self.second_moment),
            "second_moment_m_bound": exact_and_decimal(self.second_moment_m_bound),
            "pz_bound": exact_and_decimal(self.pz_bound),
            "mu_A": exact_and_decimal(self.mu_A),
        }


def exact_and_decimal(x: Number) -> dict[str, Any]:
    """A number as its exact "p/q" form (when rational) and a float."""
    return {"exact": str(x) if isinstance(x, Fraction) else None, "value": float(x)}


def moment_report(mu: DyadicMeasure, target: HittingTarget, n: int, params: Params) -> MomentReport:
    """Exact moments of Y_n and the bounds derived from them."""
    first = exact_first_moment(mu, target, n, params)
    second = exact_second_moment(mu, target, n, params)
    return MomentReport(
        n=n,
        first_moment=first,
        second_moment=second,
        second_moment_m_bound=second_moment_m_bound(mu, target, n, params),
        pz_bound=pz_bound(first, second),
        mu_A=measure_of_clopen(mu, target.clopen),
    )


def hitting_lower_bound(mu: DyadicMeasure, target: HittingTarget, params: Params) -> float:
    """mu(A)^2 / c with c the gamma-energy of mu, gamma = ell / k."""
    report = energy(mu, params.gamma)
    if not report.finite:
        logger.warning("energy of %s at gamma=%s is infinite; bound is 0", mu.label, params.gamma)
        return 0.0
    mu_a = float(measure_of_clopen(mu, target.clopen))
    return mu_a * mu_a / report.total
