"""Finite-depth probability measures on Cantor space.

A ``DyadicMeasure`` stores the mass of every cylinder [sigma] with
|sigma| <= N. Below depth N the measure is taken to split uniformly, which is
the convention every energy figure in this module is computed under.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from closedsets.encoding import BitString, parse_bits
from closedsets.exact_measure import Number, pow2

logger = logging.getLogger(__name__)

Mass = Union[Fraction, float]

CONSERVATION_TOL = 1e-12
UNIFORM_EXTENSION = "masses below depth N split uniformly (within-leaf energy in closed form)"

# Brute-force double sums materialize a 2^N x 2^N matrix
MAX_DOUBLE_SUM_DEPTH = 12

# Measure files list leaves of a full binary level
MAX_FILE_DEPTH = 24


@dataclass(frozen=True, eq=False)
class DyadicMeasure:
    depth: int
    levels: Tuple[Tuple[Mass, ...], ...]
    label: str = "custom"

    def __post_init__(self) -> None:
        if len(self.levels) != self.depth + 1:
            raise ValueError(f"expected {self.depth + 1} levels, got {len(self.levels)}")
        for j, level in enumerate(self.levels):
            if len(level) != 1 << j:
                raise ValueError(f"level {j} has {len(level)} masses, expected {1 << j}")
            if any(m < 0 for m in level):
                raise ValueError(f"level {j} has a negative mass")
        tol = 0 if self.exact else CONSERVATION_TOL
        if abs(self.levels[0][0] - 1) > tol:
            raise ValueError(f"total mass is {self.levels[0][0]}, expected 1")
        for j in range(self.depth):
            parent, child = self.levels[j], self.levels[j + 1]
            for v, m in enumerate(parent):
                if abs(m - child[2 * v] - child[2 * v + 1]) > tol:
                    raise ValueError(f"mass not conserved at {format(v, f'0{j}b') if j else '<root>'}")

    @cached_property
    def exact(self) -> bool:
        return all(isinstance(m, Fraction) for level in self.levels for m in level)

    def mass(self, sigma: BitString) -> Mass:
        """Mass of the cylinder [sigma]."""
        if len(sigma) > self.depth:
            raise ValueError(f"cylinder {sigma!r} deeper than measure depth {self.depth}")
        return self.levels[len(sigma)][int(sigma, 2) if sigma else 0]

    def level_array(self, j: int) -> np.ndarray:
        """Masses at depth j as floats."""
        return np.array([float(m) for m in self.levels[j]], dtype=np.float64)

    def level_exact(self, j: int) -> np.ndarray:
        """Level masses as an object array, keeping Fractions when exact."""
        return np.array(list(self.levels[j]), dtype=object)

    @classmethod
    def from_leaves(
        cls, depth: int, leaves: Mapping[BitString, Mass], label: str = "custom"
    ) -> DyadicMeasure:
        """Build all levels by summing leaf masses upward; unlisted leaves are 0."""
        level: list[Mass] = [Fraction(0)] * (1 << depth)
        for sigma, m in leaves.items():
            if len(parse_bits(sigma)) != depth:
                raise ValueError(f"leaf {sigma!r} does not have length {depth}")
            level[int(sigma, 2) if sigma else 0] = m
        levels = [tuple(level)]
        for _ in range(depth):
            below = levels[-1]
            levels.append(tuple(below[2 * v] + below[2 * v + 1] for v in range(len(below) // 2)))
        return cls(depth, tuple(reversed(levels)), label)

    def to_dict(self) -> dict[str, Any]:
        masses: dict[str, Any] = {}
        for v, m in enumerate(self.levels[self.depth]):
            if m:
                key = format(v, f"0{self.depth}b") if self.depth else ""
                masses[key] = str(m) if isinstance(m, Fraction) else m
        return {"depth": self.depth, "masses": masses}


def build_uniform(depth: int) -> DyadicMeasure:
    """Uniform (Lebesgue) measure to depth ``depth``."""
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    levels = tuple((Fraction(1, 1 << j),) * (1 << j) for j in range(depth + 1))
    return DyadicMeasure(depth, levels, label="uniform")


def build_diluted(depth: int, period: int = 2) -> DyadicMeasure:
    """Uniform on sequences with a 0 at every position i where i % period != 0."""
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    levels: list[Tuple[Mass, ...]] = [(Fraction(1),)]
    for j in range(depth):
        free = j % period == 0
        child: list[Mass] = []
        for m in levels[-1]:
            child.extend((m / 2, m / 2) if free else (m, Fraction(0)))
        levels.append(tuple(child))
    label = "diluted" if period == 2 else f"diluted/{period}"
    return DyadicMeasure(depth, tuple(levels), label=label)


def load_measure(path: Path) -> DyadicMeasure:
    """Read ``{"depth": N, "masses": {"<bits>": "p/q" | decimal}}``; unlisted leaves are 0."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    try:
        depth = int(data["depth"])
        raw = data["masses"]
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed measure file {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ValueError(f"malformed measure file {path}: masses must be an object, got {type(raw).__name__}")
    if not 0 <= depth <= MAX_FILE_DEPTH:
        raise ValueError(f"malformed measure file {path}: depth {depth} outside 0..{MAX_FILE_DEPTH}")
    leaves: dict[str, Mass] = {}
    for sigma, value in raw.items():
        try:
            if isinstance(value, bool):
                raise TypeError("booleans are not masses")
            if isinstance(value, int) or (isinstance(value, str) and "/" in value):
                leaves[sigma] = Fraction(value)
            else:
                leaves[sigma] = float(value)
        except (TypeError, ValueError, ZeroDivisionError) as e:
            raise ValueError(f"malformed measure file {path}: mass of {sigma!r}: {e}") from e
    return DyadicMeasure.from_leaves(depth, leaves, label=Path(path).stem)


def dump_measure(mu: DyadicMeasure, path: Path) -> None:
    """Write ``mu`` in the measure file format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(mu.to_dict(), f, indent=2)


def resolve_measure(spec: str, depth: int) -> DyadicMeasure:
    """A built-in measure by name, or a measure file by path."""
    if spec == "uniform":
        return build_uniform(depth)
    if spec == "diluted":
        return build_diluted(depth)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"unknown measure {spec!r} (expected uniform, diluted or a file)")
    return load_measure(path)


def capacity_constant(mu: DyadicMeasure, gamma: Union[Fraction, float]) -> float:
    """Least c with mass(sigma) <= c * 2^{-gamma |sigma|} for all |sigma| <= N."""
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    g = float(gamma)
    return max(float(mu.level_array(j).max()) * 2.0 ** (g * j) for j in range(mu.depth + 1))


@dataclass(frozen=True)
class EnergyReport:
    gamma: Fraction
    depth: int
    split_sum: float
    within_leaf: float
    total: float
    bound: Optional[float] = None
    certificate: Optional[Tuple[float, Fraction]] = None
    convention: str = UNIFORM_EXTENSION

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.total))

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma": str(self.gamma),
            "depth": self.depth,
            "split_sum": self.split_sum,
            "within_leaf": self.within_leaf,
            "total": self.total,
            "bound": self.bound,
            "certificate": (
                {"c_R": self.certificate[0], "beta": str(self.certificate[1])}
                if self.certificate
                else None
            ),
            "convention": self.convention,
        }


def _within_leaf_factor(depth: int, g: float) -> float:
    if g >= 1:
        return float("inf")
    return 2.0 ** (depth * g) / (2.0 - 2.0**g)


def energy(
    mu: DyadicMeasure,
    gamma: Union[Fraction, float],
    certificate: Optional[Tuple[float, Union[Fraction, float]]] = None,
) -> EnergyReport:
    """gamma-energy of mu, grouped by the depth at which two points split.

    Pairs splitting at a node of depth m < N contribute 2^{m gamma} *
    2 mass(rho0) mass(rho1); pairs inside one leaf contribute the uniform
    closed form mass(leaf)^2 2^{N gamma} / (2 - 2^gamma).
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    g = float(gamma)
    split_sum = 0.0
    for m in range(mu.depth):
        below = mu.level_array(m + 1)
        split_sum += 2.0 ** (m * g) * 2.0 * float(np.dot(below[0::2], below[1::2]))
    leaves = mu.level_array(mu.depth)
    factor = _within_leaf_factor(mu.depth, g)
    if np.isinf(factor):
        logger.warning("gamma=%s >= 1: within-leaf energy diverges, total is infinite", gamma)
        within = float("inf")
    else:
        within = factor * float(np.dot(leaves, leaves))
    bound = None
    cert = None
    if certificate is not None:
        c_r, beta = certificate
        if beta <= gamma:
            raise ValueError(f"certificate exponent beta={beta} must exceed gamma={gamma}")
        bound = float(c_r) / (2.0 ** float(beta) - 2.0**g)
        cert = (float(c_r), Fraction(beta))
    return EnergyReport(
        gamma=Fraction(gamma),
        depth=mu.depth,
        split_sum=split_sum,
        within_leaf=within,
        total=split_sum + within,
        bound=bound,
        certificate=cert,
    )


def energy_double_sum(mu: DyadicMeasure, gamma: Union[Fraction, float]) -> float:
    """Brute-force pair sum over leaves; agrees with ``energy(...).total``."""
    if mu.depth > MAX_DOUBLE_SUM_DEPTH:
        raise ValueError(f"double sum limited to depth {MAX_DOUBLE_SUM_DEPTH}, got {mu.depth}")
    g = float(gamma)
    leaves = mu.level_array(mu.depth)
    idx = np.arange(leaves.size, dtype=np.int64)
    xor = idx[:, None] ^ idx[None, :]
    split = mu.depth - (np.floor(np.log2(np.maximum(xor, 1))) + 1)
    weights = np.where(xor > 0, 2.0 ** (g * split), 0.0)
    off_diagonal = float(leaves @ weights @ leaves)
    return off_diagonal + _within_leaf_factor(mu.depth, g) * float(np.dot(leaves, leaves))


def point_potential(mu: DyadicMeasure, gamma: Union[Fraction, float], x: BitString) -> float:
    """sum_{n<|x|} 2^{n gamma} mu[(x|n) * (1 - x(n))], the potential of mu at x."""
    x = parse_bits(x)
    g = float(gamma)
    total = 0.0
    for n in range(len(x)):
        branch = x[:n] + ("1" if x[n] == "0" else "0")
        total += 2.0 ** (n * g) * float(mu.mass(branch))
    return total


def _canonical(strings: Iterable[BitString]) -> Tuple[BitString, ...]:
    s = {parse_bits(w) for w in strings}
    while True:
        before = set(s)
        s = {w for w in s if not any(w[:i] in s for i in range(len(w)))}
        for w in sorted(s, key=len, reverse=True):
            if w and w in s:
                sibling = w[:-1] + ("1" if w[-1] == "0" else "0")
                if sibling in s:
                    s -= {w, sibling}
                    s.add(w[:-1])
        if s == before:
            return tuple(sorted(s))


@dataclass(frozen=True)
class ClopenSet:
    """A finite union of cylinders, kept as its minimal antichain."""

    cylinders: Tuple[BitString, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cylinders", _canonical(self.cylinders))

    @classmethod
    def of(cls, strings: Iterable[BitString]) -> ClopenSet:
        return cls(tuple(strings))

    @classmethod
    def whole_space(cls) -> ClopenSet:
        return cls(("",))

    @classmethod
    def empty(cls) -> ClopenSet:
        return cls(())

    def __len__(self) -> int:
        return len(self.cylinders)

    def __iter__(self) -> Any:
        return iter(self.cylinders)

    @property
    def max_length(self) -> int:
        return max((len(c) for c in self.cylinders), default=0)

    def contains(self, sigma: BitString) -> bool:
        """[sigma] is a subset of the set."""
        return any(sigma.startswith(c) for c in self.cylinders)

    def hits(self, sigma: BitString) -> bool:
        """[sigma] meets the set."""
        return any(sigma.startswith(c) or c.startswith(sigma) for c in self.cylinders)


def diluted_support(depth: int, period: int = 2) -> ClopenSet:
    """Cylinders of length depth carrying the mass of ``build_diluted(depth, period)``."""
    words = [""]
    for j in range(depth):
        if j % period == 0:
            words = [w + b for w in words for b in "01"]
        else:
            words = [w + "0" for w in words]
    return ClopenSet.of(words)


def measure_support(mu: DyadicMeasure) -> ClopenSet:
    """Depth-N cylinders of positive mass."""
    n = mu.depth
    return ClopenSet.of(
        format(v, f"0{n}b") if n else "" for v, m in enumerate(mu.levels[n]) if m
    )


def measure_of_clopen(mu: DyadicMeasure, target: ClopenSet) -> Mass:
    """mu(A) for a finite union of disjoint cylinders."""
    total: Mass = Fraction(0)
    for c in target.cylinders:
        total += mu.mass(c)
    return total


def _subtract(pieces: Sequence[BitString], v: BitString) -> list[BitString]:
    """Cylinders covering the union of ``pieces`` minus [v]."""
    out = []
    for w in pieces:
        if w.startswith(v):
            continue
        if v.startswith(w):
            out.extend(v[:i] + ("1" if v[i] == "0" else "0") for i in range(len(w), len(v)))
        else:
            out.append(w)
    return out


def clopen_inner_approx(
    cylinders: Sequence[BitString], mu: DyadicMeasure, epsilon: Union[Fraction, float]
) -> ClopenSet:
    """Clopen A inside the union U of the cylinders with mu(A) >= mu(U) - epsilon.

    The list is made disjoint in order (D_i = [u_i] minus the earlier
    cylinders) and the shortest prefix D_0 .. D_n whose tail mass is at most
    epsilon is returned.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    covered: list[BitString] = []
    parts: list[list[BitString]] = []
    masses: list[Mass] = []
    for u in cylinders:
        if len(parse_bits(u)) > mu.depth:
            raise ValueError(f"cylinder {u!r} deeper than measure depth {mu.depth}")
        pieces = [u]
        for v in covered:
            pieces = _subtract(pieces, v)
        covered.append(u)
        parts.append(pieces)
        masses.append(sum((mu.mass(p) for p in pieces), Fraction(0)))
    total = sum(masses, Fraction(0))
    taken: Mass = Fraction(0)
    n = 0
    while n < len(masses) and total - taken > epsilon:
        taken += masses[n]
        n += 1
    return ClopenSet.of(p for pieces in parts[:n] for p in pieces)


def gamma_weight(strings: Iterable[BitString], gamma: Union[Fraction, float]) -> Number:
    """wt_gamma(C) = sum over w in C of 2^{-|w| gamma}; exact when every exponent is integral."""
    g = Fraction(gamma)
    total: Number = Fraction(0)
    for w in set(strings):
        total += pow2(-len(parse_bits(w)) * g)
    return total
