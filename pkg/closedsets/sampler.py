"""Depth-truncated samples of the random closed set Gamma_S.

Membership of a node in S is decided by a hash of (trial seed, f_k index of the
node), so the outcome for any node is a pure function of the seed and the node
path. Sampling order, laziness and batching therefore never change a sample:
``sample_tree``, ``sample_forest`` and ``sample_raw_set`` agree node for node.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from closedsets.encoding import (
    BitString,
    KString,
    Params,
    check_kstring,
    f_index,
    format_kstring,
    iota_inverse,
    iota_string,
    kstring_from_value,
    kstring_value,
    level_offset,
    parse_kstring,
)

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# Largest number of nodes a raw (non-lazy) sample may materialize per level
MAX_RAW_LEVEL = 1 << 24


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise on uint64 arrays (wrapping)."""
    z = np.array(z, dtype=np.uint64, copy=True, ndmin=1)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def trial_seeds(master_seed: int, count: int, start: int = 0) -> np.ndarray:
    """Seeds for trials start..start+count-1, a pure function of (master_seed, index)."""
    index = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    base = np.uint64(master_seed & MASK64)
    return _mix64(base + index * np.uint64(GOLDEN))


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of the i-th sub-experiment of a master seed."""
    return int(trial_seeds(master_seed, 1, start=index)[0])


def node_uniforms(seeds: np.ndarray, node_ids: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) draw for each (seed, node id) pair; arrays broadcast."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    ids = np.asarray(node_ids, dtype=np.uint64)
    h = _mix64(seeds ^ _mix64(ids + np.uint64(GOLDEN)))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _check_indexable(params: Params, depth: int) -> None:
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    if level_offset(depth + 1, params) >= 1 << 63:
        raise ValueError(f"depth {depth} too large for K={params.K}: node indices exceed 63 bits")


def _check_sampleable(params: Params, full: bool) -> None:
    if params.ell == 0 and not full:
        raise ValueError("ell must be positive; use full=True for the degenerate full tree")


@dataclass(frozen=True, eq=False)
class SampledTree:
    """Surviving K-ary strings of lengths 1..depth, stored as sorted level values."""

    params: Params
    depth: int
    seed: int
    levels: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.levels) != self.depth:
            raise ValueError(f"expected {self.depth} levels, got {len(self.levels)}")
        K = self.params.K
        parents = np.zeros(1, dtype=np.int64)
        for j, values in enumerate(self.levels, start=1):
            values.setflags(write=False)
            if values.size and (values.min() < 0 or values.max() >= K**j):
                raise ValueError(f"level {j} holds values outside the K-ary range")
            if not np.isin(values // K, parents).all():
                raise ValueError(f"level {j} is not prefix-closed")
            parents = values

    def level(self, j: int) -> np.ndarray:
        """Sorted lexicographic ranks of the strings of length j in the tree."""
        if j == 0:
            return np.zeros(1, dtype=np.int64)
        if not 1 <= j <= self.depth:
            raise ValueError(f"level {j} outside 0..{self.depth}")
        return self.levels[j - 1]

    def survivors(self, j: int) -> int:
        """Number of strings of length j in the tree."""
        return int(self.level(j).size)

    def strings(self, j: int) -> list[KString]:
        """Strings of length j in the tree."""
        return [kstring_from_value(int(v), j, self.params) for v in self.level(j)]

    def contains(self, sigma: Sequence[int]) -> bool:
        """True when sigma is in the tree."""
        j = len(sigma)
        if j == 0:
            return True
        if j > self.depth:
            return False
        values = self.levels[j - 1]
        v = kstring_value(sigma, self.params)
        i = int(np.searchsorted(values, v))
        return i < values.size and int(values[i]) == v

    def reached_depth(self) -> int:
        """Largest j whose level is nonempty (0 if level 1 is empty)."""
        for j in range(self.depth, 0, -1):
            if self.levels[j - 1].size:
                return j
        return 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.params.k,
            "ell": str(self.params.ell),
            "depth": self.depth,
            "seed": self.seed,
            "levels": [[format_kstring(s) for s in self.strings(j)] for j in range(1, self.depth + 1)],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SampledTree:
        params = Params(int(data["k"]), Fraction(str(data["ell"])))
        levels = tuple(
            np.array(
                sorted(kstring_value(parse_kstring(s, params), params) for s in level),
                dtype=np.int64,
            )
            for level in data["levels"]
        )
        return cls(params, int(data["depth"]), int(data["seed"]), levels)


@dataclass(frozen=True, eq=False)
class Forest:
    """Many trees grown together; level j holds (owner trial, value) pairs."""

    params: Params
    depth: int
    seeds: np.ndarray
    levels: Tuple[Tuple[np.ndarray, np.ndarray], ...]

    @property
    def size(self) -> int:
        return int(self.seeds.size)

    def level_counts(self, j: int) -> np.ndarray:
        """Number of strings of length j in each tree."""
        if j == 0:
            return np.ones(self.size, dtype=np.int64)
        owners, _ = self.levels[j - 1]
        return np.bincount(owners, minlength=self.size)

    def tree(self, i: int) -> SampledTree:
        """The i-th tree of the forest."""
        levels = []
        for owners, values in self.levels:
            lo = int(np.searchsorted(owners, i, side="left"))
            hi = int(np.searchsorted(owners, i, side="right"))
            levels.append(values[lo:hi].copy())
        return SampledTree(self.params, self.depth, int(self.seeds[i]), tuple(levels))


def sample_forest(
    params: Params, depth: int, seeds: Union[Iterable[int], np.ndarray], full: bool = False
) -> Forest:
    """Grow one tree per seed, level by level, never expanding dead nodes."""
    _check_sampleable(params, full)
    _check_indexable(params, depth)
    seeds = np.array([s & MASK64 for s in np.asarray(seeds).tolist()], dtype=np.uint64)
    K = params.K
    p = params.membership_probability
    symbols = np.arange(K, dtype=np.int64)
    owners = np.arange(seeds.size, dtype=np.int64)
    values = np.zeros(seeds.size, dtype=np.int64)
    levels = []
    for j in range(1, depth + 1):
        child_owners = np.repeat(owners, K)
        child_values = (values[:, None] * K + symbols[None, :]).ravel()
        if full:
            keep = np.ones(child_values.size, dtype=bool)
        else:
            ids = child_values.astype(np.uint64) + np.uint64(level_offset(j, params))
            keep = node_uniforms(seeds[child_owners], ids) < p
        owners, values = child_owners[keep], child_values[keep]
        levels.append((owners, values))
    return Forest(params, depth, seeds, tuple(levels))


def sample_tree(params: Params, depth: int, seed: int, full: bool = False) -> SampledTree:
    """Prefix-closed part of a lambda_{k,ell}-random S, truncated at K-ary depth."""
    tree = sample_forest(params, depth, [seed], full=full).tree(0)
    logger.debug("sampled tree k=%d ell=%s depth=%d seed=%d", params.k, params.ell, depth, seed)
    return tree


@dataclass(frozen=True, eq=False)
class RawSample:
    """All nonempty members of S of length <= depth, as sorted f_k indices."""

    params: Params
    depth: int
    seed: int
    indices: np.ndarray

    def contains(self, sigma: Sequence[int]) -> bool:
        """True when sigma was drawn into S (the empty string always is)."""
        if not sigma:
            return True
        if len(sigma) > self.depth:
            return False
        i = f_index(sigma, self.params)
        pos = int(np.searchsorted(self.indices, i))
        return pos < self.indices.size and int(self.indices[pos]) == i

    def member_indices(self) -> frozenset[int]:
        """f_k^{-1}(S) restricted to the sampled window (empty string excluded)."""
        return frozenset(int(i) for i in self.indices)

    def prefix_closed(self) -> SampledTree:
        """The strings of S whose prefixes are all in S."""
        K = self.params.K
        parents = np.zeros(1, dtype=np.int64)
        levels = []
        for j in range(1, self.depth + 1):
            offset = level_offset(j, self.params)
            lo = int(np.searchsorted(self.indices, offset))
            hi = int(np.searchsorted(self.indices, offset + K**j))
            values = self.indices[lo:hi] - offset
            values = values[np.isin(values // K, parents)]
            levels.append(values.astype(np.int64))
            parents = values
        return SampledTree(self.params, self.depth, self.seed, tuple(levels))


def sample_raw_set(params: Params, depth: int, seed: int) -> RawSample:
    """Every string of length 1..depth, kept independently with probability 2^-ell."""
    _check_sampleable(params, full=False)
    _check_indexable(params, depth)
    if params.K**depth > MAX_RAW_LEVEL:
        raise ValueError(f"raw sample of depth {depth} with K={params.K} is too large")
    seed &= MASK64
    p = params.membership_probability
    chunks = []
    for j in range(1, depth + 1):
        ids = np.arange(params.K**j, dtype=np.int64) + level_offset(j, params)
        u = node_uniforms(np.full(ids.size, seed, dtype=np.uint64), ids)
        chunks.append(ids[u < p])
    indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return RawSample(params, depth, seed, indices)


def survival_exact(params: Params, depth: int, exact: bool = False) -> Union[Fraction, float]:
    """P(some string of length depth survives) = 1 - e_depth.

    e_0 = 0 and e_{j+1} = (1 - p + p e_j)^K with p = 2^-ell. With ``exact``
    the recursion runs in rationals (ell must be an integer).
    """
    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    if exact:
        if params.ell.denominator != 1:
            raise ValueError("exact survival needs an integer ell")
        p: Union[Fraction, float] = Fraction(1, 2 ** int(params.ell))
        e: Union[Fraction, float] = Fraction(0)
    else:
        p = params.membership_probability
        e = 0.0
    for _ in range(depth):
        e = (1 - p + p * e) ** params.K
    return 1 - e


def survival_limit(params: Params, tol: float = 1e-12, max_iter: int = 1_000_000) -> float:
    """Survival probability of the infinite tree, by fixed-point iteration."""
    p = params.membership_probability
    e = 0.0
    for _ in range(max_iter):
        nxt = (1 - p + p * e) ** params.K
        if abs(nxt - e) < tol:
            return 1 - nxt
        e = nxt
    logger.warning(
        "extinction fixed point not converged after %d iterations (k=%d, ell=%s)",
        max_iter,
        params.k,
        params.ell,
    )
    return 1 - e


def frontier_binary(tree: SampledTree) -> frozenset[BitString]:
    """iota-images of the deepest-level survivors, each of binary length k*depth."""
    n = tree.params.k * tree.depth
    if n == 0:
        return frozenset({""})
    return frozenset(format(int(v), f"0{n}b") for v in tree.level(tree.depth))


@dataclass(frozen=True)
class SubsetWitness:
    """Finite part of Y = {sigma in S : iota(sigma) is a prefix of x}."""

    params: Params
    strings: Tuple[KString, ...]

    def __post_init__(self) -> None:
        strings = tuple(sorted((check_kstring(s, self.params) for s in self.strings), key=len))
        lengths = [len(s) for s in strings]
        if len(set(lengths)) != len(lengths):
            raise ValueError("Y holds two strings of the same length")
        if strings and any(s != strings[-1][: len(s)] for s in strings):
            raise ValueError("Y is not a chain under the prefix order")
        object.__setattr__(self, "strings", strings)

    def __len__(self) -> int:
        return len(self.strings)

    def element(self, length: int) -> Optional[KString]:
        for s in self.strings:
            if len(s) == length:
                return s
        return None

    def is_complete(self, length: int) -> bool:
        """One element for every length 1..length."""
        return [len(s) for s in self.strings][:length] == list(range(1, length + 1))

    def to_dict(self) -> dict[str, Any]:
        return {"strings": [format_kstring(s) for s in self.strings]}


def extract_subset(x: BitString, source: Union[SampledTree, RawSample]) -> SubsetWitness:
    """Members of ``source`` whose iota-image is a prefix of x.

    A tree is prefix-closed, so the walk stops at the first missing prefix; a
    raw sample is scanned at every length.
    """
    params = source.params
    sigma_x = iota_inverse(x, params)
    found = []
    for i in range(1, min(len(sigma_x), source.depth) + 1):
        sigma = sigma_x[:i]
        if source.contains(sigma):
            found.append(sigma)
        elif isinstance(source, SampledTree):
            break
    return SubsetWitness(params, tuple(found))


def reconstruct_prefix(witness: SubsetWitness, target_length: int) -> BitString:
    """The prefix of x of binary length target_length recovered from Y."""
    k = witness.params.k
    if target_length % k:
        raise ValueError(f"target length {target_length} is not a multiple of k={k}")
    sigma = witness.element(target_length // k)
    if sigma is None:
        raise ValueError(f"Y has no element of K-ary length {target_length // k}")
    return iota_string(sigma, witness.params)


def subset_to_integers(witness: SubsetWitness) -> frozenset[int]:
    """f_k^{-1}(Y): the integers naming the elements of Y."""
    return frozenset(f_index(s, witness.params) for s in witness.strings)
