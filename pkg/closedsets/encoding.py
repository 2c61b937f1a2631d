"""K-ary and binary strings, the iota block encoding between them, and the
length-lexicographic enumeration f_k of K-ary strings.

K-ary strings are tuples of ints, binary strings are ``str`` over ``"01"``.
Symbols are encoded most-significant bit first, so ``iota((3, 2)) == "1110"``
for k=2 and the binary value of ``iota(sigma)`` equals the lexicographic rank
of ``sigma`` among strings of its length.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence, Tuple, Union

KString = Tuple[int, ...]
BitString = str

RationalLike = Union[Fraction, int, str]


def parse_rational(text: RationalLike) -> Fraction:
    """Parse ``p/q``, an integer or a decimal string into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {text!r}") from e


@dataclass(frozen=True)
class Params:
    """The pair (k, ell): symbols of k bits, membership probability 2^-ell."""

    k: int
    ell: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        ell = parse_rational(self.ell)
        if ell < 0:
            raise ValueError(f"ell must be nonnegative, got {ell}")
        object.__setattr__(self, "ell", ell)

    @property
    def K(self) -> int:  # noqa: N802
        return 1 << self.k

    @property
    def gamma(self) -> Fraction:
        return self.ell / self.k

    @property
    def membership_probability(self) -> float:
        return float(2.0 ** -float(self.ell))

    @property
    def is_supercritical(self) -> bool:
        """Mean offspring K*2^-ell exceeds 1, i.e. ell < k."""
        return self.ell < self.k

    def to_dict(self) -> dict[str, object]:
        return {
            "k": self.k,
            "ell": str(self.ell),
            "K": self.K,
            "gamma": str(self.gamma),
        }


def check_kstring(sigma: Sequence[int], params: Params) -> KString:
    """Return sigma as a tuple, raising if a symbol is not below K."""
    for a in sigma:
        if not 0 <= a < params.K:
            raise ValueError(f"symbol {a} out of range for K={params.K}")
    return tuple(sigma)


def parse_bits(text: str) -> BitString:
    """Validate a binary string."""
    text = text.strip()
    if any(c not in "01" for c in text):
        raise ValueError(f"not a binary string: {text!r}")
    return text


def format_kstring(sigma: Sequence[int]) -> str:
    """Comma-separated text form of a K-ary string."""
    return ",".join(str(a) for a in sigma)


def parse_kstring(text: str, params: Params) -> KString:
    """Parse the comma-separated text form of a K-ary string."""
    text = text.strip()
    if not text:
        return ()
    try:
        symbols = tuple(int(part) for part in text.split(","))
    except ValueError as e:
        raise ValueError(f"not a comma-separated K-ary string: {text!r}") from e
    return check_kstring(symbols, params)


def iota_symbol(a: int, params: Params) -> BitString:
    """Encode one symbol as a k-bit block, most significant bit first."""
    if not 0 <= a < params.K:
        raise ValueError(f"symbol {a} out of range for K={params.K}")
    return format(a, f"0{params.k}b")


def iota_string(sigma: Sequence[int], params: Params) -> BitString:
    """Concatenate the k-bit blocks of every symbol."""
    return "".join(iota_symbol(a, params) for a in sigma)


def iota_inverse(tau: BitString, params: Params) -> KString:
    """Split a binary string into k-bit blocks and decode each one."""
    k = params.k
    if len(tau) % k:
        raise ValueError(f"binary length {len(tau)} is not a multiple of k={k}")
    parse_bits(tau)
    return tuple(int(tau[i : i + k], 2) for i in range(0, len(tau), k))


def common_prefix_length(a: Sequence[object], b: Sequence[object]) -> int:
    """Number of leading positions on which two sequences agree."""
    m = 0
    for x, y in zip(a, b):
        if x != y:
            break
        m += 1
    return m


class SplitDepths(NamedTuple):
    m: int
    m_prime: int
    m_hat: int


def split_depths(sigma: BitString, tau: BitString, params: Params) -> SplitDepths:
    """Common binary prefix length m, its round-down to a multiple of k, and m'/k."""
    if len(sigma) != len(tau):
        raise ValueError(f"strings have unequal lengths {len(sigma)} and {len(tau)}")
    m = common_prefix_length(sigma, tau)
    m_hat = m // params.k
    return SplitDepths(m, m_hat * params.k, m_hat)


def level_offset(n: int, params: Params) -> int:
    """Number of K-ary strings of length < n, i.e. f_k index of 0^n."""
    K = params.K
    return (K**n - 1) // (K - 1)


def kstring_value(sigma: Sequence[int], params: Params) -> int:
    """Rank of sigma among strings of its length, in lexicographic order."""
    value = 0
    for a in check_kstring(sigma, params):
        value = value * params.K + a
    return value


def kstring_from_value(value: int, length: int, params: Params) -> KString:
    """The K-ary string of length ``length`` with rank ``value``."""
    if not 0 <= value < params.K**length:
        raise ValueError(f"value {value} out of range for length {length}")
    symbols = []
    for _ in range(length):
        value, a = divmod(value, params.K)
        symbols.append(a)
    return tuple(reversed(symbols))


def f_index(sigma: Sequence[int], params: Params) -> int:
    """Position of sigma in the length-lexicographic enumeration."""
    return level_offset(len(sigma), params) + kstring_value(sigma, params)


def f_enumerate(i: int, params: Params) -> KString:
    """The i-th K-ary string in length-lexicographic order; index 0 is empty."""
    if i < 0:
        raise ValueError(f"index must be nonnegative, got {i}")
    n = 0
    while level_offset(n + 1, params) <= i:
        n += 1
    return kstring_from_value(i - level_offset(n, params), n, params)
