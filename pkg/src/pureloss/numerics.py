"""Log-space combinatorics and the entropy functions used throughout.

Every probability that can get exponentially small is carried as a base-2
logarithm. ``-inf`` is the logarithm of zero and behaves absorbingly under
multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from pureloss.errors import DomainError

LOG2E = math.log2(math.e)

# Binomials with n at or below this are computed with exact integers.
EXACT_BINOMIAL_MAX_N = 60

_CEIL_RTOL = 1e-12


def ceil_tol(x: float) -> int:
    """Ceiling that forgives floating-point noise just above an integer.

    ``ceil_tol(3 * 0.1 * 10)`` is 3, not 4. Thresholds such as the photon
    cutoff of n modes at budget N_S are meant as exact reals; ordinary
    ``math.ceil`` would push them up by one on representation error.
    """
    r = round(x)
    if abs(x - r) <= _CEIL_RTOL * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


@dataclass(frozen=True, order=True)
class LogProb:
    """A nonnegative quantity stored as its base-2 logarithm."""

    log2_value: float

    def __post_init__(self):
        if math.isnan(self.log2_value) or self.log2_value == math.inf:
            raise DomainError(f"invalid log2 value {self.log2_value!r}")

    @classmethod
    def from_linear(cls, x: float) -> "LogProb":
        if x < 0:
            raise DomainError(f"cannot take log of negative value {x!r}")
        return cls(-math.inf if x == 0 else math.log2(x))

    @classmethod
    def zero(cls) -> "LogProb":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogProb":
        return cls(0.0)

    @property
    def linear(self) -> float:
        return 2.0 ** self.log2_value

    def __add__(self, other: "LogProb") -> "LogProb":
        return LogProb(float(np.logaddexp2(self.log2_value, other.log2_value)))

    def __mul__(self, other: "LogProb") -> "LogProb":
        if self.log2_value == -math.inf or other.log2_value == -math.inf:
            return LogProb.zero()
        return LogProb(self.log2_value + other.log2_value)

    def __truediv__(self, other: "LogProb") -> "LogProb":
        if other.log2_value == -math.inf:
            raise ZeroDivisionError("division by LogProb zero")
        if self.log2_value == -math.inf:
            return LogProb.zero()
        return LogProb(self.log2_value - other.log2_value)

    def __pow__(self, k: float) -> "LogProb":
        if self.log2_value == -math.inf:
            return LogProb.zero() if k > 0 else LogProb.one()
        return LogProb(self.log2_value * k)


def log2_sum(log2_terms) -> float:
    """log2 of sum(2**t) for an iterable of base-2 logs, without overflow.

    Terms are rescaled by the maximum and accumulated with ``math.fsum`` so
    the linear-domain sum is correctly rounded.
    """
    arr = np.asarray(list(log2_terms) if not isinstance(log2_terms, np.ndarray) else log2_terms,
                     dtype=float)
    if arr.size == 0:
        return -math.inf
    top = float(np.max(arr))
    if top == -math.inf:
        return -math.inf
    return top + math.log2(math.fsum(np.exp2(arr - top).tolist()))


@dataclass(frozen=True)
class EntropyValues:
    g_value: float
    h2_value: float


def g_entropy(x: float) -> float:
    """Entropy in bits of a bosonic thermal state with mean photon number ``x``."""
    if x < 0 or math.isnan(x):
        raise DomainError(f"mean photon number must be >= 0, got {x!r}")
    if x == 0:
        return 0.0
    # log2(x+1) + x log2(1 + 1/x) avoids cancellation at large x
    head = math.log1p(x) / math.log(2) if x < 1 else math.log2(x + 1)
    tail = math.log2(1 + 1 / x) if x <= 1 else math.log1p(1 / x) / math.log(2)
    return head + x * tail


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    if p == 0 or p == 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def entropy_values(x: float, p: float) -> EntropyValues:
    return EntropyValues(g_value=g_entropy(x), h2_value=binary_entropy(p))


def _check_binomial_args(n: int, k: int) -> None:
    if n < 0 or k < 0:
        raise DomainError(f"binomial arguments must be nonnegative, got ({n}, {k})")
    if k > n:
        raise DomainError(f"need k <= n, got ({n}, {k})")


def log_binomial_exact(n: int, k: int) -> LogProb:
    """log2 C(n, k) from the exact integer. Valid for any size, slow for huge n."""
    _check_binomial_args(n, k)
    return LogProb(math.log2(math.comb(n, k)))


def log_binomial(n: int, k: int) -> LogProb:
    """log2 of the binomial coefficient C(n, k).

    Small arguments go through exact integer arithmetic. Larger ones use
    log-gamma evaluated at 40 significant digits so that the cancellation
    between the three gamma terms costs no accuracy in double precision.
    """
    _check_binomial_args(n, k)
    k = min(k, n - k)
    if n <= EXACT_BINOMIAL_MAX_N or k <= 8:
        return log_binomial_exact(n, k)
    with mpmath.workdps(40):
        val = mpmath.loggamma(n + 1) - mpmath.loggamma(k + 1) - mpmath.loggamma(n - k + 1)
        return LogProb(float(val / mpmath.log(2)))


def binomial_fraction_pmf(n: int, k: int, p: Fraction) -> Fraction:
    """Exact rational C(n,k) p^k (1-p)^(n-k); an oracle for small cases."""
    return math.comb(n, k) * p ** k * (1 - p) ** (n - k)
