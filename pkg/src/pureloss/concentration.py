"""Exact and bounded tail probabilities.

Three families appear in the converse and achievability arguments:

* binomial thinning of photons through the beamsplitter (lower tail,
  compared against Hoeffding),
* sums of i.i.d. geometric variables, i.e. photon counts of thermal states
  (upper tail, compared against an exponential-moment bound), and
* seeded Monte Carlo estimates of both, used as an independent check.

Conventions: tails are ``Pr{sum >= T}``, cumulative probabilities are
``Pr{K <= T}``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from pureloss.errors import DomainError
from pureloss.numerics import LOG2E, ceil_tol, log2_sum
from pureloss.rng import keyed_generator

# Terms below max * 2**-_LOG2_DROP cannot change a double-precision sum.
_LOG2_DROP = 80.0


@dataclass(frozen=True)
class GeometricLaw:
    """Geometric law with pmf ``p**k * (1 - p)`` on k = 0, 1, 2, ..."""

    p: float

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise DomainError(f"geometric parameter must lie in [0, 1), got {self.p!r}")

    @classmethod
    def from_mean(cls, mean: float) -> "GeometricLaw":
        if mean < 0:
            raise DomainError(f"mean must be >= 0, got {mean!r}")
        return cls(mean / (mean + 1))

    @property
    def mu(self) -> float:
        return self.p / (1 - self.p)

    def log2_pmf(self, k):
        k = np.asarray(k, dtype=float)
        if self.p == 0:
            return np.where(k == 0, 0.0, -np.inf)
        return k * math.log2(self.p) + math.log2(1 - self.p)

    def truncated_pmf(self, tail_tol: float = 1e-15) -> tuple[np.ndarray, float]:
        """pmf on 0..K with K the first index whose remaining tail is below ``tail_tol``.

        Returns the array and the dropped mass ``p**(K+1)``.
        """
        if self.p == 0:
            return np.array([1.0]), 0.0
        # tail beyond K is p^(K+1)
        K = max(0, math.ceil(math.log(tail_tol) / math.log(self.p)) - 1)
        pmf = (1 - self.p) * self.p ** np.arange(K + 1)
        return pmf, self.p ** (K + 1)


@dataclass(frozen=True)
class BinomialTransmission:
    """Number of photons surviving a beamsplitter: Binomial(trials, eta)."""

    trials: int
    eta: float

    def __post_init__(self):
        if self.trials < 0:
            raise DomainError(f"trials must be >= 0, got {self.trials!r}")
        if not 0 <= self.eta <= 1:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta!r}")

    def log2_pmf(self) -> np.ndarray:
        return binomial_log2_pmf(self.trials, self.eta)

    def pmf(self) -> np.ndarray:
        return np.exp2(self.log2_pmf())


def _log2_comb_row(S: int) -> np.ndarray:
    """log2 C(S, k) for k = 0..S by cumulative ratios."""
    if S == 0:
        return np.zeros(1)
    j = np.arange(1, S + 1, dtype=float)
    steps = np.log2(S - j + 1) - np.log2(j)
    return np.concatenate(([0.0], np.cumsum(steps)))


def binomial_log2_pmf(S: int, eta: float) -> np.ndarray:
    k = np.arange(S + 1, dtype=float)
    row = _log2_comb_row(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(k == 0, 0.0, k * (math.log2(eta) if eta > 0 else -np.inf))
        b = np.where(S - k == 0, 0.0, (S - k) * (math.log2(1 - eta) if eta < 1 else -np.inf))
    return row + a + b


def binomial_log2_cdf(S: int, eta: float, threshold: float) -> float:
    """log2 Pr{Bin(S, eta) <= threshold}.

    The side of the mean the threshold lies on decides whether the lower
    sum is taken directly or one minus the upper sum; either way no
    catastrophic cancellation occurs.
    """
    if threshold < 0:
        return -math.inf
    t = math.floor(threshold)
    if t >= S:
        return 0.0
    lp = binomial_log2_pmf(S, eta)
    if t <= S * eta:
        return log2_sum(lp[: t + 1])
    upper = 2.0 ** log2_sum(lp[t + 1:])
    return math.log2(max(0.0, 1.0 - upper)) if upper < 1 else -math.inf


def binomial_tail_below(dist: BinomialTransmission, threshold: float) -> float:
    """Pr{K <= threshold} for K ~ Binomial(dist.trials, dist.eta)."""
    return 2.0 ** binomial_log2_cdf(dist.trials, dist.eta, threshold)


def binomial_cdf_table(max_trials: int, eta: float, threshold: int) -> np.ndarray:
    """``out[S] = Pr{Bin(S, eta) <= threshold}`` for S = 0..max_trials.

    Dynamic program over the number of trials restricted to counts at or
    below the threshold. Every update is a convex combination of
    nonnegative numbers, so it is stable.
    """
    if threshold < 0:
        return np.zeros(max_trials + 1)
    t = int(threshold)
    out = np.ones(max_trials + 1)
    v = np.zeros(t + 1)
    v[0] = 1.0
    for S in range(1, max_trials + 1):
        nv = (1 - eta) * v
        nv[1:] += eta * v[:-1]
        v = nv
        if S > t:
            out[S] = v.sum()  # pairwise summation of nonnegative terms
    return out


def hoeffding_lower_bound(S: int, delta3: float) -> float:
    """Hoeffding's lower bound ``1 - exp(-2 delta3^2 S)`` on Pr{K <= S(eta + delta3)}."""
    if S < 0:
        raise DomainError(f"S must be >= 0, got {S!r}")
    if delta3 <= 0:
        raise DomainError(f"delta3 must be > 0, got {delta3!r}")
    return -math.expm1(-2.0 * delta3 * delta3 * S)


def negbin_log2_pmf(law: GeometricLaw, n: int, k) -> np.ndarray:
    """log2 pmf of the sum of ``n`` i.i.d. geometric variables at ``k``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    log2_coef = (gammaln(k + n) - gammaln(k + 1) - gammaln(n)) * LOG2E
    if law.p == 0:
        return np.where(k == 0, 0.0, -np.inf)
    return log2_coef + k * math.log2(law.p) + n * math.log2(1 - law.p)


def geometric_sum_log2_tail(law: GeometricLaw, n: int, threshold: int) -> float:
    """log2 Pr{Z_1 + ... + Z_n >= threshold} for i.i.d. geometric Z_i."""
    if n < 1:
        raise DomainError(f"need n >= 1, got {n!r}")
    T = math.ceil(threshold)
    if T <= 0:
        return 0.0
    if law.p == 0:
        return -math.inf
    mean = n * law.mu
    if T <= mean:
        lower = 2.0 ** log2_sum(negbin_log2_pmf(law, n, np.arange(T)))
        return math.log2(max(0.0, 1.0 - lower)) if lower < 1 else -math.inf
    # Upper side: sum in blocks until terms fall below the drop threshold.
    # Beyond the mode the pmf ratio is < 1, so the terms are decreasing.
    chunks = []
    start = T
    block = max(256, 4 * int(math.sqrt(n * law.p) / (1 - law.p)) + 1)
    head = None
    while True:
        lp = negbin_log2_pmf(law, n, np.arange(start, start + block))
        chunks.append(lp)
        if head is None:
            head = float(lp[0])
        if lp[-1] < head - _LOG2_DROP or lp[-1] == -math.inf:
            break
        start += block
    return log2_sum(np.concatenate(chunks))


def geometric_sum_tail_above(law: GeometricLaw, n: int, delta: float) -> float:
    """Pr{(1/n) sum Z_i >= mu + delta}, evaluated exactly."""
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta!r}")
    return 2.0 ** geometric_sum_log2_tail(law, n, ceil_tol(n * (law.mu + delta)))


@dataclass(frozen=True)
class ChernoffOptimum:
    """Optimized exponential-moment constant for a geometric upper tail.

    ``C = E[x**Z] / x**(mu + delta)`` at the minimizing ``x = exp(t)``.
    """

    t_star: float
    x_star: float
    C: float
    log_C: float
    at_boundary: bool
    stationarity: float

    def tail_bound(self, n: float) -> float:
        return math.exp(n * self.log_C)


def _log_chernoff_ratio(x: float, p: float, a: float) -> float:
    return math.log1p(-p) - math.log1p(-p * x) - a * math.log(x)


def _dlog_chernoff_ratio(x: float, p: float, a: float) -> float:
    return p / (1 - p * x) - a / x


def golden_section_minimize(f, lo: float, hi: float, tol: float = 1e-12,
                            max_iter: int = 500) -> float:
    """Minimize a unimodal function on [lo, hi]; returns the abscissa."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def chernoff_constant(delta: float, p: float) -> ChernoffOptimum:
    """Best exponential-moment constant for Pr{mean of n geometrics >= mu + delta}.

    Minimizes ``(1-p)/(1-p x) * x**-(mu+delta)`` over ``x`` in ``(1, 1/p)``
    by golden-section search on its logarithm, after first bracketing the
    sign change of the derivative by bisection.
    """
    if delta <= 0:
        raise DomainError(f"delta must be > 0, got {delta!r}")
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    mu = p / (1 - p)
    a = mu + delta
    lo, hi = 1.0 + 1e-9, 1.0 / p - 1e-9
    dlo = _dlog_chernoff_ratio(lo, p, a)
    dhi = _dlog_chernoff_ratio(hi, p, a)
    at_boundary = False
    if dlo >= 0:
        x = lo
        at_boundary = True
    elif dhi <= 0:
        x = hi
        at_boundary = True
    else:
        # shrink the bracket around the derivative root, then polish
        for _ in range(60):
            mid = (lo + hi) / 2
            if _dlog_chernoff_ratio(mid, p, a) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-6 * lo:
                break
        pad = (hi - lo)
        lo2 = max(1.0 + 1e-12, lo - pad)
        hi2 = min(1.0 / p * (1 - 1e-15), hi + pad)
        x = golden_section_minimize(lambda y: _log_chernoff_ratio(y, p, a), lo2, hi2)
        # golden section only resolves x to ~sqrt(eps); finish on the derivative
        lo3, hi3 = max(lo2, x - 1e-6), min(hi2, x + 1e-6)
        if _dlog_chernoff_ratio(lo3, p, a) < 0 < _dlog_chernoff_ratio(hi3, p, a):
            for _ in range(80):
                mid = (lo3 + hi3) / 2
                if _dlog_chernoff_ratio(mid, p, a) < 0:
                    lo3 = mid
                else:
                    hi3 = mid
            x = (lo3 + hi3) / 2
    log_c = _log_chernoff_ratio(x, p, a)
    return ChernoffOptimum(
        t_star=math.log(x),
        x_star=x,
        C=math.exp(log_c),
        log_C=log_c,
        at_boundary=at_boundary,
        stationarity=_dlog_chernoff_ratio(x, p, a),
    )


def thermal_chernoff_constant(delta: float, mean_photon: float) -> ChernoffOptimum:
    """Same constant parameterized by the thermal mean photon number."""
    return chernoff_constant(delta, mean_photon / (mean_photon + 1))


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    samples: int
    hits: int


MC_BATCH = 1 << 16


def _lab_threads() -> int:
    env = os.environ.get("LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def monte_carlo_tail(law_or_dist, n: int, threshold: float, samples: int, seed: int,
                     workers: int | None = None) -> MonteCarloEstimate:
    """Seeded frequency estimate of a tail event.

    For a :class:`BinomialTransmission` estimates ``Pr{K <= threshold}``
    (``n`` is ignored). For a :class:`GeometricLaw` estimates
    ``Pr{Z_1 + ... + Z_n >= threshold}``. Samples are drawn in fixed-size
    batches, each from its own keyed stream, so the result does not depend
    on ``workers``.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples!r}")
    if isinstance(law_or_dist, BinomialTransmission):
        if threshold == math.inf or threshold >= law_or_dist.trials:
            return MonteCarloEstimate(1.0, 0.0, samples, samples)
        family = 0

        def draw(rng, size):
            k = rng.binomial(law_or_dist.trials, law_or_dist.eta, size=size)
            return int(np.count_nonzero(k <= threshold))
    elif isinstance(law_or_dist, GeometricLaw):
        if threshold <= 0:
            return MonteCarloEstimate(1.0, 0.0, samples, samples)
        family = 1

        def draw(rng, size):
            # failures before n successes with success prob 1-p
            s = rng.negative_binomial(n, 1 - law_or_dist.p, size=size)
            return int(np.count_nonzero(s >= threshold))
    else:
        raise TypeError(f"unsupported law {type(law_or_dist).__name__}")

    n_batches = -(-samples // MC_BATCH)

    def run(b):
        size = min(MC_BATCH, samples - b * MC_BATCH)
        return draw(keyed_generator(seed, family, b), size)

    workers = workers or _lab_threads()
    if workers == 1 or n_batches == 1:
        hits = sum(run(b) for b in range(n_batches))
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            hits = sum(ex.map(run, range(n_batches)))
    est = hits / samples
    return MonteCarloEstimate(est, math.sqrt(est * (1 - est) / samples), samples, hits)
