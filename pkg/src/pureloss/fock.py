"""Photon-number basis representations.

Two representations live side by side. :class:`SingleModeState` holds a
truncated dense density matrix and is meant for exact work at toy size.
:class:`PhotonDistribution` keeps only the distribution of the total photon
number, which is all the cutoff projector can see; it scales to hundreds of
modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.special import gammaln, pdtrc

from pureloss.errors import DomainError
from pureloss.numerics import LOG2E, LogProb, log2_sum

TAIL_TOL = 1e-15


@dataclass(frozen=True)
class FockOccupation:
    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(a) for a in self.occupations)
        if any(a < 0 for a in occ):
            raise DomainError(f"occupations must be nonnegative, got {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def n_modes(self) -> int:
        return len(self.occupations)

    def total(self) -> int:
        return sum(self.occupations)


def occupation_tuples(n_modes: int, max_total: int) -> list[tuple[int, ...]]:
    """Plain tuples with ``n_modes`` nonnegative entries summing to at most ``max_total``.

    Built mode by mode, keeping the photons still available with each
    prefix; every tuple is produced explicitly, so this is only for small cases.
    """
    level = [((), max_total)]
    for _ in range(n_modes):
        level = [(t + (k,), left - k) for t, left in level for k in range(left + 1)]
    return [t for t, _ in level]


def enumerate_occupations(n_modes: int, max_total: int) -> Iterator[FockOccupation]:
    """All occupations on ``n_modes`` modes with total at most ``max_total``."""
    for occ in occupation_tuples(n_modes, max_total):
        yield FockOccupation(occ)


@dataclass(frozen=True)
class NumberCutoffProjector:
    """Projector onto n-mode number states with at most ``L`` photons in total."""

    n_modes: int
    L: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.L < 0:
            raise DomainError(f"cutoff must be >= 0, got {self.L}")

    def keeps(self, occ: FockOccupation) -> bool:
        return occ.total() <= self.L

    def apply(self, occ: FockOccupation) -> FockOccupation | None:
        """Image of a number state: itself if inside the cutoff, else ``None`` (zero)."""
        return occ if self.keeps(occ) else None

    def rank(self) -> int:
        return projector_rank(self.n_modes, self.L)


def projector_rank(n_modes: int, L: int) -> int:
    """Exact rank of the photon-number cutoff projector, C(L + n, n).

    Computed both as the sum over total photon number j of the number of
    n-mode states with exactly j photons, and in closed form.
    """
    if n_modes < 1:
        raise DomainError(f"n_modes must be >= 1, got {n_modes}")
    if L < 0:
        return 0
    by_shell = sum(math.comb(j + n_modes - 1, n_modes - 1) for j in range(L + 1))
    closed = math.comb(L + n_modes, n_modes)
    assert by_shell == closed, f"rank mismatch {by_shell} != {closed}"
    return closed


@dataclass(frozen=True)
class PhotonDistribution:
    """Distribution of the total photon number, possibly truncated.

    ``pmf[k]`` is the probability of k photons for k within the stored
    support. ``deficit`` is the mass known to lie beyond the support
    (dropped by truncation), so ``pmf.sum() + deficit`` is the total mass.
    """

    pmf: np.ndarray
    deficit: float = 0.0
    normalized: bool = True

    def __post_init__(self):
        arr = np.asarray(self.pmf, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("pmf must be a nonempty 1-d array")
        if np.any(arr < 0):
            raise DomainError("pmf entries must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "pmf", arr)
        if self.normalized and abs(math.fsum(arr.tolist()) + self.deficit - 1) > 1e-9:
            raise DomainError(
                f"distribution marked normalized has mass {arr.sum() + self.deficit}")

    @classmethod
    def point_mass(cls, k: int) -> "PhotonDistribution":
        pmf = np.zeros(k + 1)
        pmf[k] = 1.0
        return cls(pmf)

    @classmethod
    def vacuum(cls) -> "PhotonDistribution":
        return cls.point_mass(0)

    @classmethod
    def from_log2(cls, log2_pmf: Sequence[float], deficit: float = 0.0,
                  normalized: bool = True) -> "PhotonDistribution":
        return cls(np.exp2(np.asarray(log2_pmf, dtype=float)), deficit, normalized)

    @classmethod
    def poisson(cls, mean: float, tail_tol: float = TAIL_TOL) -> "PhotonDistribution":
        """Photon statistics of a coherent state with ``|alpha|^2 = mean``."""
        if mean < 0:
            raise DomainError(f"mean must be >= 0, got {mean}")
        if mean == 0:
            return cls.vacuum()
        K = int(mean + 10 * math.sqrt(mean) + 40)
        while pdtrc(K, mean) >= tail_tol:
            K *= 2
        k = np.arange(K + 1)
        pmf = np.exp(k * math.log(mean) - mean - gammaln(k + 1))
        # trim to the first K whose tail is already below tolerance
        tails = pdtrc(k, mean)
        K = int(np.argmax(tails < tail_tol))
        return cls(pmf[: K + 1], float(pdtrc(K, mean)))

    @classmethod
    def thermal(cls, mean: float, tail_tol: float = TAIL_TOL) -> "PhotonDistribution":
        return ThermalState(mean).distribution(tail_tol)

    @property
    def support_max(self) -> int:
        return self.pmf.size - 1

    @property
    def log2_pmf(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(self.pmf)

    def prob(self, k: int) -> LogProb:
        if 0 <= k <= self.support_max:
            return LogProb.from_linear(float(self.pmf[k]))
        return LogProb.zero()

    def mass(self) -> float:
        return math.fsum(self.pmf.tolist()) + self.deficit

    def mean(self) -> float:
        return math.fsum((np.arange(self.pmf.size) * self.pmf).tolist())

    def cdf(self, L: float) -> float:
        """Pr{total <= L} counting only stored support (deficit lies above it)."""
        if L < 0:
            return 0.0
        if L >= self.support_max:
            return math.fsum(self.pmf.tolist())
        return math.fsum(self.pmf[: int(math.floor(L)) + 1].tolist())


@dataclass(frozen=True)
class ThermalState:
    """Single-mode thermal state: geometric photon statistics with the given mean."""

    mean_photon: float

    def __post_init__(self):
        if self.mean_photon < 0:
            raise DomainError(f"mean photon number must be >= 0, got {self.mean_photon}")

    @property
    def ratio(self) -> float:
        return self.mean_photon / (self.mean_photon + 1)

    def pmf(self, l: int) -> float:
        N = self.mean_photon
        return (1 / (N + 1)) * self.ratio ** l

    def distribution(self, tail_tol: float = TAIL_TOL) -> PhotonDistribution:
        if self.mean_photon == 0:
            return PhotonDistribution.vacuum()
        q = self.ratio
        K = max(0, math.ceil(math.log(tail_tol) / math.log(q)) - 1)
        pmf = (1 - q) * q ** np.arange(K + 1)
        return PhotonDistribution(pmf, q ** (K + 1))

    def single_mode_state(self, cutoff: int) -> "SingleModeState":
        diag = np.array([self.pmf(l) for l in range(cutoff + 1)])
        return SingleModeState(np.diag(diag).astype(complex), subnormalized=True)


@dataclass(frozen=True)
class SingleModeState:
    """Truncated single-mode density matrix in the number basis."""

    matrix: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0):
            raise DomainError("matrix is not Hermitian")
        tr = float(np.real(np.trace(m)))
        if self.subnormalized:
            if tr > 1 + 1e-9:
                raise DomainError(f"trace {tr} exceeds 1")
        elif abs(tr - 1) > 1e-9:
            raise DomainError(f"trace {tr} is not 1; pass subnormalized=True for truncated states")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise DomainError("matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray, subnormalized: bool = True) -> "SingleModeState":
        v = np.asarray(amps, dtype=complex)
        return cls(np.outer(v, v.conj()), subnormalized=subnormalized)

    @classmethod
    def fock(cls, a: int, cutoff: int) -> "SingleModeState":
        v = np.zeros(cutoff + 1, dtype=complex)
        v[a] = 1
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def photon_distribution(self) -> PhotonDistribution:
        diag = np.clip(np.real(np.diag(self.matrix)), 0, None)
        return PhotonDistribution(diag, max(0.0, 1.0 - math.fsum(diag.tolist())))


def coherent_fock_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Number-basis amplitudes ``exp(-|alpha|^2/2) alpha^k / sqrt(k!)``, k = 0..cutoff."""
    if cutoff < 0:
        raise DomainError(f"cutoff must be >= 0, got {cutoff}")
    out = np.empty(cutoff + 1, dtype=complex)
    out[0] = math.exp(-abs(alpha) ** 2 / 2)
    for k in range(1, cutoff + 1):
        out[k] = out[k - 1] * alpha / math.sqrt(k)
    return out


def convolve(d1: PhotonDistribution, d2: PhotonDistribution,
             max_support: int | None = None) -> PhotonDistribution:
    """Distribution of the sum of two independent photon counts.

    Mass beyond ``max_support`` is moved into the deficit. The deficit of
    the result also accounts for the cross terms of the inputs' deficits.
    """
    pmf = np.convolve(d1.pmf, d2.pmf)
    m1, m2 = d1.mass(), d2.mass()
    kept1, kept2 = m1 - d1.deficit, m2 - d2.deficit
    lost = m1 * m2 - kept1 * kept2
    if max_support is not None and pmf.size > max_support + 1:
        lost += math.fsum(pmf[max_support + 1:].tolist())
        pmf = pmf[: max_support + 1]
    pmf = np.clip(pmf, 0, None)
    normalized = d1.normalized and d2.normalized
    return PhotonDistribution(pmf, max(0.0, lost), normalized=normalized)


def convolve_all(dists: Iterable[PhotonDistribution],
                 max_support: int | None = None) -> PhotonDistribution:
    acc = PhotonDistribution.vacuum()
    for d in dists:
        acc = convolve(acc, d, max_support)
    return acc


def poisson_log2_cdf(L: float, mean: float) -> float:
    """log2 Pr{Poisson(mean) <= L}, summed in log space on the accurate side."""
    if L < 0:
        return -math.inf
    if mean == 0:
        return 0.0
    t = int(math.floor(L))
    lm = math.log(mean)

    def log2_terms(k):
        return (k * lm - mean - gammaln(k + 1)) * LOG2E

    if t <= mean:
        return log2_sum(log2_terms(np.arange(t + 1)))
    # upper tail: terms decrease past the mode; sum until negligible
    chunks = []
    start = t + 1
    block = max(256, int(4 * math.sqrt(mean)) + 1)
    head = None
    while True:
        lp = log2_terms(np.arange(start, start + block))
        chunks.append(lp)
        head = lp[0] if head is None else head
        if lp[-1] < head - 80:
            break
        start += block
    upper = 2.0 ** log2_sum(np.concatenate(chunks))
    return math.log2(1.0 - upper) if upper < 1 else -math.inf


def poisson_cdf(L: float, mean: float) -> float:
    return 2.0 ** poisson_log2_cdf(L, mean)


def shadow(state, L: float) -> float:
    """Tr{Pi_L rho}: probability that the total photon number is at most ``L``.

    ``state`` may be a :class:`PhotonDistribution`, a :class:`SingleModeState`,
    a :class:`ThermalState`, or a sequence of single-mode states / photon
    distributions describing a product state.
    """
    if isinstance(state, PhotonDistribution):
        return state.cdf(L)
    if isinstance(state, SingleModeState):
        return state.photon_distribution().cdf(L)
    if isinstance(state, ThermalState):
        return state.distribution().cdf(L)
    if isinstance(state, (list, tuple)):
        cap = None if L == math.inf else int(math.floor(L))
        parts = [shadow_distribution(s) for s in state]
        return convolve_all(parts, cap).cdf(L)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def shadow_distribution(state) -> PhotonDistribution:
    if isinstance(state, PhotonDistribution):
        return state
    if isinstance(state, SingleModeState):
        return state.photon_distribution()
    if isinstance(state, ThermalState):
        return state.distribution()
    raise TypeError(f"unsupported state type {type(state).__name__}")


def thermal_product_distribution(mean: float, n_modes: int,
                                 max_support: int | None = None) -> PhotonDistribution:
    """Total photon count of ``n_modes`` thermal modes (negative binomial)."""
    return convolve_all([ThermalState(mean).distribution()] * n_modes, max_support)


def as_log_probs(dist: PhotonDistribution) -> dict[int, LogProb]:
    return {k: LogProb.from_linear(float(v)) for k, v in enumerate(dist.pmf) if v > 0}
