"""Coherent-state codebooks and their vacuum-mixed and purified variants.

Codewords are products of coherent states with amplitudes drawn from a
circularly symmetric complex Gaussian. Because the total photon number of
a coherent product state is exactly Poisson with mean ``sum |alpha_i|^2``,
every shadow computed here is exact, with no Fock-space truncation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from pureloss.channel import apply_to_coherent
from pureloss.errors import DomainError
from pureloss.fock import poisson_cdf
from pureloss.rng import keyed_generator

CODEBOOK_STREAM = 0x636F6465  # separates codebook draws from other keyed streams


@dataclass(frozen=True)
class GaussianEnsemble:
    variance: float
    n_modes: int
    seed: int

    def __post_init__(self):
        if self.variance < 0:
            raise DomainError(f"variance must be >= 0, got {self.variance}")
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")

    def sample_amplitudes(self, message: int) -> np.ndarray:
        """Amplitudes of codeword ``message``; depends only on (seed, message)."""
        rng = keyed_generator(self.seed, CODEBOOK_STREAM, message)
        z = rng.standard_normal((self.n_modes, 2))
        return math.sqrt(self.variance / 2) * (z[:, 0] + 1j * z[:, 1])


@dataclass(frozen=True)
class CoherentCodeword:
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=complex).ravel()
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.size

    @property
    def total_photons(self) -> float:
        return math.fsum((np.abs(self.amplitudes) ** 2).tolist())

    @property
    def mean_photon_per_mode(self) -> float:
        return self.total_photons / self.n_modes

    def through_channel(self, eta: float) -> "CoherentCodeword":
        return CoherentCodeword(np.array([apply_to_coherent(a, eta) for a in self.amplitudes]))

    def vacuum_overlap(self) -> float:
        """<0...0|alpha^n>, real and positive."""
        return math.exp(-self.total_photons / 2)


@dataclass(frozen=True)
class MixtureCodeword:
    """``(1-p)|alpha^n><alpha^n| + p |0><0|^n``."""

    base: CoherentCodeword
    vacuum_weight: float

    def __post_init__(self):
        if not 0 <= self.vacuum_weight <= 1:
            raise DomainError(f"vacuum weight must lie in [0, 1], got {self.vacuum_weight}")

    @property
    def mean_photon_per_mode(self) -> float:
        return (1 - self.vacuum_weight) * self.base.mean_photon_per_mode

    def through_channel(self, eta: float) -> "MixtureCodeword":
        return MixtureCodeword(self.base.through_channel(eta), self.vacuum_weight)


@dataclass(frozen=True)
class SuperpositionCodeword:
    """``sqrt(1-p)|alpha^n>|0> + sqrt(p)|0^n>|1>`` on n + 1 modes."""

    base: CoherentCodeword
    weight: float

    def __post_init__(self):
        if not 0 <= self.weight <= 1:
            raise DomainError(f"weight must lie in [0, 1], got {self.weight}")

    def norm_squared(self) -> float:
        # cross terms carry <alpha^n|0^n> <0|1>; the flag overlap is exactly zero
        p = self.weight
        flag_overlap = 0.0
        cross = 2 * math.sqrt(p * (1 - p)) * self.base.vacuum_overlap() * flag_overlap
        return (1 - p) + p + cross

    @property
    def mean_photon_per_mode(self) -> float:
        return superposition_mean_photon(self.weight, self.base.mean_photon_per_mode,
                                         self.base.n_modes)

    def reduced(self) -> MixtureCodeword:
        """State of the first n modes after discarding the flag mode."""
        return MixtureCodeword(self.base, self.weight)


def mixture_mean_photon(p: float, P: float) -> float:
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if P < 0:
        raise DomainError(f"P must be >= 0, got {P}")
    return (1 - p) * P


def mixture_weight_for_budget(N_S: float, P: float) -> float:
    """Vacuum weight that brings pre-mix mean ``P`` down to budget ``N_S``."""
    if not 0 <= N_S <= P or P == 0:
        raise DomainError(f"need 0 <= N_S <= P with P > 0, got N_S={N_S}, P={P}")
    return 1 - N_S / P


def superposition_mean_photon(p: float, P: float, n: int) -> float:
    """Mean photons per mode over all n + 1 modes of the purified codeword."""
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return ((1 - p) * n * P + p) / (n + 1)


def superposition_weight_for_budget(N_S: float, P: float, n: int) -> float:
    """Weight ``p`` at which the purified codeword has mean ``N_S`` per mode.

    The mean is affine in ``p`` between ``nP/(n+1)`` and ``1/(n+1)``; a
    target outside that interval raises :class:`DomainError` naming it.
    """
    lo, hi = sorted((n * P / (n + 1), 1 / (n + 1)))
    if not lo - 1e-15 <= N_S <= hi + 1e-15:
        raise DomainError(f"no weight reaches N_S={N_S}; feasible interval is [{lo}, {hi}]")
    slope = (1 - n * P) / (n + 1)
    if slope == 0:
        return 0.0
    return (N_S - n * P / (n + 1)) / slope


@dataclass(frozen=True, eq=False)
class Codebook(Sequence):
    """``M`` coherent codewords stored as an (M, n) amplitude array."""

    amplitudes: np.ndarray
    ensemble: GaussianEnsemble | None = None

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=complex)
        if arr.ndim != 2:
            raise DomainError("amplitudes must have shape (M, n)")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]

    def __getitem__(self, m):
        if isinstance(m, slice):
            return [CoherentCodeword(row) for row in self.amplitudes[m]]
        return CoherentCodeword(self.amplitudes[m])

    def __iter__(self) -> Iterator[CoherentCodeword]:
        for row in self.amplitudes:
            yield CoherentCodeword(row)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.shape[1]

    def total_photons(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def header(self) -> dict:
        e = self.ensemble
        return {
            "seed": None if e is None else e.seed,
            "variance": None if e is None else e.variance,
            "n": self.n_modes,
            "M": len(self),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["message_index", "mode_index", "re_alpha", "im_alpha"])
        for m, row in enumerate(self.amplitudes):
            for i, a in enumerate(row):
                w.writerow([m, i, f"{a.real:.17g}", f"{a.imag:.17g}"])
        return buf.getvalue()

    def header_json(self) -> str:
        return json.dumps(self.header(), sort_keys=True)

    @classmethod
    def from_csv(cls, text: str, header: dict | None = None) -> "Codebook":
        rows = list(csv.DictReader(io.StringIO(text)))
        M = 1 + max(int(r["message_index"]) for r in rows)
        n = 1 + max(int(r["mode_index"]) for r in rows)
        amps = np.zeros((M, n), dtype=complex)
        for r in rows:
            amps[int(r["message_index"]), int(r["mode_index"])] = complex(
                float(r["re_alpha"]), float(r["im_alpha"]))
        ens = None
        if header and header.get("seed") is not None:
            ens = GaussianEnsemble(header["variance"], header["n"], header["seed"])
        return cls(amps, ens)


def sample_codebook(M: int, ensemble: GaussianEnsemble) -> Codebook:
    """Draw ``M`` codewords; codeword m depends only on (seed, m)."""
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    amps = np.empty((M, ensemble.n_modes), dtype=complex)
    for m in range(M):
        amps[m] = ensemble.sample_amplitudes(m)
    return Codebook(amps, ensemble)


def codeword_shadow(codeword: CoherentCodeword | MixtureCodeword, L: float) -> float:
    """Probability that the codeword has at most ``L`` photons in total."""
    if isinstance(codeword, MixtureCodeword):
        p = codeword.vacuum_weight
        inside_vacuum = 1.0 if L >= 0 else 0.0
        return (1 - p) * codeword_shadow(codeword.base, L) + p * inside_vacuum
    if isinstance(codeword, CoherentCodeword):
        return poisson_cdf(L, codeword.total_photons)
    raise TypeError(f"unsupported codeword type {type(codeword).__name__}")


@dataclass
class ShadowAudit:
    passed: bool
    average_shadow: float
    threshold: float
    worst_shadow: float
    worst_index: int
    shadows: np.ndarray = field(repr=False)
    budget_violations: list[int] = field(default_factory=list)
    expurgated: bool = False

    @property
    def average_deficit(self) -> float:
        return 1 - self.average_shadow


def audit_constraint_E1(codebook: Sequence, L: float, delta1: float,
                        photon_budget: float | None = None,
                        expurgate: bool = False) -> ShadowAudit:
    """Check that the codebook-average shadow at cutoff ``L`` is at least ``1 - delta1``.

    Per-codeword shadows are exact. If ``photon_budget`` is given, also
    lists codewords whose own mean photon number per mode exceeds it;
    with ``expurgate=True`` those codewords are left out of the average.
    """
    words = list(codebook)
    if isinstance(codebook, Codebook):
        totals = codebook.total_photons()
        shadows = np.array([poisson_cdf(L, t) for t in totals])
    else:
        shadows = np.array([codeword_shadow(w, L) for w in words])
    violations: list[int] = []
    if photon_budget is not None:
        violations = [i for i, w in enumerate(words)
                      if w.mean_photon_per_mode > photon_budget * (1 + 1e-12)]
    keep = np.ones(len(words), dtype=bool)
    if expurgate and violations:
        keep[violations] = False
    kept = shadows[keep] if keep.any() else shadows[:0]
    avg = math.fsum(kept.tolist()) / kept.size if kept.size else 1.0
    worst = int(np.argmin(shadows)) if shadows.size else -1
    return ShadowAudit(
        passed=avg >= 1 - delta1,
        average_shadow=avg,
        threshold=1 - delta1,
        worst_shadow=float(shadows[worst]) if worst >= 0 else 1.0,
        worst_index=worst,
        shadows=shadows,
        budget_violations=violations,
        expurgated=expurgate and bool(violations),
    )


def markov_union_bound(mean_shadow_deficit: float, delta1: float,
                       mean_error: float, epsilon: float) -> float:
    """Union plus Markov bound on the probability a random code misses either constraint."""
    return mean_shadow_deficit / delta1 + mean_error / epsilon
