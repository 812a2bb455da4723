"""The pure-loss bosonic channel and its action on photon statistics.

Each photon independently survives the beamsplitter with probability
``eta``, so on photon counts the channel is binomial thinning. Everything
here works on the diagonal (photon-number) sector, which is the only part
the photon-number cutoff projector sees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from pureloss.concentration import binomial_cdf_table, binomial_log2_pmf
from pureloss.errors import DomainError, PreconditionError, UnsupportedRepresentationError
from pureloss.fock import PhotonDistribution, SingleModeState, convolve_all, poisson_cdf
from pureloss.numerics import ceil_tol

Convention = Literal["transmit", "swapped"]


@dataclass(frozen=True)
class ChannelParams:
    """Transmissivity, number of modes and photon budget per mode."""

    eta: float
    n_modes: int
    photon_budget: float

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")
        if self.n_modes < 1:
            raise DomainError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.photon_budget < 0:
            raise DomainError(f"photon budget must be >= 0, got {self.photon_budget}")

    @property
    def input_cutoff(self) -> int:
        return ceil_tol(self.n_modes * self.photon_budget)

    def output_cutoff(self, delta2: float) -> int:
        return ceil_tol(self.n_modes * (self.eta * self.photon_budget + delta2))

    def delta3_max(self, delta2: float) -> float:
        """Largest Hoeffding slack allowed for this blocklength and ``delta2``."""
        num = self.n_modes * delta2 - self.eta
        if self.input_cutoff == 0:
            return math.inf if num > 0 else num
        return num / self.input_cutoff


@dataclass(frozen=True)
class BeamsplitterExpansion:
    """Amplitudes of ``|a>|0> -> sum_k amp_k |k>|a-k>`` for a beamsplitter."""

    input_photons: int
    eta: float

    @property
    def amplitudes(self) -> np.ndarray:
        a, eta = self.input_photons, self.eta
        return np.array([
            math.sqrt(math.comb(a, k)) * math.sqrt(eta) ** k * math.sqrt(1 - eta) ** (a - k)
            for k in range(a + 1)
        ])

    def norm_squared(self) -> float:
        return math.fsum((self.amplitudes ** 2).tolist())


def apply_to_coherent(alpha: complex, eta: float) -> complex:
    """Output amplitude of a coherent state: the channel maps |alpha> to |sqrt(eta) alpha>."""
    if not 0 <= eta <= 1:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    return math.sqrt(eta) * alpha


def fock_loss_distribution(a: int, eta: float,
                           convention: Convention = "transmit") -> PhotonDistribution:
    """Output photon count distribution for the number state |a>.

    ``convention="swapped"`` exchanges the roles of eta and 1 - eta so the
    effect of attaching the exponents the other way round can be tabulated.
    """
    if a < 0:
        raise DomainError(f"photon count must be >= 0, got {a}")
    q = _survival(eta, convention)
    return PhotonDistribution(np.exp2(binomial_log2_pmf(a, q)))


def _survival(eta: float, convention: Convention) -> float:
    if convention == "transmit":
        return eta
    if convention == "swapped":
        return 1 - eta
    raise ValueError(f"unknown convention {convention!r}")


def _total_distribution(state) -> PhotonDistribution:
    if isinstance(state, PhotonDistribution):
        return state
    if isinstance(state, SingleModeState):
        m = state.matrix
        if np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0) > 1e-12:
            raise UnsupportedRepresentationError(
                "state has number-basis coherences; use pureloss.oracle.simulate_loss_exact")
        return state.photon_distribution()
    if isinstance(state, (list, tuple)):
        return convolve_all(_total_distribution(s) for s in state)
    raise UnsupportedRepresentationError(
        f"cannot compute output shadow for {type(state).__name__}; "
        "use pureloss.oracle.simulate_loss_exact at small scale")


def output_shadow_exact(state, eta: float, L_out: float,
                        convention: Convention = "transmit") -> float:
    """Tr{Pi_L N^{(x)n}(rho)} for a number-diagonal input.

    ``state`` is a :class:`PhotonDistribution` of the total input photon
    count, a diagonal :class:`SingleModeState`, or a sequence of either
    (product over modes). Only the total photon count matters because the
    channel thins each photon independently.

    Mass recorded as truncation deficit is counted as leaving the cutoff,
    so the returned value never overstates the shadow.
    """
    if L_out == math.inf:
        d = _total_distribution(state)
        return d.mass()
    dist = _total_distribution(state)
    if L_out < 0:
        return 0.0
    table = binomial_cdf_table(dist.support_max, _survival(eta, convention), int(math.floor(L_out)))
    return math.fsum((dist.pmf * table).tolist())


def coherent_output_shadow(total_mean: float, eta: float, L_out: float) -> float:
    """Output shadow of a coherent product state with sum |alpha_i|^2 = ``total_mean``.

    Thinning keeps it Poisson, with mean scaled by ``eta``.
    """
    return poisson_cdf(L_out, eta * total_mean)


@dataclass(frozen=True)
class OutputShadowBound:
    bound: float
    raw: float
    input_cutoff: int
    output_cutoff: int
    delta3_max: float
    exp_term: float


def lemma2_output_shadow_bound(delta1: float, delta2: float, delta3: float,
                               params: ChannelParams) -> OutputShadowBound:
    """Lower bound on the output shadow given the input shadow is at least 1 - delta1.

    ``1 - 2 sqrt(delta1) - delta1 - exp(-2 delta3^2 eta N_S n)``, clamped at 0,
    valid at output cutoff ``ceil(n (eta N_S + delta2))``.
    """
    if not 0 <= delta1 <= 1:
        raise DomainError(f"delta1 must lie in [0, 1], got {delta1}")
    if delta2 <= 0:
        raise DomainError(f"delta2 must be > 0, got {delta2}")
    d3_max = params.delta3_max(delta2)
    if not 0 < delta3 <= d3_max * (1 + 1e-12):
        raise PreconditionError(
            f"delta3={delta3} outside admissible interval (0, {d3_max}] "
            f"for n={params.n_modes}, delta2={delta2}",
            admissible=(0.0, d3_max))
    n = params.n_modes
    exp_term = math.exp(-2 * delta3 ** 2 * params.eta * params.photon_budget * n)
    raw = 1 - 2 * math.sqrt(delta1) - delta1 - exp_term
    return OutputShadowBound(
        bound=max(0.0, raw),
        raw=raw,
        input_cutoff=params.input_cutoff,
        output_cutoff=params.output_cutoff(delta2),
        delta3_max=d3_max,
        exp_term=exp_term,
    )


def worst_case_input(params: ChannelParams, delta1: float, far: int | None = None) -> PhotonDistribution:
    """Diagonal input that meets the shadow constraint with the least slack.

    Mass ``1 - delta1`` sits at the input cutoff and ``delta1`` far above it,
    which minimizes the output shadow among inputs with this input shadow.
    """
    L = params.input_cutoff
    far = far if far is not None else 4 * L + 10
    pmf = np.zeros(far + 1)
    pmf[L] += 1 - delta1
    pmf[far] += delta1
    return PhotonDistribution(pmf)


def random_diagonal_input(rng: np.random.Generator, params: ChannelParams, delta1: float,
                          n_atoms: int = 8) -> PhotonDistribution:
    """Random total-photon distribution whose shadow at the input cutoff is >= 1 - delta1."""
    L = params.input_cutoff
    top = 3 * L + 10
    inside = rng.integers(0, L + 1, size=n_atoms)
    outside = rng.integers(L + 1, top + 1, size=n_atoms)
    w_in = rng.dirichlet(np.ones(n_atoms))
    w_out = rng.dirichlet(np.ones(n_atoms))
    leak = delta1 * rng.random()
    pmf = np.zeros(top + 1)
    np.add.at(pmf, inside, (1 - leak) * w_in)
    np.add.at(pmf, outside, leak * w_out)
    return PhotonDistribution(pmf / pmf.sum())

