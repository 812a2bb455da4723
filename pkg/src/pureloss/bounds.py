"""Closed-form rate and success-probability bounds.

All functions return plain numbers or small report objects built from
their inputs alone, so any row of a sweep can be recomputed exactly.
Probabilities are clamped to [0, 1] only in the ``success_upper`` field;
raw values are kept alongside.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

from pureloss.channel import ChannelParams
from pureloss.errors import DomainError, PreconditionError
from pureloss.fock import projector_rank
from pureloss.numerics import LOG2E, LogProb, binary_entropy, ceil_tol, g_entropy


def weak_converse_rate_bound(epsilon: float, params: ChannelParams) -> float:
    """Largest rate compatible with error ``epsilon`` under the weak converse."""
    if not 0 <= epsilon <= 1:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon == 1:
        raise DomainError("weak converse bound diverges at epsilon = 1")
    g = g_entropy(params.eta * params.photon_budget)
    return (g + binary_entropy(epsilon)) / (1 - epsilon)


def qubit_strong_converse(R: float, n: int) -> float:
    """Success probability cap 2^(-n(R-1)) for n noiseless qubits at rate R."""
    if R < 0:
        raise DomainError(f"rate must be >= 0, got {R}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    exponent = -n * (R - 1)
    return 1.0 if exponent >= 0 else 2.0 ** exponent


def lemma1_minimal_delta(n: int, photon_budget: float) -> float:
    if photon_budget <= 0:
        return math.inf
    return (LOG2E + math.log2(1 + 1 / photon_budget)) / n


@dataclass(frozen=True)
class RankBound:
    n: int
    photon_budget: float
    cutoff: int
    exact_rank: int
    minimal_delta: float
    bound: LogProb

    @property
    def log2_rank(self) -> float:
        return math.log2(self.exact_rank)

    @property
    def margin_bits(self) -> float:
        """How far, in bits, the rank sits below the bound."""
        return self.bound.log2_value - self.log2_rank


def lemma1_rank_bound(n: int, photon_budget: float) -> RankBound:
    """Exact rank of the cutoff projector at ceil(n N_S) and its entropy bound.

    The bound is ``2^(n (g(N_S) + delta))`` with the smallest admissible
    ``delta``. Raises ``AssertionError`` if the exact rank exceeds it,
    which would mean an arithmetic bug.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if photon_budget <= 0:
        raise DomainError(f"photon budget must be > 0, got {photon_budget}")
    L = ceil_tol(n * photon_budget)
    rank = projector_rank(n, L)
    delta = lemma1_minimal_delta(n, photon_budget)
    bound = LogProb(n * (g_entropy(photon_budget) + delta))
    assert math.log2(rank) <= bound.log2_value + 1e-12, (
        f"rank 2^{math.log2(rank)} exceeds bound 2^{bound.log2_value} at n={n}, N_S={photon_budget}")
    return RankBound(n, photon_budget, L, rank, delta, bound)


def lemma1_chain(n: int, photon_budget: float) -> tuple[float, float, float]:
    """The three quantities compared in the rank argument, all in bits.

    Returns ``(log2 rank, (L+n) h2(n/(L+n)), n g(N_S) + log2 e + log2(1 + 1/N_S))``
    with ``L = ceil(n N_S)``; each should be no larger than the next.
    """
    L = ceil_tol(n * photon_budget)
    rank = projector_rank(n, L)
    middle = (L + n) * binary_entropy(n / (L + n))
    right = n * g_entropy(photon_budget) + LOG2E + math.log2(1 + 1 / photon_budget)
    return math.log2(rank), middle, right


@dataclass(frozen=True)
class ConverseSlack:
    """Slack parameters of the converse.

    ``delta`` is the rank-bound slack in bits; leave it ``None`` to derive
    the minimal admissible value from the blocklength.
    """

    delta1: float
    delta2: float
    delta3: float
    delta: float | None = None


@dataclass(frozen=True)
class CodeParams:
    messages: int | None = None
    rate: float | None = None
    epsilon: float = 0.0
    mix_weight: float | None = None
    pre_mix_mean: float | None = None

    def rate_for(self, n: int) -> float:
        if self.rate is not None:
            if self.messages is not None:
                r = math.log2(self.messages) / n
                if not math.isclose(r, self.rate, rel_tol=1e-12, abs_tol=1e-12):
                    raise DomainError(f"rate {self.rate} inconsistent with M={self.messages}, n={n}")
            return self.rate
        if self.messages is None:
            raise DomainError("need either messages or rate")
        return math.log2(self.messages) / n


@dataclass(frozen=True)
class BoundReport:
    params: ChannelParams
    code: CodeParams
    slack: ConverseSlack
    g_eta_ns: float
    h2_eps: float
    bound_terms: dict[str, float] = field(default_factory=dict)
    success_upper: float | None = None
    rate_upper: float | None = None
    flags: dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


DeltaVariant = Literal["shifted", "unshifted"]


def strong_converse_success_bound(code: CodeParams, params: ChannelParams,
                                  slack: ConverseSlack,
                                  delta_variant: DeltaVariant = "shifted") -> BoundReport:
    """Upper bound on the average success probability of any code above capacity.

    Two terms: the rank term ``2^(-n (R - g(eta N_S) - delta2 - delta))``
    and the disturbance term
    ``2 sqrt(delta1 + exp(-2 delta3^2 eta N_S n) + 2 sqrt(delta1))``.

    When ``slack.delta`` is ``None`` the rank slack is the minimal one at
    photon budget ``eta N_S + delta2`` (``delta_variant="shifted"``, the
    cutoff actually projected onto) or ``eta N_S`` (``"unshifted"``). Both
    are reported either way, together with the rank term computed from
    the exact rank of the output cutoff projector.
    """
    n = params.n_modes
    R = code.rate_for(n)
    if not 0 <= slack.delta1 <= 1:
        raise DomainError(f"delta1 must lie in [0, 1], got {slack.delta1}")
    if slack.delta2 <= 0:
        raise DomainError(f"delta2 must be > 0, got {slack.delta2}")
    d3_max = params.delta3_max(slack.delta2)
    if not 0 < slack.delta3 <= d3_max * (1 + 1e-12):
        raise PreconditionError(
            f"delta3={slack.delta3} outside admissible interval (0, {d3_max}] "
            f"for n={n}, delta2={slack.delta2}",
            admissible=(0.0, d3_max))

    eta_ns = params.eta * params.photon_budget
    g = g_entropy(eta_ns)
    delta_shifted = lemma1_minimal_delta(n, eta_ns + slack.delta2)
    delta_unshifted = lemma1_minimal_delta(n, eta_ns)
    if slack.delta is not None:
        delta = slack.delta
    else:
        delta = delta_shifted if delta_variant == "shifted" else delta_unshifted

    def rank_term(d: float) -> float:
        e = -n * (R - g - slack.delta2 - d)
        return math.inf if e > 1000 else 2.0 ** e

    gap = R - g - slack.delta2 - delta
    first = rank_term(delta)
    exp_term = math.exp(-2 * slack.delta3 ** 2 * eta_ns * n)
    second = 2 * math.sqrt(slack.delta1 + exp_term + 2 * math.sqrt(slack.delta1))
    raw = first + second

    out_cutoff = params.output_cutoff(slack.delta2)
    log2_rank_out = math.log2(projector_rank(n, out_cutoff))
    exact_rank_term_log2 = log2_rank_out - n * R

    terms = {
        "rank_term": first,
        "disturbance_term": second,
        "exp_term": exp_term,
        "raw_total": raw,
        "delta": delta,
        "delta_shifted": delta_shifted,
        "delta_unshifted": delta_unshifted,
        "rank_term_shifted": rank_term(delta_shifted),
        "rank_term_unshifted": rank_term(delta_unshifted),
        "exponent_gap": gap,
        "output_cutoff": float(out_cutoff),
        "log2_rank_output_cutoff": log2_rank_out,
        "rank_term_exact_log2": exact_rank_term_log2,
        "rank_term_exact": min(1.0, 2.0 ** exact_rank_term_log2),
        "rate": R,
        "delta3_max": d3_max,
    }
    flags = {
        "decaying": gap > 0,
        # whether the closed-form rank term dominates the exact one
        "rank_term_covers_exact": exact_rank_term_log2 <= -n * gap + 1e-9,
    }
    return BoundReport(
        params=params,
        code=code,
        slack=slack,
        g_eta_ns=g,
        h2_eps=binary_entropy(code.epsilon),
        bound_terms=terms,
        success_upper=min(1.0, max(0.0, raw)),
        flags=flags,
    )


def tradeoff_point(p: float, params: ChannelParams) -> tuple[float, float]:
    """Rate and error achievable with vacuum-mixed codewords at mixing weight ``p``."""
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p == 1:
        raise DomainError("trade-off rate diverges at p = 1")
    return g_entropy(params.eta * params.photon_budget / (1 - p)), p


def simulation_rate(params: ChannelParams) -> float:
    """Qubits per mode needed to simulate the channel on inputs within the photon budget."""
    return g_entropy(params.eta * params.photon_budget)


def weak_converse_report(epsilon: float, params: ChannelParams) -> BoundReport:
    return BoundReport(
        params=params,
        code=CodeParams(epsilon=epsilon),
        slack=ConverseSlack(0.0, 0.0, 0.0),
        g_eta_ns=g_entropy(params.eta * params.photon_budget),
        h2_eps=binary_entropy(epsilon),
        rate_upper=weak_converse_rate_bound(epsilon, params),
    )
