"""Exact small-dimension linear algebra for the operator inequalities.

Nothing here scales: matrices are dense and every check diagonalizes.
The point is to have an independent, literal implementation of the
inequalities the converse leans on and of the beamsplitter dilation, to
run against randomized instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pureloss.errors import DomainError, PreconditionError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
MAX_TOTAL_DIM = 4096


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    subnormalized: bool = False

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise DomainError("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        if np.linalg.eigvalsh(m)[0] < -PSD_TOL:
            raise DomainError("density matrix is not positive semidefinite")
        tr = float(np.real(np.trace(m)))
        if not 0 < tr <= 1 + 1e-9:
            raise DomainError(f"trace {tr} outside (0, 1]")
        if not self.subnormalized and abs(tr - 1) > 1e-9:
            object.__setattr__(self, "subnormalized", True)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, vec) -> "DensityMatrix":
        v = np.asarray(vec, dtype=complex)
        return cls(np.outer(v, v.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True)
class PovmElement:
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise DomainError("POVM element is not Hermitian")
        m = (m + m.conj().T) / 2
        w = np.linalg.eigvalsh(m)
        if w[0] < -PSD_TOL or w[-1] > 1 + PSD_TOL:
            raise DomainError(f"POVM element eigenvalues [{w[0]}, {w[-1]}] outside [0, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def check_povm_complete(povm: Sequence[PovmElement], atol: float = 1e-10) -> bool:
    total = sum(e.matrix for e in povm)
    return bool(np.allclose(total, np.eye(povm[0].dim), atol=atol))


def _raw(x) -> np.ndarray:
    return x.matrix if hasattr(x, "matrix") else _as_matrix(x)


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    w = np.linalg.eigvalsh((a + a.conj().T) / 2)
    return math.fsum(np.abs(w).tolist())


def trace_distance(rho, sigma) -> float:
    """``||rho - sigma||_1`` (no factor 1/2)."""
    a, b = _raw(rho), _raw(sigma)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch {a.shape} vs {b.shape}")
    return trace_norm(a - b)


def expectation(lam, rho) -> float:
    return float(np.real(np.trace(_raw(lam) @ _raw(rho))))


def psd_sqrt(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Square root of a PSD matrix via eigendecomposition.

    Negative eigenvalues from roundoff are clipped to zero; the clipped
    magnitude is returned alongside.
    """
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    clipped = float(-w[w < 0].sum()) if np.any(w < 0) else 0.0
    w = np.clip(w, 0, None)
    return (v * np.sqrt(w)) @ v.conj().T, clipped


@dataclass(frozen=True)
class Residual:
    """``residual = rhs_slack``; nonnegative whenever the inequality holds."""

    residual: float
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.residual >= -1e-9


def check_trace_inequality(lam, rho, sigma) -> Residual:
    """``Tr{L rho} >= Tr{L sigma} - ||rho - sigma||_1``; residual is LHS minus RHS."""
    lhs = expectation(lam, rho)
    rhs = expectation(lam, sigma) - trace_distance(rho, sigma)
    r = Residual(lhs - rhs, lhs, rhs)
    assert r.holds, f"trace inequality violated by {r.residual}"
    return r


def gentle_disturbance(lam, rho) -> float:
    s, _ = psd_sqrt(_raw(lam))
    r = _raw(rho)
    return trace_norm(r - s @ r @ s)


def check_gentle_operator(lam, rho, epsilon: float) -> Residual:
    """``||rho - sqrt(L) rho sqrt(L)||_1 <= 2 sqrt(epsilon)`` given ``Tr{L rho} >= 1 - epsilon``."""
    if not 0 <= epsilon <= 1:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon}")
    success = expectation(lam, rho)
    if success < 1 - epsilon - 1e-12:
        raise PreconditionError(f"Tr{{L rho}} = {success} < 1 - epsilon = {1 - epsilon}",
                                admissible=(1 - success, 1.0))
    lhs = gentle_disturbance(lam, rho)
    rhs = 2 * math.sqrt(epsilon)
    r = Residual(rhs - lhs, lhs, rhs)
    assert r.holds, f"gentle operator bound violated by {r.residual}"
    return r


def check_gentle_operator_ensemble(lam, probs: Sequence[float], states: Sequence,
                                   epsilon: float) -> Residual:
    """Averaged form: sum_x p_x ||rho_x - sqrt(L) rho_x sqrt(L)||_1 <= 2 sqrt(epsilon)."""
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1) > 1e-9 or np.any(probs < 0):
        raise DomainError("ensemble probabilities must form a distribution")
    success = math.fsum(p * expectation(lam, s) for p, s in zip(probs, states))
    if success < 1 - epsilon - 1e-12:
        raise PreconditionError(f"average success {success} < 1 - epsilon = {1 - epsilon}",
                                admissible=(1 - success, 1.0))
    lhs = math.fsum(p * gentle_disturbance(lam, s) for p, s in zip(probs, states))
    rhs = 2 * math.sqrt(epsilon)
    r = Residual(rhs - lhs, lhs, rhs)
    assert r.holds, f"ensemble gentle operator bound violated by {r.residual}"
    return r


@dataclass(frozen=True)
class DecoderCheck:
    epsilon: float
    mixture_success: np.ndarray
    superposition_success: np.ndarray
    bound: float
    residual: float

    @property
    def holds(self) -> bool:
        return self.residual >= -1e-9


def mixture_decoder_bound(povm: Sequence, codewords: Sequence[np.ndarray], p: float,
                          vacuum: np.ndarray | None = None,
                          epsilon: float | None = None) -> DecoderCheck:
    """Success of each vacuum-mixed codeword is at least ``(1 - p)(1 - epsilon)``.

    ``codewords[m]`` is the pure output state decoded by ``povm[m]``;
    ``epsilon`` defaults to the worst pure-state error. The purified
    version, with a flag qubit carrying the vacuum branch and the decoder
    acting as ``L_m (x) I``, is evaluated too and must match the mixture.
    """
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    mats = [_raw(e) for e in povm]
    d = mats[0].shape[0]
    vac = np.zeros(d, dtype=complex) if vacuum is None else np.asarray(vacuum, dtype=complex)
    if vacuum is None:
        vac[0] = 1
    pure = np.array([np.real(np.vdot(b, L @ b)) for L, b in zip(mats, codewords)])
    worst = 1 - float(pure.min())
    if epsilon is None:
        epsilon = worst
    elif worst > epsilon + 1e-12:
        raise PreconditionError(f"pure-state error {worst} exceeds epsilon {epsilon}",
                                admissible=(worst, 1.0))
    vac_dm = np.outer(vac, vac.conj())
    mix = []
    sup = []
    flag0, flag1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    for L, b in zip(mats, codewords):
        rho = (1 - p) * np.outer(b, b.conj()) + p * vac_dm
        mix.append(float(np.real(np.trace(L @ rho))))
        gamma = math.sqrt(1 - p) * np.kron(b, flag0) + math.sqrt(p) * np.kron(vac, flag1)
        big = np.kron(L, np.eye(2))
        sup.append(float(np.real(np.vdot(gamma, big @ gamma))))
    mix = np.array(mix)
    sup = np.array(sup)
    bound = (1 - p) * (1 - epsilon)
    residual = float(min(mix.min(), sup.min()) - bound)
    check = DecoderCheck(epsilon, mix, sup, bound, residual)
    assert check.holds, f"mixture decoder bound violated by {residual}"
    assert np.allclose(mix, sup, atol=1e-12), "purified codeword disagrees with mixture"
    return check


def beamsplitter_isometry(cutoff: int, eta: float) -> np.ndarray:
    """Matrix of |a> -> sum_k sqrt(C(a,k)) eta^(k/2) (1-eta)^((a-k)/2) |k>_B |a-k>_E.

    Shape ``(d*d, d)`` with ``d = cutoff + 1``; row index is ``k * d + e``.
    """
    d = cutoff + 1
    V = np.zeros((d * d, d))
    se, sl = math.sqrt(eta), math.sqrt(1 - eta)
    for a in range(d):
        for k in range(a + 1):
            V[k * d + (a - k), a] = math.sqrt(math.comb(a, k)) * se ** k * sl ** (a - k)
    return V


def simulate_loss_exact(state, eta: float, fock_cutoff: int, n_modes: int | None = None) -> DensityMatrix:
    """Apply the loss channel to every mode of a dense multimode state.

    The state lives on ``n_modes`` modes, each truncated at ``fock_cutoff``
    photons. Each mode is dilated with the beamsplitter isometry against a
    vacuum environment and the environment is traced out.
    """
    rho = _raw(state)
    d = fock_cutoff + 1
    D = rho.shape[0]
    if D > MAX_TOTAL_DIM:
        raise DomainError(f"total dimension {D} exceeds cap {MAX_TOTAL_DIM}")
    if n_modes is None:
        n_modes = round(math.log(D) / math.log(d))
    if d ** n_modes != D:
        raise DomainError(f"dimension {D} is not ({d})^{n_modes}")
    V = beamsplitter_isometry(fock_cutoff, eta).reshape(d, d, d)  # [k, e, a]
    t = rho.reshape((d,) * (2 * n_modes))
    for j in range(n_modes):
        # move mode j (ket axis j, bra axis n+j) through V rho V^dag, trace env
        t = np.moveaxis(t, (j, n_modes + j), (0, 1))
        t = np.einsum("kea,ab...,leb->kl...", V, t, V.conj(), optimize=True)
        t = np.moveaxis(t, (0, 1), (j, n_modes + j))
    out = t.reshape(D, D)
    subnormalized = getattr(state, "subnormalized", False)
    return DensityMatrix(out, subnormalized=subnormalized)


def product_state(single_modes: Sequence) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in single_modes:
        out = np.kron(out, _raw(m))
    return out


# --- random instances -----------------------------------------------------

def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed density matrix of the given rank."""
    rank = rank or dim
    G = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = G @ G.conj().T
    return DensityMatrix(rho / np.real(np.trace(rho)))


def random_subnormalized(rng: np.random.Generator, dim: int) -> DensityMatrix:
    rho = random_density_matrix(rng, dim).matrix * rng.uniform(0.05, 1.0)
    return DensityMatrix(rho, subnormalized=True)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_povm(rng: np.random.Generator, dim: int, outcomes: int) -> list[PovmElement]:
    """POVM from the rows of a Haar-random isometry split into ``outcomes`` blocks."""
    U = random_unitary(rng, dim * outcomes)
    V = U[:, :dim]
    return [PovmElement(V[m * dim:(m + 1) * dim].conj().T @ V[m * dim:(m + 1) * dim])
            for m in range(outcomes)]


def random_effect(rng: np.random.Generator, dim: int) -> PovmElement:
    U = random_unitary(rng, dim)
    w = rng.random(dim)
    return PovmElement((U * w) @ U.conj().T)
