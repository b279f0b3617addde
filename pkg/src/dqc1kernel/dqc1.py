"""DQC1 circuit simulation: exact readout, shot sampling, noisy evolution.

The one-clean-qubit circuit prepares a control qubit next to an n-qubit
register in state rho_n, Hadamards the control, applies the register
unitary U_n controlled on it, and reads the control coherence.  The
coherence equals Tr(rho_n U_n), so three evaluation paths are offered:

* ``exact_offdiagonal``     -- the trace itself, computed directly.
* ``sample_offdiagonal``    -- finite-shot Pauli readout of the control.
* ``noisy_offdiagonal``     -- full density-matrix evolution with a global
                               depolarizing channel after each circuit block.

Convention note: evolving |0><0| (x) rho_n through H and the controlled
unitary puts Tr(rho_n U_n) in the (1,0) entry of the reduced control state
(its (0,1) entry holds the conjugate).  Readout here always returns the
entry that equals Tr(rho_n U_n), so every path converges to the same
quantity as the exact trace; the sampled sigma_y quadrature sign is fixed
accordingly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .circuit import FeatureMapSpec, HADAMARD, hadamard_layer, PhaseEncoding, u_phi
from .tensor import as_matrix

__all__ = [
    "RegisterKind",
    "RegisterPrep",
    "ControlPrep",
    "ShotPlan",
    "NoiseKind",
    "NoiseModel",
    "exact_offdiagonal",
    "shots_needed",
    "sample_offdiagonal",
    "noisy_offdiagonal",
    "average_fidelity",
]


class RegisterKind(str, Enum):
    MAXIMALLY_MIXED = "mixed"
    ALL_ZEROS_PURE = "pure"
    CUSTOM = "custom"


@dataclass(frozen=True)
class RegisterPrep:
    """Initial state rho_n of the n-qubit register."""

    kind: RegisterKind = RegisterKind.MAXIMALLY_MIXED
    custom_rho: np.ndarray | None = None

    def __post_init__(self):
        kind = RegisterKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is RegisterKind.CUSTOM:
            rho = as_matrix(self.custom_rho)
            if rho.shape[0] != rho.shape[1]:
                raise ValueError("custom register state must be square")
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("custom register state must be Hermitian")
            if abs(np.trace(rho) - 1.0) > 1e-10:
                raise ValueError("custom register state must have unit trace")
            if np.linalg.eigvalsh(rho).min() < -1e-10:
                raise ValueError("custom register state must be positive semi-definite")
            object.__setattr__(self, "custom_rho", rho)
        elif self.custom_rho is not None:
            raise ValueError("custom_rho is only accepted with kind='custom'")

    @classmethod
    def maximally_mixed(cls) -> "RegisterPrep":
        return cls(RegisterKind.MAXIMALLY_MIXED)

    @classmethod
    def all_zeros(cls) -> "RegisterPrep":
        return cls(RegisterKind.ALL_ZEROS_PURE)

    @classmethod
    def custom(cls, rho) -> "RegisterPrep":
        return cls(RegisterKind.CUSTOM, as_matrix(rho))

    def density_matrix(self, n_dim: int) -> np.ndarray:
        """Materialize rho_n as an (n_dim, n_dim) matrix."""
        if self.kind is RegisterKind.MAXIMALLY_MIXED:
            return np.eye(n_dim, dtype=np.complex128) / n_dim
        if self.kind is RegisterKind.ALL_ZEROS_PURE:
            rho = np.zeros((n_dim, n_dim), dtype=np.complex128)
            rho[0, 0] = 1.0
            return rho
        if self.custom_rho.shape[0] != n_dim:
            raise ValueError(
                f"custom register state is {self.custom_rho.shape[0]}-dimensional, "
                f"expected {n_dim}"
            )
        return self.custom_rho


@dataclass(frozen=True)
class ControlPrep:
    """Control-qubit polarization: (1 + beta * sigma_z) / 2.

    beta = 1 is the clean qubit; smaller beta scales the readout signal by
    beta and the sampling cost by beta^-2.
    """

    beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")


@dataclass(frozen=True)
class ShotPlan:
    """Shot counts for the two Pauli quadratures of the control qubit."""

    shots_x: int
    shots_y: int
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.shots_x < 1 or self.shots_y < 1:
            raise ValueError("shot counts must be >= 1")

    @classmethod
    def from_accuracy(cls, epsilon: float, delta: float, beta: float = 1.0) -> "ShotPlan":
        shots = shots_needed(epsilon, delta, beta)
        return cls(shots_x=shots, shots_y=shots, epsilon=epsilon, delta=delta)


class NoiseKind(str, Enum):
    NONE = "none"
    GLOBAL_DEPOLARIZING = "global_depolarizing"


@dataclass(frozen=True)
class NoiseModel:
    """Per-block noise applied during the controlled evolution."""

    kind: NoiseKind = NoiseKind.NONE
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("depolarizing strength p must lie in [0, 1]")
        if self.kind is NoiseKind.NONE and self.p != 0.0:
            raise ValueError("kind='none' requires p == 0")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(NoiseKind.NONE, 0.0)

    @classmethod
    def depolarizing(cls, p: float) -> "NoiseModel":
        return cls(NoiseKind.GLOBAL_DEPOLARIZING, p)


def exact_offdiagonal(u_n: np.ndarray, prep: RegisterPrep) -> complex:
    """Tr(rho_n U_n): the exact control-qubit coherence.

    Maximally mixed register gives Tr(U_n)/N; the all-zeros pure register
    gives the (0, 0) entry of U_n.
    """
    u_n = as_matrix(u_n)
    if u_n.shape[0] != u_n.shape[1]:
        raise ValueError("register unitary must be square")
    n_dim = u_n.shape[0]
    if prep.kind is RegisterKind.MAXIMALLY_MIXED:
        return complex(np.trace(u_n) / n_dim)
    if prep.kind is RegisterKind.ALL_ZEROS_PURE:
        return complex(u_n[0, 0])
    rho = prep.density_matrix(n_dim)
    return complex(np.trace(rho @ u_n))


def shots_needed(epsilon: float, delta: float, beta: float = 1.0) -> int:
    """Measurements per quadrature to reach additive error ``epsilon`` with
    failure probability ``delta``.

    Two-sided Hoeffding bound for a +-1-valued empirical mean, with the
    beta^-2 overhead of an imperfectly polarized control qubit:
    ceil(2 ln(2/delta) / (epsilon^2 beta^2)).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    return math.ceil(2.0 * math.log(2.0 / delta) / (epsilon * epsilon * beta * beta))


def sample_offdiagonal(
    u_n: np.ndarray,
    prep: RegisterPrep,
    control: ControlPrep,
    plan: ShotPlan,
    seed,
) -> complex:
    """Finite-shot estimate of Tr(rho_n U_n) from control-qubit Pauli readout.

    The sigma_x quadrature draws ``plan.shots_x`` +-1 outcomes with
    P(+1) = (1 + beta Re K)/2 and the sigma_y quadrature ``plan.shots_y``
    outcomes with P(+1) = (1 - beta Im K)/2, both taken from the reduced
    control state of the analytically evolved circuit (distribution-
    identical to materializing the controlled unitary per shot, and
    vastly cheaper).  Returns mean_x/beta - i*mean_y/beta, an unbiased
    estimator of K.  Deterministic given ``seed``.
    """
    k_exact = exact_offdiagonal(u_n, prep)
    beta = control.beta
    p_x = 0.5 * (1.0 + beta * k_exact.real)
    p_y = 0.5 * (1.0 - beta * k_exact.imag)
    # |K| <= 1 for unitary U_n, but guard FP spill anyway
    p_x = min(max(p_x, 0.0), 1.0)
    p_y = min(max(p_y, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    ups_x = rng.binomial(plan.shots_x, p_x)
    ups_y = rng.binomial(plan.shots_y, p_y)
    mean_x = (2.0 * ups_x - plan.shots_x) / plan.shots_x
    mean_y = (2.0 * ups_y - plan.shots_y) / plan.shots_y
    return complex(mean_x / beta, -(mean_y / beta))


def _circuit_blocks(x: FeatureMapSpec, x_prime: FeatureMapSpec) -> list:
    """The 2r register-space blocks whose ordered product (last block
    leftmost) is encode(x) @ encode(x')†."""
    h_layer = hadamard_layer(x.n_qubits)
    phase_x = u_phi(PhaseEncoding.from_point(x.x))
    phase_xp = u_phi(PhaseEncoding.from_point(x_prime.x))
    first_half = [h_layer @ phase_xp.conj().T] * x.depth_r
    second_half = [phase_x @ h_layer] * x.depth_r
    return first_half + second_half


def noisy_offdiagonal(
    x: FeatureMapSpec,
    x_prime: FeatureMapSpec,
    prep: RegisterPrep,
    noise: NoiseModel,
) -> complex:
    """Kernel value under noisy evolution of the full (n+1)-qubit state.

    The initial state |0><0| (x) rho_n is Hadamarded on the control, then
    each of the 2r feature-map blocks of encode(x) @ encode(x')† is applied
    in controlled form, followed by a global depolarizing channel
    rho -> (1-p) rho + p I/2N after each block (control Hadamards are
    noiseless).  Returns the reduced control-state entry equal to
    Tr(rho_n U_n); for the global depolarizing channel this equals
    (1-p)^(2r) K(x, x') exactly.
    """
    if x.depth_r != x_prime.depth_r or x.n_qubits != x_prime.n_qubits:
        raise ValueError("feature-map specs must share depth and register size")
    n_dim = 2 ** x.n_qubits
    full_dim = 2 * n_dim
    p = noise.p if noise.kind is NoiseKind.GLOBAL_DEPOLARIZING else 0.0

    rho = np.zeros((full_dim, full_dim), dtype=np.complex128)
    rho[:n_dim, :n_dim] = prep.density_matrix(n_dim)
    h_control = np.kron(HADAMARD, np.eye(n_dim))
    rho = h_control @ rho @ h_control.conj().T

    mixed_term = np.eye(full_dim, dtype=np.complex128) / full_dim
    for block in _circuit_blocks(x, x_prime):
        c_block = np.zeros((full_dim, full_dim), dtype=np.complex128)
        c_block[:n_dim, :n_dim] = np.eye(n_dim)
        c_block[n_dim:, n_dim:] = block
        rho = c_block @ rho @ c_block.conj().T
        if p > 0.0:
            rho = (1.0 - p) * rho + p * mixed_term

    # partial trace over the register; entry (1, 0) carries Tr(rho_n U_n)
    coherence = np.trace(rho[n_dim:, :n_dim])
    return complex(2.0 * coherence)


def average_fidelity(k_tilde_normalized: complex, n_dim: int) -> float:
    """Average circuit fidelity from the noisy self-kernel.

    Takes the normalized self-kernel K~(x, x) (equal to 1 without noise)
    and the register dimension N, and returns
    (N^2 |K~|^2 + N) / (N^2 + N), which maps K~ = 1 to fidelity 1 and
    K~ = 0 to the random-unitary baseline 1/(N+1).
    """
    if n_dim < 2:
        raise ValueError("register dimension must be >= 2")
    magnitude = abs(k_tilde_normalized)
    if magnitude > 1.0 + 1e-9:
        raise ValueError(f"|K~| = {magnitude} exceeds 1 beyond tolerance")
    n = float(n_dim)
    return (n * n * magnitude * magnitude + n) / (n * n + n)
