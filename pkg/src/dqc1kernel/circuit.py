"""Feature-map circuit compilation.

A two-dimensional data point x (already scaled into radians) is compiled
into a depth-r unitary on the two-qubit register:

    encode(x) = (u_phi(x) @ H_layer)^r

where H_layer is the n-fold Hadamard and u_phi is the diagonal phase layer
with single-qubit phases x1, x2 and the two-qubit phase
(pi - x1)(pi - x2).  The DQC1 circuit for a pair of points runs the
register unitary kernel_unitary(x, x') = encode(x) @ encode(x')†
controlled on the clean qubit.

Basis convention: index 2*b1 + b2 for computational state |b1 b2>.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import adjoint, as_matrix, is_unitary, kron

__all__ = [
    "MAX_QUBITS",
    "HADAMARD",
    "PhaseEncoding",
    "FeatureMapSpec",
    "hadamard_layer",
    "u_phi",
    "encode",
    "kernel_unitary",
    "controlled",
]

# Dense storage grows as 4^(n+1); generic layers are capped well before
# that becomes a problem.
MAX_QUBITS = 10

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


@dataclass(frozen=True)
class PhaseEncoding:
    """Phases (radians) of the diagonal layer: two single-qubit terms and
    one two-qubit coupling term."""

    phi_1: float
    phi_2: float
    phi_12: float

    @classmethod
    def from_point(cls, x) -> "PhaseEncoding":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (2,):
            raise ValueError(f"expected a 2-dimensional point, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point coordinates must be finite")
        return cls(float(x[0]), float(x[1]), float((np.pi - x[0]) * (np.pi - x[1])))


@dataclass(frozen=True)
class FeatureMapSpec:
    """A data point plus circuit depth and register size."""

    x: tuple = field()
    depth_r: int = 3
    n_qubits: int = 2

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if x.shape != (2,):
            raise ValueError(f"feature maps take 2-dimensional points, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "x", (float(x[0]), float(x[1])))
        if self.depth_r < 1:
            raise ValueError("depth_r must be >= 1")
        if self.n_qubits != 2:
            raise ValueError("the phase encoding is defined for n_qubits == 2")


def hadamard_layer(n_qubits: int) -> np.ndarray:
    """n-fold Kronecker power of the 2x2 Hadamard."""
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"n_qubits exceeds the dense-storage cap ({MAX_QUBITS})")
    out = HADAMARD
    for _ in range(n_qubits - 1):
        out = kron(out, HADAMARD)
    return out


def u_phi(enc: PhaseEncoding) -> np.ndarray:
    """Diagonal 4x4 phase layer.

    The entry at basis state (b1, b2) is
    exp(i * [phi_1*(-1)^b1 + phi_2*(-1)^b2 + phi_12*(-1)^(b1+b2)]).
    """
    signs_1 = np.array([1.0, 1.0, -1.0, -1.0])
    signs_2 = np.array([1.0, -1.0, 1.0, -1.0])
    phases = enc.phi_1 * signs_1 + enc.phi_2 * signs_2 + enc.phi_12 * signs_1 * signs_2
    return np.diag(np.exp(1j * phases))


def encode(spec: FeatureMapSpec) -> np.ndarray:
    """Compile the depth-r feature-map unitary for a data point.

    One block applies the Hadamard layer first, then the phase layer;
    the result is the block raised to the r-th power.
    """
    block = u_phi(PhaseEncoding.from_point(spec.x)) @ hadamard_layer(spec.n_qubits)
    return np.linalg.matrix_power(block, spec.depth_r)


def encode_points(points, depth_r: int) -> np.ndarray:
    """Compile every row of ``points`` into its feature-map unitary.

    Returns an array of shape (m, 4, 4).  Gram assembly calls this once per
    sample set so each unitary is built a single time and then shared
    read-only across all pair computations.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"expected an (m, 2) sample array, got shape {points.shape}")
    h_layer = hadamard_layer(2)
    out = np.empty((points.shape[0], 4, 4), dtype=np.complex128)
    for k, x in enumerate(points):
        block = u_phi(PhaseEncoding.from_point(x)) @ h_layer
        out[k] = np.linalg.matrix_power(block, depth_r)
    return out


def kernel_unitary(x: FeatureMapSpec, x_prime: FeatureMapSpec) -> np.ndarray:
    """Register unitary encode(x) @ encode(x')† for a pair of points."""
    if x.depth_r != x_prime.depth_r:
        raise ValueError("kernel_unitary requires matching circuit depths")
    if x.n_qubits != x_prime.n_qubits:
        raise ValueError("kernel_unitary requires matching register sizes")
    return encode(x) @ adjoint(encode(x_prime))


def controlled(u_n: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Block-diagonal controlled version [[I, 0], [0, u_n]] of a unitary."""
    u_n = as_matrix(u_n)
    if u_n.shape[0] != u_n.shape[1]:
        raise ValueError("controlled() requires a square matrix")
    if not is_unitary(u_n, tol):
        raise ValueError(f"controlled() requires a unitary within {tol}")
    n = u_n.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    out[:n, :n] = np.eye(n)
    out[n:, n:] = u_n
    return out
