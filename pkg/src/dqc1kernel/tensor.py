"""Minimal dense complex linear algebra for small multi-qubit simulation.

All operators and density matrices in this package are dense
``numpy.ndarray`` values of dtype ``complex128``.  This module provides the
validating constructor plus the handful of operations the simulator needs
(product, Kronecker product, adjoint, trace, unitarity check), each backed
by NumPy behind a checked interface.  Values are never mutated in place;
everything here is a pure function of its inputs.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "as_matrix",
    "matmul",
    "kron",
    "adjoint",
    "trace",
    "is_unitary",
]


def as_matrix(entries) -> np.ndarray:
    """Validate and coerce ``entries`` to a 2-D complex128 matrix.

    Rejects empty shapes and any non-finite component (NaN/Inf in either
    the real or imaginary part).
    """
    a = np.asarray(entries, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise ValueError(f"matrix dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return a


def _require_square(a: np.ndarray, what: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} requires a square matrix, got {a.shape}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product ``a @ b`` with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: ({a.shape[0]}x{a.shape[1]}) @ "
            f"({b.shape[0]}x{b.shape[1]})"
        )
    return a @ b


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with block layout ``a[i, j] * b``."""
    return np.kron(as_matrix(a), as_matrix(b))


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return as_matrix(a).conj().T.copy()


def trace(a: np.ndarray) -> complex:
    """Sum of diagonal entries of a square matrix."""
    a = as_matrix(a)
    _require_square(a, "trace")
    return complex(np.trace(a))


def is_unitary(a: np.ndarray, tol: float) -> bool:
    """True iff ``max |a†a - I|`` over entries is at most ``tol``."""
    a = as_matrix(a)
    _require_square(a, "is_unitary")
    if tol <= 0:
        raise ValueError("tol must be positive")
    resid = a.conj().T @ a - np.eye(a.shape[0])
    return bool(np.max(np.abs(resid)) <= tol)
