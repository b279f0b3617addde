"""Gram-matrix assembly and the classical kernel baselines.

The quantum Gram entry for a pair of (phase-scaled) points is
|Tr(rho_n encode(x) encode(x')†)|.  With every feature-map unitary
compiled once per sample, the whole exact Gram reduces to a single complex
matrix product between flattened (rho_n @ U_i) rows and conjugated U_j
rows, so assembly is BLAS-bound.  Sampled and noisy modes delegate each
entry to the DQC1 engine.

Classical baselines: the closed-form RBF kernel and its random-Fourier-
feature Monte Carlo estimator (spectral samples drawn from the kernel's
Fourier measure).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuit import FeatureMapSpec, encode_points
from .dqc1 import (
    ControlPrep,
    NoiseModel,
    RegisterKind,
    RegisterPrep,
    ShotPlan,
    noisy_offdiagonal,
    sample_offdiagonal,
)

__all__ = [
    "GramMatrix",
    "quantum_gram",
    "rbf_kernel",
    "rff_estimate",
    "psd_clip",
]

_BINARY_HEADER = struct.Struct("<qq")


@dataclass
class GramMatrix:
    """Pairwise kernel values between two sample sets, with provenance."""

    values: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("Gram values must form a 2-D matrix")

    @property
    def shape(self):
        return self.values.shape

    def save_csv(self, path) -> None:
        """Header row of sample indices, then rows of 12-significant-digit
        decimal values."""
        values = self.values
        lines = [",".join(str(j) for j in range(values.shape[1]))]
        for row in values:
            lines.append(",".join(format(v, ".12g") for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load_csv(cls, path, method: str = "loaded", params: dict | None = None) -> "GramMatrix":
        text = Path(path).read_text(encoding="utf-8")
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 2:
            raise ValueError(f"{path}: no Gram rows found")
        cols = len(lines[0].split(","))
        rows = []
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split(",")
            if len(parts) != cols:
                raise ValueError(f"{path}:{lineno}: expected {cols} values, got {len(parts)}")
            rows.append([float(p) for p in parts])
        return cls(np.asarray(rows), method, params or {})

    def save_binary(self, path) -> None:
        """Dimensions as little-endian int64, then row-major float64."""
        values = np.ascontiguousarray(self.values, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(_BINARY_HEADER.pack(values.shape[0], values.shape[1]))
            fh.write(values.tobytes())

    @classmethod
    def load_binary(cls, path, method: str = "loaded", params: dict | None = None) -> "GramMatrix":
        raw = Path(path).read_bytes()
        if len(raw) < _BINARY_HEADER.size:
            raise ValueError(f"{path}: truncated Gram file")
        rows, cols = _BINARY_HEADER.unpack_from(raw)
        expected = _BINARY_HEADER.size + 8 * rows * cols
        if rows <= 0 or cols <= 0 or len(raw) != expected:
            raise ValueError(f"{path}: inconsistent Gram file layout")
        values = np.frombuffer(raw, dtype="<f8", offset=_BINARY_HEADER.size)
        return cls(values.reshape(rows, cols).copy(), method, params or {})


def _flatten_for_trace(unitaries: np.ndarray, prep: RegisterPrep) -> np.ndarray:
    """Rows w_i = vec(rho_n @ U_i), so that Tr(rho_n U_i U_j†) is the
    inner product of w_i with conj(vec(U_j))."""
    n_dim = unitaries.shape[1]
    rho = prep.density_matrix(n_dim)
    return (rho[None, :, :] @ unitaries).reshape(unitaries.shape[0], n_dim * n_dim)


def _exact_complex_gram(
    xs_a: np.ndarray, xs_b: np.ndarray, r: int, prep: RegisterPrep, self_gram: bool
) -> np.ndarray:
    ua = encode_points(xs_a, r)
    ub = ua if self_gram else encode_points(xs_b, r)
    left = _flatten_for_trace(ua, prep)
    right = ub.reshape(ub.shape[0], -1)
    return left @ right.conj().T


def _entry_seed(base_seed: int, i: int, j: int):
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(i), int(j)))


def quantum_gram(
    xs_a,
    xs_b=None,
    r: int = 3,
    prep: RegisterPrep | None = None,
    mode: str = "exact",
    plan: ShotPlan | None = None,
    control: ControlPrep | None = None,
    seed: int = 0,
    noise_p: float = 0.0,
) -> GramMatrix:
    """Assemble |K| between two sample sets via the selected engine path.

    ``xs_b=None`` requests a self-Gram.  Modes:

    * ``exact``   -- closed-form trace per pair (one matrix product).
    * ``sampled`` -- finite-shot estimate per pair; entry (i, j) draws from
      a stream keyed by (seed, i, j), and for self-Grams only the upper
      triangle is sampled and mirrored, so the matrix stays symmetric and
      reproducible regardless of evaluation order.  Estimates are capped
      at 1.
    * ``noisy``   -- density-matrix evolution with per-block global
      depolarizing noise of strength ``noise_p``.
    """
    xs_a = np.asarray(xs_a, dtype=np.float64)
    if xs_a.ndim != 2 or xs_a.shape[0] == 0:
        raise ValueError("xs_a must be a non-empty (m, 2) sample array")
    self_gram = xs_b is None
    xs_b_arr = xs_a if self_gram else np.asarray(xs_b, dtype=np.float64)
    if xs_b_arr.ndim != 2 or xs_b_arr.shape[0] == 0:
        raise ValueError("xs_b must be a non-empty (m, 2) sample array")
    if r < 1:
        raise ValueError("circuit depth r must be >= 1")
    prep = prep or RegisterPrep.maximally_mixed()

    params = {"r": r, "register": prep.kind.value, "mode": mode}

    if mode == "exact":
        complex_gram = _exact_complex_gram(xs_a, xs_b_arr, r, prep, self_gram)
        values = np.abs(complex_gram)
    elif mode == "sampled":
        plan = plan or ShotPlan.from_accuracy(0.1, 0.05)
        control = control or ControlPrep()
        complex_gram = _exact_complex_gram(xs_a, xs_b_arr, r, prep, self_gram)
        values = _sampled_from_exact(complex_gram, control, plan, seed, self_gram)
        params.update(
            {
                "beta": control.beta,
                "shots_x": plan.shots_x,
                "shots_y": plan.shots_y,
                "epsilon": plan.epsilon,
                "delta": plan.delta,
                "seed": seed,
            }
        )
    elif mode == "noisy":
        noise = NoiseModel.depolarizing(noise_p) if noise_p > 0 else NoiseModel.none()
        values = _noisy_values(xs_a, xs_b_arr, r, prep, noise, self_gram)
        params["noise_p"] = noise_p
    else:
        raise ValueError(f"unknown Gram mode: {mode!r}")

    return GramMatrix(values, method=f"{mode}_quantum", params=params)


def _sampled_from_exact(
    complex_gram: np.ndarray,
    control: ControlPrep,
    plan: ShotPlan,
    seed: int,
    self_gram: bool,
) -> np.ndarray:
    """Per-entry shot sampling from the exact coherences.

    Draws the sigma_x then sigma_y counts from the per-entry stream, the
    same distribution as sample_offdiagonal on the pair's unitary.
    """
    beta = control.beta
    rows, cols = complex_gram.shape
    values = np.empty((rows, cols))
    for i in range(rows):
        j_start = i if self_gram else 0
        for j in range(j_start, cols):
            k_exact = complex_gram[i, j]
            p_x = min(max(0.5 * (1.0 + beta * k_exact.real), 0.0), 1.0)
            p_y = min(max(0.5 * (1.0 - beta * k_exact.imag), 0.0), 1.0)
            rng = np.random.default_rng(_entry_seed(seed, i, j))
            mean_x = (2.0 * rng.binomial(plan.shots_x, p_x) - plan.shots_x) / plan.shots_x
            mean_y = (2.0 * rng.binomial(plan.shots_y, p_y) - plan.shots_y) / plan.shots_y
            estimate = complex(mean_x / beta, -(mean_y / beta))
            values[i, j] = min(abs(estimate), 1.0)
            if self_gram and j > i:
                values[j, i] = values[i, j]
    return values


def _noisy_values(
    xs_a, xs_b, r: int, prep: RegisterPrep, noise: NoiseModel, self_gram: bool
) -> np.ndarray:
    rows, cols = xs_a.shape[0], xs_b.shape[0]
    values = np.empty((rows, cols))
    specs_a = [FeatureMapSpec(tuple(x), depth_r=r) for x in xs_a]
    specs_b = specs_a if self_gram else [FeatureMapSpec(tuple(x), depth_r=r) for x in xs_b]
    for i in range(rows):
        j_start = i if self_gram else 0
        for j in range(j_start, cols):
            values[i, j] = abs(noisy_offdiagonal(specs_a[i], specs_b[j], prep, noise))
            if self_gram and j > i:
                values[j, i] = values[i, j]
    return values


def rbf_kernel(x, x_prime, gamma: float = 1.0) -> float:
    """exp(-gamma ||x - x'||^2)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape:
        raise ValueError("rbf_kernel requires equal-dimension inputs")
    diff = x - x_prime
    return float(np.exp(-gamma * np.dot(diff, diff)))


def rff_estimate(x, x_prime, gamma: float, num_features: int, seed: int = 0) -> float:
    """Random-Fourier-feature Monte Carlo estimate of the RBF kernel.

    Draws ``num_features`` frequency vectors componentwise from a zero-mean
    Gaussian of variance 2*gamma and averages cos(w . (x - x')); unbiased
    for rbf_kernel(x, x', gamma) with error decaying as num_features^-1/2.
    """
    if num_features < 1:
        raise ValueError("num_features must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=np.float64)
    x_prime = np.asarray(x_prime, dtype=np.float64)
    if x.shape != x_prime.shape:
        raise ValueError("rff_estimate requires equal-dimension inputs")
    rng = np.random.default_rng(seed)
    omegas = rng.normal(0.0, np.sqrt(2.0 * gamma), size=(num_features, x.size))
    return float(np.mean(np.cos(omegas @ (x - x_prime))))


def psd_clip(g: GramMatrix) -> GramMatrix:
    """Nearest (Frobenius) positive semi-definite matrix: floor negative
    eigenvalues at zero and re-symmetrize."""
    values = g.values
    if values.shape[0] != values.shape[1]:
        raise ValueError("psd_clip requires a square Gram matrix")
    sym = 0.5 * (values + values.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    clipped = (eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T
    clipped = 0.5 * (clipped + clipped.T)
    params = dict(g.params)
    params["psd_clipped"] = True
    return GramMatrix(clipped, method=g.method, params=params)
