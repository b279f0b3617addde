"""Synthetic two-class datasets, splitting, phase scaling, persistence.

Generators replicate the documented behavior of the standard moons and
circles toy datasets: evenly spaced angles, i.i.d. Gaussian coordinate
noise of standard deviation zeta, exactly n/2 points per class, labels in
{+1, -1}.  The phase scaler maps raw coordinates into [0, 2*pi) radians
for the feature-map circuits; it is fitted on training data only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "PhaseScaler",
    "make_moons",
    "make_circles",
    "split",
    "fit_scaler",
    "apply_scaler",
    "save_csv",
    "load_csv",
]

TWO_PI = 2.0 * np.pi


@dataclass
class Dataset:
    points: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError(f"points must be (m, 2), got {self.points.shape}")
        if self.labels.shape != (self.points.shape[0],):
            raise ValueError("points and labels must have equal length")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise ValueError("labels must be +1/-1")

    def __len__(self) -> int:
        return self.points.shape[0]


def _check_generator_args(n: int, zeta: float) -> None:
    if n < 4 or n % 2 != 0:
        raise ValueError("n must be an even integer >= 4")
    if zeta < 0:
        raise ValueError("noise level zeta must be >= 0")


def make_moons(n: int, zeta: float, seed: int) -> Dataset:
    """Two interleaved half-circles.

    Class +1 is the unit half-circle (cos t, sin t), t in [0, pi]; class -1
    is (1 - cos t, 0.5 - sin t), both with n/2 evenly spaced angles, plus
    Gaussian noise of standard deviation zeta on every coordinate.
    """
    _check_generator_args(n, zeta)
    half = n // 2
    t_outer = np.linspace(0.0, np.pi, half)
    outer = np.column_stack([np.cos(t_outer), np.sin(t_outer)])
    inner = np.column_stack([1.0 - np.cos(t_outer), 0.5 - np.sin(t_outer)])
    points = np.vstack([outer, inner])
    labels = np.concatenate([np.ones(half, dtype=int), -np.ones(half, dtype=int)])
    rng = np.random.default_rng(seed)
    if zeta > 0:
        points = points + rng.normal(0.0, zeta, size=points.shape)
    meta = {"generator": "moons", "n": n, "zeta": zeta, "seed": seed}
    return Dataset(points, labels, meta)


def make_circles(n: int, zeta: float, seed: int, factor: float = 0.8) -> Dataset:
    """Two concentric circles: class +1 on the unit circle, class -1 scaled
    by ``factor``, with evenly spaced angles and Gaussian coordinate noise."""
    _check_generator_args(n, zeta)
    if not 0.0 < factor < 1.0:
        raise ValueError("factor must lie in (0, 1)")
    half = n // 2
    t = np.linspace(0.0, TWO_PI, half, endpoint=False)
    outer = np.column_stack([np.cos(t), np.sin(t)])
    points = np.vstack([outer, factor * outer])
    labels = np.concatenate([np.ones(half, dtype=int), -np.ones(half, dtype=int)])
    rng = np.random.default_rng(seed)
    if zeta > 0:
        points = points + rng.normal(0.0, zeta, size=points.shape)
    meta = {"generator": "circles", "n": n, "zeta": zeta, "factor": factor, "seed": seed}
    return Dataset(points, labels, meta)


def split(ds: Dataset, train_fraction: float, seed: int) -> tuple:
    """Stratified seeded split into (train, test).

    The training side receives round(n * train_fraction) points, allocated
    per class by largest remainder so class balance is preserved within 1.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(ds)
    n_train = int(round(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise ValueError("train_fraction leaves one side of the split empty")

    rng = np.random.default_rng(seed)
    class_indices = [np.flatnonzero(ds.labels == cls) for cls in (1, -1)]
    quotas = [len(idx) * train_fraction for idx in class_indices]
    takes = [int(np.floor(q)) for q in quotas]
    shortfall = n_train - sum(takes)
    order = sorted(range(len(quotas)), key=lambda k: quotas[k] - takes[k], reverse=True)
    for k in order[:shortfall]:
        takes[k] += 1

    train_parts, test_parts = [], []
    for idx, take in zip(class_indices, takes):
        shuffled = idx[rng.permutation(len(idx))]
        train_parts.append(shuffled[:take])
        test_parts.append(shuffled[take:])
    train_idx = np.concatenate(train_parts)
    test_idx = np.concatenate(test_parts)
    train_idx = train_idx[rng.permutation(len(train_idx))]
    test_idx = test_idx[rng.permutation(len(test_idx))]

    meta = dict(ds.meta)
    train = Dataset(ds.points[train_idx], ds.labels[train_idx], {**meta, "split": "train"})
    test = Dataset(ds.points[test_idx], ds.labels[test_idx], {**meta, "split": "test"})
    return train, test


@dataclass(frozen=True)
class PhaseScaler:
    """Per-dimension affine map onto [0, 2*pi), fitted on training data."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=np.float64))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=np.float64))
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.any(self.hi <= self.lo):
            raise ValueError("each dimension needs hi > lo (degenerate range)")

    def transform(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        scaled = TWO_PI * (points - self.lo) / (self.hi - self.lo)
        return np.clip(scaled, 0.0, np.nextafter(TWO_PI, 0.0))

    def inverse(self, scaled) -> np.ndarray:
        scaled = np.asarray(scaled, dtype=np.float64)
        return self.lo + scaled * (self.hi - self.lo) / TWO_PI

    def to_json(self) -> str:
        return json.dumps({"lo": self.lo.tolist(), "hi": self.hi.tolist()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PhaseScaler":
        doc = json.loads(text)
        return cls(np.asarray(doc["lo"]), np.asarray(doc["hi"]))


def fit_scaler(train: Dataset) -> PhaseScaler:
    """Per-dimension (min, max) over the training points."""
    if len(train) == 0:
        raise ValueError("cannot fit a scaler on an empty dataset")
    return PhaseScaler(train.points.min(axis=0), train.points.max(axis=0))


def apply_scaler(scaler: PhaseScaler, ds: Dataset) -> Dataset:
    """Map a dataset's coordinates into phase units; out-of-range test
    coordinates clamp at the interval boundary."""
    meta = dict(ds.meta)
    meta["phase_scaled"] = True
    return Dataset(scaler.transform(ds.points), ds.labels, meta)


def save_csv(ds: Dataset, path) -> None:
    """Write ``x1,x2,label`` rows (12 significant digits, LF endings)."""
    lines = ["x1,x2,label"]
    for (x1, x2), label in zip(ds.points, ds.labels):
        lines.append(f"{x1:.12g},{x2:.12g},{'+1' if label > 0 else '-1'}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path) -> Dataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != "x1,x2,label":
        raise ValueError(f"{path}:1: expected header 'x1,x2,label'")
    points, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
        try:
            x1, x2 = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad coordinate: {exc}") from exc
        label_text = parts[2].strip()
        if label_text in ("+1", "1"):
            label = 1
        elif label_text == "-1":
            label = -1
        else:
            raise ValueError(f"{path}:{lineno}: label must be +1 or -1, got {label_text!r}")
        points.append((x1, x2))
        labels.append(label)
    if not points:
        raise ValueError(f"{path}: no samples found")
    return Dataset(np.asarray(points), np.asarray(labels), {"generator": "csv", "path": str(path)})
