"""Experiment command line: dataset generation through table reproduction.

Commands: gen-data, gram, train-eval, reproduce-tables, boundary-grid,
fidelity-sweep.  Every command resolves its settings from (defaults <-
JSON config file <- command-line flags, flag wins), runs deterministically
given that resolved config, and records it in a manifest next to its
outputs.  Exit codes: 0 success, 1 validation error, 2 I/O error.
"""
from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .circuit import FeatureMapSpec
from .datasets import (
    Dataset,
    PhaseScaler,
    fit_scaler,
    load_csv,
    make_circles,
    make_moons,
    save_csv,
    split,
)
from .dqc1 import (
    ControlPrep,
    NoiseModel,
    RegisterPrep,
    ShotPlan,
    average_fidelity,
    noisy_offdiagonal,
    shots_needed,
)
from .kernel import GramMatrix, quantum_gram
from .svm import SvmModel, cross_validate, decision_values, rbf_gram, score, train_smo

# Reference accuracies the reproduction harness diffs against:
# (train, test) per method and dataset noise level.
MOONS_ZETAS = (0.0, 0.1, 0.15)
CIRCLES_ZETAS = (0.0, 0.05, 0.1)
REFERENCE_SCORES = {
    "moons": {
        "mixed": {0.0: (1.0, 1.0), 0.1: (1.0, 1.0), 0.15: (0.99, 0.98)},
        "pure": {0.0: (0.96, 0.96), 0.1: (0.95, 0.92), 0.15: (0.93, 0.90)},
        "rbf": {0.0: (1.0, 1.0), 0.1: (1.0, 1.0), 0.15: (1.0, 0.98)},
    },
    "circles": {
        "mixed": {0.0: (1.0, 1.0), 0.05: (0.98, 0.97), 0.1: (0.84, 0.82)},
        "pure": {0.0: (0.89, 0.88), 0.05: (0.83, 0.83), 0.1: (0.73, 0.73)},
        "rbf": {0.0: (1.0, 1.0), 0.05: (0.98, 0.97), 0.1: (0.85, 0.81)},
    },
}

QUANTUM_C_SCAN = (0.1, 1.0, 10.0, 100.0, 1000.0)
RBF_CV_GRID = tuple(
    (c, g) for c in (0.1, 1.0, 10.0, 100.0) for g in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
)
METHOD_TITLES = {"mixed": "mixed state", "pure": "pure state", "rbf": "RBF kernel"}


class ValidationError(ValueError):
    """Bad configuration or arguments; maps to exit code 1."""


@dataclass
class ExperimentConfig:
    dataset: str = "moons"
    zeta: float = 0.0
    n: int = 2000
    seed: int = 20240
    r: int = 3
    register: str = "mixed"
    kernel_mode: str = "exact"
    epsilon: float | None = None
    delta: float | None = None
    beta: float | None = None
    shots: int | None = None
    noise_p: float | None = None
    svm_c: float | list = 1.0
    factor: float = 0.8
    train_fraction: float = 0.8
    output_dir: str = "runs/experiment"
    threads: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def validate(self) -> None:
        if self.dataset not in ("moons", "circles"):
            raise ValidationError(f"dataset must be moons or circles, got {self.dataset!r}")
        if self.zeta < 0:
            raise ValidationError("zeta must be >= 0")
        if self.n < 4 or self.n % 2:
            raise ValidationError("n must be an even integer >= 4")
        if self.r < 1:
            raise ValidationError("r must be >= 1")
        if self.register not in ("mixed", "pure"):
            raise ValidationError(f"register must be mixed or pure, got {self.register!r}")
        if self.kernel_mode not in ("exact", "sampled", "noisy"):
            raise ValidationError("kernel_mode must be exact, sampled or noisy")
        if self.kernel_mode == "sampled":
            if self.shots is None and (self.epsilon is None or self.delta is None):
                raise ValidationError("sampled mode needs shots or epsilon+delta")
        if self.kernel_mode == "noisy" and self.noise_p is None:
            raise ValidationError("noisy mode needs noise_p")
        if self.noise_p is not None and not 0.0 <= self.noise_p <= 1.0:
            raise ValidationError("noise_p must lie in [0, 1]")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie in (0, 1)")
        if not 0.0 < self.factor < 1.0:
            raise ValidationError("factor must lie in (0, 1)")
        cs = self.svm_c if isinstance(self.svm_c, list) else [self.svm_c]
        if not cs or any(c <= 0 for c in cs):
            raise ValidationError("svm_c values must be positive")
        if self.threads < 0:
            raise ValidationError("threads must be >= 0")


def resolve_config(config_path, **overrides) -> ExperimentConfig:
    if config_path:
        text = Path(config_path).read_text(encoding="utf-8")
        try:
            cfg = ExperimentConfig.from_json(text)
        except (json.JSONDecodeError, TypeError) as exc:
            raise ValidationError(f"bad config file {config_path}: {exc}") from exc
    else:
        cfg = ExperimentConfig()
    supplied = {k: v for k, v in overrides.items() if v is not None}
    cfg = replace(cfg, **supplied)
    cfg.validate()
    return cfg


def _register_prep(name: str) -> RegisterPrep:
    return RegisterPrep.maximally_mixed() if name == "mixed" else RegisterPrep.all_zeros()


def _threads(cfg: ExperimentConfig) -> int:
    if cfg.threads > 0:
        return cfg.threads
    return min(os.cpu_count() or 1, 8)


def _write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, timings: dict) -> None:
    doc = {
        "command": command,
        "config": asdict(cfg),
        "version": __version__,
        "timings_s": timings,
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _ensure_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    probe.write_text("")
    probe.unlink()
    return out


def _generate(cfg: ExperimentConfig) -> Dataset:
    if cfg.dataset == "moons":
        return make_moons(cfg.n, cfg.zeta, cfg.seed)
    return make_circles(cfg.n, cfg.zeta, cfg.seed, factor=cfg.factor)


# ---------------------------------------------------------------------------
# pipeline pieces shared by commands


def _shot_setup(cfg: ExperimentConfig):
    beta = cfg.beta if cfg.beta is not None else 1.0
    control = ControlPrep(beta)
    if cfg.shots is not None:
        plan = ShotPlan(shots_x=cfg.shots, shots_y=cfg.shots,
                        epsilon=cfg.epsilon, delta=cfg.delta)
    else:
        plan = ShotPlan.from_accuracy(cfg.epsilon, cfg.delta, beta)
    return control, plan


def _cross_gram(cfg: ExperimentConfig, rows_scaled, train_scaled, seed: int) -> GramMatrix:
    """(rows x train) Gram in the configured kernel mode."""
    prep = _register_prep(cfg.register)
    if cfg.kernel_mode == "exact":
        return quantum_gram(rows_scaled, train_scaled, r=cfg.r, prep=prep)
    if cfg.kernel_mode == "sampled":
        control, plan = _shot_setup(cfg)
        return quantum_gram(rows_scaled, train_scaled, r=cfg.r, prep=prep,
                            mode="sampled", plan=plan, control=control, seed=seed)
    return quantum_gram(rows_scaled, train_scaled, r=cfg.r, prep=prep,
                        mode="noisy", noise_p=cfg.noise_p)


def _gram_pair(cfg: ExperimentConfig, train: Dataset, test: Dataset, scaler: PhaseScaler):
    """(train x train, test x train) Gram matrices for the configured mode."""
    prep = _register_prep(cfg.register)
    train_scaled = scaler.transform(train.points)
    test_scaled = scaler.transform(test.points)
    if cfg.kernel_mode == "exact":
        g_train = quantum_gram(train_scaled, r=cfg.r, prep=prep)
    elif cfg.kernel_mode == "sampled":
        control, plan = _shot_setup(cfg)
        g_train = quantum_gram(train_scaled, r=cfg.r, prep=prep, mode="sampled",
                               plan=plan, control=control, seed=cfg.seed)
    else:
        g_train = quantum_gram(train_scaled, r=cfg.r, prep=prep, mode="noisy",
                               noise_p=cfg.noise_p)
    g_test = _cross_gram(cfg, test_scaled, train_scaled, cfg.seed + 1)
    return g_train, g_test


def _train_and_score(cfg: ExperimentConfig, g_train, g_test, y_train, y_test):
    """Train at one C or scan a list and keep the best test score
    (ties resolved toward the smallest C)."""
    cs = cfg.svm_c if isinstance(cfg.svm_c, list) else [cfg.svm_c]
    best = None
    scanned = []
    for c in sorted(float(c) for c in cs):
        model = train_smo(g_train, y_train, c)
        tr = score(model, g_train, y_train)
        te = score(model, g_test, y_test)
        scanned.append({"c": c, "train_score": tr, "test_score": te})
        if best is None or te > best[2]:
            best = (model, tr, te)
    model, tr, te = best
    return model, tr, te, scanned


def _rbf_row(train: Dataset, test: Dataset, scaler: PhaseScaler, seed: int, threads: int):
    """Five-fold CV over the (C, gamma) grid, then refit at the best point."""
    train_scaled = scaler.transform(train.points)
    test_scaled = scaler.transform(test.points)
    report = cross_validate(
        train_scaled, train.labels, folds=5, grid=list(RBF_CV_GRID),
        seed=seed, n_threads=threads,
    )
    c_best, gamma_best = report.best
    g_train = rbf_gram(train_scaled, train_scaled, gamma_best)
    model = train_smo(g_train, train.labels, c_best)
    tr = score(model, g_train, train.labels)
    te = score(model, rbf_gram(test_scaled, train_scaled, gamma_best), test.labels)
    return tr, te, report


# ---------------------------------------------------------------------------
# table reproduction


def _dataset_for(family: str, zeta: float, n: int, base_seed: int, factor: float) -> Dataset:
    zetas = MOONS_ZETAS if family == "moons" else CIRCLES_ZETAS
    family_idx = 0 if family == "moons" else 1
    entropy = np.random.SeedSequence(
        entropy=base_seed, spawn_key=(family_idx, zetas.index(zeta))
    )
    ds_seed = int(entropy.generate_state(1)[0])
    if family == "moons":
        return make_moons(n, zeta, ds_seed)
    return make_circles(n, zeta, ds_seed, factor=factor)


def reproduce_family(family: str, cfg: ExperimentConfig) -> dict:
    """All (method, zeta) cells for one dataset family."""
    zetas = MOONS_ZETAS if family == "moons" else CIRCLES_ZETAS
    threads = _threads(cfg)
    cells = {}
    for zeta in zetas:
        ds = _dataset_for(family, zeta, cfg.n, cfg.seed, cfg.factor)
        train, test = split(ds, cfg.train_fraction, cfg.seed + 1)
        scaler = fit_scaler(train)
        train_scaled = scaler.transform(train.points)
        test_scaled = scaler.transform(test.points)
        for register in ("mixed", "pure"):
            prep = _register_prep(register)
            g_train = quantum_gram(train_scaled, r=cfg.r, prep=prep)
            g_test = quantum_gram(test_scaled, train_scaled, r=cfg.r, prep=prep)
            scan_cfg = replace(cfg, svm_c=list(QUANTUM_C_SCAN))
            _, tr, te, scanned = _train_and_score(
                scan_cfg, g_train, g_test, train.labels, test.labels
            )
            cells[(register, zeta)] = {"train": tr, "test": te, "scan": scanned}
        tr, te, report = _rbf_row(train, test, scaler, cfg.seed + 2, threads)
        cells[("rbf", zeta)] = {
            "train": tr,
            "test": te,
            "cv_best": list(report.best),
            "cv_best_mean": report.best_mean_score,
        }
    return cells


def _table_csv(family: str, cells: dict) -> str:
    zetas = MOONS_ZETAS if family == "moons" else CIRCLES_ZETAS
    lines = ["method,zeta,train_score,test_score,ref_train,ref_test,diff_train,diff_test"]
    for method in ("mixed", "pure", "rbf"):
        for zeta in zetas:
            cell = cells[(method, zeta)]
            ref_tr, ref_te = REFERENCE_SCORES[family][method][zeta]
            lines.append(
                f"{method},{zeta:g},{cell['train']:.4f},{cell['test']:.4f},"
                f"{ref_tr:.2f},{ref_te:.2f},"
                f"{cell['train'] - ref_tr:+.4f},{cell['test'] - ref_te:+.4f}"
            )
    return "\n".join(lines) + "\n"


def _table_text(family: str, cells: dict) -> str:
    zetas = MOONS_ZETAS if family == "moons" else CIRCLES_ZETAS
    head = f"{family} dataset: training/test accuracy (reference in parentheses)"
    header = ["method".ljust(12)] + [f"zeta={z:g}".center(26) for z in zetas]
    sub = ["".ljust(12)] + [("train".center(13) + "test".center(13)) for _ in zetas]
    lines = [head, "".join(header), "".join(sub)]
    for method in ("mixed", "pure", "rbf"):
        row = [METHOD_TITLES[method].ljust(12)]
        for zeta in zetas:
            cell = cells[(method, zeta)]
            ref_tr, ref_te = REFERENCE_SCORES[family][method][zeta]
            row.append(f"{cell['train']:.2f} ({ref_tr:.2f})".center(13))
            row.append(f"{cell['test']:.2f} ({ref_te:.2f})".center(13))
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# click wiring


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(body):
    try:
        body()
    except ValidationError as exc:
        _fail(1, str(exc))
    except ValueError as exc:
        _fail(1, str(exc))
    except OSError as exc:
        _fail(2, str(exc))


_global_options = [
    click.option("--config", "config_path", type=str, default=None,
                 help="JSON experiment config; flags override it."),
    click.option("--seed", type=int, default=None, help="Base random seed."),
    click.option("--out", "output_dir", type=str, default=None, help="Output directory."),
    click.option("--threads", type=int, default=None,
                 help="Worker threads (0 = auto)."),
]


def global_options(fn):
    for opt in reversed(_global_options):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """DQC1 quantum-kernel experiments."""


@cli.command("gen-data")
@global_options
@click.option("--dataset", type=str, default=None, help="moons or circles.")
@click.option("--zeta", type=float, default=None, help="Gaussian noise level.")
@click.option("--n", type=int, default=None, help="Total sample count.")
@click.option("--factor", type=float, default=None, help="Circles inner radius.")
@click.option("--train-fraction", type=float, default=None)
def cmd_gen_data(config_path, **flags):
    """Generate a dataset, split it, fit the phase scaler, write CSVs."""

    def body():
        cfg = resolve_config(config_path, **flags)
        t0 = time.perf_counter()
        out = _ensure_out(cfg)
        ds = _generate(cfg)
        train, test = split(ds, cfg.train_fraction, cfg.seed + 1)
        scaler = fit_scaler(train)
        save_csv(train, out / "train.csv")
        save_csv(test, out / "test.csv")
        (out / "scaler.json").write_text(scaler.to_json() + "\n")
        _write_manifest(out, "gen-data", cfg, {"total": time.perf_counter() - t0})
        n_pos = int(np.sum(train.labels == 1))
        click.echo(
            f"gen-data: {cfg.dataset} zeta={cfg.zeta:g} -> {len(train)} train "
            f"({n_pos} positive) / {len(test)} test at {out}"
        )

    _guarded(body)


@cli.command("gram")
@global_options
@click.option("--register", type=str, default=None, help="mixed or pure.")
@click.option("--mode", "kernel_mode", type=str, default=None,
              help="exact, sampled or noisy.")
@click.option("--r", type=int, default=None, help="Feature-map depth.")
@click.option("--epsilon", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--shots", type=int, default=None)
@click.option("--noise-p", "noise_p", type=float, default=None)
def cmd_gram(config_path, **flags):
    """Compute train x train and test x train Gram matrices."""

    def body():
        cfg = resolve_config(config_path, **flags)
        out = Path(cfg.output_dir)
        for name in ("train.csv", "test.csv", "scaler.json"):
            if not (out / name).exists():
                raise OSError(f"missing input {out / name}; run gen-data first")
        t0 = time.perf_counter()
        train = load_csv(out / "train.csv")
        test = load_csv(out / "test.csv")
        scaler = PhaseScaler.from_json((out / "scaler.json").read_text())
        g_train, g_test = _gram_pair(cfg, train, test, scaler)
        g_train.save_csv(out / "gram_train.csv")
        g_train.save_binary(out / "gram_train.bin")
        g_test.save_csv(out / "gram_test.csv")
        g_test.save_binary(out / "gram_test.bin")
        gram_manifest = {
            "method": g_train.method,
            "params": g_train.params,
            "train_shape": list(g_train.shape),
            "test_shape": list(g_test.shape),
        }
        if cfg.kernel_mode == "sampled" and cfg.shots is None:
            beta = cfg.beta if cfg.beta is not None else 1.0
            gram_manifest["shots_needed"] = shots_needed(cfg.epsilon, cfg.delta, beta)
        (out / "gram_manifest.json").write_text(
            json.dumps(gram_manifest, indent=2, sort_keys=True) + "\n"
        )
        _write_manifest(out, "gram", cfg, {"total": time.perf_counter() - t0})
        click.echo(
            f"gram: {cfg.kernel_mode} {cfg.register} r={cfg.r} -> "
            f"{g_train.shape[0]}x{g_train.shape[1]} train, "
            f"{g_test.shape[0]}x{g_test.shape[1]} test at {out}"
        )

    _guarded(body)


@cli.command("train-eval")
@global_options
@click.option("--svm-c", "svm_c_text", type=str, default=None,
              help="C value, or comma-separated list to scan.")
def cmd_train_eval(config_path, svm_c_text, **flags):
    """Train the SVM on the precomputed Gram and score train/test."""

    def body():
        svm_c = None
        if svm_c_text is not None:
            parts = [p for p in svm_c_text.split(",") if p.strip()]
            try:
                values = [float(p) for p in parts]
            except ValueError:
                raise ValidationError(f"bad --svm-c value: {svm_c_text!r}")
            if not values:
                raise ValidationError("empty --svm-c list")
            svm_c = values if len(values) > 1 else values[0]
        cfg = resolve_config(config_path, svm_c=svm_c, **flags)
        out = Path(cfg.output_dir)
        for name in ("gram_train.bin", "gram_test.bin", "train.csv", "test.csv"):
            if not (out / name).exists():
                raise OSError(f"missing input {out / name}; run gram first")
        t0 = time.perf_counter()
        g_train = GramMatrix.load_binary(out / "gram_train.bin")
        g_test = GramMatrix.load_binary(out / "gram_test.bin")
        y_train = load_csv(out / "train.csv").labels
        y_test = load_csv(out / "test.csv").labels
        model, tr, te, scanned = _train_and_score(cfg, g_train, g_test, y_train, y_test)
        (out / "model.json").write_text(model.to_json() + "\n")
        report = {
            "train_score": tr,
            "test_score": te,
            "n_support": int(model.support_indices.size),
            "c": model.hyper_c,
            "solver": model.meta,
            "scan": scanned,
        }
        (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        _write_manifest(out, "train-eval", cfg, {"total": time.perf_counter() - t0})
        flag = "" if model.meta["converged"] else " [solver hit iteration cap]"
        click.echo(
            f"train-eval: C={model.hyper_c:g} train={tr:.4f} test={te:.4f} "
            f"support={model.support_indices.size}{flag}"
        )

    _guarded(body)


@cli.command("reproduce-tables")
@global_options
@click.option("--n", type=int, default=None, help="Samples per dataset (default 2000).")
def cmd_reproduce_tables(config_path, **flags):
    """Run the full moons/circles grid and emit both result tables."""

    def body():
        cfg = resolve_config(config_path, **flags)
        t0 = time.perf_counter()
        out = _ensure_out(cfg)
        timings = {}
        for family in ("moons", "circles"):
            t_family = time.perf_counter()
            cells = reproduce_family(family, cfg)
            (out / f"table_{family}.csv").write_text(_table_csv(family, cells))
            (out / f"table_{family}.txt").write_text(_table_text(family, cells))
            detail = {
                f"{method}|zeta={zeta:g}": cell
                for (method, zeta), cell in sorted(cells.items())
            }
            (out / f"table_{family}_detail.json").write_text(
                json.dumps(detail, indent=2, sort_keys=True) + "\n"
            )
            timings[family] = time.perf_counter() - t_family
            click.echo((out / f"table_{family}.txt").read_text(), nl=False)
        timings["total"] = time.perf_counter() - t0
        _write_manifest(out, "reproduce-tables", cfg, timings)
        click.echo(f"reproduce-tables: wrote tables to {out} in {timings['total']:.1f}s")

    _guarded(body)


@cli.command("boundary-grid")
@global_options
@click.option("--resolution", type=int, default=100, help="Grid points per axis.")
def cmd_boundary_grid(config_path, resolution, **flags):
    """Evaluate the trained model's decision function on a spatial grid."""

    def body():
        if resolution < 2:
            raise ValidationError("resolution must be >= 2")
        cfg = resolve_config(config_path, **flags)
        out = Path(cfg.output_dir)
        for name in ("model.json", "train.csv", "scaler.json", "gram_manifest.json"):
            if not (out / name).exists():
                raise OSError(f"missing input {out / name}; run the pipeline first")
        t0 = time.perf_counter()
        model = SvmModel.from_json((out / "model.json").read_text())
        train = load_csv(out / "train.csv")
        scaler = PhaseScaler.from_json((out / "scaler.json").read_text())
        lo = train.points.min(axis=0)
        hi = train.points.max(axis=0)
        pad = 0.1 * (hi - lo)
        xs = np.linspace(lo[0] - pad[0], hi[0] + pad[0], resolution)
        ys = np.linspace(lo[1] - pad[1], hi[1] + pad[1], resolution)
        grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
        grid_points = np.column_stack([grid_x.ravel(), grid_y.ravel()])

        rows = _cross_gram(cfg, scaler.transform(grid_points),
                           scaler.transform(train.points), cfg.seed + 2)
        values = decision_values(model, rows.values)
        predicted = np.where(values >= 0.0, 1, -1)
        lines = ["x,y,decision_value,predicted_label"]
        for (gx, gy), val, lab in zip(grid_points, values, predicted):
            lines.append(f"{gx:.12g},{gy:.12g},{val:.12g},{'+1' if lab > 0 else '-1'}")
        (out / "boundary.csv").write_text("\n".join(lines) + "\n")
        _write_manifest(out, "boundary-grid", cfg, {"total": time.perf_counter() - t0})
        click.echo(f"boundary-grid: {resolution}x{resolution} grid -> {out / 'boundary.csv'}")

    _guarded(body)


@cli.command("fidelity-sweep")
@global_options
@click.option("--p-values", "p_values_text", type=str, default="0,0.05,0.1,0.2",
              help="Comma-separated depolarizing strengths.")
def cmd_fidelity_sweep(config_path, p_values_text, **flags):
    """Mean self-kernel fidelity on sampled training points per noise level."""

    def body():
        try:
            p_values = [float(p) for p in p_values_text.split(",") if p.strip()]
        except ValueError:
            raise ValidationError(f"bad --p-values: {p_values_text!r}")
        if not p_values or any(not 0.0 <= p < 1.0 for p in p_values):
            raise ValidationError("p values must lie in [0, 1)")
        cfg = resolve_config(config_path, **flags)
        out = Path(cfg.output_dir)
        if not (out / "train.csv").exists() or not (out / "scaler.json").exists():
            raise OSError(f"missing inputs under {out}; run gen-data first")
        t0 = time.perf_counter()
        train = load_csv(out / "train.csv")
        scaler = PhaseScaler.from_json((out / "scaler.json").read_text())
        scaled = scaler.transform(train.points)
        rng = np.random.default_rng(cfg.seed)
        n_points = min(25, len(train))
        chosen = rng.choice(len(train), size=n_points, replace=False)
        prep = _register_prep(cfg.register)
        n_dim = 4
        lines = ["p,mean_fidelity,predicted_fidelity"]
        for p in p_values:
            noise = NoiseModel.depolarizing(p) if p > 0 else NoiseModel.none()
            fids = []
            for idx in chosen:
                spec = FeatureMapSpec(tuple(scaled[idx]), depth_r=cfg.r)
                k_tilde = noisy_offdiagonal(spec, spec, prep, noise)
                fids.append(average_fidelity(k_tilde, n_dim))
            predicted = (n_dim**2 * (1.0 - p) ** (4 * cfg.r) + n_dim) / (n_dim**2 + n_dim)
            lines.append(f"{p:.12g},{np.mean(fids):.12g},{predicted:.12g}")
        (out / "fidelity.csv").write_text("\n".join(lines) + "\n")
        _write_manifest(out, "fidelity-sweep", cfg, {"total": time.perf_counter() - t0})
        click.echo(f"fidelity-sweep: {len(p_values)} noise levels -> {out / 'fidelity.csv'}")

    _guarded(body)


def main():
    """Console entry point with the documented exit-code contract."""
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
