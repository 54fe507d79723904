"""Experiment runner: configs, training loop, CSV metrics and accuracy summaries."""

from __future__ import annotations

import csv
import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, corrupt_labels, data_dir, load_idx, subset, synth_blobs, take, to_dataset
from .errors import BCSCError, ConfigError, SummaryError
from .models import evaluate, make_oracle
from .numerics import derive_stream, shuffle_indices
from .optim import METHODS, OptimizerConfig, OptimizerState, Schedule, run_epoch

__all__ = [
    "ExperimentConfig",
    "MetricsRow",
    "CompareError",
    "load_config",
    "parse_config",
    "load_datasets",
    "run_experiment",
    "summarize",
    "emit_csv",
    "read_csv",
    "compare",
    "emit_comparison_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("epoch", "train_loss_mean", "train_loss_std", "test_loss", "test_acc", "lr", "wall_ms")
SUMMARY_KEYS = ("first_half_acc", "last_half_acc", "all_acc", "final_acc")


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "BCSC"
    M: int = 1
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0
    data_seed: int | None = None
    model: str = "logistic"
    hidden: int = 64
    dataset: str = "synth"
    synth_n: int = 1000
    synth_test_n: int = 1000
    synth_d: int = 2
    synth_K: int = 2
    separation: float = 4.0
    mnist_images: str = ""
    mnist_labels: str = ""
    mnist_test_images: str = ""
    mnist_test_labels: str = ""
    train_size: int = 0
    test_size: int = 0
    outlier_rate: float = 0.0
    lr: float | None = None
    schedule: str = ""
    momentum: float = 0.9
    weight_decay: float = 5e-4
    adagrad: bool = False
    adagrad_eps: float = 1e-8
    label: str = ""

    def lr_schedule(self) -> Schedule:
        if self.schedule:
            sched = Schedule.parse(self.schedule)
        elif self.lr is not None:
            sched = Schedule.constant(self.lr, self.epochs)
        else:
            raise ConfigError("set either `lr` (constant) or `schedule`")
        if self.epochs > sched.total_epochs:
            raise ConfigError(f"schedule covers {sched.total_epochs} epochs, run has {self.epochs}")
        return sched

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.method,
            M=self.M,
            batch_size=self.batch_size,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            schedule=self.lr_schedule(),
            adagrad=self.adagrad,
            adagrad_eps=self.adagrad_eps,
        )

    def resolve(self, path: str) -> Path:
        p = Path(path).expanduser()
        return p if p.is_absolute() else data_dir() / p

    def validate(self) -> None:
        """Check everything that can fail before training starts."""
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.model not in ("logistic", "mlp"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.model == "mlp" and self.hidden < 1:
            raise ConfigError("hidden must be >= 1")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ConfigError("outlier_rate must be in [0, 1]")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.dataset == "mnist":
            if not (self.mnist_images and self.mnist_labels):
                raise ConfigError("mnist dataset needs mnist_images and mnist_labels")
            paths = [self.mnist_images, self.mnist_labels]
            if self.mnist_test_images or self.mnist_test_labels:
                if not (self.mnist_test_images and self.mnist_test_labels):
                    raise ConfigError("give both mnist_test_images and mnist_test_labels, or neither")
                paths += [self.mnist_test_images, self.mnist_test_labels]
            elif not (self.train_size > 0 and self.test_size > 0):
                raise ConfigError("without test files, train_size and test_size carve a holdout; both must be > 0")
            for p in paths:
                if not self.resolve(p).is_file():
                    raise ConfigError(f"data file not found: {self.resolve(p)}")
        elif self.dataset == "synth":
            if self.synth_n < self.synth_K or self.synth_test_n < self.synth_K:
                raise ConfigError("synthetic sets need at least K samples")
            if self.separation < 0:
                raise ConfigError("separation must be non-negative")
        else:
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        try:
            self.optimizer_config()
        except BCSCError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True,
               "0": False, "false": False, "no": False, "off": False}


def _convert(key: str, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "bool":
            return _BOOL_WORDS[value.lower()]
        if kind == "int":
            return int(value)
        if kind == "int | None":
            return None if value.lower() in ("", "none") else int(value)
        if kind == "float":
            return float(value)
        if kind == "float | None":
            return None if value.lower() in ("", "none") else float(value)
    except (KeyError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` starts a comment); ``overrides`` win."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    for key, value in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _convert(key, value) if isinstance(value, str) else value
    if "method" in values:
        values["method"] = values["method"].upper()
        if values["method"] not in METHODS:
            raise ConfigError(f"unknown method {values['method']!r}")
    return ExperimentConfig(**values)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    train_loss_mean: float
    train_loss_std: float
    test_loss: float
    test_acc: float
    lr: float
    wall_ms: float


def load_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, np.ndarray]:
    """Train set (with label noise applied), test set and the corrupted indices."""
    dseed = cfg.seed if cfg.data_seed is None else cfg.data_seed
    if cfg.dataset == "synth":
        train = synth_blobs(derive_stream(dseed, "data/synth/train"), cfg.synth_n, cfg.synth_d,
                            cfg.synth_K, cfg.separation)
        test = synth_blobs(derive_stream(dseed, "data/synth/test"), cfg.synth_test_n, cfg.synth_d,
                           cfg.synth_K, cfg.separation)
    else:
        full = to_dataset(load_idx(cfg.resolve(cfg.mnist_images)), load_idx(cfg.resolve(cfg.mnist_labels)))
        if cfg.mnist_test_images:
            train = full
            test = to_dataset(load_idx(cfg.resolve(cfg.mnist_test_images)),
                              load_idx(cfg.resolve(cfg.mnist_test_labels)))
            if cfg.train_size:
                train = subset(train, derive_stream(dseed, "data/train-subset"), cfg.train_size)
            if cfg.test_size:
                test = subset(test, derive_stream(dseed, "data/test-subset"), cfg.test_size)
        else:
            if cfg.train_size + cfg.test_size > full.n:
                raise ConfigError(f"train_size + test_size exceeds the {full.n} available samples")
            order = shuffle_indices(derive_stream(dseed, "data/split"), full.n)
            train = take(full, order[:cfg.train_size])
            test = take(full, order[cfg.train_size:cfg.train_size + cfg.test_size])
    train, corrupted = corrupt_labels(derive_stream(dseed, "data/corrupt"), train, cfg.outlier_rate)
    return train, test, corrupted


def run_experiment(cfg: ExperimentConfig, on_epoch=None, oracle_wrapper=None) -> list[MetricsRow]:
    """Train for ``cfg.epochs`` epochs and return one metrics row per epoch.

    ``on_epoch(row, w)`` is called after each epoch with the current
    parameters.  ``oracle_wrapper`` lets tests instrument the model.
    """
    cfg.validate()
    if cfg.epochs == 0:
        return []
    train, test, _ = load_datasets(cfg)
    if train.K != test.K or train.d != test.d:
        raise ConfigError("train and test sets disagree on dimension or class count")
    oracle = make_oracle(cfg.model, train.d, train.K, cfg.hidden)
    if oracle_wrapper is not None:
        oracle = oracle_wrapper(oracle)
    ocfg = cfg.optimizer_config()
    try:
        ocfg.check_problem(oracle.param_count, train.n)
    except BCSCError as exc:
        raise ConfigError(str(exc)) from exc
    w = oracle.init_params(derive_stream(cfg.seed, "init"))
    state = OptimizerState.zeros(oracle.param_count)
    rows = []
    for _ in range(cfg.epochs):
        start = time.perf_counter()
        w, stats = run_epoch(oracle, w, train, ocfg, state, cfg.seed)
        test_loss, test_acc = evaluate(oracle, w, test)
        row = MetricsRow(stats.epoch, stats.loss_mean, stats.loss_std, test_loss, test_acc,
                         stats.lr, (time.perf_counter() - start) * 1000.0)
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row, w)
    return rows


def summarize(rows) -> dict:
    """Mean test accuracy over the first half, last half and all epochs, plus the final one.

    The first half is epochs ``1..ceil(E/2)``.  With a single epoch the last
    half is empty and falls back to that epoch.
    """
    if not rows:
        raise SummaryError("no metrics rows to summarize")
    acc = np.array([r.test_acc for r in rows], dtype=np.float64)
    half = -(-len(acc) // 2)
    last = acc[half:] if half < len(acc) else acc[-1:]
    return {
        "first_half_acc": float(np.mean(acc[:half])),
        "last_half_acc": float(np.mean(last)),
        "all_acc": float(np.mean(acc)),
        "final_acc": float(acc[-1]),
    }


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.9g}"


def emit_csv(rows, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(CSV_HEADER)
            for r in rows:
                out.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc}") from exc


def read_csv(path) -> list[MetricsRow]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            return [MetricsRow(int(rec[0]), *(float(x) for x in rec[1:])) for rec in reader]
    except OSError as exc:
        raise OSError(f"cannot read metrics from {path}: {exc}") from exc


class CompareError(BCSCError):
    def __init__(self, index: int, seed: int, cause: Exception):
        self.index = index
        self.seed = seed
        super().__init__(f"config #{index} (seed {seed}) failed: {cause}")


@dataclass
class ComparisonRow:
    index: int
    label: str
    method: str
    M: int
    outlier_rate: float
    repeats: int
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)


def _run_summary(job):
    index, cfg = job
    try:
        return summarize(run_experiment(cfg)) if cfg.epochs > 0 else None
    except Exception as exc:  # re-raised with the config index by the caller
        return exc


def compare(configs, repeats: int, jobs: int = 1) -> list[ComparisonRow]:
    """Run each config with seeds ``seed .. seed + repeats - 1`` and aggregate summaries."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    for i, cfg in enumerate(configs):
        try:
            cfg.validate()
        except ConfigError as exc:
            raise CompareError(i, cfg.seed, exc) from exc
    work = [(i, dataclasses.replace(cfg, seed=cfg.seed + r))
            for i, cfg in enumerate(configs) for r in range(repeats)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_summary, work))
    else:
        results = [_run_summary(job) for job in work]
    table = []
    for i, cfg in enumerate(configs):
        runs = []
        for (idx, run_cfg), res in zip(work, results):
            if idx != i:
                continue
            if isinstance(res, Exception):
                raise CompareError(i, run_cfg.seed, res) from res
            if res is None:
                raise CompareError(i, run_cfg.seed, SummaryError("zero epochs"))
            runs.append(res)
        table.append(ComparisonRow(
            i, cfg.label or f"{cfg.method}(M={cfg.M})", cfg.method, cfg.M, cfg.outlier_rate, repeats,
            {k: float(np.mean([s[k] for s in runs])) for k in SUMMARY_KEYS},
            {k: float(np.std([s[k] for s in runs])) for k in SUMMARY_KEYS},
        ))
    return table


def emit_comparison_csv(table, path) -> None:
    cols = ["index", "label", "method", "M", "outlier_rate", "repeats"]
    for k in SUMMARY_KEYS:
        cols += [f"{k}_mean", f"{k}_std"]
    with Path(path).open("w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(cols)
        for row in table:
            rec = [row.index, row.label, row.method, row.M, _fmt(row.outlier_rate), row.repeats]
            for k in SUMMARY_KEYS:
                rec += [_fmt(row.mean[k]), _fmt(row.std[k])]
            out.writerow(rec)
