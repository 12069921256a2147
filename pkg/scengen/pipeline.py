"""
Scengen pipeline: the train / generate / evaluate / sweep commands.

Each command takes plain values (or a RunConfig), writes its artifacts
atomically and returns a result object the CLI renders.
"""

import logging
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .archive import ModelArchive
from .autoencoder import AutoEncoder, train_autoencoder
from .config import RunConfig
from .dataset import (
    SAMPLE_DIM,
    LoadSample,
    Normalizer,
    assemble_daily_samples,
    fit_normalizer,
    load_csv,
    read_scenario_csv,
    split_train_test,
    stack_samples,
    write_scenario_csv,
)
from .errors import ConfigError, DataError
from .evaluation import MetricReport, evaluate
from .fileio import atomic_write_text
from .generator import ARCHITECTURES, ScenarioGenerator, sample_mmd, sample_noise, train_generator
from .optim import UpdateRule
from .layers import spawn_seeds

logger = logging.getLogger(__name__)

ARCHIVE_NAME = "model.json"
AE_LOSS_NAME = "ae_loss.csv"
GEN_LOSS_NAME = "gen_loss.csv"
REPORT_NAME = "report.json"
SUMMARY_NAME = "summary.txt"

DEFAULT_GENERATE_COUNT = 2000
SWEEP_LEARNING_RATES = (1e-5, 1e-4, 1e-3, 1e-2)
SWEEP_LATENT_DIMS = (4, 8, 16, 32)
SWEEP_OPTIMIZERS = ("sgd", "rmsprop", "adadelta", "adagrad", "adam", "adamax", "nadam")
SWEEP_ARCHITECTURES = ARCHITECTURES
SWEEP_COLUMNS = ["kind", "value", "mean_loss", "final_loss", "sample_mmd"]


@dataclass
class RunSeeds:
    """Independent sub-seeds derived from the run seed."""
    split: int
    ae_init: int
    ae_train: int
    gen_init: int
    gen_train: int

    @classmethod
    def derive(cls, seed: int) -> "RunSeeds":
        return cls(*spawn_seeds(seed, 5))

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "ae_init": self.ae_init,
            "ae_train": self.ae_train,
            "gen_init": self.gen_init,
            "gen_train": self.gen_train,
        }


@dataclass
class PreparedData:
    """Split, normalizer and normalized arrays shared by train and sweep."""
    train: list[LoadSample]
    test: list[LoadSample]
    normalizer: Normalizer
    train_norm: np.ndarray
    test_norm: np.ndarray
    seeds: RunSeeds


@dataclass
class TrainResult:
    """Outcome of cmd_train."""
    archive: ModelArchive
    ae_history: list[float]
    gen_history: list[float]
    paths: list[Path] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "archive": str(self.paths[0]) if self.paths else None,
            "digest": self.archive.digest(),
            "ae_final_mse": self.ae_history[-1] if self.ae_history else None,
            "gen_final_mmd2": self.gen_history[-1] if self.gen_history else None,
            "train_days": len(self.archive.metadata.get("train_dates", [])),
            "test_days": len(self.archive.metadata.get("test_dates", [])),
        }


def _prepare_data(config: RunConfig) -> PreparedData:
    if config.data_path is None:
        raise ConfigError("No data_path configured (use --data or data_path=... in the config file)")

    samples = assemble_daily_samples(load_csv(config.data_path))
    seeds = RunSeeds.derive(config.seed)
    train, test = split_train_test(samples, config.split_fraction, seeds.split)
    normalizer = fit_normalizer(train)
    logger.info(f"Split {len(samples)} days into {len(train)} train / {len(test)} test")

    return PreparedData(
        train=train,
        test=test,
        normalizer=normalizer,
        train_norm=normalizer.normalize(stack_samples(train)),
        test_norm=normalizer.normalize(stack_samples(test)),
        seeds=seeds,
    )


def _write_history(history: Sequence[float], path: Path) -> Path:
    frame = pd.DataFrame({"epoch": np.arange(1, len(history) + 1), "loss": history})
    return atomic_write_text(path, frame.to_csv(index=False))


def _fit_autoencoder(config: RunConfig, data: PreparedData, latent_dim: int) -> tuple[AutoEncoder, list[float]]:
    ae = AutoEncoder.create(data.seeds.ae_init, latent_dim)
    return train_autoencoder(
        ae, data.train_norm,
        epochs=config.ae.epochs,
        batch_size=config.ae.batch_size,
        lr=config.ae.lr,
        seed=data.seeds.ae_train,
        log_every=config.log_every,
    )


def _fit_models(
    config: RunConfig,
    data: PreparedData,
    latent_dim: Optional[int] = None,
    gen_overrides: Optional[dict] = None,
    ae: Optional[AutoEncoder] = None
) -> tuple[AutoEncoder, ScenarioGenerator, list[float], list[float]]:
    """
    Train the auto-encoder (unless one is given) and then the generator.
    `gen_overrides` replaces fields of `config.gen` for this fit only.
    """
    seeds = data.seeds
    ae_history: list[float] = []
    if ae is None:
        ae, ae_history = _fit_autoencoder(config, data, latent_dim or config.ae.latent_dim)

    gen_config = config.gen.model_copy(update=gen_overrides or {})
    gen = ScenarioGenerator.create(gen_config.noise_dim, seeds.gen_init, gen_config.architecture)
    gen, gen_history = train_generator(
        gen, ae, data.train_norm,
        epochs=gen_config.epochs,
        batch_size=gen_config.batch_size,
        lr=gen_config.lr,
        seed=seeds.gen_train,
        bandwidth=gen_config.fixed_bandwidth,
        consistency=gen_config.consistency,
        optimizer=UpdateRule(gen_config.optimizer),
        log_every=config.log_every,
    )
    return ae, gen, ae_history, gen_history


def cmd_train(config: RunConfig) -> TrainResult:
    """
    Normalize, train the auto-encoder, freeze its encoder, train the
    generator, then write the archive and both loss histories into
    `config.output_dir`.

    All three files are written into a staging directory first and moved
    into place only once every write succeeded; a failed run leaves the
    output directory as it found it.
    """
    output_dir = Path(config.output_dir)
    names = [ARCHIVE_NAME, AE_LOSS_NAME, GEN_LOSS_NAME]

    data = _prepare_data(config)
    ae, gen, ae_history, gen_history = _fit_models(config, data)

    metadata = {
        "config": {k: v for k, v in config.to_flat().items() if k not in ("data_path", "output_dir")},
        "seeds": data.seeds.to_dict(),
        "epochs": {"autoencoder": config.ae.epochs, "generator": config.gen.epochs},
        "learning_rates": {"autoencoder": config.ae.lr, "generator": config.gen.lr},
        "batch_sizes": {"autoencoder": config.ae.batch_size, "generator": config.gen.batch_size},
        "generator": {
            "architecture": config.gen.architecture,
            "optimizer": config.gen.optimizer,
            "consistency": config.gen.consistency,
        },
        "final_losses": {"autoencoder": ae_history[-1], "generator": gen_history[-1]},
        "train_dates": [s.date.isoformat() for s in data.train],
        "test_dates": [s.date.isoformat() for s in data.test],
    }
    archive = ModelArchive.from_models(ae, gen, data.normalizer, metadata)

    output_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=output_dir))
    try:
        archive.save(staging / ARCHIVE_NAME)
        _write_history(ae_history, staging / AE_LOSS_NAME)
        _write_history(gen_history, staging / GEN_LOSS_NAME)

        written = []
        for name in names:
            os.replace(staging / name, output_dir / name)
            written.append(output_dir / name)
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    logger.info(f"Wrote {', '.join(names)} to {output_dir}")
    return TrainResult(archive, ae_history, gen_history, written)


def cmd_generate(
    archive_path: Union[str, os.PathLike],
    count: int,
    seed: int,
    output: Union[str, os.PathLike]
) -> tuple[Path, np.ndarray]:
    """Generate `count` physical-unit scenarios from an archive into a scenario CSV."""
    if count < 0:
        raise ConfigError(f"Scenario count must be non-negative, got {count}")

    archive = ModelArchive.load(archive_path)
    gen = archive.build_generator()

    if count == 0:
        scenarios = np.zeros((0, SAMPLE_DIM))
    else:
        normalized = gen.generate(sample_noise(count, gen.noise_dim, seed))
        scenarios = archive.normalizer.invert(normalized)

    path = write_scenario_csv(scenarios, output)
    logger.info(f"Generated {count} scenarios into {path}")
    return path, scenarios


def _test_split_reference(archive: ModelArchive, real_csv: Union[str, os.PathLike]) -> list[LoadSample]:
    """Days of `real_csv` that belong to the archive's test split."""
    test_dates = set(archive.metadata.get("test_dates", []))
    train_dates = set(archive.metadata.get("train_dates", []))
    if not test_dates:
        raise DataError("Archive records no test split; cannot select the real reference")

    samples = assemble_daily_samples(load_csv(real_csv))
    reference = [s for s in samples if s.date.isoformat() in test_dates]
    leaked = [s.date for s in reference if s.date.isoformat() in train_dates]
    if leaked:
        raise DataError(f"Reference days overlap the training split: {leaked[:3]}")
    if len(reference) < 2:
        raise DataError(
            f"Only {len(reference)} day(s) of {real_csv} belong to the archive's test split; need at least 2"
        )

    skipped = len(samples) - len(reference)
    if skipped:
        logger.info(f"Excluded {skipped} non-test day(s) from the real reference")
    return reference


def cmd_evaluate(
    archive_path: Union[str, os.PathLike],
    real_csv: Union[str, os.PathLike],
    generated_csv: Union[str, os.PathLike],
    output_dir: Union[str, os.PathLike],
    bins: int = 50,
    max_lag: int = 23,
    match_count: int = 5
) -> tuple[MetricReport, list[Path]]:
    """
    Compare generated scenarios against the test-split days of `real_csv`
    and write report.json, summary.txt and one plot CSV per metric.
    """
    archive = ModelArchive.load(archive_path)
    reference = _test_split_reference(archive, real_csv)
    generated = read_scenario_csv(generated_csv)
    if generated.shape[0] < 2:
        raise DataError(f"Need at least 2 generated scenarios to evaluate, got {generated.shape[0]}")

    try:
        report = evaluate(
            stack_samples(reference), generated, archive.normalizer,
            bins=bins, max_lag=max_lag, match_count=match_count,
            real_dates=[s.date for s in reference],
        )
    except DataError:
        raise
    except ValueError as e:
        raise DataError(f"Cannot evaluate: {e}") from e

    output_dir = Path(output_dir)
    paths = [
        report.write_json(output_dir / REPORT_NAME),
        atomic_write_text(output_dir / SUMMARY_NAME, report.summary_text()),
        *report.write_plot_csvs(output_dir),
    ]
    logger.info(f"Wrote evaluation report to {output_dir} (max cross-load error {report.max_cross_error:.3f})")
    return report, paths


def cmd_sweep(
    config: RunConfig,
    learning_rates: Sequence[float] = SWEEP_LEARNING_RATES,
    latent_dims: Sequence[int] = SWEEP_LATENT_DIMS,
    output: Optional[Union[str, os.PathLike]] = None,
    optimizers: Sequence[str] = SWEEP_OPTIMIZERS,
    architectures: Sequence[str] = SWEEP_ARCHITECTURES
) -> pd.DataFrame:
    """
    Hyperparameter study.

    Learning rates, update rules and generator architectures retrain only
    the generator on one shared auto-encoder; latent dimensions retrain
    both networks. Every row scores generated scenarios against the test
    split with the data-space MMD^2.
    """
    bad = [lr for lr in learning_rates if not lr > 0] + [d for d in latent_dims if d < 1]
    if bad:
        raise ConfigError(f"Sweep values must be positive, got {bad}")
    rules = {rule.value for rule in UpdateRule}
    unknown = [o for o in optimizers if o not in rules] + [a for a in architectures if a not in ARCHITECTURES]
    if unknown:
        raise ConfigError(
            f"Unknown sweep choice(s) {unknown}; optimizers: {sorted(rules)}, architectures: {list(ARCHITECTURES)}"
        )

    data = _prepare_data(config)
    noise_seed = spawn_seeds(config.seed, 6)[5]
    rows = []

    def score(kind: str, value: Union[float, str], gen: ScenarioGenerator, history: list[float]) -> None:
        count = data.test_norm.shape[0]
        generated = gen.generate(sample_noise(count, gen.noise_dim, noise_seed))
        rows.append({
            "kind": kind,
            "value": value,
            "mean_loss": float(np.mean(history)),
            "final_loss": history[-1],
            "sample_mmd": sample_mmd(generated, data.test_norm),
        })
        logger.info(f"Sweep {kind}={value}: final mmd2={history[-1]:.6f}, sample mmd2={rows[-1]['sample_mmd']:.6f}")

    generator_axes = [
        ("learning_rate", "lr", list(learning_rates)),
        ("optimizer", "optimizer", list(optimizers)),
        ("architecture", "architecture", list(architectures)),
    ]
    if any(values for _, _, values in generator_axes):
        shared_ae, _ = _fit_autoencoder(config, data, config.ae.latent_dim)
        for kind, field_name, values in generator_axes:
            for value in values:
                _, gen, _, gen_history = _fit_models(config, data, gen_overrides={field_name: value}, ae=shared_ae)
                score(kind, value, gen, gen_history)

    for latent_dim in latent_dims:
        _, gen, _, gen_history = _fit_models(config, data, latent_dim=latent_dim)
        score("latent_dim", latent_dim, gen, gen_history)

    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    if output is not None:
        atomic_write_text(output, frame.to_csv(index=False))
        logger.info(f"Wrote sweep results to {output}")
    return frame
