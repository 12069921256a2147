"""Shared fixtures: seeded RNG, synthetic data on disk, tiny run configs."""

import datetime as dt

import numpy as np
import pytest

from scengen.autoencoder import AutoEncoder
from scengen.config import AutoEncoderConfig, GeneratorConfig, RunConfig
from scengen.dataset import HOURS, SAMPLE_DIM, LoadSample
from scengen.pipeline import cmd_train
from scengen.synthetic import make_synthetic_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_samples(count: int, seed: int = 0) -> list[LoadSample]:
    """Smooth, positive daily samples with distinct per-class shapes."""
    gen = np.random.default_rng(seed)
    hours = np.arange(HOURS)
    samples = []
    for d in range(count):
        level = gen.uniform(0.8, 1.2, size=3)
        cooling = level[0] * (50 + 20 * np.sin(2 * np.pi * (hours - 9) / HOURS))
        heating = level[1] * (40 + 15 * np.cos(2 * np.pi * (hours - 7) / HOURS))
        power = level[2] * (60 + 10 * np.sin(2 * np.pi * (hours - 11) / HOURS))
        values = np.concatenate([cooling, heating, power]) + gen.normal(0, 0.5, SAMPLE_DIM)
        samples.append(LoadSample(values=values, date=dt.date(2011, 7, 17) + dt.timedelta(days=d)))
    return samples


@pytest.fixture
def samples():
    return make_samples(40)


@pytest.fixture(scope="session")
def synthetic_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    make_synthetic_dataset(days=80, seed=3, path=path)
    return path


def tiny_config(data_path, output_dir, **overrides) -> RunConfig:
    values = dict(
        data_path=data_path,
        output_dir=output_dir,
        seed=7,
        log_every=1,
        ae=AutoEncoderConfig(epochs=3, batch_size=16),
        gen=GeneratorConfig(epochs=2, batch_size=16),
    )
    values.update(overrides)
    return RunConfig(**values)


@pytest.fixture(scope="session")
def trained_run(synthetic_csv, tmp_path_factory):
    """A tiny end-to-end training run shared by archive/pipeline/CLI tests."""
    output_dir = tmp_path_factory.mktemp("run")
    config = tiny_config(synthetic_csv, output_dir)
    result = cmd_train(config)
    return config, result


@pytest.fixture
def untrained_ae():
    ae = AutoEncoder.create(seed=1)
    ae.trained = True
    return ae
