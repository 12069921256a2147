import json

import numpy as np
import pandas as pd
import pytest

from scengen import pipeline
from scengen.archive import ModelArchive
from scengen.config import GeneratorConfig
from scengen.dataset import SAMPLE_DIM, SCENARIO_COLUMNS, read_scenario_csv
from scengen.errors import ConfigError, DataError
from scengen.pipeline import (
    AE_LOSS_NAME,
    ARCHIVE_NAME,
    GEN_LOSS_NAME,
    REPORT_NAME,
    SUMMARY_NAME,
    SWEEP_COLUMNS,
    RunSeeds,
    cmd_evaluate,
    cmd_generate,
    cmd_sweep,
    cmd_train,
)

from .conftest import tiny_config


# ==================== Train ====================

def test_train_writes_archive_and_histories(trained_run):
    config, result = trained_run
    out = config.output_dir
    assert [p.name for p in result.paths] == [ARCHIVE_NAME, AE_LOSS_NAME, GEN_LOSS_NAME]
    assert all(p.exists() for p in result.paths)

    ae_loss = pd.read_csv(out / AE_LOSS_NAME)
    assert list(ae_loss.columns) == ["epoch", "loss"]
    assert ae_loss["epoch"].tolist() == [1, 2, 3]
    assert len(pd.read_csv(out / GEN_LOSS_NAME)) == 2
    assert np.isfinite(result.ae_history).all() and np.isfinite(result.gen_history).all()

    summary = result.to_dict()
    assert summary["train_days"] + summary["test_days"] == 80
    assert summary["test_days"] == 16
    assert summary["digest"] == ModelArchive.load(out / ARCHIVE_NAME).digest()


def test_seeds_are_derived_deterministically():
    assert RunSeeds.derive(7) == RunSeeds.derive(7)
    assert RunSeeds.derive(7) != RunSeeds.derive(8)
    assert len(set(RunSeeds.derive(7).to_dict().values())) == 5


def test_same_config_gives_same_digest_anywhere(trained_run, tmp_path):
    config, result = trained_run
    again = cmd_train(tiny_config(config.data_path, tmp_path / "elsewhere"))
    assert again.archive.digest() == result.archive.digest()
    assert (tmp_path / "elsewhere" / ARCHIVE_NAME).read_bytes() == (config.output_dir / ARCHIVE_NAME).read_bytes()


def test_missing_data_file_writes_nothing(tmp_path):
    config = tiny_config(tmp_path / "absent.csv", tmp_path / "out")
    with pytest.raises(DataError):
        cmd_train(config)
    assert not (tmp_path / "out" / ARCHIVE_NAME).exists()


def test_unset_data_path_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="data_path"):
        cmd_train(tiny_config(None, tmp_path))


def test_failure_after_archive_removes_partial_outputs(synthetic_csv, tmp_path, monkeypatch):
    def broken_history(history, path):
        raise OSError("disk full")

    monkeypatch.setattr("scengen.pipeline._write_history", broken_history)
    with pytest.raises(OSError):
        cmd_train(tiny_config(synthetic_csv, tmp_path))
    assert not (tmp_path / ARCHIVE_NAME).exists()
    assert list(tmp_path.iterdir()) == []


def test_failure_keeps_preexisting_outputs(synthetic_csv, tmp_path, monkeypatch):
    (tmp_path / ARCHIVE_NAME).write_text('{"previous": true}')
    (tmp_path / AE_LOSS_NAME).write_text("epoch,loss\n1,0.5\n")
    calls = []
    write_history = pipeline._write_history

    def history_then_full_disk(history, path):
        calls.append(path)
        if len(calls) == 2:
            raise OSError("disk full")
        return write_history(history, path)

    monkeypatch.setattr("scengen.pipeline._write_history", history_then_full_disk)
    with pytest.raises(OSError):
        cmd_train(tiny_config(synthetic_csv, tmp_path))

    assert (tmp_path / ARCHIVE_NAME).read_text() == '{"previous": true}'
    assert (tmp_path / AE_LOSS_NAME).read_text() == "epoch,loss\n1,0.5\n"
    assert not (tmp_path / GEN_LOSS_NAME).exists()
    assert [p.name for p in tmp_path.iterdir() if p.name.startswith(".")] == []


# ==================== Generate ====================

def test_generate_writes_requested_count(trained_run, tmp_path):
    config, _ = trained_run
    path, scenarios = cmd_generate(config.output_dir / ARCHIVE_NAME, 25, seed=1, output=tmp_path / "s.csv")
    assert scenarios.shape == (25, SAMPLE_DIM)
    np.testing.assert_array_equal(read_scenario_csv(path), scenarios)


def test_generate_is_deterministic_per_seed(trained_run, tmp_path):
    archive = trained_run[0].output_dir / ARCHIVE_NAME
    a, _ = cmd_generate(archive, 10, seed=4, output=tmp_path / "a.csv")
    b, _ = cmd_generate(archive, 10, seed=4, output=tmp_path / "b.csv")
    c, _ = cmd_generate(archive, 10, seed=5, output=tmp_path / "c.csv")
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_generated_scenarios_stay_within_training_span(trained_run, tmp_path):
    config, result = trained_run
    _, scenarios = cmd_generate(config.output_dir / ARCHIVE_NAME, 50, seed=0, output=tmp_path / "s.csv")
    normalizer = result.archive.normalizer
    np.testing.assert_array_less(np.abs(normalizer.normalize(scenarios)), 1.0 + 1e-9)


def test_generate_zero_writes_header_only(trained_run, tmp_path):
    path, scenarios = cmd_generate(trained_run[0].output_dir / ARCHIVE_NAME, 0, seed=0, output=tmp_path / "e.csv")
    assert scenarios.shape == (0, SAMPLE_DIM)
    assert path.read_text().strip() == ",".join(SCENARIO_COLUMNS)


def test_generate_negative_count_is_rejected(trained_run, tmp_path):
    with pytest.raises(ConfigError):
        cmd_generate(trained_run[0].output_dir / ARCHIVE_NAME, -1, seed=0, output=tmp_path / "x.csv")


def test_generate_from_corrupt_archive(tmp_path):
    bad = tmp_path / "model.json"
    bad.write_text("{not json")
    with pytest.raises(DataError):
        cmd_generate(bad, 5, seed=0, output=tmp_path / "x.csv")
    assert not (tmp_path / "x.csv").exists()


# ==================== Evaluate ====================

@pytest.fixture
def generated_csv(trained_run, tmp_path):
    path, _ = cmd_generate(trained_run[0].output_dir / ARCHIVE_NAME, 40, seed=2, output=tmp_path / "gen.csv")
    return path


def test_evaluate_writes_report(trained_run, generated_csv, tmp_path):
    config, result = trained_run
    report, paths = cmd_evaluate(
        config.output_dir / ARCHIVE_NAME, config.data_path, generated_csv, tmp_path / "report",
        bins=20, max_lag=12, match_count=3,
    )
    names = {p.name for p in paths}
    assert {REPORT_NAME, SUMMARY_NAME, "plot_psd.csv", "plot_cross_corr.csv"} <= names

    assert report.real_count == len(result.archive.metadata["test_dates"])
    assert report.generated_count == 40
    test_dates = set(result.archive.metadata["test_dates"])
    assert all(m.real_date.isoformat() in test_dates for m in report.matches)

    data = json.loads((tmp_path / "report" / REPORT_NAME).read_text())
    assert data["settings"]["bins"] == 20
    assert 0.0 <= data["cross_corr"]["max_cross_error"] <= 2.0
    assert "max cross-load error" in (tmp_path / "report" / SUMMARY_NAME).read_text()


def test_evaluate_needs_test_split(trained_run, generated_csv, tmp_path):
    config, result = trained_run
    archive = ModelArchive.load(config.output_dir / ARCHIVE_NAME)
    archive.metadata["test_dates"] = []
    stripped = archive.save(tmp_path / "stripped.json")
    with pytest.raises(DataError, match="no test split"):
        cmd_evaluate(stripped, config.data_path, generated_csv, tmp_path / "r")


def test_evaluate_detects_split_leakage(trained_run, generated_csv, tmp_path):
    config, _ = trained_run
    archive = ModelArchive.load(config.output_dir / ARCHIVE_NAME)
    archive.metadata["train_dates"] = archive.metadata["train_dates"] + archive.metadata["test_dates"][:1]
    leaky = archive.save(tmp_path / "leaky.json")
    with pytest.raises(DataError, match="overlap"):
        cmd_evaluate(leaky, config.data_path, generated_csv, tmp_path / "r")


def test_evaluate_needs_two_generated_rows(trained_run, tmp_path):
    config, _ = trained_run
    single, _ = cmd_generate(config.output_dir / ARCHIVE_NAME, 1, seed=0, output=tmp_path / "one.csv")
    with pytest.raises(DataError, match="at least 2 generated"):
        cmd_evaluate(config.output_dir / ARCHIVE_NAME, config.data_path, single, tmp_path / "r")


# ==================== Sweep ====================

def test_tiny_sweep(synthetic_csv, tmp_path):
    config = tiny_config(synthetic_csv, tmp_path, gen=GeneratorConfig(epochs=1, batch_size=16))
    frame = cmd_sweep(
        config, learning_rates=[1e-3], latent_dims=[4], output=tmp_path / "sweep.csv", optimizers=[], architectures=[]
    )

    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame[["kind", "value"]].values.tolist() == [["learning_rate", 1e-3], ["latent_dim", 4]]
    assert np.isfinite(frame["sample_mmd"]).all()
    assert (frame["sample_mmd"] >= 0).all()
    assert (tmp_path / "sweep.csv").exists()


def test_sweep_rejects_non_positive_values(synthetic_csv, tmp_path):
    with pytest.raises(ConfigError, match="positive"):
        cmd_sweep(tiny_config(synthetic_csv, tmp_path), learning_rates=[0.0], latent_dims=[], optimizers=[], architectures=[])


def test_sweep_over_update_rules_and_architectures(synthetic_csv, tmp_path):
    config = tiny_config(synthetic_csv, tmp_path, gen=GeneratorConfig(epochs=1, batch_size=16))
    frame = cmd_sweep(config, learning_rates=[], latent_dims=[], optimizers=["sgd", "nadam"], architectures=["dense1"])

    assert frame[["kind", "value"]].values.tolist() == [
        ["optimizer", "sgd"], ["optimizer", "nadam"], ["architecture", "dense1"]
    ]
    assert np.isfinite(frame["sample_mmd"]).all()


@pytest.mark.parametrize("choices", [{"optimizers": ["lbfgs"]}, {"architectures": ["lstm2"]}])
def test_sweep_rejects_unknown_choices(synthetic_csv, tmp_path, choices):
    kwargs = {"learning_rates": [], "latent_dims": [], "optimizers": [], "architectures": [], **choices}
    with pytest.raises(ConfigError, match="Unknown sweep choice"):
        cmd_sweep(tiny_config(synthetic_csv, tmp_path), **kwargs)
