import numpy as np
import pytest
import yaml

from scengen.dataset import HOURS, LoadClass, assemble_daily_samples, load_csv
from scengen.errors import ConfigError
from scengen.synthetic import (
    DESIGNED_SIGNS,
    MIN_DAYS,
    TARGET_MAGNITUDE,
    make_synthetic_dataset,
    make_synthetic_frame,
)


@pytest.fixture(scope="module")
def full_year(tmp_path_factory):
    path = tmp_path_factory.mktemp("synthetic") / "year.csv"
    return path, make_synthetic_dataset(days=365, seed=11, path=path)


def test_frame_layout():
    frame = make_synthetic_frame(MIN_DAYS, seed=0)
    assert list(frame.columns) == ["timestamp", "cooling", "heating", "power"]
    assert len(frame) == MIN_DAYS * HOURS
    assert (frame[["cooling", "heating", "power"]] >= 0).all().all()


def test_too_few_days_is_a_config_error():
    with pytest.raises(ConfigError, match=str(MIN_DAYS)):
        make_synthetic_frame(MIN_DAYS - 1)


def test_same_seed_gives_same_bytes(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    make_synthetic_dataset(days=70, seed=5, path=a)
    make_synthetic_dataset(days=70, seed=5, path=b)
    assert a.read_bytes() == b.read_bytes()

    make_synthetic_dataset(days=70, seed=6, path=b)
    assert a.read_bytes() != b.read_bytes()


def test_written_csv_loads_into_complete_days(full_year):
    path, _ = full_year
    samples = assemble_daily_samples(load_csv(path))
    assert len(samples) == 365


def test_realized_signs_match_the_design(full_year):
    _, dataset = full_year
    for (a, b), sign in DESIGNED_SIGNS.items():
        assert np.sign(dataset.realized_corr[f"{a.value}-{b.value}"]) == sign
        assert np.sign(dataset.target_corr[f"{a.value}-{b.value}"]) == sign


def test_full_year_magnitudes_within_target_range(full_year):
    _, dataset = full_year
    lo, hi = TARGET_MAGNITUDE
    for value in dataset.realized_corr.values():
        assert lo <= abs(value) <= hi


def test_hourly_series_are_strongly_autocorrelated(full_year):
    _, dataset = full_year
    for c in LoadClass:
        assert dataset.lag1_autocorr[c.value] > 0.8


def test_sidecar_documents_the_structure(full_year):
    path, dataset = full_year
    sidecar = yaml.safe_load(path.with_name("year.targets.yaml").read_text())
    assert sidecar["days"] == 365
    assert sidecar["seed"] == 11
    assert sidecar["designed_signs"] == {"cooling-heating": -1, "cooling-power": 1, "heating-power": -1}
    assert sidecar["realized_corr"] == pytest.approx(dataset.realized_corr)
    assert set(sidecar) >= {"target_corr", "lag1_autocorr", "target_magnitude_range", "start"}
