"""
Synthetic hourly cooling/heating/power data for acceptance runs.

A shared seasonal driver (warm-season index plus day-to-day AR(1)
weather) moves cooling and power up and heating down. Each class has
its own smooth daily profile: cooling peaks mid-afternoon, power in the
late afternoon, heating in the morning. Hourly AR(1) noise is added per
class. The designed correlation signs, the noise-free target matrix and
the realized matrix are written to a YAML sidecar next to the CSV.
"""

import logging
import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
import yaml

from .dataset import CSV_COLUMNS, HOURS, LoadClass, write_load_csv
from .errors import ConfigError
from .evaluation import autocorrelation, pearson
from .fileio import atomic_write_text
from .layers import spawn_seeds

logger = logging.getLogger(__name__)

MIN_DAYS = 64
START = datetime(2011, 7, 17)

SEASON_PHI = 0.7
SEASON_SD = 0.25
HOURLY_PHI = 0.9
HOURLY_INNOVATION_SD = 0.8

# (base, seasonal slope, diurnal amplitude, peak hour)
PROFILES = {
    LoadClass.COOLING: (50.0, 22.0, 0.50, 15),
    LoadClass.HEATING: (45.0, -22.0, 0.40, 7),
    LoadClass.POWER: (60.0, 10.0, 0.35, 17),
}

PAIRS = (
    (LoadClass.COOLING, LoadClass.HEATING),
    (LoadClass.COOLING, LoadClass.POWER),
    (LoadClass.HEATING, LoadClass.POWER),
)
DESIGNED_SIGNS = {
    (LoadClass.COOLING, LoadClass.HEATING): -1,
    (LoadClass.COOLING, LoadClass.POWER): 1,
    (LoadClass.HEATING, LoadClass.POWER): -1,
}
TARGET_MAGNITUDE = (0.5, 0.95)


@dataclass
class SyntheticDataset:
    """Generated frame plus its documented correlation structure."""
    frame: pd.DataFrame
    target_corr: dict[str, float]
    realized_corr: dict[str, float]
    lag1_autocorr: dict[str, float]
    days: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "days": self.days,
            "seed": self.seed,
            "start": START.strftime("%Y-%m-%d"),
            "designed_signs": {_pair_name(a, b): s for (a, b), s in DESIGNED_SIGNS.items()},
            "target_magnitude_range": list(TARGET_MAGNITUDE),
            "target_corr": self.target_corr,
            "realized_corr": self.realized_corr,
            "lag1_autocorr": self.lag1_autocorr,
        }


def _pair_name(a: LoadClass, b: LoadClass) -> str:
    return f"{a.value}-{b.value}"


def _ar1(rng: np.random.Generator, length: int, phi: float, innovation_sd: float) -> np.ndarray:
    """Stationary zero-mean AR(1) path."""
    out = np.empty(length)
    out[0] = rng.normal(0.0, innovation_sd / np.sqrt(1.0 - phi * phi))
    shocks = rng.normal(0.0, innovation_sd, size=length)
    for t in range(1, length):
        out[t] = phi * out[t - 1] + shocks[t]
    return out


def _load_matrix(days: int, seed: int, noisy: bool) -> dict[LoadClass, np.ndarray]:
    """[days, 24] loads per class."""
    season_seed, *class_seeds = spawn_seeds(seed, 1 + len(LoadClass))
    day_of_year = np.array([(START + pd.Timedelta(days=d)).timetuple().tm_yday for d in range(days)])
    season = np.cos(2.0 * np.pi * (day_of_year - 200) / 365.25)
    if noisy:
        innovation = SEASON_SD * np.sqrt(1.0 - SEASON_PHI ** 2)
        season = season + _ar1(np.random.default_rng(season_seed), days, SEASON_PHI, innovation)

    hours = np.arange(HOURS)
    loads = {}
    for load_class, class_seed in zip(LoadClass, class_seeds):
        base, slope, amplitude, peak = PROFILES[load_class]
        profile = 1.0 + amplitude * np.cos(2.0 * np.pi * (hours - peak) / HOURS)
        values = (base + slope * season)[:, None] * profile[None, :]
        if noisy:
            noise = _ar1(np.random.default_rng(class_seed), days * HOURS, HOURLY_PHI, HOURLY_INNOVATION_SD)
            values = values + noise.reshape(days, HOURS)
        loads[load_class] = np.clip(values, 0.0, None)
    return loads


def _pair_correlations(loads: dict[LoadClass, np.ndarray]) -> dict[str, float]:
    return {_pair_name(a, b): pearson(loads[a].ravel(), loads[b].ravel()) for a, b in PAIRS}


def make_synthetic_frame(days: int, seed: int = 0) -> pd.DataFrame:
    """Hourly frame with a datetime `timestamp` column and the three load columns."""
    if days < MIN_DAYS:
        raise ConfigError(f"Synthetic dataset needs at least {MIN_DAYS} days, got {days}")
    loads = _load_matrix(days, seed, noisy=True)
    frame = pd.DataFrame({
        "timestamp": pd.date_range(START, periods=days * HOURS, freq="h"),
        **{c.value: loads[c].ravel() for c in LoadClass},
    })
    return frame[CSV_COLUMNS]


def make_synthetic_dataset(
    days: int,
    seed: int,
    path: Union[str, os.PathLike]
) -> SyntheticDataset:
    """
    Write `days` days of hourly data to `path` and the sidecar
    `<stem>.targets.yaml` documenting its correlation structure.
    """
    frame = make_synthetic_frame(days, seed)
    realized_loads = {c: frame[c.value].to_numpy().reshape(days, HOURS) for c in LoadClass}

    dataset = SyntheticDataset(
        frame=frame,
        target_corr=_pair_correlations(_load_matrix(days, seed, noisy=False)),
        realized_corr=_pair_correlations(realized_loads),
        lag1_autocorr={c.value: float(autocorrelation(realized_loads[c].ravel(), 1)[1]) for c in LoadClass},
        days=days,
        seed=seed,
    )

    for (a, b), sign in DESIGNED_SIGNS.items():
        realized = dataset.realized_corr[_pair_name(a, b)]
        if np.sign(realized) != sign:
            logger.warning(f"Realized {_pair_name(a, b)} correlation {realized:+.3f} misses designed sign {sign:+d}")

    path = Path(path)
    write_load_csv(frame, path)
    sidecar = path.with_name(f"{path.stem}.targets.yaml")
    atomic_write_text(sidecar, yaml.safe_dump(dataset.to_dict(), sort_keys=False))
    logger.info(f"Wrote {days} synthetic days to {path} (targets in {sidecar.name})")
    return dataset
