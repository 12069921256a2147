"""
Hourly load ingest and the daily 72-value joint samples the networks train on.

A sample is laid out as [cooling h0..h23 | heating h0..h23 | power h0..h23].
Normalization applies per-class min-max scaling fitted on the training
split, then maps [0, 1] affinely onto [-1, 1] to match the tanh heads.
"""

import logging
import os
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from .errors import DataError
from .fileio import atomic_write_text
from .layers import DTYPE, as_tensor

logger = logging.getLogger(__name__)

HOURS = 24
SAMPLE_DIM = 72
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"


class LoadClass(str, Enum):
    """Load classes in sample-layout order."""
    COOLING = "cooling"
    HEATING = "heating"
    POWER = "power"

    @property
    def offset(self) -> int:
        return list(LoadClass).index(self) * HOURS

    @property
    def hours(self) -> slice:
        return slice(self.offset, self.offset + HOURS)


LOAD_COLUMNS = [c.value for c in LoadClass]
CSV_COLUMNS = ["timestamp"] + LOAD_COLUMNS
SCENARIO_COLUMNS = [f"{c.value}_{h:02d}" for c in LoadClass for h in range(HOURS)]


@dataclass(frozen=True)
class LoadRecord:
    """One hour of cooling, heating and power demand."""
    timestamp: datetime
    cooling: float
    heating: float
    power: float


@dataclass
class LoadSample:
    """One day's joint load curve (72 values)."""
    values: np.ndarray
    date: date

    def __post_init__(self):
        self.values = as_tensor(self.values)
        if self.values.shape != (SAMPLE_DIM,):
            raise ValueError(f"LoadSample needs {SAMPLE_DIM} values, got shape {self.values.shape}")

    def load(self, load_class: LoadClass) -> np.ndarray:
        return self.values[load_class.hours]


SampleInput = Union[LoadSample, np.ndarray]


def stack_samples(samples: Sequence[SampleInput]) -> np.ndarray:
    """Stack samples (or raw 72-vectors) into a [B, 72] array."""
    rows = [s.values if isinstance(s, LoadSample) else as_tensor(s) for s in samples]
    if not rows:
        return np.zeros((0, SAMPLE_DIM), dtype=DTYPE)
    batch = np.stack(rows).astype(DTYPE)
    if batch.ndim != 2 or batch.shape[1] != SAMPLE_DIM:
        raise ValueError(f"Samples must be {SAMPLE_DIM}-vectors, got batch shape {batch.shape}")
    return batch


# ==================== CSV ingest ====================

def load_csv(path: Union[str, os.PathLike]) -> list[LoadRecord]:
    """
    Parse an hourly `timestamp,cooling,heating,power` CSV.

    Rows with a missing, non-numeric, negative or non-finite value (or a
    timestamp not on the hour) are dropped with a warning. Remaining rows
    must be strictly increasing in time.

    Raises:
        DataError: unreadable file, malformed header, out-of-order rows,
            or no valid rows at all
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot read load data {path}: {e}") from e

    columns = [c.strip() for c in frame.columns]
    if columns != CSV_COLUMNS:
        raise DataError(f"Malformed header in {path}: expected {','.join(CSV_COLUMNS)}, got {','.join(columns)}")
    frame.columns = columns

    timestamps = pd.to_datetime(frame["timestamp"].str.strip(), format=TIMESTAMP_FORMAT, errors="coerce")
    values = frame[LOAD_COLUMNS].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))

    valid = (
        timestamps.notna()
        & (timestamps.dt.minute == 0)
        & values.notna().all(axis=1)
        & np.isfinite(values.to_numpy(dtype=DTYPE, na_value=np.nan)).all(axis=1)
        & (values >= 0).all(axis=1)
    )
    dropped = int((~valid).sum())
    if dropped:
        first = int(np.flatnonzero(~valid.to_numpy())[0]) + 2
        logger.warning(f"Dropped {dropped} malformed row(s) from {path.name} (first at line {first})")

    timestamps = timestamps[valid]
    values = values[valid]
    if timestamps.empty:
        raise DataError(f"No valid rows in {path}")

    stamps = timestamps.to_numpy()
    out_of_order = np.flatnonzero(stamps[1:] <= stamps[:-1])
    if out_of_order.size:
        bad_index = timestamps.index[out_of_order[0] + 1]
        raise DataError(
            f"Timestamps not strictly increasing in {path} at line {bad_index + 2} "
            f"({frame['timestamp'].iloc[bad_index]})"
        )

    records = [
        LoadRecord(ts.to_pydatetime(), float(c), float(h), float(p))
        for ts, c, h, p in zip(timestamps, values["cooling"], values["heating"], values["power"])
    ]
    logger.info(f"Loaded {len(records)} hourly records from {path.name}")
    return records


def write_load_csv(frame: pd.DataFrame, path: Union[str, os.PathLike]) -> Path:
    """Write a frame with a datetime `timestamp` column and the three load columns."""
    out = frame[CSV_COLUMNS].copy()
    out["timestamp"] = pd.to_datetime(out["timestamp"]).dt.strftime(TIMESTAMP_FORMAT)
    return atomic_write_text(path, out.to_csv(index=False))


def assemble_daily_samples(records: Sequence[LoadRecord]) -> list[LoadSample]:
    """
    Group hourly records into one LoadSample per complete calendar day.

    Days missing any hour are skipped and counted in a warning; they are
    never imputed.
    """
    by_day: dict[date, dict[int, LoadRecord]] = {}
    for record in records:
        by_day.setdefault(record.timestamp.date(), {})[record.timestamp.hour] = record

    samples = []
    skipped = 0
    for day in sorted(by_day):
        hours = by_day[day]
        if len(hours) != HOURS:
            skipped += 1
            continue
        ordered = [hours[h] for h in range(HOURS)]
        values = np.concatenate([
            [r.cooling for r in ordered],
            [r.heating for r in ordered],
            [r.power for r in ordered],
        ])
        samples.append(LoadSample(values=values, date=day))

    if skipped:
        logger.warning(f"Skipped {skipped} incomplete day(s)")
    logger.info(f"Assembled {len(samples)} daily samples")
    return samples


# ==================== Normalization ====================

@dataclass(frozen=True)
class Normalizer:
    """Per-class min/max statistics fitted on training samples."""
    x_min: dict[LoadClass, float]
    x_max: dict[LoadClass, float]

    def __post_init__(self):
        for load_class in LoadClass:
            lo, hi = self.x_min[load_class], self.x_max[load_class]
            if not hi > lo:
                raise DataError(f"Degenerate {load_class.value} range: min {lo} == max {hi}")

    def _bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.repeat([self.x_min[c] for c in LoadClass], HOURS).astype(DTYPE)
        hi = np.repeat([self.x_max[c] for c in LoadClass], HOURS).astype(DTYPE)
        return lo, hi - lo

    def to_unit(self, values: np.ndarray) -> np.ndarray:
        """Min-max scale [..., 72] physical values; training data lands in [0, 1]."""
        lo, span = self._bounds()
        return (as_tensor(values) - lo) / span

    def normalize(self, values: np.ndarray) -> np.ndarray:
        """Physical [..., 72] values to the network range [-1, 1] (not clipped)."""
        return 2.0 * self.to_unit(values) - 1.0

    def invert(self, normalized: np.ndarray) -> np.ndarray:
        """Network-range [..., 72] values back to physical units."""
        lo, span = self._bounds()
        return (as_tensor(normalized) + 1.0) / 2.0 * span + lo

    def to_dict(self) -> dict:
        return {
            c.value: {"x_min": self.x_min[c], "x_max": self.x_max[c]}
            for c in LoadClass
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Normalizer":
        try:
            return cls(
                x_min={c: float(data[c.value]["x_min"]) for c in LoadClass},
                x_max={c: float(data[c.value]["x_max"]) for c in LoadClass}
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid normalizer statistics: {e}") from e


def fit_normalizer(train_samples: Sequence[SampleInput]) -> Normalizer:
    """Per-class global min/max over every hour of every training sample."""
    batch = stack_samples(train_samples)
    if batch.shape[0] == 0:
        raise DataError("Cannot fit a normalizer on zero samples")

    x_min = {c: float(batch[:, c.hours].min()) for c in LoadClass}
    x_max = {c: float(batch[:, c.hours].max()) for c in LoadClass}
    return Normalizer(x_min=x_min, x_max=x_max)


def normalize(sample: SampleInput, normalizer: Normalizer) -> np.ndarray:
    values = sample.values if isinstance(sample, LoadSample) else sample
    return normalizer.normalize(values)


def invert(normalized: np.ndarray, normalizer: Normalizer) -> np.ndarray:
    return normalizer.invert(normalized)


def split_train_test(
    samples: Sequence[LoadSample],
    fraction: float = 0.8,
    seed: int = 0
) -> tuple[list[LoadSample], list[LoadSample]]:
    """
    Uniform random train/test partition, deterministic per seed.

    Both parts keep the input order. The training part holds
    round(fraction * n) samples, kept within [1, n-1].
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"Split fraction must be in (0, 1), got {fraction}")
    n = len(samples)
    if n < 2:
        raise DataError(f"Need at least 2 samples to split, got {n}")

    n_train = min(max(int(round(fraction * n)), 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(order[:n_train])
    test_idx = np.sort(order[n_train:])
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


# ==================== Scenario CSV ====================

def write_scenario_csv(scenarios: np.ndarray, path: Union[str, os.PathLike]) -> Path:
    """Write [B, 72] scenarios, one per row, under the named hourly columns."""
    scenarios = as_tensor(scenarios).reshape(-1, SAMPLE_DIM)
    frame = pd.DataFrame(scenarios, columns=SCENARIO_COLUMNS)
    return atomic_write_text(path, frame.to_csv(index=False))


def read_scenario_csv(path: Union[str, os.PathLike]) -> np.ndarray:
    """Read a scenario CSV back into a [B, 72] array."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, encoding="utf-8-sig", float_precision="round_trip")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Cannot read scenarios {path}: {e}") from e

    if list(frame.columns) != SCENARIO_COLUMNS:
        raise DataError(f"Malformed scenario header in {path}: expected {SCENARIO_COLUMNS[0]}..{SCENARIO_COLUMNS[-1]}")
    try:
        values = frame.to_numpy(dtype=DTYPE)
    except (TypeError, ValueError) as e:
        raise DataError(f"Non-numeric scenario values in {path}: {e}") from e
    if not np.isfinite(values).all():
        raise DataError(f"Missing or non-finite scenario values in {path}")
    return values.reshape(-1, SAMPLE_DIM)
