"""
Statistical comparison of real and generated load scenarios.

Per class: autocorrelation, periodogram PSD, load-duration curve, 24x24
temporal Pearson matrix, [0, 1]-space histogram PDF and the distance
between PDFs. Across classes: the 3x3 cross-load Pearson matrix. Plus
nearest-real matching of generated scenarios and the daily-energy check.

All functions are pure; inputs are physical-unit arrays unless noted.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import signal

from .dataset import HOURS, LoadClass, LoadSample, Normalizer, stack_samples
from .fileio import atomic_write_text
from .layers import DTYPE, as_tensor

logger = logging.getLogger(__name__)

DEFAULT_BINS = 50
DEFAULT_MAX_LAG = HOURS - 1


# ==================== Single-series metrics ====================

def autocorrelation(series: np.ndarray, max_lag: Optional[int] = None, clip: bool = False) -> np.ndarray:
    """
    R(tau) = mean_t[(x_t - mu)(x_{t+tau} - mu)] / sigma^2 for tau = 0..max_lag.

    mu and sigma^2 are taken over the whole series; each lag averages its
    T - tau valid products, so long lags of short series can leave [-1, 1]
    (e.g. [10, 0, ..., 0, 10] gives R(9) = 4). `clip=True` clamps into
    [-1, 1]; the metric report stores clipped values.
    """
    x = as_tensor(series).ravel()
    length = x.size
    if length < 2:
        raise ValueError(f"Autocorrelation needs at least 2 points, got {length}")
    max_lag = length - 1 if max_lag is None else max_lag
    if not 0 <= max_lag < length:
        raise ValueError(f"max_lag must be in [0, {length - 1}], got {max_lag}")

    centered = x - x.mean()
    variance = np.mean(centered * centered)
    if variance <= 0.0:
        raise ValueError("Autocorrelation of a zero-variance series is undefined")

    r = np.array([
        np.mean(centered[:length - tau] * centered[tau:]) / variance
        for tau in range(max_lag + 1)
    ])
    r[0] = 1.0
    return np.clip(r, -1.0, 1.0) if clip else r


def psd_periodogram(series: np.ndarray) -> np.ndarray:
    """
    One-sided periodogram at 1 sample/hour, boxcar window, no detrending.

    Bin k holds |DFT_k|^2 / T, doubled for bins that have a mirrored
    negative-frequency partner, so sum(psd) / T equals the mean square.
    """
    x = as_tensor(series).ravel()
    if x.size < 2:
        raise ValueError(f"Periodogram needs at least 2 points, got {x.size}")
    _, pxx = signal.periodogram(x, fs=1.0, window="boxcar", detrend=False,
                                return_onesided=True, scaling="density")
    return pxx


def psd_frequencies(length: int) -> np.ndarray:
    """Frequencies (cycles/hour) of the psd_periodogram bins for a series of `length`."""
    return np.fft.rfftfreq(length, d=1.0)


def duration_curve(day: np.ndarray) -> np.ndarray:
    """Loads sorted in descending order."""
    return np.sort(as_tensor(day).ravel())[::-1].copy()


def exceedance_hours(day: np.ndarray, level: float) -> int:
    """Number of hours whose load is at least `level`."""
    return int(np.count_nonzero(as_tensor(day) >= level))


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Centered product-moment correlation coefficient."""
    x, y = as_tensor(x).ravel(), as_tensor(y).ravel()
    if x.size != y.size:
        raise ValueError(f"Pearson inputs differ in length: {x.size} vs {y.size}")
    xc, yc = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(xc, xc), np.dot(yc, yc)
    if sxx <= 0.0 or syy <= 0.0:
        raise ValueError("Pearson correlation of a zero-variance input is undefined")
    return float(np.clip(np.dot(xc, yc) / np.sqrt(sxx * syy), -1.0, 1.0))


def _exact_correlation(matrix: np.ndarray) -> np.ndarray:
    matrix = np.clip((matrix + matrix.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    return matrix


def temporal_corr_matrix(samples: Sequence[np.ndarray]) -> np.ndarray:
    """24x24 Pearson matrix between hour columns across samples."""
    data = np.stack([as_tensor(s).ravel() for s in samples]) if len(samples) else np.zeros((0, HOURS))
    if data.shape[0] < 2:
        raise ValueError(f"Temporal correlation needs at least 2 samples, got {data.shape[0]}")
    if np.any(data.std(axis=0) == 0.0):
        constant = np.flatnonzero(data.std(axis=0) == 0.0)
        raise ValueError(f"Constant hour column(s) {constant.tolist()}; correlation undefined")
    return _exact_correlation(np.corrcoef(data, rowvar=False))


def cross_load_matrix(samples: Union[Sequence[LoadSample], np.ndarray]) -> np.ndarray:
    """3x3 Pearson matrix between the per-class series of all days concatenated."""
    batch = stack_samples(samples) if not isinstance(samples, np.ndarray) else as_tensor(samples)
    if batch.shape[0] < 2:
        raise ValueError(f"Cross-load correlation needs at least 2 samples, got {batch.shape[0]}")
    series = [batch[:, c.hours].ravel() for c in LoadClass]

    matrix = np.eye(len(series), dtype=DTYPE)
    for i in range(len(series)):
        for j in range(i + 1, len(series)):
            matrix[i, j] = matrix[j, i] = pearson(series[i], series[j])
    return matrix


def pdf_histogram(values: np.ndarray, bins: int = DEFAULT_BINS, value_range: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """
    Density-normalized histogram; sum(pdf) * bin_width == 1.

    Values outside `value_range` are clipped into the end bins.
    """
    x = as_tensor(values).ravel()
    if x.size == 0:
        raise ValueError("PDF needs at least one value")
    lo, hi = value_range
    counts, _ = np.histogram(np.clip(x, lo, hi), bins=bins, range=(lo, hi))
    return counts / (x.size * (hi - lo) / bins)


def pdf_distance(pdf_a: np.ndarray, pdf_b: np.ndarray, bin_width: Optional[float] = None) -> float:
    """sqrt(sum((a - b)^2) * bin_width); bin_width defaults to 1/len for [0, 1] histograms."""
    a, b = as_tensor(pdf_a).ravel(), as_tensor(pdf_b).ravel()
    if a.size != b.size:
        raise ValueError(f"PDF lengths differ: {a.size} vs {b.size}")
    width = 1.0 / a.size if bin_width is None else bin_width
    return float(np.sqrt(np.sum((a - b) ** 2) * width))


def nearest_real_match(generated: np.ndarray, real_set: np.ndarray) -> tuple[int, float]:
    """Index of and Euclidean distance to the closest real sample (lowest index wins ties)."""
    real = stack_samples(real_set) if not isinstance(real_set, np.ndarray) else as_tensor(real_set)
    if real.shape[0] == 0:
        raise ValueError("Nearest match needs a non-empty real set")
    distances = np.linalg.norm(real - as_tensor(generated).ravel(), axis=1)
    index = int(np.argmin(distances))
    return index, float(distances[index])


# ==================== Population metrics ====================

@dataclass
class ClassMetrics:
    """Metrics of one load class over a population of days."""
    autocorrelation: np.ndarray
    psd: np.ndarray
    duration_curve: np.ndarray
    temporal_corr: np.ndarray
    pdf: np.ndarray
    mean_daily_energy: float

    def to_dict(self) -> dict:
        return {
            "autocorrelation": self.autocorrelation.tolist(),
            "psd": self.psd.tolist(),
            "duration_curve": self.duration_curve.tolist(),
            "temporal_corr": self.temporal_corr.tolist(),
            "pdf": self.pdf.tolist(),
            "mean_daily_energy": self.mean_daily_energy,
        }


def class_metrics(
    samples: np.ndarray,
    normalizer: Normalizer,
    bins: int = DEFAULT_BINS,
    max_lag: int = DEFAULT_MAX_LAG
) -> dict[LoadClass, ClassMetrics]:
    """
    Per-class metrics of a [B, 72] physical-unit population.

    Autocorrelation, PSD and duration curve are per-day values averaged over
    days; days with a flat profile are left out of the autocorrelation mean.
    The PDF is taken over min-max scaled ([0, 1] on training data) values.
    """
    batch = as_tensor(samples)
    unit = normalizer.to_unit(batch)
    metrics = {}
    for load_class in LoadClass:
        days = batch[:, load_class.hours]
        varying = days[days.std(axis=1) > 0.0]
        if varying.shape[0] == 0:
            raise ValueError(f"Every {load_class.value} day is flat; autocorrelation undefined")

        metrics[load_class] = ClassMetrics(
            autocorrelation=np.mean([autocorrelation(d, max_lag, clip=True) for d in varying], axis=0),
            psd=np.mean([psd_periodogram(d) for d in days], axis=0),
            duration_curve=np.mean([duration_curve(d) for d in days], axis=0),
            temporal_corr=temporal_corr_matrix(days),
            pdf=pdf_histogram(unit[:, load_class.hours], bins=bins),
            mean_daily_energy=float(days.sum(axis=1).mean()),
        )
    return metrics


@dataclass
class NearestMatch:
    """A generated scenario paired with its closest real day."""
    generated_index: int
    real_index: int
    distance: float
    real_date: Optional[date] = None

    def to_dict(self) -> dict:
        return {
            "generated_index": self.generated_index,
            "real_index": self.real_index,
            "distance": self.distance,
            "real_date": self.real_date.isoformat() if self.real_date else None,
        }


@dataclass
class MetricReport:
    """Real-versus-generated comparison across the whole metric battery."""
    real: dict[LoadClass, ClassMetrics]
    generated: dict[LoadClass, ClassMetrics]
    pdf_distance: dict[LoadClass, float]
    cross_corr_real: np.ndarray
    cross_corr_generated: np.ndarray
    matches: list[NearestMatch] = field(default_factory=list)
    real_count: int = 0
    generated_count: int = 0
    bins: int = DEFAULT_BINS
    max_lag: int = DEFAULT_MAX_LAG

    @property
    def max_cross_error(self) -> float:
        return float(np.max(np.abs(self.cross_corr_real - self.cross_corr_generated)))

    def temporal_corr_mae(self, load_class: LoadClass) -> float:
        return float(np.mean(np.abs(self.real[load_class].temporal_corr - self.generated[load_class].temporal_corr)))

    def lag1_gap(self, load_class: LoadClass) -> float:
        if self.max_lag < 1:
            return 0.0
        return float(abs(self.real[load_class].autocorrelation[1] - self.generated[load_class].autocorrelation[1]))

    def energy_gap(self, load_class: LoadClass) -> float:
        """Relative difference in mean daily energy, generated vs real."""
        real = self.real[load_class].mean_daily_energy
        return float(abs(self.generated[load_class].mean_daily_energy - real) / abs(real)) if real else float("inf")

    def to_dict(self) -> dict:
        classes = {}
        for c in LoadClass:
            real, gen = self.real[c].to_dict(), self.generated[c].to_dict()
            classes[c.value] = {
                key: {"real": real[key], "generated": gen[key]}
                for key in ("autocorrelation", "psd", "duration_curve", "temporal_corr", "pdf",
                            "mean_daily_energy")
            }
            classes[c.value]["pdf_distance"] = self.pdf_distance[c]
            classes[c.value]["temporal_corr_mae"] = self.temporal_corr_mae(c)
            classes[c.value]["lag1_gap"] = self.lag1_gap(c)
            classes[c.value]["energy_gap"] = self.energy_gap(c)

        return {
            "classes": classes,
            "cross_corr": {
                "order": [c.value for c in LoadClass],
                "real": self.cross_corr_real.tolist(),
                "generated": self.cross_corr_generated.tolist(),
                "max_cross_error": self.max_cross_error,
            },
            "nearest_matches": [m.to_dict() for m in self.matches],
            "settings": {
                "bins": self.bins,
                "max_lag": self.max_lag,
                "real_count": self.real_count,
                "generated_count": self.generated_count,
            },
        }

    def write_json(self, path: Union[str, os.PathLike]) -> Path:
        return atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True))

    def plot_frames(self) -> dict[str, pd.DataFrame]:
        """One long-form frame per metric, ready for plotting."""

        def paired(axis_name: str, axis: np.ndarray, attr: str) -> pd.DataFrame:
            columns = {axis_name: axis}
            for c in LoadClass:
                columns[f"{c.value}_real"] = getattr(self.real[c], attr)
                columns[f"{c.value}_generated"] = getattr(self.generated[c], attr)
            return pd.DataFrame(columns)

        frames = {
            "autocorrelation": paired("lag", np.arange(self.max_lag + 1), "autocorrelation"),
            "psd": paired("frequency", psd_frequencies(HOURS), "psd"),
            "duration_curve": paired("hour", np.arange(1, HOURS + 1), "duration_curve"),
            "pdf": paired("bin", (np.arange(self.bins) + 0.5) / self.bins, "pdf"),
        }

        rows = []
        for c in LoadClass:
            real, gen = self.real[c].temporal_corr, self.generated[c].temporal_corr
            for i in range(HOURS):
                for j in range(HOURS):
                    rows.append((c.value, i, j, real[i, j], gen[i, j]))
        frames["temporal_corr"] = pd.DataFrame(rows, columns=["class", "hour_i", "hour_j", "real", "generated"])

        names = [c.value for c in LoadClass]
        frames["cross_corr"] = pd.DataFrame(
            [(names[i], names[j], self.cross_corr_real[i, j], self.cross_corr_generated[i, j])
             for i in range(len(names)) for j in range(len(names))],
            columns=["class_a", "class_b", "real", "generated"]
        )
        return frames

    def write_plot_csvs(self, directory: Union[str, os.PathLike]) -> list[Path]:
        directory = Path(directory)
        return [
            atomic_write_text(directory / f"plot_{name}.csv", frame.to_csv(index=False))
            for name, frame in self.plot_frames().items()
        ]

    def summary_text(self) -> str:
        names = [c.value for c in LoadClass]
        lines = [
            "Scenario evaluation summary",
            "===========================",
            f"Real days: {self.real_count}    Generated scenarios: {self.generated_count}",
            "",
            f"Cross-load Pearson ({', '.join(names)}):",
        ]
        for label, matrix in (("real", self.cross_corr_real), ("generated", self.cross_corr_generated)):
            pairs = [f"{names[i]}-{names[j]} {matrix[i, j]:+.3f}"
                     for i in range(len(names)) for j in range(i + 1, len(names))]
            lines.append(f"  {label:<10} " + "  ".join(pairs))
        lines.append(f"  max cross-load error: {self.max_cross_error:.3f}")
        lines.append("")
        lines.append(f"{'class':<9} {'pdf dist':>9} {'corr MAE':>9} {'lag1 gap':>9} "
                     f"{'energy real':>12} {'energy gen':>12} {'gap':>7}")
        for c in LoadClass:
            lines.append(
                f"{c.value:<9} {self.pdf_distance[c]:>9.4f} {self.temporal_corr_mae(c):>9.4f} "
                f"{self.lag1_gap(c):>9.4f} {self.real[c].mean_daily_energy:>12.2f} "
                f"{self.generated[c].mean_daily_energy:>12.2f} {self.energy_gap(c):>6.1%}"
            )
        if self.matches:
            lines.append("")
            lines.append("Nearest real days:")
            for m in self.matches:
                when = m.real_date.isoformat() if m.real_date else f"#{m.real_index}"
                lines.append(f"  scenario {m.generated_index:>4} -> {when}  distance {m.distance:.3f}")
        return "\n".join(lines) + "\n"


def evaluate(
    real: np.ndarray,
    generated: np.ndarray,
    normalizer: Normalizer,
    bins: int = DEFAULT_BINS,
    max_lag: int = DEFAULT_MAX_LAG,
    match_count: int = 5,
    real_dates: Optional[Sequence[date]] = None
) -> MetricReport:
    """
    Run the full metric battery on [B, 72] physical-unit populations.

    Args:
        real: Reference days (the held-out test split)
        generated: Generated scenarios
        normalizer: Training-split statistics used to place PDFs on [0, 1]
        match_count: How many leading generated scenarios get a nearest-real match
        real_dates: Optional dates of the `real` rows, reported with matches
    """
    real, generated = as_tensor(real), as_tensor(generated)
    logger.info(f"Evaluating {generated.shape[0]} generated against {real.shape[0]} real scenarios")

    real_metrics = class_metrics(real, normalizer, bins, max_lag)
    gen_metrics = class_metrics(generated, normalizer, bins, max_lag)

    matches = []
    for g in range(min(match_count, generated.shape[0])):
        index, distance = nearest_real_match(generated[g], real)
        when = real_dates[index] if real_dates is not None else None
        matches.append(NearestMatch(g, index, distance, when))

    return MetricReport(
        real=real_metrics,
        generated=gen_metrics,
        pdf_distance={c: pdf_distance(real_metrics[c].pdf, gen_metrics[c].pdf) for c in LoadClass},
        cross_corr_real=cross_load_matrix(real),
        cross_corr_generated=cross_load_matrix(generated),
        matches=matches,
        real_count=real.shape[0],
        generated_count=generated.shape[0],
        bins=bins,
        max_lag=max_lag,
    )
