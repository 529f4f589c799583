"""Epoching, spectra and band statistics.

Each epoch is DC-corrected, windowed (rectangular by default, Hann optional)
and transformed to a single-sided amplitude spectrum (µV). Band "values" are the mean and population standard
deviation of the bin magnitudes falling in each band; activity summaries
average those per-epoch statistics over artifact-free windows.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from ._validation import check_positive, check_power_of_two
from .core import (
    BANDS,
    DATA_ELECTRODES,
    ActivityKind,
    ConfigurationError,
    EEGError,
    Electrode,
    FrequencyBand,
    band_of,
)
from .ingest import Recording

logger = logging.getLogger(__name__)

# window name -> coherent gain (window mean)
COHERENT_GAIN = {"boxcar": 1.0, "hann": 0.5}
QUANTITIES = ("amplitude", "power")


class InsufficientDataError(EEGError):
    pass


@dataclass(frozen=True)
class DSPConfig:
    epoch_len: int = 512
    hop: int = 256
    artifact_threshold_uv: float = 400.0
    mains_hz: Optional[float] = 50.0
    mains_width_hz: float = 1.0
    quantity: str = "amplitude"
    # Hann leaks half an edge-bin tone into the neighbouring band, which lets
    # a narrow band (Alpha, 8 bins) out-average a wide one (Beta, 36 bins).
    window: str = "boxcar"

    def __post_init__(self):
        check_power_of_two(self.epoch_len, "epoch_len")
        if not 1 <= self.hop <= self.epoch_len:
            raise ConfigurationError(f"hop must be in [1, epoch_len], got {self.hop!r}")
        check_positive(self.artifact_threshold_uv, "artifact_threshold_uv")
        if self.mains_hz is not None:
            check_positive(self.mains_hz, "mains_hz")
        if self.mains_width_hz < 0:
            raise ConfigurationError("mains_width_hz must be non-negative")
        if self.quantity not in QUANTITIES:
            raise ConfigurationError(f"quantity must be one of {QUANTITIES}")
        check_window(self.window)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Epoch:
    electrode: Electrode
    samples: np.ndarray
    start_index: int
    sample_rate_hz: float
    artifact: bool = False
    preprocessed: bool = False

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class Spectrum:
    electrode: Electrode
    bin_hz: float
    magnitudes: np.ndarray

    @property
    def n_fft(self) -> int:
        return 2 * (len(self.magnitudes) - 1)

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(len(self.magnitudes)) * self.bin_hz


class BandValue(NamedTuple):
    mean: float
    std: float


def window_offsets(n_samples: int, epoch_len: int, hop: int) -> range:
    if n_samples < epoch_len:
        return range(0)
    return range(0, n_samples - epoch_len + 1, hop)


def segment(
    recording: Recording, activity_label: str, epoch_len: int = 512, hop: int = 256
) -> dict[Electrode, list[Epoch]]:
    """Cut every run labelled ``activity_label`` into overlapping epochs.

    Trailing partial windows are discarded. Runs shorter than one epoch
    contribute nothing; InsufficientDataError if no epoch results at all.
    """
    epoch_len = check_power_of_two(epoch_len)
    if not 1 <= hop <= epoch_len:
        raise ConfigurationError(f"hop must be in [1, epoch_len], got {hop!r}")
    runs = [s for s in recording.segments if s.label == activity_label]
    if not runs:
        raise InsufficientDataError(f"no segment labelled {activity_label!r}")
    out: dict[Electrode, list[Epoch]] = {e: [] for e in DATA_ELECTRODES}
    for run in runs:
        for offset in window_offsets(len(run), epoch_len, hop):
            start = run.start + offset
            for col, electrode in enumerate(DATA_ELECTRODES):
                samples = recording.data[start : start + epoch_len, col]
                out[electrode].append(Epoch(electrode, samples, start, recording.sample_rate_hz))
    if not out[DATA_ELECTRODES[0]]:
        longest = max(len(r) for r in runs)
        raise InsufficientDataError(
            f"insufficient data: {activity_label!r} has at most {longest} contiguous samples, "
            f"epoch needs {epoch_len}"
        )
    return out


def preprocess(epoch: Epoch, artifact_threshold_uv: float = 400.0) -> Epoch:
    x = np.asarray(epoch.samples, dtype=np.float64)
    peak_to_peak = float(np.ptp(x)) if len(x) else 0.0
    return replace(
        epoch,
        samples=x - x.mean(),
        artifact=peak_to_peak > artifact_threshold_uv,
        preprocessed=True,
    )


def check_window(window: str) -> str:
    if window not in COHERENT_GAIN:
        raise ConfigurationError(f"window must be one of {tuple(COHERENT_GAIN)}, got {window!r}")
    return window


@lru_cache(maxsize=16)
def get_window(window: str, n: int) -> np.ndarray:
    """Periodic (DFT-even) window of length ``n``."""
    if check_window(window) == "hann":
        w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    else:
        w = np.ones(n)
    w.setflags(write=False)
    return w


def amplitude_spectrum(x: np.ndarray, window: str = "boxcar") -> np.ndarray:
    """Single-sided, coherent-gain corrected amplitude spectrum of the rows of ``x``.

    magnitude[k] = 2|X[k]| / (N * cg) for 0 < k < N/2 and half that at k = 0 and
    k = N/2, so an on-bin sinusoid of amplitude A reads A at its bin.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    spectrum = np.abs(np.fft.rfft(x * get_window(window, n), axis=-1))
    spectrum *= 2.0 / (n * COHERENT_GAIN[window])
    spectrum[..., 0] /= 2.0
    spectrum[..., -1] /= 2.0
    return spectrum


def to_spectrum(epoch: Epoch, window: str = "boxcar") -> Spectrum:
    n = check_power_of_two(len(epoch.samples), "epoch length")
    if n < 2:
        raise ConfigurationError("epoch length must be at least 2")
    return Spectrum(
        epoch.electrode, epoch.sample_rate_hz / n, amplitude_spectrum(epoch.samples, window)
    )


@lru_cache(maxsize=32)
def band_bin_masks(
    n_bins: int, bin_hz: float, mains_hz: Optional[float], mains_width_hz: float
) -> tuple[np.ndarray, ...]:
    """Boolean bin masks, one per band, with mains bins removed."""
    freqs = np.arange(n_bins) * bin_hz
    keep = np.ones(n_bins, dtype=bool)
    if mains_hz is not None:
        keep &= np.abs(freqs - mains_hz) > mains_width_hz
    owner = [band_of(float(f)) for f in freqs]
    masks = []
    for band in BANDS:
        mask = np.array([b is band for b in owner]) & keep
        if not mask.any():
            raise ConfigurationError(
                f"{band.label} band has no spectral bins at {bin_hz} Hz resolution"
            )
        mask.setflags(write=False)
        masks.append(mask)
    return tuple(masks)


def _band_values(
    magnitudes: np.ndarray, bin_hz: float, mains_hz, mains_width_hz, quantity
) -> np.ndarray:
    """(..., 5, 2) array of band mean/std for magnitudes shaped (..., n_bins)."""
    if quantity not in QUANTITIES:
        raise ConfigurationError(f"quantity must be one of {QUANTITIES}")
    values = magnitudes**2 if quantity == "power" else magnitudes
    masks = band_bin_masks(magnitudes.shape[-1], float(bin_hz), mains_hz, float(mains_width_hz))
    out = np.empty(magnitudes.shape[:-1] + (len(BANDS), 2))
    for i, mask in enumerate(masks):
        sel = values[..., mask]
        out[..., i, 0] = sel.mean(axis=-1)
        out[..., i, 1] = sel.std(axis=-1)
    return out


def to_band_stats(
    spectrum: Spectrum,
    *,
    mains_hz: Optional[float] = 50.0,
    mains_width_hz: float = 1.0,
    quantity: str = "amplitude",
) -> dict[FrequencyBand, BandValue]:
    """Band mean and population std of one electrode's spectrum."""
    values = _band_values(
        np.asarray(spectrum.magnitudes), spectrum.bin_hz, mains_hz, mains_width_hz, quantity
    )
    return {band: BandValue(float(m), float(s)) for band, (m, s) in zip(BANDS, values)}


class BandStats:
    """Mean/std for every (electrode, band) pair, stored as two 4x5 arrays."""

    __slots__ = ("mean", "std")

    def __init__(self, mean, std):
        mean = np.array(mean, dtype=np.float64)
        std = np.array(std, dtype=np.float64)
        shape = (len(DATA_ELECTRODES), len(BANDS))
        if mean.shape != shape or std.shape != shape:
            raise EEGError(f"band statistics must be shaped {shape}")
        if np.any(std < 0):
            raise EEGError("band standard deviations must be non-negative")
        mean.setflags(write=False)
        std.setflags(write=False)
        self.mean = mean
        self.std = std

    @classmethod
    def zeros(cls) -> "BandStats":
        shape = (len(DATA_ELECTRODES), len(BANDS))
        return cls(np.zeros(shape), np.zeros(shape))

    @classmethod
    def from_mapping(
        cls, per_electrode: Mapping[Electrode, Mapping[FrequencyBand, BandValue]]
    ) -> "BandStats":
        missing = [e.value for e in DATA_ELECTRODES if e not in per_electrode]
        if missing:
            raise EEGError(f"missing band statistics for {', '.join(missing)}")
        mean = [[per_electrode[e][b][0] for b in BANDS] for e in DATA_ELECTRODES]
        std = [[per_electrode[e][b][1] for b in BANDS] for e in DATA_ELECTRODES]
        return cls(mean, std)

    def get(self, electrode: Electrode, band: FrequencyBand) -> BandValue:
        e = DATA_ELECTRODES.index(Electrode(electrode))
        b = BANDS.index(band)
        return BandValue(float(self.mean[e, b]), float(self.std[e, b]))

    def band_means(self, band: FrequencyBand) -> dict[Electrode, float]:
        b = BANDS.index(band)
        return {e: float(self.mean[i, b]) for i, e in enumerate(DATA_ELECTRODES)}

    def __eq__(self, other):
        if not isinstance(other, BandStats):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.std, other.std)

    def __repr__(self):
        return f"BandStats(mean={self.mean.tolist()!r}, std={self.std.tolist()!r})"

    def to_dict(self) -> dict:
        return {
            e.value: {
                b.label: {"mean": float(self.mean[i, j]), "std": float(self.std[i, j])}
                for j, b in enumerate(BANDS)
            }
            for i, e in enumerate(DATA_ELECTRODES)
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BandStats":
        try:
            mean = [[data[e.value][b.label]["mean"] for b in BANDS] for e in DATA_ELECTRODES]
            std = [[data[e.value][b.label]["std"] for b in BANDS] for e in DATA_ELECTRODES]
        except KeyError as exc:
            raise EEGError(f"band statistics missing entry {exc.args[0]!r}") from None
        return cls(mean, std)


@dataclass(frozen=True)
class EpochBandStats:
    """Band statistics for one time window across all four electrodes."""

    start_index: int
    artifact: bool
    stats: BandStats


@dataclass(frozen=True, eq=False)
class ActivitySummary:
    activity: ActivityKind
    n_epochs_total: int
    n_epochs_clean: int
    stats: BandStats
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.n_epochs_clean <= self.n_epochs_total:
            raise EEGError("summary needs 1 <= n_epochs_clean <= n_epochs_total")

    def __eq__(self, other):
        if not isinstance(other, ActivitySummary):
            return NotImplemented
        return (
            self.activity == other.activity
            and self.n_epochs_total == other.n_epochs_total
            and self.n_epochs_clean == other.n_epochs_clean
            and self.stats == other.stats
            and self.config == other.config
        )

    def to_dict(self) -> dict:
        return {
            "activity": self.activity.to_dict(),
            "n_epochs_total": self.n_epochs_total,
            "n_epochs_clean": self.n_epochs_clean,
            "stats": self.stats.to_dict(),
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ActivitySummary":
        return cls(
            ActivityKind.from_dict(data["activity"]),
            int(data["n_epochs_total"]),
            int(data["n_epochs_clean"]),
            BandStats.from_dict(data["stats"]),
            dict(data.get("config", {})),
        )


def epoch_band_stats(
    epochs: Mapping[Electrode, Sequence[Epoch]], config: DSPConfig = DSPConfig()
) -> list[EpochBandStats]:
    """Preprocess, transform and band-summarise aligned per-electrode epochs.

    A window is flagged as artifact if any of its four channels is.
    """
    counts = {len(epochs.get(e, ())) for e in DATA_ELECTRODES}
    if len(counts) != 1:
        raise EEGError("every data electrode needs the same number of epochs")
    out = []
    for i in range(counts.pop()):
        per_electrode = {}
        artifact = False
        for electrode in DATA_ELECTRODES:
            clean = preprocess(epochs[electrode][i], config.artifact_threshold_uv)
            artifact |= clean.artifact
            per_electrode[electrode] = to_band_stats(
                to_spectrum(clean, config.window),
                mains_hz=config.mains_hz,
                mains_width_hz=config.mains_width_hz,
                quantity=config.quantity,
            )
        start = epochs[DATA_ELECTRODES[0]][i].start_index
        out.append(EpochBandStats(start, artifact, BandStats.from_mapping(per_electrode)))
    return out


def summarize_activity(
    epoch_stats: Iterable[EpochBandStats],
    activity: ActivityKind,
    config: Optional[Mapping] = None,
) -> ActivitySummary:
    """Average per-epoch band statistics over clean windows, in start-index order."""
    ordered = sorted(epoch_stats, key=lambda s: s.start_index)
    clean = [s for s in ordered if not s.artifact]
    if not clean:
        raise InsufficientDataError(f"no clean data for {activity.name!r}")
    if len(clean) < len(ordered):
        logger.info(
            "%s: rejected %d of %d epochs as artifacts",
            activity.name, len(ordered) - len(clean), len(ordered),
        )
    mean = np.mean(np.stack([s.stats.mean for s in clean]), axis=0)
    std = np.mean(np.stack([s.stats.std for s in clean]), axis=0)
    return ActivitySummary(
        activity, len(ordered), len(clean), BandStats(mean, std), dict(config or {})
    )


def analyze_activity(
    recording: Recording,
    activity: ActivityKind,
    config: DSPConfig = DSPConfig(),
    label: Optional[str] = None,
) -> ActivitySummary:
    """Run segment -> preprocess -> spectrum -> band stats -> summary for one label."""
    epochs = segment(recording, label or activity.name, config.epoch_len, config.hop)
    echo = {**config.to_dict(), "sample_rate_hz": recording.sample_rate_hz}
    return summarize_activity(epoch_band_stats(epochs, config), activity, echo)
