"""scikit-learn compatible wrappers around the band statistics and dominance rule.

Epoch batches are arrays shaped (n_epochs, 4, n_samples) with channels in
TP9, AF7, AF8, TP10 order. ``BandStatsTransformer`` turns them into a
(n_epochs, 40) feature matrix; ``GammaDominanceClassifier`` is fitted on the
talking-baseline features and predicts the dominant activity of new epochs.

    >>> pipe = make_pipeline(BandStatsTransformer(), GammaDominanceClassifier())
    >>> pipe.fit(talking_epochs).predict(memory_epochs)   # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from ._validation import check_epoch_array
from .core import BANDS, DATA_ELECTRODES, TALKING, ActivityKind, EEGError, FrequencyBand
from .dominance import DominanceVerdict, HemisphereGamma, classify
from .dsp import _band_values, amplitude_spectrum

STATS = ("mean", "std")
N_FEATURES = len(DATA_ELECTRODES) * len(BANDS) * len(STATS)


def feature_index(electrode_pos: int, band: FrequencyBand, stat: str = "mean") -> int:
    return (electrode_pos * len(BANDS) + BANDS.index(band)) * len(STATS) + STATS.index(stat)


GAMMA_MEAN_COLUMNS = np.array(
    [feature_index(i, FrequencyBand.GAMMA) for i in range(len(DATA_ELECTRODES))]
)


def artifact_mask(X, threshold_uv: float = 400.0) -> np.ndarray:
    """True for epochs where any channel's peak-to-peak exceeds ``threshold_uv``."""
    X = check_epoch_array(X)
    return np.any(np.ptp(X, axis=2) > threshold_uv, axis=1)


class BandStatsTransformer(TransformerMixin, BaseEstimator):
    """Per-epoch band mean/std of the single-sided amplitude spectrum."""

    def __init__(
        self,
        sample_rate_hz: float = 256.0,
        mains_hz: float | None = 50.0,
        mains_width_hz: float = 1.0,
        quantity: str = "amplitude",
        window: str = "boxcar",
    ):
        self.sample_rate_hz = sample_rate_hz
        self.mains_hz = mains_hz
        self.mains_width_hz = mains_width_hz
        self.quantity = quantity
        self.window = window

    def fit(self, X, y=None):
        X = check_epoch_array(X)
        self.n_samples_per_epoch_ = X.shape[2]
        self.bin_hz_ = self.sample_rate_hz / X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_samples_per_epoch_")
        X = check_epoch_array(X)
        if X.shape[2] != self.n_samples_per_epoch_:
            raise EEGError(
                f"fitted on {self.n_samples_per_epoch_}-sample epochs, got {X.shape[2]}"
            )
        X = X - X.mean(axis=2, keepdims=True)
        values = _band_values(
            amplitude_spectrum(X, self.window), self.bin_hz_, self.mains_hz, self.mains_width_hz, self.quantity
        )
        return values.reshape(len(X), N_FEATURES)

    def get_feature_names_out(self, input_features=None):
        return np.array(
            [f"{e.value}_{b.label}_{s}" for e in DATA_ELECTRODES for b in BANDS for s in STATS],
            dtype=object,
        )


class GammaDominanceClassifier(BaseEstimator):
    """Hemisphere/activity dominance relative to a fitted talking baseline.

    ``fit`` averages the gamma means of the baseline feature rows; ``predict``
    returns "Training" or "Talking" per row, ``verdict`` the verdict for the
    row-averaged input.
    """

    def __init__(self, activity_name: str = "Training"):
        self.activity_name = activity_name

    def _gamma(self, X, activity: ActivityKind) -> list[HemisphereGamma]:
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != N_FEATURES:
            raise EEGError(f"expected {N_FEATURES} band features, got {X.shape[1]}")
        g = X[:, GAMMA_MEAN_COLUMNS]
        return [
            HemisphereGamma.from_gamma_means(dict(zip(DATA_ELECTRODES, row)), activity)
            for row in g
        ]

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.baseline_ = self._gamma(X.mean(axis=0, keepdims=True), TALKING)[0]
        return self

    def _verdicts(self, X) -> list[DominanceVerdict]:
        check_is_fitted(self, "baseline_")
        kind = ActivityKind(self.activity_name)
        return [classify(g, self.baseline_) for g in self._gamma(X, kind)]

    def predict(self, X):
        return np.array([v.dominant_activity.value for v in self._verdicts(X)], dtype=object)

    def predict_hemisphere(self, X):
        return np.array([v.dominant_hemisphere.value for v in self._verdicts(X)], dtype=object)

    def decision_function(self, X):
        """Signed gamma change of the dominant hemisphere, per row."""
        return np.array([v.gamma_change for v in self._verdicts(X)])

    def verdict(self, X) -> DominanceVerdict:
        X = check_array(X, dtype=np.float64)
        return self._verdicts(X.mean(axis=0, keepdims=True))[0]
