"""Hemisphere gamma sums and the dominance verdict against a talking baseline.

The left sum is gamma(AF7) + gamma(TP9), the right sum gamma(AF8) + gamma(TP10).
Each hemisphere's change is training minus baseline; the hemisphere with the
larger signed change dominates, and training dominates the talking baseline
only when that change is strictly positive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping

from .core import (
    EEGError,
    ActivityKind,
    Electrode,
    FrequencyBand,
    Hemisphere,
)
from .dsp import ActivitySummary


class DominantActivity(enum.Enum):
    TRAINING = "Training"
    TALKING = "Talking"


@dataclass(frozen=True)
class HemisphereGamma:
    left: float
    right: float
    activity: ActivityKind

    def __post_init__(self):
        if self.left < 0 or self.right < 0:
            raise EEGError("hemisphere gamma sums must be non-negative")

    @classmethod
    def from_gamma_means(
        cls, gamma: Mapping[Electrode, float], activity: ActivityKind
    ) -> "HemisphereGamma":
        try:
            left = gamma[Electrode.AF7] + gamma[Electrode.TP9]
            right = gamma[Electrode.AF8] + gamma[Electrode.TP10]
        except KeyError as exc:
            raise EEGError(f"missing gamma value for electrode {exc.args[0].value}") from None
        return cls(float(left), float(right), activity)

    def mirrored(self) -> "HemisphereGamma":
        return HemisphereGamma(self.right, self.left, self.activity)


@dataclass(frozen=True)
class DominanceVerdict:
    dominant_hemisphere: Hemisphere
    gamma_change: float
    dominant_activity: DominantActivity
    delta_left: float
    delta_right: float

    def to_dict(self, subject: str, activity: str) -> dict:
        return {
            "subject": subject,
            "activity": activity,
            "dominant_hemisphere": self.dominant_hemisphere.value,
            "gamma_change": self.gamma_change,
            "dominant_activity": self.dominant_activity.value,
            "delta_left": self.delta_left,
            "delta_right": self.delta_right,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DominanceVerdict":
        return cls(
            Hemisphere(data["dominant_hemisphere"]),
            float(data["gamma_change"]),
            DominantActivity(data["dominant_activity"]),
            float(data["delta_left"]),
            float(data["delta_right"]),
        )


def hemisphere_gamma(summary: ActivitySummary) -> HemisphereGamma:
    return HemisphereGamma.from_gamma_means(
        summary.stats.band_means(FrequencyBand.GAMMA), summary.activity
    )


def dominant_hemisphere(delta_left: float, delta_right: float) -> Hemisphere:
    """Larger signed increase wins; exact ties are Balanced."""
    if delta_left > delta_right:
        return Hemisphere.LEFT
    if delta_right > delta_left:
        return Hemisphere.RIGHT
    return Hemisphere.BALANCED


def dominant_activity(gamma_change: float) -> DominantActivity:
    # zero change counts as "training does not dominate"
    return DominantActivity.TRAINING if gamma_change > 0 else DominantActivity.TALKING


def classify(training: HemisphereGamma, baseline: HemisphereGamma) -> DominanceVerdict:
    if not baseline.activity.is_baseline:
        raise EEGError(f"{baseline.activity.name!r} is not a baseline activity")
    if training.activity.is_baseline:
        raise EEGError(f"{training.activity.name!r} is the baseline, not a training activity")
    delta_left = training.left - baseline.left
    delta_right = training.right - baseline.right
    side = dominant_hemisphere(delta_left, delta_right)
    change = delta_right if side is Hemisphere.RIGHT else delta_left
    return DominanceVerdict(side, change, dominant_activity(change), delta_left, delta_right)


def classify_summaries(training: ActivitySummary, baseline: ActivitySummary) -> DominanceVerdict:
    return classify(hemisphere_gamma(training), hemisphere_gamma(baseline))
