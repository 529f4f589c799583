"""Domain vocabulary shared by the whole pipeline.

Electrodes follow the four-channel MUSE layout (TP9, AF7, AF8, TP10) with NZ
as the hardware reference. Frequency bands partition [0, 45] Hz using
half-open intervals, with Gamma closed at its upper edge.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional


class EEGError(ValueError):
    """Base class for domain errors raised by this package."""


class ConfigurationError(EEGError):
    pass


class Electrode(enum.Enum):
    TP9 = "TP9"
    AF7 = "AF7"
    AF8 = "AF8"
    TP10 = "TP10"
    NZ = "NZ"  # reference only, never carries samples

    @property
    def is_data(self) -> bool:
        return self is not Electrode.NZ


#: Data channels in wire/file order.
DATA_ELECTRODES: tuple[Electrode, ...] = (
    Electrode.TP9,
    Electrode.AF7,
    Electrode.AF8,
    Electrode.TP10,
)


class Hemisphere(enum.Enum):
    LEFT = "Left"
    RIGHT = "Right"
    BALANCED = "Balanced"  # output-only tie value


_HEMISPHERE = {
    Electrode.TP9: Hemisphere.LEFT,
    Electrode.AF7: Hemisphere.LEFT,
    Electrode.AF8: Hemisphere.RIGHT,
    Electrode.TP10: Hemisphere.RIGHT,
}


def hemisphere_of(electrode: Electrode) -> Hemisphere:
    """Return the hemisphere an electrode sits over.

    Raises EEGError for the NZ reference electrode, which records no data.
    """
    electrode = Electrode(electrode)
    if not electrode.is_data:
        raise EEGError("NZ is the reference electrode and carries no data")
    return _HEMISPHERE[electrode]


def electrodes_in(hemisphere: Hemisphere) -> tuple[Electrode, ...]:
    return tuple(e for e in DATA_ELECTRODES if _HEMISPHERE[e] is hemisphere)


class FrequencyBand(enum.Enum):
    DELTA = ("Delta", 0.0, 4.0)
    THETA = ("Theta", 4.0, 8.0)
    ALPHA = ("Alpha", 8.0, 12.0)
    BETA = ("Beta", 12.0, 30.0)
    GAMMA = ("Gamma", 30.0, 45.0)

    def __init__(self, label: str, lo_hz: float, hi_hz: float):
        self.label = label
        self.lo_hz = lo_hz
        self.hi_hz = hi_hz

    def contains(self, freq_hz: float) -> bool:
        if self is FrequencyBand.GAMMA:
            return self.lo_hz <= freq_hz <= self.hi_hz
        return self.lo_hz <= freq_hz < self.hi_hz

    @classmethod
    def from_label(cls, label: str) -> "FrequencyBand":
        for band in cls:
            if band.label == label:
                return band
        raise KeyError(label)


BANDS: tuple[FrequencyBand, ...] = tuple(FrequencyBand)
MAX_BAND_HZ = FrequencyBand.GAMMA.hi_hz


def band_of(freq_hz: float) -> Optional[FrequencyBand]:
    """Map a frequency to its band, or None above 45 Hz."""
    if not freq_hz >= 0:
        raise EEGError(f"frequency must be non-negative, got {freq_hz!r}")
    for band in BANDS:
        if band.contains(freq_hz):
            return band
    return None


class CognitiveDomain(enum.Enum):
    IVM = "Instant Verbal Memory"
    VP = "Visuoperception"
    LTM = "Long Term Memory"
    VC = "Visuoconstruction"
    C = "Comprehension"
    NA = "Naming Ability"
    VM = "Visual Memory"
    VerbM = "Verbal Memory"

    @property
    def abbreviation(self) -> str:
        return self.name

    @property
    def long_name(self) -> str:
        return self.value


_DOMAIN_ORDER = {d: i for i, d in enumerate(CognitiveDomain)}


def sort_domains(domains: Iterable[CognitiveDomain]) -> list[CognitiveDomain]:
    return sorted(domains, key=_DOMAIN_ORDER.__getitem__)


def format_domains(domains: Iterable[CognitiveDomain]) -> str:
    return ", ".join(d.abbreviation for d in sort_domains(domains))


@dataclass(frozen=True)
class ActivityKind:
    name: str
    cognitive_domains: frozenset[CognitiveDomain] = frozenset()
    difficulty: int = 1
    difficulty_max: int = 5
    is_baseline: bool = False

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("activity name must be non-empty")
        object.__setattr__(self, "cognitive_domains", frozenset(self.cognitive_domains))
        if self.difficulty < 1 or self.difficulty_max < 1:
            raise ConfigurationError(f"{self.name}: difficulty levels must be >= 1")
        if self.difficulty > self.difficulty_max:
            raise ConfigurationError(f"{self.name}: difficulty exceeds difficulty_max")
        if self.is_baseline and self.cognitive_domains:
            raise ConfigurationError(f"{self.name}: baseline activity cannot train domains")

    def with_difficulty(self, difficulty: int) -> "ActivityKind":
        return ActivityKind(
            self.name, self.cognitive_domains, difficulty, self.difficulty_max, self.is_baseline
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cognitive_domains": [d.abbreviation for d in sort_domains(self.cognitive_domains)],
            "difficulty": self.difficulty,
            "difficulty_max": self.difficulty_max,
            "is_baseline": self.is_baseline,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ActivityKind":
        try:
            domains = frozenset(CognitiveDomain[d] for d in data.get("cognitive_domains", []))
        except KeyError as exc:
            raise ConfigurationError(f"unknown cognitive domain {exc.args[0]!r}") from None
        return cls(
            name=data["name"],
            cognitive_domains=domains,
            difficulty=int(data.get("difficulty", 1)),
            difficulty_max=int(data.get("difficulty_max", 5)),
            is_baseline=bool(data.get("is_baseline", False)),
        )


TALKING = ActivityKind("Talking", is_baseline=True, difficulty_max=1)
MEMORY = ActivityKind("Memory", frozenset({CognitiveDomain.IVM, CognitiveDomain.VP}))
PUZZLE = ActivityKind(
    "Puzzle", frozenset({CognitiveDomain.VP, CognitiveDomain.VC, CognitiveDomain.C})
)
# Domains for this one are a placeholder; no published assignment exists.
PAINT_OBJECT_RAIN = ActivityKind(
    "PaintObjectRain", frozenset({CognitiveDomain.VP, CognitiveDomain.VC})
)

DEFAULT_CATALOG: tuple[ActivityKind, ...] = (TALKING, MEMORY, PUZZLE, PAINT_OBJECT_RAIN)


@dataclass(frozen=True)
class Catalog:
    activities: tuple[ActivityKind, ...] = DEFAULT_CATALOG

    def __post_init__(self):
        object.__setattr__(self, "activities", tuple(self.activities))
        names = [a.name for a in self.activities]
        if len(set(names)) != len(names):
            raise ConfigurationError("duplicate activity names in catalog")
        if sum(a.is_baseline for a in self.activities) != 1:
            raise ConfigurationError("catalog must contain exactly one baseline activity")

    def __iter__(self):
        return iter(self.activities)

    def __len__(self):
        return len(self.activities)

    def __contains__(self, name: str) -> bool:
        return any(a.name == name for a in self.activities)

    def get(self, name: str) -> ActivityKind:
        for activity in self.activities:
            if activity.name == name:
                return activity
        raise KeyError(name)

    @property
    def baseline(self) -> ActivityKind:
        return next(a for a in self.activities if a.is_baseline)

    @property
    def trainable(self) -> tuple[ActivityKind, ...]:
        return tuple(a for a in self.activities if not a.is_baseline)

    def to_list(self) -> list[dict]:
        return [a.to_dict() for a in self.activities]

    @classmethod
    def from_list(cls, items: list[dict]) -> "Catalog":
        if not isinstance(items, list):
            raise ConfigurationError("catalog file must hold a JSON list")
        try:
            return cls(tuple(ActivityKind.from_dict(item) for item in items))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed catalog entry: {exc}") from None


def load_catalog(path: Optional[Path | str] = None) -> Catalog:
    """Load an activity catalog JSON file; the built-in catalog when path is None."""
    if path is None:
        return Catalog()
    with open(path, encoding="utf-8") as fh:
        try:
            items = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return Catalog.from_list(items)


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: str
    display_name: str = ""
    notes: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.subject_id:
            raise EEGError("subject_id must be non-empty")

    @property
    def label(self) -> str:
        return self.display_name or self.subject_id
