"""Shared test fixtures: subject-wise dominance table rows and summary builders."""

import numpy as np

from eeg_dominance.core import BANDS, DATA_ELECTRODES, FrequencyBand, MEMORY, PUZZLE, TALKING
from eeg_dominance.dsp import ActivitySummary, BandStats

# (subject, activity, dominant hemisphere, dominant activity), as printed
SUBJECT_ROWS = [
    ("Jaume", "Memory", "Left", "Training"),
    ("Sara", "Memory", "Left", "Talking"),
    ("Oscar", "Memory", "Right", "Talking"),
    ("Yolanda", "Memory", "Right", "Training"),
    ("Gaurav", "Memory", "Left", "Training"),
    ("Benigno", "Memory", "Left", "Training"),
    ("Jaume", "Puzzle", "Left", "Training"),
    ("Sara", "Puzzle", "Right", "Training"),
    ("Oscar", "Puzzle", "Right", "Talking"),
    ("Yolanda", "Puzzle", "Left", "Talking"),
    ("Gaurav", "Puzzle", "Left", "Training"),
]

SUBJECT_ROWS_TEXT = [
    "Jaume | Memory | IVM, VP | Left | Training",
    "Sara | Memory | IVM, VP | Left | Talking",
    "Oscar | Memory | IVM, VP | Right | Talking",
    "Yolanda | Memory | IVM, VP | Right | Training",
    "Gaurav | Memory | IVM, VP | Left | Training",
    "Benigno | Memory | IVM, VP | Left | Training",
    "Jaume | Puzzle | VP, VC, C | Left | Training",
    "Sara | Puzzle | VP, VC, C | Right | Training",
    "Oscar | Puzzle | VP, VC, C | Right | Talking",
    "Yolanda | Puzzle | VP, VC, C | Left | Talking",
    "Gaurav | Puzzle | VP, VC, C | Left | Training",
]

# training gamma means (TP9, AF7, AF8, TP10) against an all-ones baseline
GAMMA_FOR_VERDICT = {
    ("Left", "Training"): (2.0, 2.0, 1.0, 1.0),
    ("Left", "Talking"): (0.8, 0.8, 0.5, 0.5),
    ("Right", "Training"): (1.0, 1.0, 2.0, 2.0),
    ("Right", "Talking"): (0.5, 0.5, 0.8, 0.8),
}

ACTIVITIES = {"Memory": MEMORY, "Puzzle": PUZZLE, "Talking": TALKING}


def summary_with_gamma(activity, gamma, other=0.25, n_epochs=3):
    mean = np.full((len(DATA_ELECTRODES), len(BANDS)), other)
    mean[:, BANDS.index(FrequencyBand.GAMMA)] = gamma
    return ActivitySummary(activity, n_epochs, n_epochs, BandStats(mean, mean / 2))


def baseline_summary(gamma=(1.0, 1.0, 1.0, 1.0)):
    return summary_with_gamma(TALKING, gamma)
