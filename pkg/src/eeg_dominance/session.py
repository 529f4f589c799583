"""Subject sessions: baseline handling, evaluations, reports and recommendations."""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from ._io import atomic_write_text
from .core import (
    BANDS,
    DATA_ELECTRODES,
    ActivityKind,
    Catalog,
    EEGError,
    Hemisphere,
    SubjectProfile,
    format_domains,
)
from .dominance import DominanceVerdict, DominantActivity, classify_summaries
from .dsp import ActivitySummary

FIXED_TIMESTAMP = datetime(1970, 1, 1, tzinfo=timezone.utc)
TABLE_COLUMNS = ("Subject", "Activity", "Cognitive Domains", "Dominant Hemisphere", "Dominant Activity")
REPORT_SCHEMA_VERSION = 1


class SessionError(EEGError):
    pass


class Rationale(enum.Enum):
    CONTINUE_ENGAGED = "ContinueEngaged"
    SWITCH_DOMAINS = "SwitchDomains"
    REPEAT_BALANCED = "RepeatBalanced"


@dataclass(frozen=True)
class Recommendation:
    next_activity: ActivityKind
    next_difficulty: int
    rationale: Rationale
    explanation: str

    def to_dict(self) -> dict:
        return {
            "next_activity": self.next_activity.name,
            "next_difficulty": self.next_difficulty,
            "cognitive_domains": format_domains(self.next_activity.cognitive_domains),
            "rationale": self.rationale.value,
            "explanation": self.explanation,
        }


@dataclass(frozen=True)
class Evaluation:
    activity: ActivityKind
    summary: ActivitySummary
    baseline: ActivitySummary
    verdict: DominanceVerdict
    # accepted for completeness; no rule consumes it yet
    response_time_s: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "activity": self.activity.to_dict(),
            "summary": self.summary.to_dict(),
            "baseline": self.baseline.to_dict(),
            "verdict": self.verdict.to_dict("", self.activity.name),
            "response_time_s": self.response_time_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Evaluation":
        return cls(
            ActivityKind.from_dict(data["activity"]),
            ActivitySummary.from_dict(data["summary"]),
            ActivitySummary.from_dict(data["baseline"]),
            DominanceVerdict.from_dict(data["verdict"]),
            data.get("response_time_s"),
        )


def _timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


@dataclass
class Session:
    """Mutable, single-writer state of one subject's training session."""

    subject: SubjectProfile
    catalog: Catalog = field(default_factory=Catalog)
    baseline: Optional[ActivitySummary] = None
    evaluations: list[Evaluation] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    @property
    def session_ts(self) -> str:
        return _timestamp(self.started_at)

    @property
    def history_counts(self) -> dict[str, int]:
        return dict(Counter(e.activity.name for e in self.evaluations))

    def set_baseline(self, summary: ActivitySummary) -> "Session":
        if not summary.activity.is_baseline:
            raise SessionError(f"{summary.activity.name!r} cannot serve as the talking baseline")
        self.baseline = summary
        return self

    def evaluate_activity(
        self, summary: ActivitySummary, response_time_s: Optional[float] = None
    ) -> DominanceVerdict:
        if self.baseline is None:
            raise SessionError("baseline required before evaluating activities")
        if summary.activity.is_baseline:
            raise SessionError("the baseline activity cannot be evaluated against itself")
        if summary.activity.name not in self.catalog:
            raise SessionError(f"activity {summary.activity.name!r} is not in the catalog")
        verdict = classify_summaries(summary, self.baseline)
        self.evaluations.append(
            Evaluation(summary.activity, summary, self.baseline, verdict, response_time_s)
        )
        return verdict

    def recommend_next(self) -> Recommendation:
        if not self.evaluations:
            raise SessionError("at least one evaluation is required")
        latest = self.evaluations[-1]
        return recommend(latest.activity, latest.verdict, self.catalog, self.history_counts)

    # -- persistence

    def to_dict(self) -> dict:
        return {
            "subject": {
                "subject_id": self.subject.subject_id,
                "display_name": self.subject.display_name,
                "notes": self.subject.notes,
            },
            "session_ts": self.session_ts,
            "catalog": self.catalog.to_list(),
            "config": self.config,
            "baseline": None if self.baseline is None else self.baseline.to_dict(),
            "evaluations": [e.to_dict() for e in self.evaluations],
            "history_counts": self.history_counts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Session":
        try:
            subject = SubjectProfile(**data["subject"])
            started = datetime.strptime(data["session_ts"], "%Y%m%dT%H%M%SZ").replace(
                tzinfo=timezone.utc
            )
            session = cls(
                subject=subject,
                catalog=Catalog.from_list(data["catalog"]),
                baseline=(
                    None if data.get("baseline") is None
                    else ActivitySummary.from_dict(data["baseline"])
                ),
                evaluations=[Evaluation.from_dict(e) for e in data.get("evaluations", [])],
                config=dict(data.get("config", {})),
                started_at=started,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SessionError(f"malformed session document: {exc}") from None
        if session.evaluations and session.baseline is None:
            raise SessionError("session has evaluations but no baseline")
        return session

    def save(self, root: Path | str = ".") -> Path:
        """Write to ``<root>/sessions/<subject_id>/<session_ts>.json``."""
        path = Path(root) / "sessions" / self.subject.subject_id / f"{self.session_ts}.json"
        return atomic_write_text(path, canonical_json(self.to_dict()))


def load_session(path: Path | str) -> Session:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SessionError(f"{path}: invalid JSON ({exc})") from None
    return Session.from_dict(data)


# ------------------------------------------------------------------ recommendation


def recommend(
    activity: ActivityKind,
    verdict: DominanceVerdict,
    catalog: Catalog,
    history_counts: Optional[dict[str, int]] = None,
) -> Recommendation:
    """Pick the next activity from the latest verdict.

    Engaged (training dominates): same activity one level harder. Not engaged
    with a clear hemisphere: switch to the activity whose cognitive domains
    differ most from the current one, one level easier. Balanced and not
    engaged: repeat unchanged.
    """
    history_counts = history_counts or {}
    trainable = catalog.trainable
    if not trainable:
        raise SessionError("catalog has no activities besides the baseline")
    current = catalog.get(activity.name) if activity.name in catalog else activity
    level = activity.difficulty

    if verdict.dominant_activity is DominantActivity.TRAINING:
        nxt = min(level + 1, current.difficulty_max)
        return Recommendation(
            current.with_difficulty(nxt),
            nxt,
            Rationale.CONTINUE_ENGAGED,
            f"gamma rose {verdict.gamma_change:+.4g} µV over baseline on "
            f"{verdict.dominant_hemisphere.value.lower()} side during {activity.name}; "
            f"raising difficulty to {nxt}",
        )

    if verdict.dominant_hemisphere is Hemisphere.BALANCED:
        return Recommendation(
            current.with_difficulty(level),
            level,
            Rationale.REPEAT_BALANCED,
            f"no hemisphere dominated during {activity.name}; repeating at difficulty {level}",
        )

    candidates = [a for a in trainable if a.name != activity.name]
    if not candidates:
        candidates = [current]
    target = min(
        candidates,
        key=lambda a: (
            -len(a.cognitive_domains ^ activity.cognitive_domains),
            history_counts.get(a.name, 0),
            a.name,
        ),
    )
    nxt = min(max(1, level - 1), target.difficulty_max)
    return Recommendation(
        target.with_difficulty(nxt),
        nxt,
        Rationale.SWITCH_DOMAINS,
        f"{activity.name} did not raise gamma above the talking baseline "
        f"({verdict.gamma_change:+.4g} µV); switching to {target.name} "
        f"({format_domains(target.cognitive_domains) or 'no domains'}) at difficulty {nxt}",
    )


# ------------------------------------------------------------------------ reports


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def table_row(subject: str, activity: ActivityKind, verdict: DominanceVerdict) -> str:
    return " | ".join(
        (
            subject,
            activity.name,
            format_domains(activity.cognitive_domains) or "-",
            verdict.dominant_hemisphere.value,
            verdict.dominant_activity.value,
        )
    )


def table_header() -> str:
    return " | ".join(TABLE_COLUMNS)


def table_rows(session: Session) -> list[str]:
    return [table_row(session.subject.label, e.activity, e.verdict) for e in session.evaluations]


def format_table(sessions: Sequence[Session]) -> str:
    """Subject-wise dominance table, one row per evaluation."""
    lines = [table_header()]
    for s in sessions:
        lines.extend(table_rows(s))
    return "\n".join(lines) + "\n"


def _band_rows(evaluation: Evaluation) -> list[dict]:
    rows = []
    base, act = evaluation.baseline.stats, evaluation.summary.stats
    for i, electrode in enumerate(DATA_ELECTRODES):
        for j, band in enumerate(BANDS):
            b_mean, b_std = float(base.mean[i, j]), float(base.std[i, j])
            a_mean, a_std = float(act.mean[i, j]), float(act.std[i, j])
            rows.append(
                {
                    "electrode": electrode.value,
                    "band": band.label,
                    "baseline_mean": b_mean,
                    "baseline_std": b_std,
                    "activity_mean": a_mean,
                    "activity_std": a_std,
                    "mean_change": a_mean - b_mean,
                    "std_change": a_std - b_std,
                }
            )
    return rows


def build_report(session: Session, generated_at: Optional[datetime] = None) -> dict:
    """Report document; only ``generated_at`` varies between identical runs."""
    if not session.evaluations:
        raise SessionError("no evaluations to report")
    subject = session.subject.subject_id
    body = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "subject": subject,
        "display_name": session.subject.label,
        "config": session.config,
        "table": {"columns": list(TABLE_COLUMNS), "rows": table_rows(session)},
        "evaluations": [
            {
                "activity": e.activity.name,
                "cognitive_domains": format_domains(e.activity.cognitive_domains),
                "difficulty": e.activity.difficulty,
                "verdict": e.verdict.to_dict(subject, e.activity.name),
                "epochs": {
                    "baseline_total": e.baseline.n_epochs_total,
                    "baseline_clean": e.baseline.n_epochs_clean,
                    "activity_total": e.summary.n_epochs_total,
                    "activity_clean": e.summary.n_epochs_clean,
                },
                "bands": _band_rows(e),
            }
            for e in session.evaluations
        ],
    }
    digest = hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()
    when = generated_at or datetime.now(timezone.utc)
    return {
        **body,
        "content_sha256": digest,
        "generated_at": when.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
    }


def _format_text(report: dict) -> str:
    lines = [" | ".join(report["table"]["columns"]), *report["table"]["rows"], ""]
    lines.append("Per-band change (activity - baseline), mean single-sided amplitude")
    for ev in report["evaluations"]:
        v = ev["verdict"]
        lines.append("")
        lines.append(
            f"[{ev['activity']}] difficulty {ev['difficulty']}, "
            f"delta_left {v['delta_left']:+.6f}, delta_right {v['delta_right']:+.6f}, "
            f"gamma_change {v['gamma_change']:+.6f}"
        )
        lines.append("Electrode | Band | Baseline mean | Activity mean | Change")
        for row in ev["bands"]:
            lines.append(
                f"{row['electrode']} | {row['band']} | {row['baseline_mean']:.6f} | "
                f"{row['activity_mean']:.6f} | {row['mean_change']:+.6f}"
            )
    lines.append("")
    lines.append(f"generated {report['generated_at']}  content sha256 {report['content_sha256']}")
    return "\n".join(lines) + "\n"


def render_report(
    session: Session, fmt: str = "text", generated_at: Optional[datetime] = None
) -> str:
    report = build_report(session, generated_at)
    if fmt == "json":
        return canonical_json(report)
    if fmt == "text":
        return _format_text(report)
    raise ValueError(f"unknown report format {fmt!r}")
