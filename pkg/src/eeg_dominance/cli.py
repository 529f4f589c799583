"""Command-line entry point.

Exit statuses: 0 success, 1 input/parse error, 2 precondition violation,
3 network error or no data.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._io import atomic_write_text
from .core import (
    ActivityKind,
    Catalog,
    ConfigurationError,
    EEGError,
    Electrode,
    SubjectProfile,
    load_catalog,
)
from .dsp import DSPConfig, InsufficientDataError, analyze_activity
from .ingest import (
    DEFAULT_PORT,
    NoDataError,
    Recording,
    SegmentSpec,
    Tone,
    collect_stream,
    generate_synthetic,
    read_recording,
    write_recording,
)
from .session import (
    FIXED_TIMESTAMP,
    Session,
    canonical_json,
    format_table,
    load_session,
    render_report,
)

logger = logging.getLogger("eeg_dominance")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PRECONDITION = 2
EXIT_NO_DATA = 3


class CommandError(Exception):
    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class RunConfig:
    sample_rate_hz: float = 256.0
    epoch_len: int = 512
    hop: int = 256
    artifact_threshold_uv: float = 400.0
    mains_hz: Optional[float] = 50.0
    window: str = "boxcar"
    catalog: Optional[str] = None
    out: str = "out"
    seed: int = 0
    port: int = DEFAULT_PORT
    duration: float = 10.0
    fixed_timestamp: bool = False

    def validate(self) -> "RunConfig":
        def fail(name, why):
            raise ConfigurationError(f"invalid {name}: {why}")

        if not self.sample_rate_hz > 0:
            fail("sample_rate_hz", "must be positive")
        if self.epoch_len < 2 or self.epoch_len & (self.epoch_len - 1):
            fail("epoch_len", "must be a power of two >= 2")
        if not 1 <= self.hop <= self.epoch_len:
            fail("hop", "must be between 1 and epoch_len")
        if not self.artifact_threshold_uv > 0:
            fail("artifact_threshold_uv", "must be positive")
        if self.mains_hz is not None and self.mains_hz not in (50.0, 60.0):
            fail("mains_hz", "must be 50, 60 or off")
        if self.window not in ("boxcar", "hann"):
            fail("window", "must be boxcar or hann")
        if not 0 <= self.port <= 65535:
            fail("port", "must be in 0..65535")
        if not self.duration > 0:
            fail("duration", "must be positive")
        if self.seed < 0:
            fail("seed", "must be non-negative")
        return self

    def dsp(self) -> DSPConfig:
        return DSPConfig(
            epoch_len=self.epoch_len,
            hop=self.hop,
            artifact_threshold_uv=self.artifact_threshold_uv,
            mains_hz=self.mains_hz,
            window=self.window,
        )

    def timestamp(self) -> datetime:
        return FIXED_TIMESTAMP if self.fixed_timestamp else datetime.now(timezone.utc)


# flag name -> RunConfig field
_FLAGS = {
    "rate": "sample_rate_hz",
    "epoch": "epoch_len",
    "hop": "hop",
    "artifact_uv": "artifact_threshold_uv",
    "mains": "mains_hz",
    "window": "window",
    "catalog": "catalog",
    "out": "out",
    "seed": "seed",
    "port": "port",
    "duration": "duration",
    "fixed_timestamp": "fixed_timestamp",
}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_mains(value) -> Optional[float]:
    if value is None or str(value).lower() in ("off", "none", "0"):
        return None
    return float(value)


def _coerce(field_name: str, value):
    if field_name == "mains_hz":
        return _parse_mains(value)
    if field_name in ("epoch_len", "hop", "seed", "port"):
        if isinstance(value, bool) or int(value) != value:
            raise ConfigurationError(f"invalid {field_name}: expected an integer")
        return int(value)
    if field_name in ("sample_rate_hz", "artifact_threshold_uv", "duration"):
        return float(value)
    if field_name == "fixed_timestamp":
        return bool(value)
    return None if value is None else str(value)


def load_config_file(path: Path | str) -> dict:
    """Read a TOML override file; keys may be flag names or RunConfig field names."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    out = {}
    for key, value in data.items():
        name = key.replace("-", "_")
        name = _FLAGS.get(name, name)
        if name not in _FIELD_TYPES:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            out[name] = _coerce(name, value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"invalid {name}: {value!r}") from None
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for flag, name in _FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[name] = _coerce(name, value)
    return replace(RunConfig(), **values).validate()


# ------------------------------------------------------------------------ analyze


def run_analysis(recording: Recording, subject: SubjectProfile, config: RunConfig) -> Session:
    catalog = load_catalog(config.catalog)
    baseline_kind = catalog.baseline
    labels = recording.labels()
    if baseline_kind.name not in labels:
        raise CommandError("no baseline segment", EXIT_PRECONDITION)
    training = [label for label in labels if label != baseline_kind.name]
    if not training:
        raise CommandError("no training segment", EXIT_PRECONDITION)
    unknown = [label for label in training if label not in catalog]
    if unknown:
        logger.warning("activities not in catalog, added without domains: %s", ", ".join(unknown))
        catalog = Catalog(catalog.activities + tuple(ActivityKind(u) for u in unknown))

    dsp_config = config.dsp()
    session = Session(
        subject=subject,
        catalog=catalog,
        config={**dsp_config.to_dict(), "sample_rate_hz": recording.sample_rate_hz},
        started_at=config.timestamp(),
    )
    try:
        session.set_baseline(analyze_activity(recording, baseline_kind, dsp_config))
        for label in training:
            session.evaluate_activity(analyze_activity(recording, catalog.get(label), dsp_config))
    except InsufficientDataError as exc:
        raise CommandError(str(exc), EXIT_PRECONDITION) from None
    return session


def write_outputs(session: Session, config: RunConfig) -> list[Path]:
    out = Path(config.out)
    stem = f"{session.subject.subject_id}_{session.session_ts}_report"
    when = config.timestamp()
    paths = [
        atomic_write_text(out / f"{stem}.json", render_report(session, "json", when)),
        atomic_write_text(out / f"{stem}.txt", render_report(session, "text", when)),
        session.save(out),
    ]
    for p in paths:
        logger.info("wrote %s", p)
    return paths


def cmd_analyze(args, config: RunConfig) -> int:
    try:
        recording = read_recording(args.recording, config.sample_rate_hz, args.subject)
    except OSError as exc:
        raise CommandError(f"cannot read {args.recording}: {exc.strerror}", EXIT_INPUT) from None
    session = run_analysis(recording, SubjectProfile(args.subject), config)
    write_outputs(session, config)
    sys.stdout.write(format_table([session]))
    return EXIT_OK


# ----------------------------------------------------------------------- simulate


def parse_simulation_spec(data: dict) -> tuple[list[SegmentSpec], dict]:
    if not isinstance(data, dict) or not data.get("segments"):
        raise ConfigurationError("simulation spec needs a non-empty 'segments' list")
    segments = []
    for i, seg in enumerate(data["segments"]):
        try:
            tones = {
                Electrode(name): [
                    Tone(float(t["freq_hz"]), float(t["amplitude_uv"]), float(t.get("phase_rad", 0.0)))
                    for t in tone_list
                ]
                for name, tone_list in seg.get("tones", {}).items()
            }
            segments.append(
                SegmentSpec(
                    duration_s=float(seg["duration_s"]),
                    tones=tones,
                    noise_std_uv=float(seg.get("noise_std_uv", data.get("noise_std_uv", 0.0))),
                    marker=seg.get("marker") or None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"segment {i}: malformed ({exc})") from None
    return segments, data


def cmd_simulate(args, config: RunConfig) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CommandError(f"cannot read {args.spec}: {exc.strerror}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CommandError(f"{args.spec}: invalid JSON ({exc})", EXIT_INPUT) from None
    segments, data = parse_simulation_spec(data)
    rate = config.sample_rate_hz if args.rate is not None else float(data.get("sample_rate_hz", config.sample_rate_hz))
    seed = config.seed if args.seed is not None else int(data.get("seed", config.seed))
    recording = generate_synthetic(segments, rate, seed, data.get("subject_id", "synthetic"))
    write_recording(recording, args.output)
    logger.info("wrote %d samples to %s", len(recording), args.output)
    return EXIT_OK


# ------------------------------------------------------------------------- listen


def cmd_listen(args, config: RunConfig) -> int:
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 4 << 20)
    try:
        sock.bind((args.host, config.port))
    except OSError as exc:
        sock.close()
        raise CommandError(f"cannot bind UDP port {config.port}: {exc.strerror}", EXIT_NO_DATA) from None
    logger.info("listening on %s:%d for %.1f s", args.host, config.port, config.duration)
    try:
        recording = collect_stream(
            sock,
            duration_s=config.duration,
            max_packets=args.count,
            sample_rate_hz=config.sample_rate_hz,
            subject_id=args.subject,
        )
    except NoDataError as exc:
        raise CommandError(str(exc), EXIT_NO_DATA) from None
    finally:
        sock.close()
    for note in recording.notes:
        logger.warning(note)
    output = Path(args.output) if args.output else (
        Path(config.out) / f"{args.subject}_{config.timestamp().strftime('%Y%m%dT%H%M%SZ')}.csv"
    )
    write_recording(recording, output)
    logger.info("wrote %d samples to %s", len(recording), output)
    if args.analyze:
        session = run_analysis(recording, SubjectProfile(args.subject), config)
        write_outputs(session, config)
        sys.stdout.write(format_table([session]))
    return EXIT_OK


# ---------------------------------------------------------------------- recommend


def cmd_recommend(args, config: RunConfig) -> int:
    try:
        session = load_session(args.session)
    except OSError as exc:
        raise CommandError(f"cannot read {args.session}: {exc.strerror}", EXIT_INPUT) from None
    if not session.evaluations:
        raise CommandError("session has no evaluations", EXIT_PRECONDITION)
    rec = session.recommend_next()
    sys.stdout.write(canonical_json({"subject": session.subject.subject_id, **rec.to_dict()}))
    return EXIT_OK


# ------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with option overrides (flags win)")
    common.add_argument("--rate", type=float, help="sample rate in Hz (default 256)")
    common.add_argument("--epoch", type=int, help="epoch length in samples (default 512)")
    common.add_argument("--hop", type=int, help="hop between epochs in samples (default 256)")
    common.add_argument("--artifact-uv", type=float, help="peak-to-peak rejection threshold (default 400)")
    common.add_argument("--mains", help="mains frequency to exclude: 50, 60 or off (default 50)")
    common.add_argument("--window", choices=("boxcar", "hann"), help="spectral window (default boxcar)")
    common.add_argument("--catalog", help="activity catalog JSON file")
    common.add_argument("--out", help="output directory (default ./out)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--port", type=int, help=f"UDP port (default {DEFAULT_PORT})")
    common.add_argument("--duration", type=float, help="listen duration in seconds (default 10)")
    common.add_argument(
        "--fixed-timestamp", action="store_const", const=True, default=None,
        help="use a fixed epoch timestamp so outputs are byte-reproducible",
    )
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(
        prog="eeg-dominance",
        description="Band-power and hemisphere dominance analysis for four-channel EEG.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="analyse a CSV recording")
    p.add_argument("recording")
    p.add_argument("--subject", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic CSV recording")
    p.add_argument("spec", help="JSON simulation spec")
    p.add_argument("output", help="CSV file to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("listen", parents=[common], help="record a UDP packet stream")
    p.add_argument("--subject", required=True)
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--count", type=int, help="stop after this many packets")
    p.add_argument("--output", help="CSV file to write (default <out>/<subject>_<ts>.csv)")
    p.add_argument("--analyze", action="store_true", help="analyse the recording afterwards")
    p.set_defaults(func=cmd_listen)

    p = sub.add_parser("recommend", parents=[common], help="print the next-activity recommendation")
    p.add_argument("session", help="session JSON file")
    p.set_defaults(func=cmd_recommend)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = build_config(args)
        return args.func(args, config)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.status
    except EEGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
