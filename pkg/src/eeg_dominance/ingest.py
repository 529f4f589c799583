"""Recording ingestion: CSV files, seeded synthetic signals, and UDP packets."""

from __future__ import annotations

import csv
import io
import logging
import math
import socket
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from ._io import atomic_write_text
from .core import DATA_ELECTRODES, EEGError, Electrode

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE_HZ = 256.0
DEFAULT_PORT = 7331
CSV_HEADER = ("timestamp_ms", "TP9", "AF7", "AF8", "TP10", "marker")


class RecordingFormatError(EEGError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NoDataError(EEGError):
    pass


@dataclass(frozen=True)
class RawSample:
    t_ms: int
    values: Mapping[Electrode, float]
    marker: Optional[str] = None


@dataclass(frozen=True)
class Segment:
    label: str
    start: int
    end: int  # exclusive

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True, eq=False)
class Recording:
    """Four-channel EEG samples with per-sample activity markers.

    ``data`` has shape (n_samples, 4) in TP9, AF7, AF8, TP10 order, in µV.
    """

    t_ms: np.ndarray
    data: np.ndarray
    markers: tuple[Optional[str], ...]
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    subject_id: str = ""
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        t_ms = np.array(self.t_ms, dtype=np.int64).reshape(-1)
        data = np.array(self.data, dtype=np.float64)
        markers = tuple(m if m else None for m in self.markers)
        if not self.sample_rate_hz > 0:
            raise EEGError(f"sample rate must be positive, got {self.sample_rate_hz!r}")
        if data.ndim != 2 or data.shape[1] != len(DATA_ELECTRODES):
            raise EEGError(f"expected data of shape (n, 4), got {data.shape}")
        if not (len(t_ms) == len(data) == len(markers)):
            raise EEGError("timestamps, data and markers differ in length")
        if not np.all(np.isfinite(data)):
            raise EEGError("amplitudes must be finite")
        if len(t_ms) > 1:
            steps = np.diff(t_ms)
            if np.any(steps <= 0):
                bad = int(np.argmax(steps <= 0)) + 1
                raise EEGError(f"timestamps must strictly increase (sample {bad})")
            period = 1000.0 / self.sample_rate_hz
            off = np.abs(steps - period) >= 0.5 * period
            if np.any(off):
                bad = int(np.argmax(off)) + 1
                raise EEGError(
                    f"sample spacing {int(steps[bad - 1])} ms at sample {bad} is inconsistent "
                    f"with {self.sample_rate_hz} Hz"
                )
        t_ms.setflags(write=False)
        data.setflags(write=False)
        object.__setattr__(self, "t_ms", t_ms)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "markers", markers)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "notes", tuple(self.notes))

    def __len__(self) -> int:
        return len(self.t_ms)

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.sample_rate_hz == other.sample_rate_hz
            and self.subject_id == other.subject_id
            and self.markers == other.markers
            and np.array_equal(self.t_ms, other.t_ms)
            and np.array_equal(self.data, other.data)
        )

    __hash__ = None

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def channel(self, electrode: Electrode) -> np.ndarray:
        return self.data[:, DATA_ELECTRODES.index(Electrode(electrode))]

    def sample(self, index: int) -> RawSample:
        row = self.data[index]
        return RawSample(
            int(self.t_ms[index]),
            {e: float(v) for e, v in zip(DATA_ELECTRODES, row)},
            self.markers[index],
        )

    @property
    def samples(self) -> list[RawSample]:
        return [self.sample(i) for i in range(len(self))]

    @property
    def segments(self) -> list[Segment]:
        """Contiguous runs of identical non-empty markers."""
        out = []
        start = 0
        for i in range(1, len(self.markers) + 1):
            if i == len(self.markers) or self.markers[i] != self.markers[start]:
                if self.markers[start] is not None:
                    out.append(Segment(self.markers[start], start, i))
                start = i
        return out

    def labels(self) -> list[str]:
        """Distinct segment labels in order of first appearance."""
        seen: dict[str, None] = {}
        for seg in self.segments:
            seen.setdefault(seg.label)
        return list(seen)

    def with_subject(self, subject_id: str) -> "Recording":
        return Recording(
            self.t_ms, self.data, self.markers, self.sample_rate_hz, subject_id, self.notes
        )

    @classmethod
    def from_samples(
        cls,
        samples: Iterable[RawSample],
        sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
        subject_id: str = "",
    ) -> "Recording":
        samples = list(samples)
        for s in samples:
            if set(s.values) != set(DATA_ELECTRODES):
                raise EEGError("each sample needs exactly the four data electrodes")
        return cls(
            np.array([s.t_ms for s in samples], dtype=np.int64),
            np.array([[s.values[e] for e in DATA_ELECTRODES] for s in samples]).reshape(-1, 4),
            tuple(s.marker for s in samples),
            sample_rate_hz,
            subject_id,
        )


def concatenate(recordings: Sequence[Recording]) -> Recording:
    if not recordings:
        raise EEGError("nothing to concatenate")
    first = recordings[0]
    return Recording(
        np.concatenate([r.t_ms for r in recordings]),
        np.concatenate([r.data for r in recordings]),
        tuple(m for r in recordings for m in r.markers),
        first.sample_rate_hz,
        first.subject_id,
        tuple(n for r in recordings for n in r.notes),
    )


# --------------------------------------------------------------------------- CSV


def _format_float(value: float) -> str:
    return repr(float(value))


def format_recording(recording: Recording) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for t, row, marker in zip(recording.t_ms, recording.data, recording.markers):
        writer.writerow([str(int(t)), *map(_format_float, row), marker or ""])
    return buf.getvalue()


def write_recording(recording: Recording, path: Path | str) -> None:
    atomic_write_text(path, format_recording(recording))


def parse_recording(
    text: str, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ, subject_id: str = ""
) -> Recording:
    if not text.strip():
        raise RecordingFormatError("empty recording")
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader)
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise RecordingFormatError(f"expected header {','.join(CSV_HEADER)}", line=1)
    t_ms, rows, markers = [], [], []
    for fields in reader:
        line = reader.line_num
        if not fields:
            continue
        if len(fields) != len(CSV_HEADER):
            raise RecordingFormatError(
                f"expected {len(CSV_HEADER)} columns, found {len(fields)}", line=line
            )
        try:
            t_ms.append(int(fields[0]))
        except ValueError:
            raise RecordingFormatError(f"timestamp {fields[0]!r} is not an integer", line=line) from None
        try:
            values = [float(v) for v in fields[1:5]]
        except ValueError:
            raise RecordingFormatError("non-numeric amplitude", line=line) from None
        if not all(math.isfinite(v) for v in values):
            raise RecordingFormatError("non-finite amplitude", line=line)
        rows.append(values)
        markers.append(fields[5] or None)
        if len(t_ms) > 1 and t_ms[-1] <= t_ms[-2]:
            raise RecordingFormatError("timestamps must strictly increase", line=line)
    if not rows:
        raise RecordingFormatError("recording has no samples")
    try:
        return Recording(
            np.array(t_ms, dtype=np.int64),
            np.array(rows, dtype=np.float64),
            tuple(markers),
            sample_rate_hz,
            subject_id,
        )
    except EEGError as exc:
        raise RecordingFormatError(str(exc)) from None


def read_recording(
    path: Path | str, sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ, subject_id: str = ""
) -> Recording:
    """Read a recording in the ``timestamp_ms,TP9,AF7,AF8,TP10,marker`` CSV format."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_recording(text, sample_rate_hz, subject_id)


# --------------------------------------------------------------------- synthetic

_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_MUL1 = 0xBF58476D1CE4E5B9
_SM64_MUL2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Scalar SplitMix64 generator (Steele, Lea & Flood constants)."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + _SM64_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _SM64_MUL1) & _MASK64
        z = ((z ^ (z >> 27)) * _SM64_MUL2) & _MASK64
        return z ^ (z >> 31)


def splitmix64_outputs(seed: int, counters: np.ndarray) -> np.ndarray:
    """Outputs number ``counters`` (0-based) of a SplitMix64 stream seeded with ``seed``.

    SplitMix64 state after n+1 steps is seed + (n+1)*gamma, so any output can be
    computed directly; this matches SplitMix64(seed).next() called n+1 times.
    """
    c = np.asarray(counters, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + (c + np.uint64(1)) * np.uint64(_SM64_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM64_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM64_MUL2)
    return z ^ (z >> np.uint64(31))


def uniform_from_bits(bits: np.ndarray) -> np.ndarray:
    """Map 64-bit outputs to [0, 1) using the top 53 bits."""
    return (np.asarray(bits, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def gaussian_noise(seed: int, indices: np.ndarray) -> np.ndarray:
    """Standard normal deviates number ``indices`` of a Box-Muller stream.

    Deviate n uses the uniform pair (2*(n//2), 2*(n//2)+1); even n takes the
    cosine branch, odd n the sine branch.
    """
    n = np.asarray(indices, dtype=np.uint64)
    pair = n // np.uint64(2)
    u1 = 1.0 - uniform_from_bits(splitmix64_outputs(seed, pair * np.uint64(2)))
    u2 = uniform_from_bits(splitmix64_outputs(seed, pair * np.uint64(2) + np.uint64(1)))
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    return np.where(n % np.uint64(2) == 0, radius * np.cos(angle), radius * np.sin(angle))


@dataclass(frozen=True)
class Tone:
    freq_hz: float
    amplitude_uv: float
    phase_rad: float = 0.0


@dataclass(frozen=True)
class SegmentSpec:
    """One labelled stretch of synthetic signal."""

    duration_s: float
    tones: Mapping[Electrode, Sequence[Tone]] = field(default_factory=dict)
    noise_std_uv: float = 0.0
    marker: Optional[str] = None


def generate_synthetic(
    segments: SegmentSpec | Sequence[SegmentSpec],
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    seed: int = 0,
    subject_id: str = "synthetic",
) -> Recording:
    """Sum-of-sinusoids plus seeded Gaussian noise, one segment after another.

    Time and the noise stream run continuously across segments, so the result
    only depends on the segment list, rate and seed.
    """
    if isinstance(segments, SegmentSpec):
        segments = [segments]
    if not segments:
        raise EEGError("at least one segment is required")
    nyquist = sample_rate_hz / 2.0
    lengths = []
    for spec in segments:
        if not spec.duration_s > 0:
            raise EEGError(f"duration must be positive, got {spec.duration_s!r}")
        if spec.noise_std_uv < 0:
            raise EEGError("noise_std_uv must be non-negative")
        for electrode, tones in spec.tones.items():
            if not Electrode(electrode).is_data:
                raise EEGError("tones can only be placed on data electrodes")
            for tone in tones:
                if not 0 <= tone.freq_hz < nyquist:
                    raise EEGError(
                        f"tone at {tone.freq_hz} Hz would alias (Nyquist {nyquist} Hz)"
                    )
        lengths.append(int(round(spec.duration_s * sample_rate_hz)))

    total = sum(lengths)
    index = np.arange(total, dtype=np.int64)
    t_ms = np.floor(index * (1000.0 / sample_rate_hz) + 0.5).astype(np.int64)
    data = np.zeros((total, len(DATA_ELECTRODES)))
    markers: list[Optional[str]] = []
    start = 0
    for spec, length in zip(segments, lengths):
        idx = index[start : start + length]
        for electrode, tones in spec.tones.items():
            col = DATA_ELECTRODES.index(Electrode(electrode))
            for tone in tones:
                data[start : start + length, col] += tone.amplitude_uv * np.sin(
                    2.0 * np.pi * tone.freq_hz * idx / sample_rate_hz + tone.phase_rad
                )
        if spec.noise_std_uv > 0:
            flat = (idx[:, None] * len(DATA_ELECTRODES) + np.arange(len(DATA_ELECTRODES))).ravel()
            data[start : start + length] += spec.noise_std_uv * gaussian_noise(seed, flat).reshape(
                length, len(DATA_ELECTRODES)
            )
        markers.extend([spec.marker] * length)
        start += length
    return Recording(t_ms, data, tuple(markers), sample_rate_hz, subject_id)


# ----------------------------------------------------------------------- packets

PACKET_MAGIC = b"\x4d\x55"
PACKET_VERSION = 1
_HEAD = struct.Struct(">2sBIQB")
_CHANNELS = struct.Struct(">4f")
MIN_PACKET_SIZE = _HEAD.size + _CHANNELS.size


class PacketError(EEGError):
    pass


class BadMagic(PacketError):
    pass


class UnsupportedVersion(PacketError):
    pass


class TruncatedPacket(PacketError):
    pass


class TrailingBytes(PacketError):
    pass


class NonFiniteValue(PacketError):
    pass


class InvalidMarker(PacketError):
    pass


@dataclass(frozen=True)
class StreamPacket:
    seq: int
    t_ms: int
    values: tuple[float, float, float, float]
    marker: str = ""
    version: int = PACKET_VERSION


def encode_packet(packet: StreamPacket) -> bytes:
    marker = packet.marker.encode("utf-8")
    if len(marker) > 255:
        raise InvalidMarker("marker longer than 255 bytes")
    with np.errstate(over="ignore"):
        values = np.asarray(packet.values, dtype=np.float32)
    if values.shape != (4,) or not np.all(np.isfinite(values)):
        raise NonFiniteValue("packets carry exactly four finite float32 amplitudes")
    head = _HEAD.pack(PACKET_MAGIC, packet.version, packet.seq, packet.t_ms, len(marker))
    return head + marker + _CHANNELS.pack(*values.tolist())


def decode_packet(buf: bytes) -> StreamPacket:
    """Parse one datagram.

    Layout: magic(2) | version(1) | seq(u32 BE) | t_ms(u64 BE) | marker_len(1) |
    marker(UTF-8) | 4 x float32 BE in TP9, AF7, AF8, TP10 order.
    """
    buf = bytes(buf)
    if len(buf) < 2:
        raise TruncatedPacket(f"{len(buf)} bytes is too short for a header")
    if buf[:2] != PACKET_MAGIC:
        raise BadMagic(f"bad magic {buf[:2].hex()}")
    if len(buf) < 3:
        raise TruncatedPacket("missing version byte")
    if buf[2] != PACKET_VERSION:
        raise UnsupportedVersion(f"unsupported version {buf[2]}")
    if len(buf) < _HEAD.size:
        raise TruncatedPacket(f"{len(buf)} bytes is too short for a header")
    _, version, seq, t_ms, marker_len = _HEAD.unpack_from(buf)
    expected = _HEAD.size + marker_len + _CHANNELS.size
    if len(buf) < expected:
        raise TruncatedPacket(f"expected {expected} bytes, got {len(buf)}")
    if len(buf) > expected:
        raise TrailingBytes(f"expected {expected} bytes, got {len(buf)}")
    try:
        marker = buf[_HEAD.size : _HEAD.size + marker_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidMarker(f"marker is not valid UTF-8: {exc.reason}") from None
    values = _CHANNELS.unpack_from(buf, _HEAD.size + marker_len)
    if not all(math.isfinite(v) for v in values):
        raise NonFiniteValue("non-finite channel amplitude")
    return StreamPacket(seq, t_ms, values, marker, version)


def recording_to_packets(recording: Recording, first_seq: int = 1) -> list[StreamPacket]:
    return [
        StreamPacket(first_seq + i, int(t), tuple(float(v) for v in row), m or "")
        for i, (t, row, m) in enumerate(zip(recording.t_ms, recording.data, recording.markers))
    ]


def assemble_packets(
    packets: Iterable[StreamPacket],
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    subject_id: str = "",
) -> Recording:
    """Order packets by sequence number and fill gaps by holding the last sample."""
    by_seq: dict[int, StreamPacket] = {}
    for p in packets:
        if p.seq in by_seq:
            logger.warning("duplicate packet seq %d dropped", p.seq)
            continue
        by_seq[p.seq] = p
    if not by_seq:
        raise NoDataError("no packets received")
    ordered = [by_seq[s] for s in sorted(by_seq)]
    t_ms, rows, markers = [], [], []
    missing = 0
    prev = None
    for p in ordered:
        if prev is not None and p.seq > prev.seq + 1:
            gap = p.seq - prev.seq - 1
            missing += gap
            logger.warning("gap of %d packet(s) after seq %d, holding last value", gap, prev.seq)
            for k in range(1, gap + 1):
                t_ms.append(prev.t_ms + round((p.t_ms - prev.t_ms) * k / (gap + 1)))
                rows.append(prev.values)
                markers.append(prev.marker or None)
        t_ms.append(p.t_ms)
        rows.append(p.values)
        markers.append(p.marker or None)
        prev = p
    notes = []
    expected = len(rows)
    if missing:
        notes.append(f"{missing} of {expected} samples filled by last-value hold")
    if missing > 0.1 * expected:
        msg = f"warning: packet loss {missing / expected:.1%} exceeds 10%"
        logger.warning(msg)
        notes.append(msg)
    return Recording(
        np.array(t_ms, dtype=np.int64),
        np.array(rows, dtype=np.float64),
        tuple(markers),
        sample_rate_hz,
        subject_id,
        tuple(notes),
    )


def collect_stream(
    sock: socket.socket,
    *,
    duration_s: Optional[float] = None,
    max_packets: Optional[int] = None,
    stop_event: Optional[threading.Event] = None,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    subject_id: str = "",
    poll_s: float = 0.05,
) -> Recording:
    """Receive packets from a bound UDP socket until a stop condition is met.

    Malformed datagrams are logged and skipped. Raises NoDataError when no
    valid packet arrived.
    """
    if duration_s is None and max_packets is None and stop_event is None:
        raise EEGError("collect_stream needs a duration, packet count or stop event")
    deadline = None if duration_s is None else time.monotonic() + duration_s
    sock.settimeout(poll_s)
    packets: list[StreamPacket] = []
    rejected = 0
    while True:
        if stop_event is not None and stop_event.is_set():
            break
        if max_packets is not None and len(packets) >= max_packets:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        try:
            buf, _ = sock.recvfrom(65535)
        except socket.timeout:
            continue
        try:
            packets.append(decode_packet(buf))
        except PacketError as exc:
            rejected += 1
            logger.warning("dropping malformed packet: %s", exc)
    if rejected:
        logger.info("%d malformed packet(s) rejected", rejected)
    return assemble_packets(packets, sample_rate_hz, subject_id)


def send_packets(packets: Iterable[StreamPacket | bytes], address: tuple[str, int]) -> int:
    """Replay packets to a UDP endpoint; returns the number of datagrams sent."""
    n = 0
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as out:
        for p in packets:
            out.sendto(p if isinstance(p, (bytes, bytearray)) else encode_packet(p), address)
            n += 1
    return n
