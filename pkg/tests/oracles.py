"""Reference computations kept independent of the package implementation."""

import math
import struct

import numpy as np


def direct_dft(x):
    """O(N^2) DFT with exact integer phase reduction."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    idx = np.arange(n)
    phase = np.outer(idx, idx) % n
    return np.exp(-2j * np.pi * phase / n) @ x


def hann_sin2(n):
    # sin^2(pi k / N) equals the periodic Hann window
    return np.sin(np.pi * np.arange(n) / n) ** 2


def oracle_amplitude_spectrum(x, window="boxcar"):
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    w, gain = (hann_sin2(n), 0.5) if window == "hann" else (np.ones(n), 1.0)
    X = direct_dft(x * w)[: n // 2 + 1]
    mag = np.abs(X) * 2.0 / (n * gain)
    mag[0] /= 2.0
    mag[-1] /= 2.0
    return mag


def relative_error(actual, expected):
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    scale = np.max(np.abs(expected))
    return float(np.max(np.abs(actual - expected)) / scale) if scale else float(np.max(np.abs(actual)))


BAND_EDGES = {
    "Delta": (0.0, 4.0),
    "Theta": (4.0, 8.0),
    "Alpha": (8.0, 12.0),
    "Beta": (12.0, 30.0),
    "Gamma": (30.0, 45.0),
}


def brute_band_means(magnitudes, bin_hz, mains_hz=50.0, width=1.0):
    """Per-band mean/pop-std by scanning bins one at a time."""
    sums = {name: [] for name in BAND_EDGES}
    for k, m in enumerate(magnitudes):
        f = k * bin_hz
        if mains_hz is not None and abs(f - mains_hz) <= width:
            continue
        for name, (lo, hi) in BAND_EDGES.items():
            inside = lo <= f <= hi if name == "Gamma" else lo <= f < hi
            if inside:
                sums[name].append(float(m))
    out = {}
    for name, vals in sums.items():
        mean = math.fsum(vals) / len(vals)
        var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
        out[name] = (mean, math.sqrt(var))
    return out


def encode_packet_reference(seq, t_ms, values, marker=b""):
    """Byte-by-byte packet layout written out by hand."""
    out = bytearray(b"MU")
    out.append(1)
    out += seq.to_bytes(4, "big")
    out += t_ms.to_bytes(8, "big")
    out.append(len(marker))
    out += marker
    for v in values:
        out += struct.pack(">f", v)
    return bytes(out)
