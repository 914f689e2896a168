"""WAV input/output, linear mixing and segmentation of mono signals."""

from __future__ import annotations

import logging
import os
import struct
import wave
from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

from .errors import MalformedWavError, UnsupportedWavError, ValidationError, WavError

log = logging.getLogger(__name__)

BIT_DEPTHS = ("16", "24", "32f")


@dataclass(frozen=True, eq=False)
class AudioSignal:
    """Mono float64 samples (full scale is +/-1.0) with a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(f"samples must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain NaN or Inf")
        samples = samples.copy() if samples is self.samples else samples
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def energy(self) -> float:
        return float(np.dot(self.samples, self.samples))


def require_nonempty(signal: AudioSignal, name: str = "signal") -> None:
    if len(signal) == 0:
        raise ValidationError(f"{name} is empty")


def read_wav(path) -> AudioSignal:
    """Read a PCM 16/24/32-bit integer or 32-bit float WAV file as mono.

    Integer samples are divided by the full-scale value of their type and
    multichannel frames are averaged.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported" in msg or "not supported" in msg:
            raise UnsupportedWavError(f"{path}: {msg}") from exc
        raise MalformedWavError(f"{path}: {msg}") from exc
    except (EOFError, IndexError, struct.error) as exc:
        raise MalformedWavError(f"{path}: truncated or malformed ({exc})") from exc

    if data.dtype == np.int16:
        x = data.astype(np.float64) / 2**15
    elif data.dtype == np.int32:
        # scipy left-justifies 24-bit data in int32, so one scale covers both
        x = data.astype(np.float64) / 2**31
    elif data.dtype == np.float32:
        x = data.astype(np.float64)
    else:
        raise UnsupportedWavError(f"{path}: unsupported sample type {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    if not np.all(np.isfinite(x)):
        raise MalformedWavError(f"{path}: non-finite samples")
    return AudioSignal(x, int(rate))


def _quantize(x: np.ndarray, bits: int) -> np.ndarray:
    full = 2 ** (bits - 1)
    return np.clip(np.round(x * full), -full, full - 1).astype(np.int32)


def write_wav(path, signal: AudioSignal, bit_depth: str = "16") -> int:
    """Write ``signal`` as a mono WAV file and return the number of clipped samples.

    Samples outside [-1, 1] are hard-clipped. The file is written to a
    temporary sibling and renamed into place so failures leave no partial file.
    """
    bit_depth = str(bit_depth)
    if bit_depth not in BIT_DEPTHS:
        raise ValidationError(f"bit_depth must be one of {BIT_DEPTHS}, got {bit_depth!r}")
    require_nonempty(signal)
    x = signal.samples
    n_clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    if n_clipped:
        log.warning("clipped %d samples writing %s", n_clipped, path)
    x = np.clip(x, -1.0, 1.0)

    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        if bit_depth == "16":
            wavfile.write(tmp, signal.sample_rate, _quantize(x, 16).astype(np.int16))
        elif bit_depth == "32f":
            wavfile.write(tmp, signal.sample_rate, x.astype(np.float32))
        else:
            q = _quantize(x, 24).astype("<i4")
            raw = q.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
            with wave.open(tmp, "wb") as w:
                w.setnchannels(1)
                w.setsampwidth(3)
                w.setframerate(signal.sample_rate)
                w.writeframes(raw)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise WavError(f"cannot write {path}: {exc}") from exc
    return n_clipped


def mix(a: AudioSignal, b: AudioSignal, gain_a: float = 1.0, gain_b: float = 1.0) -> AudioSignal:
    """Return ``gain_a * a + gain_b * b`` sample by sample, without normalization."""
    if a.sample_rate != b.sample_rate:
        raise ValidationError(f"sample rate mismatch: {a.sample_rate} vs {b.sample_rate}")
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}; use segment() to align")
    return AudioSignal(gain_a * a.samples + gain_b * b.samples, a.sample_rate)


def segment(signal: AudioSignal, start_seconds: float, duration_seconds: float) -> AudioSignal:
    start = int(round(start_seconds * signal.sample_rate))
    length = int(round(duration_seconds * signal.sample_rate))
    if start < 0 or length < 0 or start + length > len(signal):
        raise ValidationError(
            f"segment [{start}, {start + length}) outside signal of length {len(signal)}"
        )
    return AudioSignal(signal.samples[start:start + length], signal.sample_rate)
