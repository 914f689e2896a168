"""Short-time Fourier analysis and weighted overlap-add synthesis.

Framing: the signal is zero-padded with ``N - 1`` samples on the left and
frame ``t`` covers padded samples ``[t*H, t*H + N)``. There are
``ceil((length + N - 1) / H)`` frames, enough that every original sample is
seen by every window position that can overlap it; the right side is padded
with however many zeros the last frame needs (``N - 1`` when ``H == 1``).

Frames are produced in fixed-size blocks so the materialized and the
streaming paths run the exact same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import MemoryBudgetError, ValidationError
from .signal_io import AudioSignal, require_nonempty

DEFAULT_MEMORY_BUDGET = 2 * 1024**3
BLOCK_SAMPLES = 2**18
NORM_FLOOR = 1e-12
DB_FLOOR = 1e-12


@dataclass(frozen=True)
class StftParams:
    window_size: int
    hop: int
    window_kind: str = "hann_periodic"

    def __post_init__(self):
        n, h = self.window_size, self.hop
        if int(n) != n or n < 2:
            raise ValidationError(f"window size must be an integer >= 2, got {n}")
        if int(h) != h or not 1 <= h <= n:
            raise ValidationError(f"hop must be an integer in [1, {n}], got {h}")
        if self.window_kind != "hann_periodic":
            raise ValidationError(f"unsupported window {self.window_kind!r}")
        object.__setattr__(self, "window_size", int(n))
        object.__setattr__(self, "hop", int(h))

    @property
    def fft_size(self) -> int:
        return self.window_size

    @property
    def n_bins(self) -> int:
        return self.window_size // 2 + 1

    def window(self) -> np.ndarray:
        n = np.arange(self.window_size)
        return 0.5 * (1.0 - np.cos(2.0 * np.pi * n / self.window_size))

    def n_frames(self, length: int) -> int:
        if length <= 0:
            return 0
        return -(-(length + self.window_size - 1) // self.hop)

    def padded_length(self, length: int) -> int:
        frames = self.n_frames(length)
        return (frames - 1) * self.hop + self.window_size if frames else 0

    def block_frames(self) -> int:
        return max(1, BLOCK_SAMPLES // self.window_size)

    def to_dict(self) -> dict:
        return {"window_size": self.window_size, "hop": self.hop,
                "window_kind": self.window_kind, "fft_size": self.fft_size}


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Complex ``frames x bins`` matrix plus what is needed to invert it."""

    data: np.ndarray
    params: StftParams
    original_length: int
    sample_rate: int

    def __post_init__(self):
        expected = (self.params.n_frames(self.original_length), self.params.n_bins)
        if self.data.shape != expected:
            raise ValidationError(
                f"spectrogram shape {self.data.shape} inconsistent with params "
                f"(expected {expected})")

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    def same_grid(self, other: "Spectrogram") -> bool:
        return (self.params == other.params and self.data.shape == other.data.shape
                and self.original_length == other.original_length)


def _padded(x: np.ndarray, params: StftParams) -> np.ndarray:
    out = np.zeros(params.padded_length(x.size))
    out[params.window_size - 1:params.window_size - 1 + x.size] = x
    return out


def frame_blocks(x: np.ndarray, params: StftParams) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(first_frame_index, spectra)`` for consecutive blocks of frames."""
    if x.size == 0:
        return
    window = params.window()
    frames = sliding_window_view(_padded(x, params), params.window_size)[::params.hop]
    step = params.block_frames()
    for t0 in range(0, frames.shape[0], step):
        yield t0, np.fft.rfft(frames[t0:t0 + step] * window, axis=-1)


def frame_stream(signal: AudioSignal, params: StftParams) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(frame_index, bins)`` pairs equal to the rows of :func:`analyze`.

    Memory use is bounded by one block of frames, independent of signal length.
    """
    for t0, block in frame_blocks(signal.samples, params):
        for i, row in enumerate(block):
            yield t0 + i, row


def analyze(signal: AudioSignal, params: StftParams,
            memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Spectrogram:
    require_nonempty(signal)
    shape = (params.n_frames(len(signal)), params.n_bins)
    nbytes = memory_estimate(len(signal), params)
    if nbytes > memory_budget:
        raise MemoryBudgetError(
            f"spectrogram {shape[0]}x{shape[1]} needs {nbytes / 2**30:.2f} GiB, "
            f"over the {memory_budget / 2**30:.2f} GiB budget; use the streaming path")
    data = np.empty(shape, dtype=np.complex128)
    for t0, block in frame_blocks(signal.samples, params):
        data[t0:t0 + block.shape[0]] = block
    return Spectrogram(data, params, len(signal), signal.sample_rate)


def window_sumsquare(params: StftParams, n_frames: int) -> np.ndarray:
    """Sum of squared windows at every padded sample position.

    Evaluated per hop residue class with cumulative sums, so the cost is
    linear in the padded length even for hop 1.
    """
    n, hop = params.window_size, params.hop
    w2 = params.window() ** 2
    total = (n_frames - 1) * hop + n if n_frames else 0
    out = np.zeros(total)
    for r in range(min(hop, n)):
        taps = w2[r::hop]
        csum = np.concatenate(([0.0], np.cumsum(taps)))
        pos = out[r::hop]
        m = np.arange(pos.size)
        hi = np.minimum(taps.size - 1, m)
        lo = np.maximum(0, m - n_frames + 1)
        ok = hi >= lo
        pos[ok] = csum[hi[ok] + 1] - csum[lo[ok]]
    return out


class OverlapAdd:
    """Accumulates inverse-transformed frames and finalizes the signal."""

    def __init__(self, params: StftParams, original_length: int):
        self.params = params
        self.original_length = original_length
        self.n_frames = params.n_frames(original_length)
        self.window = params.window()
        self.buffer = np.zeros(params.padded_length(original_length))

    def add_spectra(self, t0: int, spectra: np.ndarray) -> None:
        n, hop = self.params.window_size, self.params.hop
        frames = np.fft.irfft(spectra, n=n, axis=-1)
        frames *= self.window
        buf = self.buffer
        start = t0 * hop
        for frame in frames:
            buf[start:start + n] += frame
            start += hop

    def finish(self) -> np.ndarray:
        norm = window_sumsquare(self.params, self.n_frames)
        norm[norm < NORM_FLOOR] = 1.0
        y = self.buffer / norm
        lead = self.params.window_size - 1
        return y[lead:lead + self.original_length]


def synthesize(spec: Spectrogram) -> AudioSignal:
    ola = OverlapAdd(spec.params, spec.original_length)
    step = spec.params.block_frames()
    for t0 in range(0, spec.frames, step):
        ola.add_spectra(t0, spec.data[t0:t0 + step])
    return AudioSignal(ola.finish(), spec.sample_rate)


def magnitude_db(spec: Spectrogram | np.ndarray, time_decimation: int = 1) -> np.ndarray:
    """``20*log10(|X| + 1e-12)``, keeping every ``time_decimation``-th frame."""
    if int(time_decimation) != time_decimation or time_decimation < 1:
        raise ValidationError(f"time_decimation must be a positive integer, got {time_decimation}")
    data = spec.data if isinstance(spec, Spectrogram) else np.asarray(spec)
    return 20.0 * np.log10(np.abs(data[::int(time_decimation)]) + DB_FLOOR)


def bin_frequencies(params: StftParams, sample_rate: int) -> np.ndarray:
    return np.arange(params.n_bins) * sample_rate / params.window_size


def hop_for_policy(window_size: int, policy: str) -> int:
    if policy == "one":
        return 1
    if policy == "quarter":
        return max(1, window_size // 4)
    raise ValidationError(f"hop policy must be 'one' or 'quarter', got {policy!r}")


def memory_estimate(length: int, params: StftParams) -> int:
    """Bytes needed to hold the complex spectrogram of a ``length``-sample signal."""
    return params.n_frames(length) * params.n_bins * 16

