"""Deterministic synthetic sources: sines, decaying harmonic tones, noise.

Stochastic signals draw from numpy's Philox4x32-10 counter-based bit
generator keyed by the 64-bit seed, via ``Generator.uniform``. The same seed
gives the same samples on every platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .signal_io import AudioSignal

EDGE_SECONDS = 0.005

KINDS = ("sine", "harmonic_tone", "white_noise", "noise_bursts")


def _n_samples(duration, rate):
    if duration < 0:
        raise ValidationError(f"duration must be non-negative, got {duration}")
    if rate <= 0:
        raise ValidationError(f"sample rate must be positive, got {rate}")
    return int(round(duration * rate))


def _check_amplitude(amplitude):
    if not 0 < amplitude <= 1:
        raise ValidationError(f"amplitude must lie in (0, 1], got {amplitude}")


def _check_alias(freq, rate):
    if freq < 0 or freq >= rate / 2:
        raise ValidationError(f"frequency {freq} Hz aliases at sample rate {rate} Hz")


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def sine(freq: float, duration: float, rate: int, amplitude: float = 1.0,
         phase: float = 0.0) -> AudioSignal:
    _check_alias(freq, rate)
    _check_amplitude(amplitude)
    n = np.arange(_n_samples(duration, rate))
    return AudioSignal(amplitude * np.sin(2 * np.pi * freq * n / rate + phase), rate)


def harmonic_tone(f0: float, n_harmonics: int, decay_rate: float, duration: float,
                  rate: int, amplitude: float = 1.0,
                  note_period: float | None = None) -> AudioSignal:
    """Sum of harmonics ``k * f0`` weighted ``1/k`` under an exponential decay.

    With ``note_period`` set, the note restarts (phase and envelope) every
    ``note_period`` seconds, like repeated single piano notes. The result is
    peak-normalized to ``amplitude``.
    """
    if n_harmonics < 1:
        raise ValidationError("n_harmonics must be >= 1")
    if decay_rate < 0:
        raise ValidationError("decay_rate must be non-negative")
    _check_alias(f0 * n_harmonics, rate)
    _check_amplitude(amplitude)
    t = np.arange(_n_samples(duration, rate)) / rate
    if note_period is not None:
        if note_period <= 0:
            raise ValidationError("note_period must be positive")
        period_samples = int(round(note_period * rate))
        t = (np.arange(t.size) % period_samples) / rate
    x = np.zeros_like(t)
    for k in range(1, n_harmonics + 1):
        x += np.sin(2 * np.pi * k * f0 * t) / k
    x *= np.exp(-decay_rate * t)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak > 0:
        x *= amplitude / peak
    return AudioSignal(x, rate)


def white_noise(duration: float, rate: int, amplitude: float = 1.0, seed: int = 0) -> AudioSignal:
    _check_amplitude(amplitude)
    n = _n_samples(duration, rate)
    return AudioSignal(rng(seed).uniform(-amplitude, amplitude, n), rate)


def burst_envelope(burst_len: float, period: float, n: int, rate: int) -> np.ndarray:
    """Rectangular gate of ``burst_len`` every ``period`` with raised-cosine edges."""
    if not 0 < burst_len <= period:
        raise ValidationError(f"need 0 < burst_len <= period, got {burst_len}, {period}")
    period_samples = int(round(period * rate))
    burst_samples = int(round(burst_len * rate))
    if burst_samples >= period_samples:
        return np.ones(n)
    ramp = min(int(round(EDGE_SECONDS * rate)), burst_samples // 2)
    gate = np.zeros(period_samples)
    gate[:burst_samples] = 1.0
    if ramp > 0:
        rise = 0.5 * (1 - np.cos(np.pi * np.arange(1, ramp + 1) / (ramp + 1)))
        gate[:ramp] = rise
        gate[burst_samples - ramp:burst_samples] = rise[::-1]
    return np.resize(gate, n)


def noise_bursts(burst_len: float, period: float, duration: float, rate: int,
                 amplitude: float = 1.0, seed: int = 0) -> AudioSignal:
    """White noise gated on for ``burst_len`` at the start of every ``period``."""
    noise = white_noise(duration, rate, amplitude, seed).samples
    env = burst_envelope(burst_len, period, noise.size, rate)
    return AudioSignal(noise * env, rate)


@dataclass(frozen=True)
class SynthSpec:
    """A complete, reproducible description of one synthetic signal."""

    kind: str
    duration_seconds: float
    sample_rate: int = 44100
    amplitude: float = 1.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    def render(self) -> AudioSignal:
        p = dict(self.params)
        d, r, a = self.duration_seconds, self.sample_rate, self.amplitude
        if self.kind == "sine":
            return sine(p.get("freq", 440.0), d, r, a, p.get("phase", 0.0))
        if self.kind == "harmonic_tone":
            return harmonic_tone(p.get("f0", 220.0), p.get("n_harmonics", 10),
                                 p.get("decay_rate", 0.0), d, r, a, p.get("note_period"))
        if self.kind == "white_noise":
            return white_noise(d, r, a, self.seed)
        if self.kind == "noise_bursts":
            return noise_bursts(p.get("burst_len", 0.1), p.get("period", 0.5), d, r, a, self.seed)
        raise ValidationError(f"unknown synth kind {self.kind!r}; expected one of {KINDS}")


# Stand-ins for the piano/drum pair: repeated decaying notes vs snare-like bursts.
TONAL_DEFAULTS = dict(f0=220.0, n_harmonics=10, decay_rate=3.0, note_period=1.0)
BURST_DEFAULTS = dict(burst_len=0.1, period=0.5)


def tonal_noise_pair(duration: float = 4.0, rate: int = 44100, amplitude: float = 0.5,
                     seed: int = 0) -> tuple[AudioSignal, AudioSignal]:
    tone = SynthSpec("harmonic_tone", duration, rate, amplitude, params=TONAL_DEFAULTS).render()
    drum = SynthSpec("noise_bursts", duration, rate, amplitude, seed, BURST_DEFAULTS).render()
    return tone, drum
