"""Ideal binary masks and oracle two-source separation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .signal_io import AudioSignal, mix, require_nonempty
from .stft import OverlapAdd, Spectrogram, StftParams, analyze, frame_blocks, synthesize


@dataclass(frozen=True, eq=False)
class BinaryMask:
    cells: np.ndarray
    params: StftParams

    def __post_init__(self):
        if self.cells.dtype != np.bool_ or self.cells.ndim != 2:
            raise ValidationError("mask cells must be a 2-D boolean array")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @property
    def density(self) -> float:
        return float(np.count_nonzero(self.cells)) / self.cells.size if self.cells.size else 0.0

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.cells, other.cells)


@dataclass(frozen=True)
class SeparationResult:
    estimate_a: AudioSignal
    estimate_b: AudioSignal
    mask_density: float
    params: StftParams


def _power(x):
    return x.real * x.real + x.imag * x.imag


def dominance(target: np.ndarray, other: np.ndarray, compare: str = "magnitude") -> np.ndarray:
    """True where ``target`` is strictly louder than ``other``; ties are False."""
    if compare == "magnitude":
        return np.abs(target) > np.abs(other)
    if compare == "power":
        return _power(target) > _power(other)
    raise ValidationError(f"compare must be 'magnitude' or 'power', got {compare!r}")


def ideal_binary_mask(spec_target: Spectrogram, spec_other: Spectrogram,
                      compare: str = "magnitude") -> BinaryMask:
    if not spec_target.same_grid(spec_other):
        raise ValidationError("spectrograms differ in params or dimensions")
    return BinaryMask(dominance(spec_target.data, spec_other.data, compare), spec_target.params)


def complement(mask: BinaryMask) -> BinaryMask:
    return BinaryMask(~mask.cells, mask.params)


def apply(mask: BinaryMask, spec: Spectrogram) -> Spectrogram:
    """Keep the cells where ``mask`` is set; the rest become exact complex zeros."""
    if mask.params != spec.params or mask.shape != spec.data.shape:
        raise ValidationError(f"mask {mask.shape} does not match spectrogram {spec.data.shape}")
    data = np.where(mask.cells, spec.data, 0j)
    return Spectrogram(data, spec.params, spec.original_length, spec.sample_rate)


def _check_pair(a: AudioSignal, b: AudioSignal):
    require_nonempty(a, "source_a")
    require_nonempty(b, "source_b")
    if a.sample_rate != b.sample_rate or len(a) != len(b):
        raise ValidationError(
            f"sources must share rate and length: ({a.sample_rate} Hz, {len(a)}) vs "
            f"({b.sample_rate} Hz, {len(b)})")


def separate_pair(source_a: AudioSignal, source_b: AudioSignal, params: StftParams,
                  gains: tuple[float, float] = (1.0, 1.0),
                  materialize: bool = False) -> SeparationResult:
    """Split ``gains[0]*a + gains[1]*b`` with the oracle mask of ``a`` over ``b``.

    The mask compares the sources as they appear in the mixture, i.e. after
    gain. By default frames are analyzed, masked and overlap-added one block at
    a time, so memory stays proportional to the signal length. ``materialize``
    builds full spectrograms instead and exists for equivalence testing.
    """
    _check_pair(source_a, source_b)
    gain_a, gain_b = gains
    mixture = mix(source_a, source_b, gain_a, gain_b)
    if materialize:
        return _separate_materialized(source_a, source_b, mixture, params, gains)

    length = len(mixture)
    ola_a = OverlapAdd(params, length)
    ola_b = OverlapAdd(params, length)
    n_true = 0
    blocks = zip(frame_blocks(source_a.samples, params),
                 frame_blocks(source_b.samples, params),
                 frame_blocks(mixture.samples, params))
    for (t0, spec_a), (_, spec_b), (_, spec_mix) in blocks:
        if gain_a != 1.0:
            spec_a *= gain_a
        if gain_b != 1.0:
            spec_b *= gain_b
        keep = dominance(spec_a, spec_b)
        n_true += int(np.count_nonzero(keep))
        ola_a.add_spectra(t0, np.where(keep, spec_mix, 0j))
        ola_b.add_spectra(t0, np.where(keep, 0j, spec_mix))
    n_cells = params.n_frames(length) * params.n_bins
    return SeparationResult(
        AudioSignal(ola_a.finish(), mixture.sample_rate),
        AudioSignal(ola_b.finish(), mixture.sample_rate),
        n_true / n_cells,
        params,
    )


def _separate_materialized(a, b, mixture, params, gains):
    spec_a = analyze(a, params)
    spec_b = analyze(b, params)
    spec_mix = analyze(mixture, params)
    scaled_a = Spectrogram(spec_a.data * gains[0] if gains[0] != 1.0 else spec_a.data,
                           params, len(a), a.sample_rate)
    scaled_b = Spectrogram(spec_b.data * gains[1] if gains[1] != 1.0 else spec_b.data,
                           params, len(b), b.sample_rate)
    mask = ideal_binary_mask(scaled_a, scaled_b)
    return SeparationResult(
        synthesize(apply(mask, spec_mix)),
        synthesize(apply(complement(mask), spec_mix)),
        mask.density,
        params,
    )
