"""SDR / SIR / SAR by projection onto delayed copies of the true sources.

An estimate ``e`` is split into ``s_target`` (its projection onto the span of
the target source delayed by ``0..L-1`` samples), ``e_interf`` (what the
projection onto all sources' delays adds on top of that) and ``e_artif``
(the residual). Delayed sources are truncated to the signal length, so every
component has the same length as the estimate.

The normal equations are assembled from cross-correlations computed by FFT.
Truncation makes each Gram block Toeplitz minus a correction that
accumulates along the diagonals from the signal tails, which is applied
exactly.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.fft
import scipy.linalg
from scipy.signal import fftconvolve

from .errors import SingularGramError, ValidationError
from .signal_io import AudioSignal


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation settings.

    ``regularization`` is added to the Gram diagonal, relative to the mean
    diagonal entry of each source's block. That loading biases a projection
    by up to ``regularization / 4`` of the projected energy, so energies at or
    below ``zero_tol`` times the estimate's energy count as exactly zero and
    produce the capped +/-``infinity_cap_db``.
    ``check_invariants`` asserts the decomposition identities on every call.
    """

    filter_length: int = 512
    regularization: float = 1e-12
    infinity_cap_db: float = 300.0
    zero_tol: float = 1e-12
    check_invariants: bool = False

    def __post_init__(self):
        if int(self.filter_length) != self.filter_length or self.filter_length < 1:
            raise ValidationError(f"filter length must be >= 1, got {self.filter_length}")
        if self.regularization < 0:
            raise ValidationError("regularization must be non-negative")
        if self.infinity_cap_db <= 0:
            raise ValidationError("infinity_cap_db must be positive")


@dataclass(frozen=True)
class Metrics:
    sdr_db: float
    sir_db: float
    sar_db: float
    sdr_capped: bool = False
    sir_capped: bool = False
    sar_capped: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Metrics":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


@dataclass(frozen=True, eq=False)
class Decomposition:
    s_target: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray


def _as_array(x) -> np.ndarray:
    return x.samples if isinstance(x, AudioSignal) else np.asarray(x, dtype=np.float64)


def _xcorr(fx: np.ndarray, fy: np.ndarray, n_fft: int, lags: int) -> np.ndarray:
    """``r[k] = sum_n x[n] y[n - k]`` for ``k = 0..lags-1`` from rFFTs of x and y."""
    return scipy.fft.irfft(fx * np.conj(fy), n_fft)[:lags]


def _diagonal_cumsum(e: np.ndarray) -> np.ndarray:
    """``c[i, j] = c[i-1, j-1] + e[i, j]`` with zero first row and column."""
    c = np.zeros_like(e)
    for k in range(1, e.shape[0]):
        c[k, k:] = c[k - 1, k - 1:-1] + e[k, k:]
        c[k + 1:, k] = c[k:-1, k - 1] + e[k + 1:, k]
    return c


class SourceBasis:
    """Gram system of a set of sources, each delayed by ``0..L-1`` samples.

    Built once and reused for every estimate evaluated against those sources.
    """

    def __init__(self, sources, cfg: EvalConfig):
        self.sources = np.array([_as_array(s) for s in sources], dtype=np.float64)
        if self.sources.ndim != 2:
            raise ValidationError("sources must all have the same length")
        self.cfg = cfg
        self.n_sources, self.length = self.sources.shape
        L = cfg.filter_length
        if self.length <= L:
            raise ValidationError(
                f"signals must be longer than the filter length ({self.length} <= {L})")
        self.n_fft = scipy.fft.next_fast_len(self.length + L, real=True)
        self._spectra = scipy.fft.rfft(self.sources, self.n_fft, axis=-1)
        self.gram = self._build_gram()
        self._factors = {}

    def _build_gram(self) -> np.ndarray:
        L = self.cfg.filter_length
        s, f = self.sources, self._spectra
        gram = np.empty((self.n_sources * L, self.n_sources * L))
        tails = s[:, ::-1][:, :L]  # tails[i, a - 1] == s_i[n - a]
        for i in range(self.n_sources):
            for j in range(i, self.n_sources):
                r_ij = _xcorr(f[i], f[j], self.n_fft, L)
                r_ji = _xcorr(f[j], f[i], self.n_fft, L)
                # full[d1, d2] = r_ij[d2 - d1] above the diagonal, r_ji[d1 - d2] below
                full = scipy.linalg.toeplitz(r_ji, r_ij)
                e = np.zeros((L, L))
                e[1:, 1:] = np.outer(tails[i, :L - 1], tails[j, :L - 1])
                block = full - _diagonal_cumsum(e)
                gram[i * L:(i + 1) * L, j * L:(j + 1) * L] = block
                gram[j * L:(j + 1) * L, i * L:(i + 1) * L] = block.T
        return gram

    def _indices(self, which: tuple[int, ...]) -> np.ndarray:
        L = self.cfg.filter_length
        return np.concatenate([np.arange(i * L, (i + 1) * L) for i in which])

    def _factor(self, which: tuple[int, ...]):
        """Cholesky factor for the sources in ``which``, skipping silent ones.

        Each source's block gets its own relative diagonal loading, so the
        result is unchanged when any single source is rescaled.
        """
        if which not in self._factors:
            L = self.cfg.filter_length
            diag = np.diag(self.gram)
            live = tuple(i for i in which if diag[i * L:(i + 1) * L].sum() > 0)
            if not live:
                self._factors[which] = (live, None)
                return self._factors[which]
            idx = self._indices(live)
            g = self.gram[np.ix_(idx, idx)].copy()
            loading = np.repeat([diag[i * L:(i + 1) * L].mean() for i in live], L)
            g[np.diag_indices_from(g)] += self.cfg.regularization * loading
            try:
                factor = scipy.linalg.cho_factor(g, lower=True, check_finite=False)
            except np.linalg.LinAlgError as exc:
                raise SingularGramError(
                    "Gram matrix of delayed sources is singular even after "
                    "regularization") from exc
            self._factors[which] = (live, factor)
        return self._factors[which]

    def correlations(self, estimate: np.ndarray) -> np.ndarray:
        """Inner products of ``estimate`` with every delayed source, source-major."""
        fe = scipy.fft.rfft(estimate, self.n_fft)
        L = self.cfg.filter_length
        return np.concatenate([_xcorr(fe, fs, self.n_fft, L) for fs in self._spectra])

    def project(self, estimate: np.ndarray, which: tuple[int, ...],
                corr: np.ndarray | None = None) -> np.ndarray:
        """Orthogonal projection of ``estimate`` onto the delays of ``which`` sources."""
        if corr is None:
            corr = self.correlations(estimate)
        live, factor = self._factor(which)
        out = np.zeros(self.length)
        if factor is None:
            return out
        coef = scipy.linalg.cho_solve(factor, corr[self._indices(live)], check_finite=False)
        L = self.cfg.filter_length
        for k, i in enumerate(live):
            out += fftconvolve(self.sources[i], coef[k * L:(k + 1) * L])[:self.length]
        return out

    def decompose(self, estimate, target_index: int) -> Decomposition:
        est = _as_array(estimate)
        if est.shape != (self.length,):
            raise ValidationError(
                f"estimate length {est.size} differs from source length {self.length}")
        if not 0 <= target_index < self.n_sources:
            raise ValidationError(f"target_index {target_index} out of range")
        corr = self.correlations(est)
        s_target = self.project(est, (target_index,), corr)
        p_all = self.project(est, tuple(range(self.n_sources)), corr)
        dec = Decomposition(s_target, p_all - s_target, est - p_all)
        if self.cfg.check_invariants:
            self._check(est, dec)
        return dec

    def _check(self, est: np.ndarray, dec: Decomposition) -> None:
        est_norm = np.linalg.norm(est)
        if est_norm == 0:
            return
        recon = dec.s_target + dec.e_interf + dec.e_artif
        assert np.linalg.norm(recon - est) <= 1e-10 * est_norm, "decomposition not additive"
        # diagonal of the Gram holds the squared norms of the delayed sources
        norms = np.sqrt(np.maximum(np.diag(self.gram), 0.0))
        inner = np.abs(self.correlations(dec.e_artif))
        ok = norms > 0
        worst = np.max(inner[ok] / (norms[ok] * est_norm), initial=0.0)
        assert worst <= 1e-8, f"artifact not orthogonal to sources ({worst:.3g})"


def _ratio_db(num: float, den: float, floor: float, cap: float) -> tuple[float, bool]:
    if num <= floor:
        return -cap, True
    if den <= floor:
        return cap, True
    db = 10.0 * np.log10(num / den)
    if db >= cap:
        return cap, True
    if db <= -cap:
        return -cap, True
    return float(db), False


def metrics_from(dec: Decomposition, estimate: np.ndarray, cfg: EvalConfig) -> Metrics:
    floor = cfg.zero_tol * float(np.dot(estimate, estimate))
    cap = cfg.infinity_cap_db
    target = float(np.dot(dec.s_target, dec.s_target))
    interf = float(np.dot(dec.e_interf, dec.e_interf))
    artif = float(np.dot(dec.e_artif, dec.e_artif))
    distortion = dec.e_interf + dec.e_artif
    in_span = dec.s_target + dec.e_interf
    sdr, sdr_c = _ratio_db(target, float(np.dot(distortion, distortion)), floor, cap)
    sir, sir_c = _ratio_db(target, interf, floor, cap)
    sar, sar_c = _ratio_db(float(np.dot(in_span, in_span)), artif, floor, cap)
    if cfg.check_invariants:
        assert sdr <= min(sir, sar) + 1e-6, (sdr, sir, sar)
    return Metrics(sdr, sir, sar, sdr_c, sir_c, sar_c)


def decompose(estimate, sources, target_index: int,
              cfg: EvalConfig = EvalConfig()) -> Decomposition:
    return SourceBasis(sources, cfg).decompose(estimate, target_index)


def evaluate(estimate, sources, target_index: int, cfg: EvalConfig = EvalConfig()) -> Metrics:
    basis = SourceBasis(sources, cfg)
    return metrics_from(basis.decompose(estimate, target_index), _as_array(estimate), cfg)


def evaluate_pair(est_a, est_b, src_a, src_b,
                  cfg: EvalConfig = EvalConfig()) -> tuple[Metrics, Metrics]:
    basis = SourceBasis([src_a, src_b], cfg)
    out = []
    for k, est in enumerate((est_a, est_b)):
        est = _as_array(est)
        out.append(metrics_from(basis.decompose(est, k), est, cfg))
    return out[0], out[1]
