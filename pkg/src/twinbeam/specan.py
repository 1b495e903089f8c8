"""Virtual spectrum analyzer.

Welch averaged periodograms in shot-noise units: with a window ``w`` the bin
power is ``|rfft(x w)|^2 / sum(w^2)``, so a white sequence of unit variance
reads 1 at every bin.  That is the same convention ``synth`` uses for the
shot-noise level.  The DC bin is dropped; the grid runs from one bin
spacing up to Nyquist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .errors import ConfigurationError, InsufficientDataError, ParameterError, TwinBeamError

Window = Literal["hann", "rectangular"]

_SQRT_HALF = math.sqrt(0.5)


class IncompleteTraceSetError(TwinBeamError):
    pass


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    freqs: np.ndarray
    psd: np.ndarray
    n_segments: int
    segment_len: int
    window: str = "hann"
    overlap: float = 0.5
    dt: float = 0.0

    @property
    def relative_error(self) -> float:
        """Nominal per-bin relative standard error, 1/sqrt(n_segments)."""
        return 1.0 / math.sqrt(self.n_segments)

    def same_grid(self, other: "PsdEstimate") -> bool:
        return (self.segment_len == other.segment_len
                and self.freqs.shape == other.freqs.shape
                and np.array_equal(self.freqs, other.freqs))

    def band(self, f_lo: float, f_hi: float) -> np.ndarray:
        """Boolean mask of bins with f_lo <= f <= f_hi."""
        return (self.freqs >= f_lo) & (self.freqs <= f_hi)

    def with_psd(self, psd) -> "PsdEstimate":
        return PsdEstimate(self.freqs, np.asarray(psd, dtype=float), self.n_segments,
                           self.segment_len, self.window, self.overlap, self.dt)


def _check_segment_len(segment_len: int):
    if segment_len < 1024 or segment_len & (segment_len - 1):
        raise ParameterError(f"segment_len must be a power of two >= 1024, got {segment_len}")


def _window(name: str, n: int) -> np.ndarray:
    if name == "hann":
        return get_window("hann", n, fftbins=True)
    if name == "rectangular":
        return np.ones(n)
    raise ParameterError(f"unknown window {name!r}")


class WelchAccumulator:
    """Streaming Welch estimator: feed arbitrary chunks, read ``estimate()``.

    Segments are reduced in arrival order, so the result is independent of
    how the input is chunked.
    """

    def __init__(self, dt: float, segment_len: int = 4096, overlap: float = 0.5,
                 window: Window = "hann", max_segments: int | None = None,
                 batch: int = 256):
        _check_segment_len(segment_len)
        if not 0.0 <= overlap < 1.0:
            raise ParameterError("overlap must lie in [0, 1)")
        if not dt > 0:
            raise ParameterError("dt must be > 0")
        self.dt = dt
        self.segment_len = segment_len
        self.overlap = overlap
        self.window_name = window
        self.hop = segment_len - int(round(overlap * segment_len))
        self.max_segments = max_segments
        self._win = _window(window, segment_len)
        self._scale = 1.0 / np.sum(self._win ** 2)
        self._batch = batch
        self._buf = np.empty(0)
        self._acc = np.zeros(segment_len // 2 + 1)
        self.n_segments = 0

    @property
    def full(self) -> bool:
        return self.max_segments is not None and self.n_segments >= self.max_segments

    def update(self, x: np.ndarray) -> None:
        if self.full:
            return
        buf = np.concatenate([self._buf, np.asarray(x, dtype=float)])
        L, hop = self.segment_len, self.hop
        if buf.size < L:
            self._buf = buf
            return
        n_avail = (buf.size - L) // hop + 1
        if self.max_segments is not None:
            n_avail = min(n_avail, self.max_segments - self.n_segments)
        segs = sliding_window_view(buf, L)[::hop][:n_avail]
        for k in range(0, n_avail, self._batch):
            X = np.fft.rfft(segs[k:k + self._batch] * self._win, axis=1)
            self._acc += np.sum(X.real ** 2 + X.imag ** 2, axis=0)
        self.n_segments += n_avail
        self._buf = buf[n_avail * hop:].copy()

    def estimate(self) -> PsdEstimate:
        if self.n_segments == 0:
            raise InsufficientDataError("no complete segment accumulated")
        L = self.segment_len
        freqs = np.arange(1, L // 2 + 1) / (L * self.dt)
        psd = self._acc[1:] * self._scale / self.n_segments
        return PsdEstimate(freqs, psd, self.n_segments, L, self.window_name,
                           self.overlap, self.dt)


def welch_psd(series, dt: float, segment_len: int = 4096, overlap: float = 0.5,
              window: Window = "hann", max_segments: int | None = None) -> PsdEstimate:
    """One-sided averaged-periodogram PSD normalized to the shot-noise level."""
    series = np.asarray(series, dtype=float)
    _check_segment_len(segment_len)
    if series.size < 2 * segment_len:
        raise InsufficientDataError(
            f"need at least {2 * segment_len} samples, got {series.size}")
    acc = WelchAccumulator(dt, segment_len, overlap, window, max_segments)
    acc.update(series)
    return acc.estimate()


def welch_csd(x, y, dt: float, segment_len: int = 4096, overlap: float = 0.5,
              window: Window = "hann") -> tuple[np.ndarray, np.ndarray, int]:
    """Cross spectral density of ``x`` and ``y`` (same normalization).

    Returns (freqs, complex csd, n_segments).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ConfigurationError("csd inputs must have equal length")
    _check_segment_len(segment_len)
    if x.size < 2 * segment_len:
        raise InsufficientDataError("series too short for the requested segment length")
    w = _window(window, segment_len)
    hop = segment_len - int(round(overlap * segment_len))
    sx = sliding_window_view(x, segment_len)[::hop]
    sy = sliding_window_view(y, segment_len)[::hop]
    X = np.fft.rfft(sx * w, axis=1)
    Y = np.fft.rfft(sy * w, axis=1)
    csd = np.mean(np.conj(X) * Y, axis=0)[1:] / np.sum(w ** 2)
    freqs = np.arange(1, segment_len // 2 + 1) / (segment_len * dt)
    return freqs, csd, sx.shape[0]


def integrated_variance(est: PsdEstimate) -> float:
    """Variance implied by the estimate (Parseval), DC bin taken as its neighbour."""
    L = est.segment_len
    psd = est.psd
    # bins 1 .. L/2-1 appear twice in the two-sided sum, Nyquist once, DC once
    return (2.0 * psd[:-1].sum() + psd[-1] + psd[0]) / L


def normalize_to_snl(signal: PsdEstimate, reference: PsdEstimate,
                     fit_constant: bool = False) -> PsdEstimate:
    """Pointwise ratio to the shot-noise reference.

    ``fit_constant`` replaces the reference by its mean level, which is
    legitimate because the reference is white by construction and removes
    its estimator noise from the ratio.
    """
    if not signal.same_grid(reference):
        raise ConfigurationError("signal and reference are on different frequency grids")
    ref = reference.psd
    if fit_constant:
        level = float(np.mean(ref))
        if not level > 0:
            raise ParameterError("degenerate shot-noise reference")
        ref = np.full_like(ref, level)
    elif np.any(ref <= 0):
        raise ParameterError("shot-noise reference has empty bins")
    return signal.with_psd(signal.psd / ref)


def readout(est: PsdEstimate, f0: float, n_bins: int = 3) -> float:
    """Mean of the ``n_bins`` bins closest to ``f0``."""
    idx = np.argsort(np.abs(est.freqs - f0), kind="stable")[:n_bins]
    return float(np.mean(est.psd[np.sort(idx)]))


def combine_correlations(mzi1, mzi2, mode: Literal["intensity_diff", "phase_sum"]):
    """Correlation photocurrent of the two interferometers, SNL preserved.

    ``intensity_diff``: (sum_1 - sum_2)/sqrt 2 of amplitude-mode pairs.
    ``phase_sum``: (diff_1 + diff_2)/sqrt 2 of phase-mode pairs.
    """
    if mzi1.dt != mzi2.dt or len(mzi1.sum) != len(mzi2.sum):
        raise ConfigurationError("photocurrent pairs differ in dt or length")
    want = {"intensity_diff": "amplitude_mode", "phase_sum": "phase_mode"}
    if mode not in want:
        raise ConfigurationError(f"unknown combination mode {mode!r}")
    for pair in (mzi1, mzi2):
        if getattr(pair, "bias", want[mode]) != want[mode]:
            raise ConfigurationError(f"{mode} needs {want[mode]} photocurrents")
    if mode == "intensity_diff":
        return _SQRT_HALF * (mzi1.sum - mzi2.sum)
    return _SQRT_HALF * (mzi1.diff + mzi2.diff)


@dataclass(frozen=True, eq=False)
class CorrelationTraceSet:
    """The five roles of a correlation measurement at one analysis frequency.

    i: SNL, ii/iii/iv: phase sum at the largest/middle/zero excess noise,
    v: intensity difference.
    """

    analysis_freq: float
    snl: PsdEstimate
    phase_sum: Mapping[float, PsdEstimate]
    intensity_diff: PsdEstimate
    intensity_diff_by_E: Mapping[float, PsdEstimate] = field(default_factory=dict)

    def ordered(self) -> list[tuple[str, str, float | None, PsdEstimate]]:
        """(trace label, kind, E, estimate) in display order i..v."""
        Es = sorted(self.phase_sum, reverse=True)
        labels = ["ii", "iii", "iv", "vi", "vii"]
        rows = [("i", "snl", None, self.snl)]
        rows += [(labels[k], "phase_sum", E, self.phase_sum[E]) for k, E in enumerate(Es)]
        rows.append(("v", "intensity_diff", None, self.intensity_diff))
        return rows

    def readouts(self, n_bins: int = 3) -> dict:
        f0 = self.analysis_freq
        return {
            "snl": readout(self.snl, f0, n_bins),
            "intensity_diff": readout(self.intensity_diff, f0, n_bins),
            "phase_sum": {E: readout(est, f0, n_bins) for E, est in self.phase_sum.items()},
        }


def assemble_trace_set(runs: Mapping, analysis_freq: float,
                       E_values=(0.0, 0.33, 1.00)) -> CorrelationTraceSet:
    """Build and validate a trace set.

    ``runs`` maps ``"snl"`` to a PSD, ``"phase_sum"`` and ``"intensity_diff"``
    to ``{E: PSD}``.  All PSDs must share one grid; the intensity difference
    must agree across E values within statistical tolerance.
    """
    missing = [k for k in ("snl", "phase_sum", "intensity_diff") if k not in runs]
    if missing:
        raise IncompleteTraceSetError(f"missing runs: {', '.join(missing)}")
    ps, idiff = runs["phase_sum"], runs["intensity_diff"]
    for name, table in (("phase_sum", ps), ("intensity_diff", idiff)):
        absent = [E for E in E_values if E not in table]
        if absent:
            raise IncompleteTraceSetError(f"{name} missing for E = {absent}")
    snl = runs["snl"]
    every = [snl, *(ps[E] for E in E_values), *(idiff[E] for E in E_values)]
    if not all(snl.same_grid(e) for e in every):
        raise ConfigurationError("trace set mixes frequency grids")
    base = idiff[E_values[0]]
    tol = 5.0 * math.sqrt(2.0 / base.n_segments)
    for E in E_values[1:]:
        other = idiff[E]
        if not np.array_equal(base.psd, other.psd):
            rel = np.max(np.abs(other.psd - base.psd) / base.psd)
            if rel > tol:
                raise ParameterError(
                    f"intensity difference changed with E = {E} (max rel. dev. {rel:.3g})")
    return CorrelationTraceSet(analysis_freq, snl, {E: ps[E] for E in E_values},
                               base, dict(idiff))
