"""Unbalanced fiber Mach-Zehnder interferometer with balanced detection.

Linearized sideband model.  Quadratures are in shot-noise units and the
photocurrents are normalized to the shot noise of the total detected power.

Phase mode: a half-wave plate and PBS split the beam equally into a short
and a long fiber arm; the unused PBS port injects vacuum ``v``.  Arm ``k``
carries ``(x +/- v)/sqrt 2`` for x = p, q.  After the long-arm delay ``D``
the arms interfere on the 50/50 splitter with relative carrier phase
``phi`` (pi/2 nominally).  The normalized port currents are

    u_pm = [(1 +/- cos phi)(p1 + p2) +/- sin phi (q1 - q2)] / (2 sqrt 2)

so the sum photocurrent is ``(p1 + p2)/sqrt 2`` and, at phi = pi/2, the
difference is ``(q1 - q2)/sqrt 2``, i.e. PSD
``sin^2(pi f D) S_q + cos^2(pi f D)``.  At the design frequency, D = 1/(2 f),
the difference reads S_q and the sum reads exactly the shot-noise level.

Amplitude mode: all light goes through the short arm; the sum current is
the amplitude quadrature and the difference is pure vacuum.

Loss bookkeeping: the amplitude measurement is charged one fiber
transmission, the phase measurement two (``t**2`` per arm), then the
detector efficiency.  End-to-end efficiencies are ``qe t`` and ``qe t^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import constants

from . import _kernels
from .errors import ConfigurationError, ParameterError

Bias = Literal["amplitude_mode", "phase_mode"]

_SQRT_HALF = math.sqrt(0.5)
_ALIGN_RTOL = 1e-9


def design_arm_length(analysis_freq: float, refractive_index: float = 1.55) -> float:
    """Arm-length difference c / (2 f n) in meters (f in Hz, ordinary frequency)."""
    if not analysis_freq > 0:
        raise ParameterError(f"analysis frequency must be > 0, got {analysis_freq!r}")
    if not refractive_index > 1:
        raise ParameterError(f"refractive index must be > 1, got {refractive_index!r}")
    return constants.c / (2.0 * analysis_freq * refractive_index)


def phase_mode_gain(freqs, delay: float):
    """|1 - exp(-i 2 pi f D)|^2 / 2 = 2 sin^2(pi f D); equals 2 at the design frequency."""
    return 2.0 * np.sin(np.pi * np.asarray(freqs, dtype=float) * delay) ** 2


def expected_phase_port_psd(freqs, delay: float, lossless_psd, eta: float):
    """Diff-port PSD for a phase quadrature of lossless PSD ``S`` seen with efficiency ``eta``."""
    half_gain = 0.5 * phase_mode_gain(freqs, delay)
    return 1.0 - eta * half_gain * (1.0 - np.asarray(lossless_psd, dtype=float))


@dataclass(frozen=True)
class InterferometerConfig:
    short_len: float = 2.0
    long_len: float = 50.0
    refractive_index: float = 1.55
    arm_transmission: float = 0.78
    bias: Bias = "phase_mode"
    detector_qe: float = 0.9
    bias_error: float = 0.0  # static offset from pi/2 [rad]

    def __post_init__(self):
        if not self.short_len > 0:
            raise ParameterError("short_len must be > 0")
        if not self.long_len > self.short_len:
            raise ParameterError("long_len must exceed short_len")
        if not self.refractive_index > 1:
            raise ParameterError("refractive_index must be > 1")
        if not 0 < self.arm_transmission <= 1:
            raise ParameterError("arm_transmission must lie in (0, 1]")
        if not 0 < self.detector_qe <= 1:
            raise ParameterError("detector_qe must lie in (0, 1]")
        if self.bias not in ("amplitude_mode", "phase_mode"):
            raise ParameterError(f"unknown bias {self.bias!r}")

    @classmethod
    def for_frequency(cls, analysis_freq: float, short_len: float = 2.0,
                      refractive_index: float = 1.55, **kw) -> "InterferometerConfig":
        """Long arm chosen so the delay is half a period at ``analysis_freq``."""
        dl = design_arm_length(analysis_freq, refractive_index)
        return cls(short_len=short_len, long_len=short_len + dl,
                   refractive_index=refractive_index, **kw)

    @property
    def delay(self) -> float:
        """Arm delay difference in seconds."""
        return (self.long_len - self.short_len) * self.refractive_index / constants.c

    @property
    def design_frequency(self) -> float:
        return 1.0 / (2.0 * self.delay)

    @property
    def arm_pass(self) -> float:
        """Power transmission charged to each arm in the current mode."""
        t = self.arm_transmission
        return t * t if self.bias == "phase_mode" else t

    @property
    def efficiency(self) -> float:
        return self.detector_qe * self.arm_pass

    def delay_samples(self, dt: float) -> int:
        ratio = self.delay / dt
        k = int(round(ratio))
        if k < 1 or abs(ratio - k) > _ALIGN_RTOL * ratio:
            raise ConfigurationError(
                f"arm delay {self.delay:.6g} s is not an integer number of "
                f"samples of dt = {dt:g} s (ratio {ratio:.9g})")
        return k

    def with_bias(self, bias: Bias) -> "InterferometerConfig":
        return InterferometerConfig(self.short_len, self.long_len, self.refractive_index,
                                    self.arm_transmission, bias, self.detector_qe,
                                    self.bias_error)


@dataclass(frozen=True, eq=False)
class BeamField:
    mean_power: float
    p: np.ndarray
    q: np.ndarray
    dt: float
    wavelength: float = 1080e-9

    def __post_init__(self):
        if not self.mean_power > 0:
            raise ParameterError("beam mean power must be > 0")
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        if len(self.p) != len(self.q):
            raise ParameterError("p and q streams differ in length")

    @property
    def shot_scale(self) -> float:
        """RMS shot-noise photocurrent per sample [A] for unit detector efficiency."""
        e = constants.e
        responsivity = e * self.wavelength / (constants.h * constants.c)
        return math.sqrt(e * responsivity * self.mean_power / self.dt)


@dataclass(frozen=True, eq=False)
class PhotocurrentPair:
    sum: np.ndarray
    diff: np.ndarray
    dt: float
    bias: Bias = "phase_mode"
    shot_scale: float = 1.0

    def __post_init__(self):
        if len(self.sum) != len(self.diff):
            raise ParameterError("sum and diff photocurrents differ in length")

    def amperes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.sum * self.shot_scale, self.diff * self.shot_scale


class MachZehnder:
    """Stateful interferometer for chunked streams.

    Owns the delay line and the vacuum sources (PBS port, arm losses,
    detector inefficiency), all drawn from one generator seeded by ``seed``.
    """

    def __init__(self, config: InterferometerConfig, dt: float, seed):
        self.config = config
        self.dt = dt
        self.rng = np.random.default_rng(seed)
        if config.bias == "phase_mode":
            self.D = config.delay_samples(dt)
            # long-arm contents before t = 0: stationary vacuum-level noise
            self._hist_p = self.rng.standard_normal(self.D)
            self._hist_q = self.rng.standard_normal(self.D)
        else:
            self.D = 0
        phi = 0.5 * math.pi + config.bias_error
        self._c = math.cos(phi)
        self._s = math.sin(phi)

    def process(self, p: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (sum, diff) photocurrents for the next chunk."""
        cfg = self.config
        n = len(p)
        if len(q) != n:
            raise ParameterError("p and q chunks differ in length")
        rng = self.rng
        t = cfg.arm_pass
        if cfg.bias == "amplitude_mode":
            p1 = _kernels.attenuate(np.asarray(p, dtype=float), rng.standard_normal(n), t)
            v = rng.standard_normal(n)
            a = 0.5 * p1
            b = 0.5 * v
            w_plus = w_minus = 0.5
        else:
            vp = rng.standard_normal(n)
            vq = rng.standard_normal(n)
            p1 = _kernels.attenuate(_SQRT_HALF * (p + vp), rng.standard_normal(n), t)
            q1 = _kernels.attenuate(_SQRT_HALF * (q + vq), rng.standard_normal(n), t)
            p2 = _kernels.attenuate(_SQRT_HALF * (p - vp), rng.standard_normal(n), t)
            q2 = _kernels.attenuate(_SQRT_HALF * (q - vq), rng.standard_normal(n), t)
            p2d, self._hist_p = _delay(p2, self._hist_p)
            q2d, self._hist_q = _delay(q2, self._hist_q)
            k = 0.5 * _SQRT_HALF
            psum = p1 + p2d
            a = k * psum
            b = k * (self._c * psum + self._s * (q1 - q2d))
            w_plus = 0.5 * (1.0 + self._c)
            w_minus = 0.5 * (1.0 - self._c)
        d_plus = rng.standard_normal(n)
        d_minus = rng.standard_normal(n)
        return _kernels.balanced_detect(a, b, d_plus, d_minus, cfg.detector_qe,
                                        w_plus, w_minus)


def _delay(x: np.ndarray, hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    full = np.concatenate([hist, x])
    return full[:x.size], full[full.size - hist.size:].copy()


def measure(beam: BeamField, config: InterferometerConfig, seed=None) -> PhotocurrentPair:
    """Sum and difference photocurrents of one interferometer."""
    mz = MachZehnder(config, beam.dt, seed)
    s, d = mz.process(np.asarray(beam.p, dtype=float), np.asarray(beam.q, dtype=float))
    return PhotocurrentPair(s, d, beam.dt, config.bias, beam.shot_scale)


def snl_reference(beam: BeamField, config: InterferometerConfig, seed=None,
                  n_samples: int | None = None) -> np.ndarray:
    """Shot-noise reference photocurrent: independent vacuum at the detected power.

    In normalized units the detected-power scaling cancels, so the series is
    white with unit variance regardless of ``beam.mean_power``.
    """
    if not beam.mean_power > 0:
        raise ParameterError("beam mean power must be > 0")
    if config.bias == "phase_mode":
        config.delay_samples(beam.dt)
    n = len(beam.p) if n_samples is None else n_samples
    rng = np.random.default_rng(seed)
    raw = beam.shot_scale * rng.standard_normal(n)
    return raw / beam.shot_scale
