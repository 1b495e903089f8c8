"""Analytic twin-beam correlation spectra of an above-threshold NOPO.

All spectra are one-sided, dimensionless and normalized to the shot-noise
limit (SNL = 1).  Two spectra are modelled:

* intensity difference of signal and idler
  ``S_p(w) = 1 - eta * T T' / (T'^2 + w^2 tau^2)``
* phase sum, degraded by white excess phase noise ``E`` of the pump
  ``S_q(w) = 1 - eta' T T' / (T'^2 s^2 + w^2 tau^2)
           + eta' 2 T T' (s - 1) E / (T'^2 s^2 + w^2 tau^2)``

with ``T' = T + delta`` the total round-trip loss and ``s`` the pump
parameter sqrt(P / P0).  These closed forms are the oracle for every
stochastic estimate produced elsewhere in the package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import DomainError, ParameterError

Convention = Literal["angular", "ordinary"]
TraceKind = Literal["intensity_diff", "phase_sum", "snl", "psd_raw"]


@dataclass(frozen=True)
class OpoCavity:
    """Signal/idler cavity: output-mirror transmission, extra loss, round-trip time [s]."""

    T: float
    delta: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.T < 1.0:
            raise ParameterError(f"T must lie in (0, 1), got {self.T!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ParameterError(f"delta must lie in [0, 1), got {self.delta!r}")
        if not self.T + self.delta < 1.0:
            raise ParameterError("T + delta must be < 1")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ParameterError(f"tau must be positive, got {self.tau!r}")

    @property
    def t_prime(self) -> float:
        """Total round-trip loss T' = T + delta."""
        return self.T + self.delta

    @property
    def finesse(self) -> float:
        return 2.0 * math.pi / self.t_prime

    @property
    def decay_rate(self) -> float:
        """Field decay rate T'/tau in 1/s (half width of the Lorentzian in rad/s)."""
        return self.t_prime / self.tau


@dataclass(frozen=True)
class PumpDrive:
    """Pump parameter sigma = sqrt(P/P0) and normalized excess white phase noise E."""

    sigma: float
    E: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 1.0):
            raise DomainError(
                f"sigma must be >= 1 (above threshold), got {self.sigma!r}")
        if not (math.isfinite(self.E) and self.E >= 0.0):
            raise ParameterError(f"E must be >= 0, got {self.E!r}")

    @classmethod
    def from_powers(cls, P: float, P0: float, E: float = 0.0) -> "PumpDrive":
        return cls(sigma_from_powers(P, P0), E)

    def with_excess(self, E: float) -> "PumpDrive":
        return replace(self, E=E)


@dataclass(frozen=True)
class DetectionChain:
    """Detector quantum efficiency and single fiber-arm transmission.

    The intensity measurement passes one fiber arm, the phase measurement
    is charged for both, so ``eta_amp = qe * t`` and ``eta_phase = qe * t**2``.
    """

    detector_qe: float
    fiber_pass: float

    def __post_init__(self):
        for name in ("detector_qe", "fiber_pass"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ParameterError(f"{name} must lie in (0, 1], got {v!r}")

    @property
    def eta_amp(self) -> float:
        return self.detector_qe * self.fiber_pass

    @property
    def eta_phase(self) -> float:
        return self.detector_qe * self.fiber_pass ** 2


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Analysis frequencies in Hz.

    ``convention`` selects the argument fed to the spectral formulas:
    ``"angular"`` uses w = 2 pi f, ``"ordinary"`` uses w = f.
    """

    values: np.ndarray
    convention: Convention = "angular"

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or v.size == 0:
            raise ParameterError("frequency grid must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ParameterError("grid frequencies must be finite and > 0")
        if v.size > 1 and np.any(np.diff(v) <= 0):
            raise ParameterError("grid frequencies must be strictly increasing")
        if self.convention not in ("angular", "ordinary"):
            raise ParameterError(f"unknown frequency convention {self.convention!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def logspace(cls, f_min: float = 1e5, f_max: float = 1e7, n: int = 200,
                 convention: Convention = "angular") -> "FrequencyGrid":
        if not 0 < f_min < f_max:
            raise ParameterError("need 0 < f_min < f_max")
        return cls(np.geomspace(f_min, f_max, int(n)), convention)

    @property
    def omega(self) -> np.ndarray:
        if self.convention == "angular":
            return 2.0 * np.pi * self.values
        return self.values.copy()

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class NoiseSpectrumTrace:
    grid: FrequencyGrid
    values: np.ndarray
    kind: TraceKind
    params: dict = field(default_factory=dict)
    unit: Literal["linear", "db"] = "linear"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.values.shape:
            raise ParameterError("trace length does not match its grid")
        if not np.all(np.isfinite(v)):
            raise ParameterError("trace values must be finite")
        if self.unit == "linear" and np.any(v <= 0):
            raise ParameterError("linear trace values must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def E(self) -> float | None:
        return self.params.get("E")


# Scalar/array kernels.  Kept separate from the trace wrappers so that the
# w -> 0 limit and arbitrary omega arrays can be evaluated directly.

def intensity_diff_value(omega, cavity: OpoCavity, eta: float):
    T, Tp, tau = cavity.T, cavity.t_prime, cavity.tau
    omega = np.asarray(omega, dtype=float)
    return 1.0 - eta * T * Tp / (Tp ** 2 + (omega * tau) ** 2)


def phase_sum_value(omega, cavity: OpoCavity, pump: PumpDrive, eta: float):
    T, Tp, tau = cavity.T, cavity.t_prime, cavity.tau
    s = pump.sigma
    omega = np.asarray(omega, dtype=float)
    den = (Tp * s) ** 2 + (omega * tau) ** 2
    return (1.0 - eta * T * Tp / den
            + eta * 2.0 * T * Tp * (s - 1.0) * pump.E / den)


def _snapshot(cavity, pump=None, chain=None, **extra) -> dict:
    snap = {"T": cavity.T, "delta": cavity.delta, "tau": cavity.tau}
    if pump is not None:
        snap.update(sigma=pump.sigma, E=pump.E)
    if chain is not None:
        snap.update(detector_qe=chain.detector_qe, fiber_pass=chain.fiber_pass)
    snap.update(extra)
    return snap


def _checked(values: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise ParameterError("spectrum evaluation produced non-finite values")
    return values


def intensity_diff_spectrum(cavity: OpoCavity, chain: DetectionChain,
                            grid: FrequencyGrid) -> NoiseSpectrumTrace:
    """Detected intensity-difference spectrum; independent of the pump."""
    vals = _checked(intensity_diff_value(grid.omega, cavity, chain.eta_amp))
    return NoiseSpectrumTrace(grid, vals, "intensity_diff",
                              _snapshot(cavity, chain=chain, eta=chain.eta_amp))


def phase_sum_spectrum(cavity: OpoCavity, pump: PumpDrive, chain: DetectionChain,
                       grid: FrequencyGrid) -> NoiseSpectrumTrace:
    """Detected phase-sum spectrum including the pump excess-noise term."""
    vals = _checked(phase_sum_value(grid.omega, cavity, pump, chain.eta_phase))
    return NoiseSpectrumTrace(grid, vals, "phase_sum",
                              _snapshot(cavity, pump, chain, eta=chain.eta_phase))


def lossless_spectrum(kind: TraceKind, cavity: OpoCavity, pump: PumpDrive | None,
                      grid: FrequencyGrid) -> NoiseSpectrumTrace:
    """Spectrum at the cavity output, before any detection loss (eta = 1)."""
    if kind == "intensity_diff":
        vals = intensity_diff_value(grid.omega, cavity, 1.0)
        params = _snapshot(cavity, eta=1.0)
    elif kind == "phase_sum":
        if pump is None:
            raise ParameterError("phase_sum needs a PumpDrive")
        vals = phase_sum_value(grid.omega, cavity, pump, 1.0)
        params = _snapshot(cavity, pump, eta=1.0)
    else:
        raise ParameterError(f"no lossless spectrum of kind {kind!r}")
    return NoiseSpectrumTrace(grid, _checked(vals), kind, params)


def apply_loss(trace: NoiseSpectrumTrace, eta: float) -> NoiseSpectrumTrace:
    """Passive loss: v -> 1 - eta (1 - v).  Vacuum (v = 1) is a fixed point."""
    if not 0.0 <= eta <= 1.0:
        raise ParameterError(f"eta must lie in [0, 1], got {eta!r}")
    if trace.unit != "linear":
        raise ParameterError("apply_loss needs a linear trace")
    params = dict(trace.params)
    params["eta"] = params.get("eta", 1.0) * eta
    return NoiseSpectrumTrace(trace.grid, 1.0 - eta * (1.0 - trace.values),
                              trace.kind, params)


def to_decibels(trace: NoiseSpectrumTrace) -> NoiseSpectrumTrace:
    if trace.unit == "db":
        return trace
    if np.any(trace.values <= 0):
        raise DomainError("decibel view needs strictly positive values")
    return NoiseSpectrumTrace(trace.grid, 10.0 * np.log10(trace.values),
                              trace.kind, dict(trace.params), unit="db")


def from_decibels(trace: NoiseSpectrumTrace) -> NoiseSpectrumTrace:
    if trace.unit == "linear":
        return trace
    return NoiseSpectrumTrace(trace.grid, 10.0 ** (trace.values / 10.0),
                              trace.kind, dict(trace.params), unit="linear")


def sigma_from_powers(P: float, P0: float) -> float:
    """Pump parameter sqrt(P / P0)."""
    if not P0 > 0:
        raise ParameterError(f"threshold power must be > 0, got {P0!r}")
    if P < P0:
        raise DomainError(f"pump power {P!r} W is below threshold {P0!r} W")
    return math.sqrt(P / P0)


def critical_excess_noise(pump_sigma: float) -> float:
    """Excess pump phase noise at which the phase sum reaches the SNL.

    Setting the phase-sum spectrum to 1 cancels the two Lorentzian terms
    identically, so the root ``1 / (2 (sigma - 1))`` holds at every
    frequency and for any cavity or detection efficiency.
    """
    if not (math.isfinite(pump_sigma) and pump_sigma > 1.0):
        raise DomainError("critical excess noise needs sigma > 1")
    return 1.0 / (2.0 * (pump_sigma - 1.0))


# Parameters of the reported apparatus.
EXPERIMENT_CAVITY = OpoCavity(T=0.032, delta=0.01, tau=39.5e-9)
EXPERIMENT_SIGMA = 1.39
EXPERIMENT_CHAIN = DetectionChain(detector_qe=0.9, fiber_pass=0.78)
EXPERIMENT_EXCESS = (0.0, 0.33, 1.00)
