"""Time-domain synthesis of signal/idler quadrature fluctuations.

The lossless correlation spectra are first-order rational functions of w^2,

    1 - A / (B^2 + w^2 tau^2) = (w^2 + z^2) / (w^2 + p^2),
    z = sqrt(B^2 - A) / tau,  p = B / tau,

so each is the power response of the stable minimum-phase filter
H(s) = (s + z) / (s + p).  Unit white noise is pushed through the bilinear
(prewarped) discretization of H for each collective mode

    p_pm = (p_s +/- p_i) / sqrt(2),   q_pm = (q_s +/- q_i) / sqrt(2)

and rotated back to the signal/idler basis.  Pump excess phase noise enters
``q_+`` as an independent Lorentzian-filtered stream.

Units: one unit-variance sample per ``dt`` is the shot-noise level, i.e. a
white sequence with unit variance has normalized PSD 1 (see ``specan``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ConfigurationError, InsufficientDataError, ParameterError
from .spectra import OpoCavity, PumpDrive

SQRT_HALF = math.sqrt(0.5)
CHANNELS = ("p_s", "q_s", "p_i", "q_i")
MIN_SAMPLES = 2 ** 16


def _bilinear_constant(dt: float, f_warp: float | None) -> float:
    if f_warp is None:
        return 2.0 / dt
    w0 = 2.0 * math.pi * f_warp
    if not 0.0 < w0 * dt / 2.0 < math.pi / 2.0:
        raise ConfigurationError(
            f"prewarp frequency {f_warp!r} Hz not below Nyquist for dt={dt!r}")
    return w0 / math.tan(w0 * dt / 2.0)


@dataclass(frozen=True)
class _FirstOrder:
    """H(s) = (n1 s + n0) / (s + pole_rate)."""

    n1: float
    n0: float
    pole_rate: float

    def power_response(self, omega):
        w2 = np.asarray(omega, dtype=float) ** 2
        return (self.n1 ** 2 * w2 + self.n0 ** 2) / (w2 + self.pole_rate ** 2)

    def coefficients(self, dt: float, f_warp: float | None = None):
        """(b0, b1, a1) of the bilinear discretization, a0 = 1."""
        K = _bilinear_constant(dt, f_warp)
        p = self.pole_rate
        den = K + p
        return ((self.n1 * K + self.n0) / den,
                (self.n0 - self.n1 * K) / den,
                (p - K) / den)

    def digital_power_response(self, freqs, dt: float, f_warp: float | None = None):
        """|H(e^{i 2 pi f dt})|^2 of the discretized filter."""
        b0, b1, a1 = self.coefficients(dt, f_warp)
        zinv = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) * dt)
        h = (b0 + b1 * zinv) / (1.0 + a1 * zinv)
        return np.abs(h) ** 2


class ShapingFilter(_FirstOrder):
    """Minimum-phase shaping filter ``gain * (s + zero_rate) / (s + pole_rate)``."""

    def __init__(self, zero_rate: float, pole_rate: float, gain: float = 1.0):
        if not pole_rate > 0:
            raise ParameterError(f"pole_rate must be > 0 for stability, got {pole_rate!r}")
        if not zero_rate >= 0:
            raise ParameterError(f"zero_rate must be >= 0, got {zero_rate!r}")
        super().__init__(n1=gain, n0=gain * zero_rate, pole_rate=pole_rate)
        object.__setattr__(self, "zero_rate", float(zero_rate))
        object.__setattr__(self, "gain", float(gain))

    def __repr__(self):
        return (f"ShapingFilter(zero_rate={self.zero_rate!r}, "
                f"pole_rate={self.pole_rate!r}, gain={self.gain!r})")

    def reciprocal(self, excess: float = 1.0) -> "ShapingFilter":
        """Filter whose power response is ``excess / |H|^2`` (swap pole and zero)."""
        if not self.zero_rate > 0:
            raise ParameterError("reciprocal of a filter with a zero at DC is unstable")
        return ShapingFilter(self.pole_rate, self.zero_rate,
                             math.sqrt(excess) / self.gain)


class LorentzianFilter(_FirstOrder):
    """``gain / (s + pole_rate)``: power response gain^2 / (w^2 + pole_rate^2)."""

    def __init__(self, gain: float, pole_rate: float):
        if not pole_rate > 0:
            raise ParameterError("pole_rate must be > 0")
        super().__init__(n1=0.0, n0=float(gain), pole_rate=float(pole_rate))
        object.__setattr__(self, "gain", float(gain))

    def __repr__(self):
        return f"LorentzianFilter(gain={self.gain!r}, pole_rate={self.pole_rate!r})"


def design_squeeze_filter(A: float, B: float, tau: float) -> ShapingFilter:
    """Factorize ``1 - A / (B^2 + w^2 tau^2)`` as |(s + z)/(s + p)|^2."""
    if not B > 0:
        raise ParameterError(f"B must be > 0, got {B!r}")
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau!r}")
    disc = B * B - A
    if disc < 0:
        raise ParameterError(
            f"target spectrum is negative at DC (B^2 - A = {disc!r}); not factorizable")
    return ShapingFilter(math.sqrt(disc) / tau, B / tau)


def pump_noise_filter(E: float, sigma: float, cavity: OpoCavity) -> LorentzianFilter | None:
    """Lorentzian adding ``2 T T' (sigma - 1) E / (T'^2 sigma^2 + w^2 tau^2)`` to q_+."""
    if E < 0:
        raise ParameterError(f"E must be >= 0, got {E!r}")
    if sigma < 1:
        raise ParameterError(f"sigma must be >= 1, got {sigma!r}")
    g = 2.0 * cavity.T * cavity.t_prime * (sigma - 1.0) * E
    if g == 0.0:
        return None
    return LorentzianFilter(math.sqrt(g) / cavity.tau,
                            cavity.t_prime * sigma / cavity.tau)


class _FilterState:
    """Stateful first-order IIR carried across chunk boundaries."""

    def __init__(self, flt: _FirstOrder, dt: float, f_warp: float | None):
        self.coef = flt.coefficients(dt, f_warp)
        self.x_prev = 0.0
        self.y_prev = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        b0, b1, a1 = self.coef
        y, self.x_prev, self.y_prev = _kernels.first_order_filter(
            b0, b1, a1, x, self.x_prev, self.y_prev)
        return y


@dataclass(frozen=True)
class CollectiveTargets:
    """Shaping filters for the four collective modes plus the pump-noise term.

    ``pump`` is the Lorentzian for E = 1; the realized q_+ PSD is
    |H_q+|^2 + E |H_pump|^2.
    """

    p_minus: ShapingFilter
    q_plus: ShapingFilter
    p_plus: ShapingFilter
    q_minus: ShapingFilter
    pump: LorentzianFilter | None = None
    E: float = 0.0

    def __post_init__(self):
        if self.E < 0:
            raise ParameterError("E must be >= 0")

    @classmethod
    def from_opo(cls, cavity: OpoCavity, pump: PumpDrive, excess: float = 1.0):
        """Lossless NOPO spectra; anti-squeezed partners at minimum uncertainty times ``excess``."""
        if excess < 1.0:
            raise ParameterError("excess factor below 1 violates the uncertainty bound")
        T, Tp, tau = cavity.T, cavity.t_prime, cavity.tau
        p_minus = design_squeeze_filter(T * Tp, Tp, tau)
        q_plus = design_squeeze_filter(T * Tp, Tp * pump.sigma, tau)
        return cls(p_minus=p_minus,
                   q_plus=q_plus,
                   p_plus=q_plus.reciprocal(excess),
                   q_minus=p_minus.reciprocal(excess),
                   pump=pump_noise_filter(1.0, pump.sigma, cavity),
                   E=pump.E)

    @classmethod
    def vacuum(cls, rate: float = 1e6):
        unit = ShapingFilter(rate, rate)
        return cls(unit, unit, unit, unit)

    def with_excess(self, E: float) -> "CollectiveTargets":
        return CollectiveTargets(self.p_minus, self.q_plus, self.p_plus,
                                 self.q_minus, self.pump, E)

    def psd_p_minus(self, omega):
        return self.p_minus.power_response(omega)

    def psd_q_minus(self, omega):
        return self.q_minus.power_response(omega)

    def psd_p_plus(self, omega):
        return self.p_plus.power_response(omega)

    def psd_q_plus(self, omega):
        out = self.q_plus.power_response(omega)
        if self.pump is not None and self.E > 0:
            out = out + self.E * self.pump.power_response(omega)
        return out


@dataclass(frozen=True, eq=False)
class QuadratureStreams:
    """Signal/idler amplitude (p) and phase (q) fluctuations, SNL units."""

    dt: float
    p_s: np.ndarray
    q_s: np.ndarray
    p_i: np.ndarray
    q_i: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError("dt must be > 0")
        n = len(self.p_s)
        if any(len(getattr(self, c)) != n for c in CHANNELS):
            raise ParameterError("all quadrature channels must have equal length")

    @property
    def n_samples(self) -> int:
        return len(self.p_s)

    def collective(self) -> dict[str, np.ndarray]:
        p_plus, p_minus = to_collective(self.p_s, self.p_i)
        q_plus, q_minus = to_collective(self.q_s, self.q_i)
        return {"p_plus": p_plus, "p_minus": p_minus,
                "q_plus": q_plus, "q_minus": q_minus}

    @classmethod
    def from_collective(cls, dt, p_plus, p_minus, q_plus, q_minus, seed=None):
        p_s, p_i = to_beam_basis(p_plus, p_minus)
        q_s, q_i = to_beam_basis(q_plus, q_minus)
        return cls(dt, p_s, q_s, p_i, q_i, seed)

    def save_raw(self, path) -> Path:
        """Little-endian float64, channel-interleaved, with a ``.json`` sidecar."""
        path = Path(path)
        data = np.stack([getattr(self, c) for c in CHANNELS], axis=1)
        data.astype("<f8").tofile(path)
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(json.dumps({
            "dtype": "<f8", "dt": self.dt, "n_samples": self.n_samples,
            "seed": self.seed, "channels": list(CHANNELS), "layout": "interleaved",
        }, indent=2))
        return sidecar

    @classmethod
    def load_raw(cls, path) -> "QuadratureStreams":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        flat = np.fromfile(path, dtype=meta["dtype"]).astype(float)
        data = flat.reshape(meta["n_samples"], len(meta["channels"]))
        cols = {c: data[:, k].copy() for k, c in enumerate(meta["channels"])}
        return cls(meta["dt"], cols["p_s"], cols["q_s"], cols["p_i"], cols["q_i"],
                   meta["seed"])


def to_beam_basis(plus, minus):
    return SQRT_HALF * (plus + minus), SQRT_HALF * (plus - minus)


# Same orthogonal map; it is its own inverse.
to_collective = to_beam_basis


class Synthesizer:
    """Chunked generator of collective-mode streams.

    Five independent generators are spawned from ``seed`` (p+, p-, q+, q-,
    pump).  Output does not depend on how the stream is cut into chunks.
    """

    MODES = ("p_plus", "p_minus", "q_plus", "q_minus")

    def __init__(self, targets: CollectiveTargets, dt: float, seed: int,
                 f_warp: float | None = None, warmup: bool = True):
        if not dt > 0:
            raise ParameterError("dt must be > 0")
        if f_warp is not None and f_warp > 1.0 / (4.0 * dt):
            raise ConfigurationError(
                f"analysis frequency {f_warp:g} Hz exceeds 1/(4 dt) = {1 / (4 * dt):g} Hz")
        self.targets = targets
        self.dt = dt
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(self.MODES) + 1)
        self._rng = {m: np.random.Generator(np.random.PCG64(c))
                     for m, c in zip(self.MODES + ("pump",), children)}
        self._filters = {m: _FilterState(getattr(targets, m), dt, f_warp)
                         for m in self.MODES}
        self._pump = (_FilterState(targets.pump, dt, f_warp)
                      if targets.pump is not None else None)
        if warmup:
            # start from the stationary state: 20 time constants of the slowest pole
            flts = [getattr(targets, m) for m in self.MODES] + [targets.pump]
            slowest = min(f.pole_rate for f in flts if f is not None)
            self.next_modes(min(int(math.ceil(20.0 / (slowest * dt))), 1 << 20))

    def next_modes(self, n: int) -> dict[str, np.ndarray]:
        """Next ``n`` samples of the intrinsic modes plus ``pump_unit`` (E = 1 term)."""
        out = {m: self._filters[m](self._rng[m].standard_normal(n)) for m in self.MODES}
        white = self._rng["pump"].standard_normal(n)
        out["pump_unit"] = self._pump(white) if self._pump is not None else np.zeros(n)
        return out

    def next(self, n: int) -> QuadratureStreams:
        m = self.next_modes(n)
        E = self.targets.E
        q_plus = m["q_plus"] + math.sqrt(E) * m["pump_unit"] if E > 0 else m["q_plus"]
        return QuadratureStreams.from_collective(self.dt, m["p_plus"], m["p_minus"],
                                                 q_plus, m["q_minus"], self.seed)


def synthesize(targets: CollectiveTargets, dt: float, n_samples: int, seed: int,
               f_warp: float | None = None, chunk: int | None = None) -> QuadratureStreams:
    """Signal/idler streams whose collective-mode PSDs follow ``targets``."""
    if n_samples < MIN_SAMPLES:
        raise InsufficientDataError(f"n_samples must be >= {MIN_SAMPLES}")
    syn = Synthesizer(targets, dt, seed, f_warp)
    if chunk is None or chunk >= n_samples:
        return syn.next(n_samples)
    parts = []
    left = n_samples
    while left > 0:
        k = min(chunk, left)
        parts.append(syn.next(k))
        left -= k
    return QuadratureStreams(dt, *(np.concatenate([getattr(p, c) for p in parts])
                                   for c in CHANNELS), seed=seed)


def pump_noise_component(E: float, sigma: float, cavity: OpoCavity, dt: float,
                         n_samples: int, seed: int,
                         f_warp: float | None = None) -> np.ndarray:
    """Additive q_+ contribution from white excess phase noise of the pump."""
    flt = pump_noise_filter(E, sigma, cavity)
    if flt is None:
        return np.zeros(n_samples)
    white = np.random.default_rng(seed).standard_normal(n_samples)
    return _FilterState(flt, dt, f_warp)(white)
