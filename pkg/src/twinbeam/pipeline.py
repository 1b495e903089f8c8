"""Streaming end-to-end simulation: synthesis -> two interferometers -> analyzer.

Everything is processed in chunks so that acceptance-scale records (1e8
samples) fit in memory.  Per-role seeds are spawned from one master seed,
so a run is reproducible from (configuration, seed) alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mzi import InterferometerConfig, MachZehnder
from .specan import (CorrelationTraceSet, PsdEstimate, WelchAccumulator,
                     assemble_trace_set, normalize_to_snl, readout)
from .spectra import DetectionChain, OpoCavity, PumpDrive
from .synth import CollectiveTargets, Synthesizer

_SQRT_HALF = math.sqrt(0.5)
DEFAULT_CHUNK = 1 << 20

# fixed role order; appending roles keeps existing seeds stable
_ROLES = ("synth", "snl", "amp1", "amp2", "phase1", "phase2")


@dataclass(frozen=True)
class AnalyzerSettings:
    dt: float = 5e-9
    segment_len: int = 4096
    n_segments: int = 400
    overlap: float = 0.5
    window: str = "hann"

    @property
    def n_samples(self) -> int:
        hop = self.segment_len - int(round(self.overlap * self.segment_len))
        return (self.n_segments - 1) * hop + self.segment_len

    def accumulator(self) -> WelchAccumulator:
        return WelchAccumulator(self.dt, self.segment_len, self.overlap,
                                self.window, max_segments=self.n_segments)


def role_seeds(seed: int) -> dict[str, np.random.SeedSequence]:
    children = np.random.SeedSequence(seed).spawn(len(_ROLES))
    return dict(zip(_ROLES, children))


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(2, np.uint64)[0] >> np.uint64(1))


def _chunks(total: int, chunk: int):
    left = total
    while left > 0:
        k = min(chunk, left)
        yield k
        left -= k


@dataclass
class PresetResult:
    traces: CorrelationTraceSet
    raw: dict = field(default_factory=dict)
    config: InterferometerConfig | None = None
    sum_port_readout: float = float("nan")


def simulate_preset(cavity: OpoCavity, sigma: float, chain: DetectionChain,
                    mzi: InterferometerConfig, E_values=(0.0, 0.33, 1.00),
                    settings: AnalyzerSettings = AnalyzerSettings(), seed: int = 0,
                    excess: float = 1.0, chunk: int = DEFAULT_CHUNK) -> PresetResult:
    """Run the correlation measurement at the interferometer's design frequency.

    One synthesized twin-beam record feeds an amplitude-mode pair of
    interferometers (intensity difference) and, for each E, a phase-mode
    pair (phase sum).  All E values share the intrinsic fluctuations and
    the interferometer vacua; only the pump-noise term is scaled.
    """
    f0 = mzi.design_frequency
    E_values = tuple(float(E) for E in E_values)
    seeds = role_seeds(seed)
    amp_cfg = InterferometerConfig(mzi.short_len, mzi.long_len, mzi.refractive_index,
                                   chain.fiber_pass, "amplitude_mode", chain.detector_qe,
                                   mzi.bias_error)
    ph_cfg = amp_cfg.with_bias("phase_mode")
    ph_cfg.delay_samples(settings.dt)

    targets = CollectiveTargets.from_opo(cavity, PumpDrive(sigma, 0.0), excess)
    syn = Synthesizer(targets, settings.dt, _seed_int(seeds["synth"]), f_warp=f0)
    snl_rng = np.random.default_rng(seeds["snl"])
    amp1 = MachZehnder(amp_cfg, settings.dt, seeds["amp1"])
    amp2 = MachZehnder(amp_cfg, settings.dt, seeds["amp2"])
    ph1 = {E: MachZehnder(ph_cfg, settings.dt, seeds["phase1"]) for E in E_values}
    ph2 = {E: MachZehnder(ph_cfg, settings.dt, seeds["phase2"]) for E in E_values}

    acc_snl = settings.accumulator()
    acc_int = settings.accumulator()
    acc_phase = {E: settings.accumulator() for E in E_values}
    acc_sum_port = settings.accumulator()

    for n in _chunks(settings.n_samples, chunk):
        m = syn.next_modes(n)
        p_s, p_i = _SQRT_HALF * (m["p_plus"] + m["p_minus"]), _SQRT_HALF * (m["p_plus"] - m["p_minus"])
        q_minus = m["q_minus"]

        s1, _ = amp1.process(p_s, np.zeros(n))
        s2, _ = amp2.process(p_i, np.zeros(n))
        acc_int.update(_SQRT_HALF * (s1 - s2))
        acc_snl.update(snl_rng.standard_normal(n))

        for k, E in enumerate(E_values):
            q_plus = m["q_plus"] + math.sqrt(E) * m["pump_unit"] if E > 0 else m["q_plus"]
            q_s, q_i = _SQRT_HALF * (q_plus + q_minus), _SQRT_HALF * (q_plus - q_minus)
            sum1, d1 = ph1[E].process(p_s, q_s)
            sum2, d2 = ph2[E].process(p_i, q_i)
            acc_phase[E].update(_SQRT_HALF * (d1 + d2))
            if k == 0:
                acc_sum_port.update(_SQRT_HALF * (sum1 + sum2))

    snl = acc_snl.estimate()
    norm = lambda est: normalize_to_snl(est, snl, fit_constant=True)  # noqa: E731
    snl_trace = normalize_to_snl(snl, snl, fit_constant=True)
    intensity = norm(acc_int.estimate())
    runs = {
        "snl": snl_trace,
        "intensity_diff": {E: intensity for E in E_values},
        "phase_sum": {E: norm(acc_phase[E].estimate()) for E in E_values},
    }
    traces = assemble_trace_set(runs, f0, E_values)
    sum_port = norm(acc_sum_port.estimate())
    return PresetResult(traces, {"snl_raw": snl, "sum_port": sum_port}, ph_cfg,
                        readout(sum_port, f0))


def collective_psds(targets: CollectiveTargets, settings: AnalyzerSettings, seed: int,
                    f_warp: float | None = None, chunk: int = DEFAULT_CHUNK,
                    modes=("p_minus", "q_plus")) -> dict[str, PsdEstimate]:
    """Welch PSDs of synthesized collective modes (q_+ includes the pump term)."""
    syn = Synthesizer(targets, settings.dt, seed, f_warp)
    accs = {m: settings.accumulator() for m in modes}
    rt = math.sqrt(targets.E)
    for n in _chunks(settings.n_samples, chunk):
        m = syn.next_modes(n)
        if targets.E > 0:
            m["q_plus"] = m["q_plus"] + rt * m["pump_unit"]
        for name in modes:
            accs[name].update(m[name])
    return {name: acc.estimate() for name, acc in accs.items()}


def vacuum_chain(mzi: InterferometerConfig, settings: AnalyzerSettings, seed: int,
                 chunk: int = DEFAULT_CHUNK) -> dict[str, PsdEstimate]:
    """Coherent (vacuum-fluctuation) input through one interferometer.

    Returns SNL-normalized sum and diff PSDs plus the normalized reference.
    """
    ss = np.random.SeedSequence(seed).spawn(3)
    beam_rng = np.random.default_rng(ss[0])
    ref_rng = np.random.default_rng(ss[1])
    mz = MachZehnder(mzi, settings.dt, ss[2])
    acc = {k: settings.accumulator() for k in ("sum", "diff", "ref")}
    for n in _chunks(settings.n_samples, chunk):
        s, d = mz.process(beam_rng.standard_normal(n), beam_rng.standard_normal(n))
        acc["sum"].update(s)
        acc["diff"].update(d)
        acc["ref"].update(ref_rng.standard_normal(n))
    ref = acc["ref"].estimate()
    return {
        "sum": normalize_to_snl(acc["sum"].estimate(), ref, fit_constant=True),
        "diff": normalize_to_snl(acc["diff"].estimate(), ref, fit_constant=True),
        "reference": normalize_to_snl(ref, ref, fit_constant=True),
    }
