"""Experiment configuration: JSON schema, validation, bundled presets.

Validation collects every problem (with its dotted field path) before any
computation runs; unknown keys are errors.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .errors import TwinBeamError
from .mzi import InterferometerConfig, design_arm_length
from .pipeline import AnalyzerSettings
from .spectra import DetectionChain, FrequencyGrid, OpoCavity, PumpDrive

SCHEMA_VERSION = 1
MODES = ("analytic", "simulate", "both")

_TOP = {"schema_version", "name", "mode", "seed", "output_dir", "frequency_convention",
        "cavity", "pump", "chain", "E_values", "grid", "presets", "simulation"}
_CAVITY = {"T", "delta", "tau"}
_PUMP = {"sigma", "power", "threshold"}
_CHAIN = {"detector_qe", "fiber_pass"}
_GRID = {"f_min", "f_max", "n_points", "frequencies"}
_PRESET = {"label", "analysis_freq", "short_len", "long_len", "E_values"}
_SIM = {"dt", "segment_len", "n_segments", "overlap", "window", "refractive_index",
        "excess", "bias_error"}

DEFAULT_GRID = {"f_min": 1e5, "f_max": 1e7, "n_points": 200}
DEFAULT_SIM = {"dt": 5e-9, "segment_len": 4096, "n_segments": 400, "overlap": 0.5,
               "window": "hann", "refractive_index": 1.55, "excess": 1.0,
               "bias_error": 0.0}


class ConfigError(TwinBeamError):
    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("; ".join(f"{p}: {m}" for p, m in problems))


@dataclass(frozen=True)
class Preset:
    label: str
    analysis_freq: float
    interferometer: InterferometerConfig
    E_values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    name: str
    mode: str
    seed: int
    output_dir: Path
    cavity: OpoCavity
    pump: PumpDrive
    chain: DetectionChain
    E_values: tuple[float, ...]
    grid: FrequencyGrid | None
    presets: tuple[Preset, ...] = field(default_factory=tuple)
    analyzer: AnalyzerSettings = AnalyzerSettings()
    excess: float = 1.0


class _Collector:
    def __init__(self):
        self.problems: list[tuple[str, str]] = []

    def add(self, path: str, msg: str):
        self.problems.append((path, msg))

    def keys(self, obj, allowed: set, path: str) -> dict:
        if not isinstance(obj, dict):
            self.add(path, "must be an object")
            return {}
        for k in sorted(set(obj) - allowed):
            self.add(f"{path}.{k}" if path else k, "unknown key")
        return obj

    def number(self, obj: dict, key: str, path: str, default=None, integer=False):
        where = f"{path}.{key}" if path else key
        if key not in obj or obj[key] is None:
            if default is None:
                self.add(where, "is required")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(where, f"must be a number, got {v!r}")
            return None
        if integer and (not float(v).is_integer()):
            self.add(where, f"must be an integer, got {v!r}")
            return None
        if not math.isfinite(v):
            self.add(where, "must be finite")
            return None
        return int(v) if integer else float(v)

    def build(self, path: str, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except (TwinBeamError, ValueError, TypeError) as exc:
            self.add(path, str(exc))
            return None


def _E_list(c: _Collector, value, path: str):
    if not isinstance(value, list) or not value:
        c.add(path, "must be a non-empty list of numbers")
        return None
    out = []
    for k, E in enumerate(value):
        if isinstance(E, bool) or not isinstance(E, (int, float)) or not math.isfinite(E):
            c.add(f"{path}[{k}]", f"must be a number, got {E!r}")
        elif E < 0:
            c.add(f"{path}[{k}]", f"excess noise must be >= 0, got {E!r}")
        else:
            out.append(float(E))
    if len(set(out)) != len(out):
        c.add(path, "duplicate E values")
    return tuple(out)


def validate(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Check a raw configuration document and build the typed configuration."""
    if not isinstance(raw, dict):
        raise ConfigError([("config", "top level must be a JSON object")])
    raw = copy.deepcopy(raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v
    c = _Collector()
    c.keys(raw, _TOP, "")

    sv = raw.get("schema_version")
    if sv != SCHEMA_VERSION:
        c.add("schema_version", f"must be {SCHEMA_VERSION}, got {sv!r}")
    mode = raw.get("mode", "analytic")
    if mode not in MODES:
        c.add("mode", f"must be one of {MODES}, got {mode!r}")
    seed = c.number(raw, "seed", "", default=0, integer=True)
    if seed is not None and seed < 0:
        c.add("seed", "must be >= 0")
    name = raw.get("name", "run")
    if not isinstance(name, str) or not name:
        c.add("name", "must be a non-empty string")
    out_dir = raw.get("output_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        c.add("output_dir", "must be a non-empty string")
    conv = raw.get("frequency_convention", "angular")
    if conv not in ("angular", "ordinary"):
        c.add("frequency_convention", f"must be 'angular' or 'ordinary', got {conv!r}")
    elif conv == "ordinary" and mode in ("simulate", "both"):
        c.add("frequency_convention",
              "time-domain simulation realizes the angular convention; "
              "'ordinary' is only allowed in analytic mode")

    cav = c.keys(raw.get("cavity", {}), _CAVITY, "cavity")
    T, delta, tau = (c.number(cav, k, "cavity") for k in ("T", "delta", "tau"))
    cavity = None
    if None not in (T, delta, tau):
        cavity = c.build("cavity", OpoCavity, T, delta, tau)

    pmp = c.keys(raw.get("pump", {}), _PUMP, "pump")
    pump = None
    if "sigma" in pmp:
        if "power" in pmp or "threshold" in pmp:
            c.add("pump", "give either sigma or power/threshold, not both")
        s = c.number(pmp, "sigma", "pump")
        if s is not None:
            pump = c.build("pump.sigma", PumpDrive, s)
    else:
        P = c.number(pmp, "power", "pump")
        P0 = c.number(pmp, "threshold", "pump")
        if None not in (P, P0):
            pump = c.build("pump", PumpDrive.from_powers, P, P0)

    ch = c.keys(raw.get("chain", {}), _CHAIN, "chain")
    qe = c.number(ch, "detector_qe", "chain")
    fp = c.number(ch, "fiber_pass", "chain")
    chain = c.build("chain", DetectionChain, qe, fp) if None not in (qe, fp) else None

    E_values = _E_list(c, raw.get("E_values", [0.0, 0.33, 1.0]), "E_values")

    grid = None
    if mode in ("analytic", "both"):
        g = c.keys(raw.get("grid", DEFAULT_GRID), _GRID, "grid")
        if "frequencies" in g:
            extra = set(g) - {"frequencies"}
            if extra:
                c.add("grid", "'frequencies' excludes f_min/f_max/n_points")
            freqs = g["frequencies"]
            if not isinstance(freqs, list) or not freqs:
                c.add("grid.frequencies", "must be a non-empty list")
            else:
                grid = c.build("grid.frequencies", FrequencyGrid, freqs,
                               conv if conv in ("angular", "ordinary") else "angular")
        else:
            g = {**DEFAULT_GRID, **g}
            f_min = c.number(g, "f_min", "grid")
            f_max = c.number(g, "f_max", "grid")
            n = c.number(g, "n_points", "grid", integer=True)
            if n is not None and n < 1:
                c.add("grid.n_points", "must be >= 1")
            elif None not in (f_min, f_max, n):
                grid = c.build("grid", FrequencyGrid.logspace, f_min, f_max, n,
                               conv if conv in ("angular", "ordinary") else "angular")

    sim = c.keys(raw.get("simulation", {}), _SIM, "simulation")
    sim = {**DEFAULT_SIM, **sim}
    dt = c.number(sim, "dt", "simulation")
    seg = c.number(sim, "segment_len", "simulation", integer=True)
    nseg = c.number(sim, "n_segments", "simulation", integer=True)
    ovl = c.number(sim, "overlap", "simulation")
    n_idx = c.number(sim, "refractive_index", "simulation")
    excess = c.number(sim, "excess", "simulation")
    bias_error = c.number(sim, "bias_error", "simulation")
    if dt is not None and dt <= 0:
        c.add("simulation.dt", "must be > 0")
    if seg is not None and (seg < 1024 or seg & (seg - 1)):
        c.add("simulation.segment_len", "must be a power of two >= 1024")
    if nseg is not None and nseg < 1:
        c.add("simulation.n_segments", "must be >= 1")
    if ovl is not None and not 0 <= ovl < 1:
        c.add("simulation.overlap", "must lie in [0, 1)")
    if sim["window"] not in ("hann", "rectangular"):
        c.add("simulation.window", "must be 'hann' or 'rectangular'")
    if n_idx is not None and n_idx <= 1:
        c.add("simulation.refractive_index", "must be > 1")
    if excess is not None and excess < 1:
        c.add("simulation.excess", "must be >= 1 (uncertainty bound)")
    if cavity is not None and cavity.delta == 0 and mode in ("simulate", "both"):
        c.add("cavity.delta", "must be > 0 for simulation (anti-squeezed partner diverges at DC)")

    presets: list[Preset] = []
    if mode in ("simulate", "both"):
        plist = raw.get("presets")
        if not isinstance(plist, list) or not plist:
            c.add("presets", "simulation needs a non-empty list of presets")
            plist = []
        labels = set()
        for k, pr in enumerate(plist):
            path = f"presets[{k}]"
            pr = c.keys(pr, _PRESET, path)
            f0 = c.number(pr, "analysis_freq", path)
            short = c.number(pr, "short_len", path, default=2.0)
            label = pr.get("label") or (f"{f0 / 1e6:g}MHz" if f0 else f"preset{k}")
            if label in labels:
                c.add(f"{path}.label", f"duplicate label {label!r}")
            labels.add(label)
            pE = _E_list(c, pr["E_values"], f"{path}.E_values") if "E_values" in pr else E_values
            if f0 is None or f0 <= 0 or None in (n_idx, short, dt, bias_error):
                if f0 is not None and f0 <= 0:
                    c.add(f"{path}.analysis_freq", "must be > 0")
                continue
            if pr.get("long_len") is None:
                if n_idx > 1:
                    long_len = short + design_arm_length(f0, n_idx)
                else:
                    continue
            else:
                long_len = c.number(pr, "long_len", path)
                if long_len is None:
                    continue
            ifc = c.build(path, InterferometerConfig, short, long_len, n_idx,
                          chain.fiber_pass if chain else 1.0, "phase_mode",
                          chain.detector_qe if chain else 1.0, bias_error)
            if ifc is None:
                continue
            if abs(ifc.design_frequency - f0) > 1e-6 * f0:
                c.add(f"{path}.long_len",
                      f"arm delay gives design frequency {ifc.design_frequency:.6g} Hz, "
                      f"not analysis_freq {f0:g} Hz")
            if dt > 0:
                c.build(f"{path}.long_len", ifc.delay_samples, dt)
                if f0 > 1.0 / (4.0 * dt):
                    c.add(f"{path}.analysis_freq", f"exceeds 1/(4 dt) = {1 / (4 * dt):g} Hz")
            if pE:
                presets.append(Preset(label, f0, ifc, pE))

    if c.problems:
        raise ConfigError(c.problems)

    analyzer = AnalyzerSettings(dt, seg, nseg, ovl, sim["window"])
    return ExperimentConfig(raw, name, mode, seed, Path(out_dir), cavity, pump, chain,
                            E_values, grid, tuple(presets), analyzer, excess)


def load(source: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Load a configuration file, or a bundled preset by name (e.g. ``fig4``)."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    else:
        name = str(source).removeprefix("preset:")
        res = resources.files("twinbeam") / "presets" / f"{name}.json"
        if not res.is_file():
            raise ConfigError([("config", f"no such file or bundled preset: {source}")])
        text = res.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("config", f"invalid JSON: {exc}")]) from None
    return validate(raw, overrides)


def bundled_presets() -> list[str]:
    root = resources.files("twinbeam") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def snapshot(cfg: ExperimentConfig) -> dict[str, Any]:
    """Normalized, JSON-ready view of the configuration actually run."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        "frequency_convention": cfg.grid.convention if cfg.grid else "angular",
        "cavity": {"T": cfg.cavity.T, "delta": cfg.cavity.delta, "tau": cfg.cavity.tau},
        "pump": {"sigma": cfg.pump.sigma},
        "chain": {"detector_qe": cfg.chain.detector_qe, "fiber_pass": cfg.chain.fiber_pass},
        "E_values": list(cfg.E_values),
        "grid": ({"frequencies": cfg.grid.values.tolist()} if cfg.grid is not None else None),
        "presets": [{"label": p.label, "analysis_freq": p.analysis_freq,
                     "short_len": p.interferometer.short_len,
                     "long_len": p.interferometer.long_len,
                     "E_values": list(p.E_values)} for p in cfg.presets],
        "simulation": {"dt": cfg.analyzer.dt, "segment_len": cfg.analyzer.segment_len,
                       "n_segments": cfg.analyzer.n_segments,
                       "overlap": cfg.analyzer.overlap, "window": cfg.analyzer.window,
                       "excess": cfg.excess,
                       "refractive_index": cfg.presets[0].interferometer.refractive_index
                       if cfg.presets else None,
                       "bias_error": cfg.presets[0].interferometer.bias_error
                       if cfg.presets else 0.0},
    }
