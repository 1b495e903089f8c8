"""Run orchestration and result emission (CSV / JSON / SVG)."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, snapshot
from .mzi import expected_phase_port_psd
from .pipeline import simulate_preset
from .specan import readout
from .spectra import (FrequencyGrid, intensity_diff_spectrum, intensity_diff_value,
                      lossless_spectrum, phase_sum_spectrum, phase_sum_value)

log = logging.getLogger(__name__)

RESULT_SCHEMA = "twinbeam.results"
RESULT_SCHEMA_VERSION = 1
CSV_HEADER = ("freq_hz", "value_linear", "value_db", "kind", "E")


@dataclass
class Trace:
    """One emitted curve; labels i..v name the trace roles."""

    label: str
    kind: str
    E: float | None
    freqs: np.ndarray
    values: np.ndarray


@dataclass
class RunManifest:
    config: dict
    seed: int
    tool_version: str
    outputs: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def reproducible_part(self) -> dict:
        """Everything except wall-clock timings, so embedded copies are byte-stable."""
        d = asdict(self)
        d.pop("timings")
        return d


@dataclass
class RunResult:
    analytic: list[Trace] = field(default_factory=list)
    simulated: dict[str, list[Trace]] = field(default_factory=dict)
    comparison: dict[str, dict] = field(default_factory=dict)


def analytic_traces(cfg: ExperimentConfig) -> list[Trace]:
    """Closed-form curves: intensity difference, then phase sum per E."""
    grid = cfg.grid
    out = [Trace("i", "intensity_diff", None, grid.values,
                 intensity_diff_spectrum(cfg.cavity, cfg.chain, grid).values)]
    labels = ["ii", "iii", "iv", "v", "vi", "vii"]
    for k, E in enumerate(cfg.E_values):
        tr = phase_sum_spectrum(cfg.cavity, cfg.pump.with_excess(E), cfg.chain, grid)
        out.append(Trace(labels[k] if k < len(labels) else f"E{E:g}", "phase_sum", E,
                         grid.values, tr.values))
    return out


def _compare(cfg: ExperimentConfig, preset, result) -> dict:
    """Simulated readouts against the closed forms, plus MZI-shaped residuals."""
    ts = result.traces
    f0 = preset.analysis_freq
    w0 = 2.0 * math.pi * f0
    delay = preset.interferometer.delay
    eta_a, eta_p = cfg.chain.eta_amp, cfg.chain.eta_phase
    ro = ts.readouts()
    cmp = {
        "analysis_freq": f0,
        "sum_port_at_f0": result.sum_port_readout,
        "intensity_diff": {"simulated": ro["intensity_diff"],
                           "analytic": float(intensity_diff_value(w0, cfg.cavity, eta_a))},
        "phase_sum": [],
    }
    freqs = ts.snl.freqs
    band = (freqs >= 0.5 * f0) & (freqs <= 1.5 * f0)
    grid = FrequencyGrid(freqs)
    lossless_p = lossless_spectrum("intensity_diff", cfg.cavity, None, grid).values
    exp_int = 1.0 - eta_a * (1.0 - lossless_p)
    cmp["intensity_diff"]["max_abs_residual_band"] = float(
        np.max(np.abs(ts.intensity_diff.psd - exp_int)[band]))
    for E in preset.E_values:
        pump = cfg.pump.with_excess(E)
        lossless_q = lossless_spectrum("phase_sum", cfg.cavity, pump, grid).values
        expected = expected_phase_port_psd(freqs, delay, lossless_q, eta_p)
        cmp["phase_sum"].append({
            "E": E,
            "simulated": ro["phase_sum"][E],
            "analytic": float(phase_sum_value(w0, cfg.cavity, pump, eta_p)),
            "max_abs_residual_band": float(
                np.max(np.abs(ts.phase_sum[E].psd - expected)[band])),
        })
    return cmp


def run(cfg: ExperimentConfig, formats=("csv", "json")) -> tuple[RunManifest, RunResult]:
    """Execute the configured pipelines and write the requested outputs."""
    timings = {}
    result = RunResult()
    t0 = time.perf_counter()
    if cfg.mode in ("analytic", "both"):
        result.analytic = analytic_traces(cfg)
        timings["analytic"] = time.perf_counter() - t0
    if cfg.mode in ("simulate", "both"):
        for preset in cfg.presets:
            t1 = time.perf_counter()
            log.info("simulating preset %s (%d segments)", preset.label,
                     cfg.analyzer.n_segments)
            res = simulate_preset(cfg.cavity, cfg.pump.sigma, cfg.chain,
                                  preset.interferometer, preset.E_values,
                                  cfg.analyzer, cfg.seed, cfg.excess)
            result.simulated[preset.label] = [
                Trace(label, kind, E, est.freqs, est.psd)
                for label, kind, E, est in res.traces.ordered()]
            result.comparison[preset.label] = _compare(cfg, preset, res)
            timings[f"simulate:{preset.label}"] = time.perf_counter() - t1

    manifest = RunManifest(snapshot(cfg), cfg.seed, __version__)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    files = emit(result, manifest, out, formats, cfg.name)
    manifest.outputs = files
    manifest.timings = {k: round(v, 6) for k, v in timings.items()}
    (out / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2) + "\n")
    return manifest, result


def _fmt(x: float) -> str:
    return repr(float(x))


def traces_to_csv(traces: list[Trace]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for tr in traces:
        db = 10.0 * np.log10(tr.values)
        e = "" if tr.E is None else _fmt(tr.E)
        for f, v, d in zip(tr.freqs, tr.values, db):
            w.writerow((_fmt(f), _fmt(v), _fmt(d), tr.kind, e))
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["freq_hz"] = float(r["freq_hz"])
        r["value_linear"] = float(r["value_linear"])
        r["value_db"] = float(r["value_db"])
        r["E"] = float(r["E"]) if r["E"] else None
    return rows


def _trace_json(tr: Trace) -> dict:
    return {"label": tr.label, "kind": tr.kind, "E": tr.E,
            "freq_hz": tr.freqs.tolist(), "value_linear": tr.values.tolist()}


def emit(result: RunResult, manifest: RunManifest, out: Path, formats, name: str) -> dict:
    """Write CSV/JSON/SVG files; returns {role: file name relative to ``out``}."""
    files = {}
    groups = []
    if result.analytic:
        groups.append((f"{name}_analytic", result.analytic, "log"))
    for label, traces in result.simulated.items():
        groups.append((f"{name}_sim_{label}", traces, "linear"))

    if "csv" in formats:
        for stem, traces, _ in groups:
            (out / f"{stem}.csv").write_text(traces_to_csv(traces))
            files[f"csv:{stem}"] = f"{stem}.csv"
    if "svg" in formats:
        for stem, traces, scale in groups:
            _plot_svg(out / f"{stem}.svg", traces, scale, stem)
            files[f"svg:{stem}"] = f"{stem}.svg"
    if "json" in formats:
        files["json"] = f"{name}_results.json"
        manifest.outputs = dict(files)
        doc = {
            "schema": RESULT_SCHEMA,
            "schema_version": RESULT_SCHEMA_VERSION,
            "manifest": manifest.reproducible_part(),
            "analytic": [_trace_json(t) for t in result.analytic],
            "simulated": {k: [_trace_json(t) for t in v] for k, v in result.simulated.items()},
            "comparison": result.comparison,
        }
        (out / files["json"]).write_text(json.dumps(doc, indent=1) + "\n")
    return files


def _plot_svg(path: Path, traces: list[Trace], scale: str, title: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "twinbeam"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for tr in traces:
        lab = f"{tr.label}: {tr.kind}" + (f" E={tr.E:g}" if tr.E is not None else "")
        ax.plot(tr.freqs / 1e6, 10.0 * np.log10(tr.values), lw=1, label=lab)
    ax.axhline(0.0, color="k", ls="--", lw=0.8, label="SNL")
    if scale == "log":
        ax.set_xscale("log")
    ax.set_xlabel("analysis frequency [MHz]")
    ax.set_ylabel("noise power relative to SNL [dB]")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
