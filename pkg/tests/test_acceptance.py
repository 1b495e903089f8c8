"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
they are also collected in the terminal summary.  Statistical criteria use
more Welch segments than the 400-segment default so that their absolute
tolerances are resolvable; the counts are pinned below.
"""
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from twinbeam import spectra as sp
from twinbeam.cli import main
from twinbeam.mzi import InterferometerConfig, design_arm_length
from twinbeam.pipeline import AnalyzerSettings, collective_psds, simulate_preset, vacuum_chain
from twinbeam.synth import CollectiveTargets, design_squeeze_filter

# pinned tolerances
TOL_EXACT = 1e-9          # 1: closed forms vs exact rationals
TOL_CRIT = 1e-9           # 2: closed-form critical E
TOL_BISECT = 1e-6         # 2: bisection root
TOL_FACTOR = 1e-12        # 4: relative, |H|^2 vs target
TOL_COLLECTIVE = 0.02     # 5: absolute SNL units per bin
TOL_PIPELINE = 0.03       # 6: absolute at the design frequency
TOL_ARM = 2.5             # 7: meters vs hardware
TOL_ARM_STATED = 0.05     # 7: meters vs the stated 48.39 / 19.35 / 9.68
TOL_VACUUM = 0.02         # 8: absolute per bin

# pinned run sizes
SEED = 20080101
SEG_COLLECTIVE = 65_536   # 5
SEG_PIPELINE = 16_384     # 6
SEG_VACUUM = 65_536       # 8

CAV = sp.EXPERIMENT_CAVITY
SIGMA = sp.EXPERIMENT_SIGMA
CHAIN = sp.EXPERIMENT_CHAIN
E_VALUES = (0.0, 0.33, 1.0)
FREQS = (2e6, 5e6, 10e6)

T, DELTA, TAU = F("0.032"), F("0.01"), F("39.5e-9")
TP = T + DELTA


def _oracle_p(w, eta):
    return 1 - eta * T * TP / (TP ** 2 + (w * TAU) ** 2)


def _oracle_q(w, E, eta, sigma=F("1.39")):
    den = TP ** 2 * sigma ** 2 + (w * TAU) ** 2
    return 1 - eta * T * TP / den + eta * 2 * T * TP * (sigma - 1) * E / den


def test_c1_analytic_exactness(report):
    t0 = time.perf_counter()
    tiny = sp.FrequencyGrid(np.array([1e-6]))  # w tau ~ 2.5e-13: the w -> 0 limit
    s_p = sp.intensity_diff_spectrum(CAV, CHAIN, tiny).values[0]
    s_q = sp.phase_sum_spectrum(CAV, sp.PumpDrive(SIGMA, 0.0), CHAIN, tiny).values[0]
    elapsed = time.perf_counter() - t0
    ref_p = float(_oracle_p(F(0), F("0.702")))
    ref_q = float(_oracle_q(F(0), F(0), F("0.54756")))
    err = max(abs(s_p - ref_p), abs(s_q - ref_q))
    ok = err < TOL_EXACT and elapsed < 1.0
    report("1", ok, f"S_p(0)={s_p:.10f} (exact {ref_p:.10f}), S_q(0)={s_q:.10f} "
                    f"(exact {ref_q:.10f}), max err {err:.1e} < {TOL_EXACT:g}, "
                    f"{elapsed * 1e3:.1f} ms")
    assert ok


def _bisect(f_hz):
    grid = sp.FrequencyGrid(np.array([f_hz]))

    def g(E):
        return sp.phase_sum_spectrum(CAV, sp.PumpDrive(SIGMA, E), CHAIN, grid).values[0] - 1

    lo, hi = 0.0, 10.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if g(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


def test_c2_critical_excess(report):
    Ec = sp.critical_excess_noise(SIGMA)
    roots = [_bisect(f) for f in FREQS]
    above = [sp.phase_sum_value(2 * math.pi * f, CAV, sp.PumpDrive(SIGMA, 1.01 * Ec), 0.54756)
             for f in FREQS]
    ok = (abs(Ec - 1 / 0.78) < TOL_CRIT
          and all(abs(r - Ec) < TOL_BISECT for r in roots)
          and all(v > 1 for v in above))
    report("2", ok, f"E*={Ec:.9f}; bisection roots "
                    + ", ".join(f"{r:.9f}" for r in roots)
                    + f"; S_q > 1 above E* at 2/5/10 MHz (reported ~3.0 differs, see README)")
    assert ok


@pytest.mark.slow
def test_c3_monotone_and_invariant(report, pipeline_runs):
    grid = sp.FrequencyGrid.logspace(1e5, 1e7, 200)
    q = [sp.phase_sum_spectrum(CAV, sp.PumpDrive(SIGMA, E), CHAIN, grid).values
         for E in E_VALUES]
    mono = bool(np.all(q[0] < q[1]) and np.all(q[1] < q[2]))
    analytic = [sp.intensity_diff_spectrum(CAV, CHAIN, grid).values for _ in E_VALUES]
    inv_a = all(np.array_equal(analytic[0], a) for a in analytic)
    sim_inv = all(
        all(np.array_equal(res.traces.intensity_diff_by_E[E_VALUES[0]].psd,
                           res.traces.intensity_diff_by_E[E].psd) for E in E_VALUES)
        for res, _ in pipeline_runs.values())
    ok = mono and inv_a and sim_inv
    report("3", ok, f"S_q(0)<S_q(0.33)<S_q(1) on 200 points: {mono}; intensity trace "
                    f"bitwise identical across E (analytic {inv_a}, simulated {sim_inv})")
    assert ok


def test_c4_factorization(report):
    t0 = time.perf_counter()
    H = design_squeeze_filter(CAV.T * CAV.t_prime, CAV.t_prime, CAV.tau)
    w = np.linspace(0.0, 2 * np.pi * 100e6, 10_000)
    target = 1 - CAV.T * CAV.t_prime / (CAV.t_prime ** 2 + (w * CAV.tau) ** 2)
    rel = float(np.max(np.abs(H.power_response(w) / target - 1)))
    elapsed = time.perf_counter() - t0
    ok = rel < TOL_FACTOR and elapsed < 1.0
    report("4", ok, f"max rel. deviation {rel:.2e} < {TOL_FACTOR:g} on 1e4 points, "
                    f"{elapsed * 1e3:.1f} ms")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("E", E_VALUES)
def test_c5_collective_modes(report, E):
    settings = AnalyzerSettings(n_segments=SEG_COLLECTIVE)
    targets = CollectiveTargets.from_opo(CAV, sp.PumpDrive(SIGMA, E))
    t0 = time.perf_counter()
    psd = collective_psds(targets, settings, seed=SEED + int(100 * E))
    elapsed = time.perf_counter() - t0
    est_p, est_q = psd["p_minus"], psd["q_plus"]
    grid = sp.FrequencyGrid(est_p.freqs)
    # resolved band: from the first bin up to 1/(4 dt), below the warped region
    band = est_p.freqs <= 1 / (4 * settings.dt)
    want_p = sp.lossless_spectrum("intensity_diff", CAV, None, grid).values
    want_q = sp.lossless_spectrum("phase_sum", CAV, sp.PumpDrive(SIGMA, E), grid).values
    dev_p = float(np.max(np.abs(est_p.psd - want_p)[band]))
    dev_q = float(np.max(np.abs(est_q.psd - want_q)[band]))
    ok = dev_p < TOL_COLLECTIVE and dev_q < TOL_COLLECTIVE and elapsed < 60
    report(f"5 E={E:g}", ok,
           f"{SEG_COLLECTIVE} segments, {int(band.sum())} bins: max|p_- - S_p|={dev_p:.4f}, "
           f"max|q_+ - S_q|={dev_q:.4f} (tol {TOL_COLLECTIVE}), {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def pipeline_runs():
    settings = AnalyzerSettings(n_segments=SEG_PIPELINE)
    runs = {}
    for f0 in FREQS:
        mzi = InterferometerConfig.for_frequency(f0)
        t0 = time.perf_counter()
        res = simulate_preset(CAV, SIGMA, CHAIN, mzi, E_VALUES, settings, seed=SEED)
        runs[f0] = (res, time.perf_counter() - t0)
    return runs


@pytest.mark.slow
def test_c6a_pipeline_matches_closed_forms(report, pipeline_runs):
    rows = []
    worst = 0.0
    total = sum(t for _, t in pipeline_runs.values())
    for f0, (res, _) in pipeline_runs.items():
        w0 = 2 * math.pi * f0
        ro = res.traces.readouts()
        d = abs(ro["intensity_diff"] - sp.intensity_diff_value(w0, CAV, CHAIN.eta_amp))
        worst = max(worst, d)
        for E in E_VALUES:
            want = sp.phase_sum_value(w0, CAV, sp.PumpDrive(SIGMA, E), CHAIN.eta_phase)
            worst = max(worst, abs(ro["phase_sum"][E] - want))
        rows.append(f"{f0 / 1e6:g} MHz: int {ro['intensity_diff']:.4f}, phase "
                    + "/".join(f"{ro['phase_sum'][E]:.4f}" for E in E_VALUES))
    ok = worst < TOL_PIPELINE and total < 600
    report("6a", ok, f"12 readouts within {worst:.4f} of the closed forms (tol {TOL_PIPELINE}), "
                     f"{SEG_PIPELINE} segments, {total:.0f} s; " + "; ".join(rows))
    assert ok


@pytest.mark.slow
def test_c6b_entanglement_witness(report, pipeline_runs):
    # all twelve simulated readouts must lie below the SNL
    sims, margins = [], []
    for f0, (res, _) in pipeline_runs.items():
        w0 = 2 * math.pi * f0
        ro = res.traces.readouts()
        sims.append(ro["intensity_diff"])
        margins.append(1 - sp.intensity_diff_value(w0, CAV, CHAIN.eta_amp))
        for E in E_VALUES:
            sims.append(ro["phase_sum"][E])
            margins.append(1 - sp.phase_sum_value(w0, CAV, sp.PumpDrive(SIGMA, E),
                                                  CHAIN.eta_phase))
    below = sum(v < 1.0 for v in sims)
    ok = below == len(sims)
    report("6b", ok, f"{below}/{len(sims)} simulated points below 1.0; analytic margins "
                     f"below 1 range {min(margins):.1e}..{max(margins):.1e} vs readout std "
                     f"~{0.75 / math.sqrt(SEG_PIPELINE):.1e} (see ledger: unattainable)")
    assert ok


def test_c7_arm_lengths(report):
    stated = {2e6: 48.39, 5e6: 19.35, 10e6: 9.68}
    hardware = {2e6: 50 - 2, 5e6: 21 - 2, 10e6: 12 - 2}
    got = {f: design_arm_length(f, 1.55) for f in FREQS}
    ok = all(abs(got[f] - stated[f]) < TOL_ARM_STATED and abs(got[f] - hardware[f]) < TOL_ARM
             for f in FREQS)
    report("7", ok, ", ".join(f"{f / 1e6:g} MHz: {got[f]:.3f} m (hw {hardware[f]} m)"
                              for f in FREQS)
           + f"; exact c, within {TOL_ARM_STATED} m of stated values")
    assert ok


@pytest.fixture(scope="module")
def vacuum_run():
    mzi = InterferometerConfig.for_frequency(2e6)
    return vacuum_chain(mzi, AnalyzerSettings(n_segments=SEG_VACUUM), seed=SEED)


@pytest.mark.slow
def test_c8a_snl_reference_flatness(report, vacuum_run):
    ref = vacuum_run["reference"]
    bound = 3 / math.sqrt(ref.n_segments)
    dev = np.abs(ref.psd - 1.0)
    n_out = int(np.sum(dev >= bound))
    ok = n_out == 0
    report("8a", ok, f"normalized reference: {n_out}/{dev.size} bins at or beyond "
                     f"3/sqrt(n)={bound:.4f} (max {dev.max():.4f}); per-bin std "
                     f"{np.std(ref.psd):.4f} makes this a ~3-sigma all-bins bound "
                     f"(see ledger: unattainable)")
    assert ok


@pytest.mark.slow
def test_c8b_vacuum_through_chain(report, vacuum_run):
    dev_s = float(np.max(np.abs(vacuum_run["sum"].psd - 1)))
    dev_d = float(np.max(np.abs(vacuum_run["diff"].psd - 1)))
    ok = dev_s < TOL_VACUUM and dev_d < TOL_VACUUM
    report("8b", ok, f"vacuum input, {SEG_VACUUM} segments: max|sum-1|={dev_s:.4f}, "
                     f"max|diff-1|={dev_d:.4f} (tol {TOL_VACUUM})")
    assert ok


def test_c9_reproducibility(report, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["run", "fig3", "--out", str(d), "--format", "csv,json"]) == 0
        outs.append(d)
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    same_json = ((outs[0] / "fig3_results.json").read_bytes()
                 == (outs[1] / "fig3_results.json").read_bytes())
    ok = len(names) == 4 and same and same_json
    report("9", ok, f"{len(names)} CSV files byte-identical across two seeded runs: {same}; "
                    f"results JSON identical: {same_json}")
    assert ok
