"""Command-line runner, config validation and emitted files."""
import json
import math

import pytest

from twinbeam import config as cfgmod
from twinbeam.cli import main
from twinbeam.runner import CSV_HEADER, read_csv


def base_config(**over):
    raw = json.loads((cfgmod.resources.files("twinbeam") / "presets" / "fig4.json")
                     .read_text())
    raw.update(over)
    return raw


def small_sim(**over):
    raw = json.loads((cfgmod.resources.files("twinbeam") / "presets" / "fig3_10MHz.json")
                     .read_text())
    raw["simulation"]["n_segments"] = 16
    raw.update(over)
    return raw


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


def test_presets_listed(capsys):
    assert main(["presets"]) == 0
    names = capsys.readouterr().out.split()
    assert {"fig4", "fig3", "fig3_2MHz", "fig3_5MHz", "fig3_10MHz"} <= set(names)


def test_fig4_csv_rows_and_roundtrip(tmp_path):
    assert main(["run", "fig4", "--out", str(tmp_path)]) == 0
    path = tmp_path / "fig4_analytic.csv"
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_HEADER)
    rows = read_csv(path)
    assert len(rows) == 200 * 4
    kinds = [r["kind"] for r in rows]
    assert kinds.count("intensity_diff") == 200 and kinds.count("phase_sum") == 600
    assert {r["E"] for r in rows if r["kind"] == "phase_sum"} == {0.0, 0.33, 1.0}
    assert all(r["E"] is None for r in rows if r["kind"] == "intensity_diff")
    assert rows[0]["freq_hz"] == pytest.approx(1e5) and rows[199]["freq_hz"] == pytest.approx(1e7)
    doc = json.loads((tmp_path / "fig4_results.json").read_text())
    assert doc["schema"] == "twinbeam.results" and doc["schema_version"] == 1
    first = doc["analytic"][0]
    for k in range(200):
        assert rows[k]["value_linear"] == first["value_linear"][k]
        assert rows[k]["value_db"] == pytest.approx(10 * math.log10(first["value_linear"][k]),
                                                    rel=1e-15)


def test_manifest_written(tmp_path):
    assert main(["run", "fig4", "--out", str(tmp_path), "--seed", "5"]) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["seed"] == 5 and man["config"]["seed"] == 5
    assert "analytic" in man["timings"]
    assert (tmp_path / man["outputs"]["json"]).exists()
    doc = json.loads((tmp_path / "fig4_results.json").read_text())
    assert "timings" not in doc["manifest"]


def test_simulate_outputs_and_determinism(tmp_path):
    cfg = write(tmp_path, small_sim())
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(a), "--format", "csv,json,svg"]) == 0
    assert main(["run", cfg, "--out", str(b), "--format", "csv,json"]) == 0
    csv_name = "fig3_10MHz_sim_10MHz.csv"
    assert (a / csv_name).read_bytes() == (b / csv_name).read_bytes()
    assert (a / "fig3_10MHz_results.json").read_bytes() != b""
    rows = read_csv(a / csv_name)
    assert {r["kind"] for r in rows} == {"snl", "phase_sum", "intensity_diff"}
    assert len(rows) == 5 * 2048
    assert (a / "fig3_10MHz_sim_10MHz.svg").read_text().lstrip().startswith("<?xml")
    doc_a = json.loads((a / "fig3_10MHz_results.json").read_text())
    doc_b = json.loads((b / "fig3_10MHz_results.json").read_text())
    assert doc_a["simulated"] == doc_b["simulated"]
    assert doc_a["comparison"] == doc_b["comparison"]


def test_seed_changes_simulated_output(tmp_path):
    cfg = write(tmp_path, small_sim())
    assert main(["run", cfg, "--out", str(tmp_path / "a"), "--seed", "1"]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "b"), "--seed", "2"]) == 0
    name = "fig3_10MHz_sim_10MHz.csv"
    assert (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()


def test_empty_frequency_list_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, base_config(grid={"frequencies": []}))
    assert main(["run", cfg, "--out", str(tmp_path)]) == 2
    assert "grid.frequencies" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    raw = base_config()
    raw["cavity"]["finesse"] = 150
    assert main(["run", write(tmp_path, raw), "--out", str(tmp_path)]) == 2
    assert "cavity.finesse" in capsys.readouterr().err


def test_all_problems_reported_together(tmp_path, capsys):
    raw = base_config(mode="both", frequency_convention="ordinary")
    raw["cavity"]["T"] = -1
    raw["pump"] = {"sigma": 0.5}
    assert main(["run", write(tmp_path, raw), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    for field in ("cavity", "pump.sigma", "frequency_convention", "presets"):
        assert field in err
    assert not list(tmp_path.glob("*.csv"))


@pytest.mark.parametrize("mutate, field", [
    (lambda r: r["presets"][0].update(long_len=13.0), "presets[0].long_len"),
    (lambda r: r["simulation"].update(dt=1e-7), "presets[0].analysis_freq"),
    (lambda r: r["simulation"].update(segment_len=1000), "simulation.segment_len"),
    (lambda r: r["cavity"].update(delta=0.0), "cavity.delta"),
    (lambda r: r.update(schema_version=2), "schema_version"),
])
def test_simulation_config_errors(tmp_path, capsys, mutate, field):
    raw = small_sim()
    mutate(raw)
    assert main(["run", write(tmp_path, raw), "--out", str(tmp_path)]) == 2
    assert field in capsys.readouterr().err


def test_pump_from_powers(tmp_path):
    raw = base_config(pump={"power": 0.194, "threshold": 0.130})
    cfg = cfgmod.validate(raw)
    assert cfg.pump.sigma == pytest.approx(math.sqrt(194 / 130))


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "fig4", "--out", str(blocker / "sub")]) == 1
    assert capsys.readouterr().err


def test_missing_config_exits_2(capsys):
    assert main(["run", "no_such_preset_or_file"]) == 2


def test_bad_format_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["run", "fig4", "--format", "pdf"])
    assert exc.value.code == 2
