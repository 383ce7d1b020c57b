import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfmimo.harness import config as cio
from sfmimo.harness.cli import main
from sfmimo.harness.config import AxisSpec, ConfigError, ExperimentConfig, JammerSpec, TargetSpec
from sfmimo.harness.experiment import (ExperimentError, OccurrenceMap, TruthSnapWarning, experiment_grid,
                                       run_experiment, trial_seed)
from sfmimo.harness.output import HEATMAP_COLUMNS, emit_results, read_heatmap, read_trials

SMALL = """
[scenario]
n_tx = 6
n_rx = 2
compression = 6
disk_radius_m = 1.0
snr_db = 200.0
samples_per_pulse = 16
symbol_interval_s = 1e-7

[targets]
angles_deg = 1.0
speeds_mps = 30.0
ranges_m = 1050.0

[schedule]
mode = random
pulse_count = 4
pulse_interval_s = 2.5e-4
step_min = 0.01
step_max = 0.1

[grid]
angle_start_deg = -1.0
angle_stop_deg = 1.0
angle_step_deg = 1.0
velocity_start_mps = 20.0
velocity_stop_mps = 40.0
velocity_step_mps = 10.0
range_start_m = 1000.0
range_stop_m = 1100.0
range_step_m = 50.0

[experiment]
trials = 2
master_seed = 11
"""


@pytest.fixture
def small_cfg():
    return cio.loads(SMALL)


def test_bundled_configs_round_trip():
    names = cio.bundled_configs()
    assert {"fig2_constant.cfg", "fig2_stepped.cfg", "fig3_decoupled.cfg", "const.cfg"} <= set(names)
    for name in names:
        cfg = cio.load(name)
        assert cio.loads(cio.dumps(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-300, 300), st.floats(500, 9000)), max_size=4),
       st.floats(-30, 30), st.integers(0, 2 ** 31), st.floats(1e-4, 0.5))
def test_round_trip_is_lossless(targets, snr, seed, step):
    cfg = ExperimentConfig(targets=[TargetSpec(*t) for t in targets],
                           jammers=[JammerSpec(5000.0, 0.123456789, 60.0)],
                           scenario=replace(cio.ScenarioSpec(), snr_db=snr),
                           grid=replace(cio.GridSpec(), angle_deg=AxisSpec(-1.0, 1.0, step)))
    cfg = cfg.with_overrides(seed=seed)
    assert cio.loads(cio.dumps(cfg)) == cfg


@pytest.mark.parametrize("text, match", [
    ("[scenario]\nn_tx = 3\nfoo = 1\n", "unknown key"),
    ("[widgets]\n", "unknown section"),
    ("[targets]\nangles_deg = 1, 2\nspeeds_mps = 1\nranges_m = 1000, 2000\n", "different lengths"),
    ("[experiment]\ntrials = 0\n", "trials"),
    ("[grid]\nangle_start_deg = 1\nangle_stop_deg = 0\n", "below start"),
    ("[scenario]\nn_tx = three\n", "bad value"),
    ("[estimator]\nmode = decoupled\nnc = 5\nns = 5\n", "stepped schedule"),
    ("[schedule]\nmode = linear\nstep = 0.01\n[estimator]\nmode = decoupled\nnc = 5\nns = 5\n", "leading_constant"),
    ("[schedule]\nmode = linear\nstep = 0.01\nleading_constant = 5\n[estimator]\nmode = decoupled\nnc = 5\nns = 6\n", "nc \\+ ns"),
    ("not an ini", "malformed"),
])
def test_bad_configs(text, match):
    with pytest.raises(ConfigError, match=match):
        cio.loads(text)


def test_axis_values():
    np.testing.assert_allclose(AxisSpec(-2.5, 2.5, 0.5).values(), np.arange(-2.5, 2.51, 0.5))
    assert AxisSpec(1500.0, 1500.0, 50.0).count == 1


def test_single_trial_noiseless_oracle(small_cfg):
    cfg = small_cfg.with_overrides(trials=1)
    res = run_experiment(cfg)
    grid = experiment_grid(cfg)
    cell = grid.index((math.radians(1.0), 30.0, 1050.0))
    expected = np.zeros(grid.size, dtype=int)
    expected[cell] = 1
    np.testing.assert_array_equal(res.occurrence.counts, expected)
    assert res.occurrence.truth == [cell]


def test_determinism_and_parallelism(small_cfg):
    a = run_experiment(small_cfg)
    b = run_experiment(small_cfg, workers=2)
    np.testing.assert_array_equal(a.occurrence.counts, b.occurrence.counts)
    assert [r.detections for r in a.records] == [r.detections for r in b.records]
    assert [r.steps for r in a.records] == [r.steps for r in b.records]
    # trials differ from one another
    assert a.records[0].steps != a.records[1].steps


def test_trial_seeds_are_independent_of_order():
    assert trial_seed(3, 5).generate_state(2).tolist() == trial_seed(3, 5).generate_state(2).tolist()
    assert trial_seed(3, 5).generate_state(2).tolist() != trial_seed(3, 6).generate_state(2).tolist()


def test_off_grid_truth_is_snapped_with_warning(small_cfg):
    cfg = replace(small_cfg, targets=(TargetSpec(1.0, 32.0, 1050.0),)).with_overrides(trials=1)
    with pytest.warns(TruthSnapWarning):
        res = run_experiment(cfg)
    assert res.snaps[0]["velocity_mps"] == pytest.approx(-2.0)


def test_all_failures_raise(small_cfg):
    # decoupled mode with no targets: step 1 finds nothing in every trial
    text = SMALL.replace("angles_deg = 1.0\nspeeds_mps = 30.0\nranges_m = 1050.0", "")
    text = text.replace("mode = random", "mode = random\nleading_constant = 2")
    text += "\n[estimator]\nmode = decoupled\nnc = 2\nns = 2\n"
    with pytest.raises(ExperimentError, match="all 2 trials failed"):
        run_experiment(cio.loads(text))


def test_occurrence_map_invariants(small_cfg):
    occ = OccurrenceMap.empty(experiment_grid(small_cfg), [])
    occ.add([1, 3])
    occ.add([])
    assert occ.trials == 2 and occ.counts.sum() == 2
    assert occ.counts.max() <= occ.trials
    with pytest.raises(ValueError):
        occ.add([1, 1])


def test_emit_results(small_cfg, tmp_path):
    res = run_experiment(small_cfg)
    paths = emit_results(res, tmp_path / "out")
    names = {p.name for p in paths}
    assert {"manifest.cfg", "heatmap.csv", "trials.jsonl", "heatmap_angle_velocity.png"} <= names
    rows = read_heatmap(tmp_path / "out" / "heatmap.csv")
    assert len(rows) == res.occurrence.grid.size
    assert sum(r["count"] for r in rows) == sum(len(r.detections) for r in res.records)
    assert (tmp_path / "out" / "heatmap.csv").read_text().splitlines()[0] == ",".join(HEATMAP_COLUMNS)
    assert cio.load(tmp_path / "out" / "manifest.cfg") == small_cfg
    trials = read_trials(tmp_path / "out" / "trials.jsonl")
    assert [t["trial"] for t in trials] == [0, 1]
    assert "stages" in trials[0] and trials[0]["status"] == "ok"


def test_empty_detections_heatmap_is_well_formed(small_cfg, tmp_path):
    res = run_experiment(small_cfg)
    res.occurrence.counts[:] = 0
    emit_results(res, tmp_path, plots=False)
    rows = read_heatmap(tmp_path / "heatmap.csv")
    assert len(rows) == res.occurrence.grid.size and all(r["count"] == 0 for r in rows)


def test_cli_simulate_is_byte_reproducible(tmp_path):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    for out in ("a", "b"):
        assert main(["simulate", "--config", str(cfg_path), "--seed", "7", "--output-dir",
                     str(tmp_path / out)]) == 0
    for name in ("manifest.cfg", "heatmap.csv", "trials.jsonl", "heatmap_angle_velocity.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert "master_seed = 7" in (tmp_path / "a" / "manifest.cfg").read_text()


def test_cli_output_dir_env(tmp_path, monkeypatch):
    cfg_path = tmp_path / "small.cfg"
    cfg_path.write_text(SMALL)
    monkeypatch.setenv("SFMIMO_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["simulate", "--config", str(cfg_path), "--trials", "1", "--no-plot"]) == 0
    assert (tmp_path / "env" / "heatmap.csv").exists()
    assert not (tmp_path / "env" / "heatmap_angle_velocity.png").exists()


def test_cli_ambiguity(capsys):
    assert main(["ambiguity", "--config", "const.cfg"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["unambiguous_velocity_mps"]["value"] == pytest.approx(120.0, abs=1e-6)


def test_cli_resolution_and_validate(capsys):
    assert main(["resolution", "--config", "fig2_stepped.cfg", "--draws", "50"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["h_stepped"] < rep["h_constant"] and "sweep" in rep
    assert main(["validate", "--config", "fig3_decoupled.cfg"]) == 0
    checks = json.loads(capsys.readouterr().out)["checks"]
    assert all(c["ok"] for c in checks)


def test_cli_validate_flags_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(SMALL.replace("speeds_mps = 30.0", "speeds_mps = 33.0").replace("ranges_m = 1050.0",
                                                                                     "ranges_m = 50.0"))
    assert main(["validate", "--config", str(bad)]) == 1
    failed = {c["check"] for c in json.loads(capsys.readouterr().out)["checks"] if not c["ok"]}
    assert {"truth_on_grid", "far_field"} <= failed


def test_cli_errors(tmp_path, capsys):
    assert main(["ambiguity", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "not found" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", "x", "--bogus"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit) as exc:
        main(["dance"])
    assert exc.value.code != 0
