import json

import numpy as np
import pytest

from composite_adaptive import dnn
from composite_adaptive.plant import TwoLinkPlant
from composite_adaptive.sim import ConfigError, SimConfig, SimulationDiverged, load_config, run_simulation
from composite_adaptive.sim import diagnostics, metrics
from composite_adaptive.sim.config import config_from_dict
from composite_adaptive.sim.engine import lyapunov_partial
from composite_adaptive.sim.experiment import compare_experiment, seed_list

SHORT = SimConfig(duration=0.5, window=(0.2, 0.5))


@pytest.fixture(scope="module")
def composite_log():
    return run_simulation(SHORT)


@pytest.fixture(scope="module")
def baseline_log():
    return run_simulation(SHORT.with_(controller="baseline"))


# config

def test_defaults_are_reference_setup():
    cfg = SimConfig()
    assert cfg.n_steps == 100_000 and dnn.param_count(cfg.dnn) == 157
    assert cfg.x0 == (1.0, -1.0) and cfg.window == (50.0, 100.0)


@pytest.mark.parametrize(
    "doc",
    [
        {"sim": {"step": 0}},
        {"sim": {"duration": 1.0005}},
        {"sim": {"decimation": 7}},
        {"sim": {"window": [5, 1]}},
        {"sim": {"controller": "pid"}},
        {"sim": {"bogus": 1}},
        {"gains": {"alpha1": -1}},
        {"init": {"x0": [1, 2, 3]}},
        {"init": {"observer": {"f_hat0": "guess"}}},
        {"dnn": {"hidden_widths": [5], "input_size": 3}},
        {"extra": {}},
    ],
)
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_config_round_trip(tmp_path):
    cfg = SimConfig(duration=2.0, seed=4, f_hat0=(0.1, 0.2), gains=SimConfig().gains)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    back = load_config(path)
    assert back == cfg and back.config_hash() == cfg.config_hash()


def test_config_hash_ignores_seed_only():
    cfg = SimConfig()
    assert cfg.with_(seed=9).config_hash() == cfg.config_hash()
    assert cfg.with_(step=5e-4).config_hash() != cfg.config_hash()


def test_load_config_unreadable(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "c.json")


# engine

def test_log_shapes(composite_log):
    log = composite_log
    assert len(log) == 51 and log.theta.shape == (51, 157)
    assert log["x"].shape == (51, 2) and log["lam_max"].shape == (51,)
    np.testing.assert_allclose(log.t[-1], 0.5)


def test_initial_row(composite_log):
    log = composite_log
    np.testing.assert_allclose(log["e"][0], [1.0, -1.25])
    assert log["beta"][0] == pytest.approx(5.0)
    np.testing.assert_array_equal(log["r_tilde"][0], 0)


def test_composite_invariants_short(composite_log):
    sweep = diagnostics.invariant_sweep(composite_log, SHORT.gains)
    assert diagnostics.invariants_hold(sweep), sweep


def test_baseline_keeps_gain(baseline_log):
    assert np.all(baseline_log["lam_max"] == 1.0) and np.all(baseline_log["beta"] == 0.0)


def test_same_start_for_both_controllers(composite_log, baseline_log):
    np.testing.assert_array_equal(composite_log.theta[0], baseline_log.theta[0])


def test_csv_header_and_precision(tmp_path, composite_log):
    path = tmp_path / "run.csv"
    composite_log.write_csv(path)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    assert header[0] == "t" and "E1" in header and header[-1] == "theta_hash"
    assert len(lines) == 52
    row = lines[5].split(",")
    x1 = float(row[header.index("x1")])
    assert x1 == composite_log["x"][4, 0]


def test_divergence_raises_with_partial_log():
    with pytest.raises(SimulationDiverged) as info:
        run_simulation(SHORT.with_(blowup=0.5))
    assert info.value.log.status == "diverged" and len(info.value.log) >= 1


def test_lyapunov_partial():
    z = np.zeros(2)
    assert lyapunov_partial(z, z, z, z) == 0.0
    assert lyapunov_partial(np.array([1.0, 0.0]), z, z, z) == 0.5


# metrics

def test_rms_metric_basic():
    t = np.linspace(0, 1, 11)
    assert metrics.rms_metric(t, np.ones((11, 2)), (0, 1)) == pytest.approx(np.sqrt(2))
    assert metrics.rms_metric(t, np.full(11, np.pi), (0.5, 1.0), degrees=True) == pytest.approx(180.0)
    with pytest.raises(ValueError):
        metrics.rms_metric(t, np.ones(11), (2.0, 3.0))


def test_test_set_is_deterministic():
    a = metrics.test_points(100, 4, 2024)
    assert a.shape == (100, 4) and np.all(np.abs(a) <= 0.25)
    np.testing.assert_array_equal(a, metrics.test_points(100, 4, 2024))


def test_test_set_eval_zero_weights():
    spec = SimConfig().dnn
    plant = TwoLinkPlant()
    pts = metrics.test_points(10, 4, 1)
    expect = np.sqrt(np.mean([np.sum(plant.drift(p[:2], p[2:]) ** 2) for p in pts]))
    assert metrics.test_set_eval(np.zeros(157), plant, spec, 10, 1) == pytest.approx(expect)


def test_percent_decrease():
    assert metrics.percent_decrease(0.408, 0.180) == pytest.approx(55.88, abs=0.01)


def test_report_median():
    rep = metrics.MetricsReport(
        [0, 1, 2],
        {k: [1.0, 1.0, 1.0] for k in metrics.METRIC_NAMES},
        {k: [0.5, 0.9, 0.2] for k in metrics.METRIC_NAMES},
    )
    assert rep.median_decrease["e_rms_deg"] == pytest.approx(50.0)


# diagnostics

def test_observer_residuals_small(composite_log):
    res = diagnostics.observer_residuals(composite_log, SHORT.gains, start=0.1)
    assert res["r_tilde_residual"] < 1e-2 * (1 + res["r_tilde_rhs_max"])


def test_excitation_spectrum_simple():
    t = np.linspace(0, 2, 201)
    jacs = np.array([[[np.cos(s), np.sin(s)]] for s in 2 * np.pi * t])
    out = diagnostics.excitation_spectrum(t, jacs, 1.0, 0.5)
    np.testing.assert_allclose(out["lam_min"], 0.5, atol=1e-3)
    np.testing.assert_allclose(out["lam_max"], 0.5, atol=1e-3)
    assert len(out["t_start"]) == 3


def test_pe_monitor_window_too_long(composite_log):
    with pytest.raises(ValueError):
        diagnostics.pe_monitor(composite_log, SHORT.dnn, 5.0, 1.0)


def test_pe_monitor_runs(composite_log):
    out = diagnostics.pe_monitor(composite_log, SHORT.dnn, 0.2, 0.1)
    assert np.all(out["lam_max"] > 0) and np.all(out["lam_min"] >= -1e-9)


def test_gain_condition_report(composite_log):
    rep = diagnostics.gain_condition_report(SHORT.gains, composite_log)
    assert rep["alpha3_minus_half"] == 19.5 and rep["alpha3_condition_holds"]
    assert rep["gamma3"] == composite_log["jac_fro"].max()
    assert composite_log["jac_fro"][np.searchsorted(composite_log.t, rep["gamma3_time"])] == rep["gamma3"]
    edge = diagnostics.gain_condition_report(SHORT.gains.__class__(alpha3=0.5), composite_log)
    assert not edge["alpha3_condition_holds"]


def test_lyapunov_trend(composite_log):
    out = diagnostics.lyapunov_trend(composite_log, average=0.1, transient=0.1)
    assert len(out["average"]) == len(composite_log) - 9


# experiment

def test_self_comparison_is_zero(tmp_path):
    cfg = SimConfig(duration=0.2, window=(0.1, 0.2))
    rep, logs = compare_experiment(cfg, [0], tmp_path, controllers=("baseline", "baseline"))
    assert rep.valid
    assert all(v == 0.0 for v in rep.median_decrease.values())
    a = (tmp_path / "baseline" / "baseline_seed0.csv").read_bytes()
    b = (tmp_path / "composite" / "baseline_seed0.csv").read_bytes()
    assert a == b
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config_hash"] == cfg.config_hash() and doc["seeds"] == [0]


def test_divergence_invalidates_report():
    cfg = SimConfig(duration=0.2, window=(0.1, 0.2), blowup=0.5)
    rep, _ = compare_experiment(cfg, [0])
    assert not rep.valid and len(rep.failures) == 2
    assert rep.to_dict()["median_percent_decrease"] == {}


def test_seed_list():
    assert seed_list(SimConfig(seed=3), 3) == [3, 4, 5]
    with pytest.raises(ValueError):
        seed_list(SimConfig(), 0)
