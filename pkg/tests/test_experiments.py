import json
import math

import numpy as np
import pytest

from holowidths import cli
from holowidths import experiments as ex
from holowidths.experiments import ExperimentConfig, Table, fit_rate
from holowidths.widths import known_constant, measure_moments, theta_lower_bound_unknown
from holowidths.anisotropy import make_flat_b


# --- rate fitting ------------------------------------------------------------

def test_fit_exact_power_law():
    m = np.array([8, 16, 32, 64, 128])
    fit = fit_rate(zip(m, 3.0 * m ** -1.5))
    assert fit.slope == pytest.approx(-1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    np.testing.assert_allclose(fit.predict(m), 3.0 * m ** -1.5, rtol=1e-12)


def test_fit_constant_and_noisy():
    assert fit_rate([(1, 2.0), (2, 2.0), (4, 2.0)]).slope == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    m = np.geomspace(8, 1024, 12)
    fit = fit_rate(zip(m, m ** -1.0 * np.exp(rng.normal(0, 0.02, m.size))))
    assert abs(fit.slope + 1.0) <= 0.05


def test_fit_guards():
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, 0.5)])
    with pytest.warns(RuntimeWarning):
        fit = fit_rate([(1, 1.0), (2, 0.5), (4, 0.25), (8, 0.0)])
    assert fit.dropped == 1 and fit.slope == pytest.approx(-1.0)


# --- config --------------------------------------------------------------------

def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(pipeline="bogus")
    with pytest.raises(ValueError):
        ExperimentConfig(m_grid=[8, 8])
    with pytest.raises(ValueError):
        ExperimentConfig(pipeline="unknown", m_grid=[2, 4])
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"pipeline": "known", "colour": 1})
    cfg = ExperimentConfig(pipeline="unknown", m_grid=[16, 32], trials=3, seed=5)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.load(path) == cfg


def test_trial_seed_independent_cells():
    seeds = {ex.trial_seed(1, m, t) for m in (16, 32) for t in range(5)}
    assert len(seeds) == 10 and all(0 <= s < 2 ** 63 for s in seeds)
    assert ex.trial_seed(1, 16, 0) == ex.trial_seed(1, 16, 0)


def test_csv_float_format():
    t = Table("t", ["a", "b", "c"], [[1, 0.1, True], [2, None, "x"]])
    assert t.to_csv() == "a,b,c\n1,0.10000000000000001,1\n2,,x\n"


def test_run_pool_sorted_regardless_of_threads(monkeypatch):
    for n in ("1", "3"):
        monkeypatch.setenv("HOLOWIDTHS_THREADS", n)
        assert ex.worker_count() == int(n)
        assert ex.run_pool(lambda x: -x, [3, 1, 2]) == [-3, -2, -1]


# --- pipelines -----------------------------------------------------------------

def test_known_pipeline_error_equals_tail():
    t = ex.run_known_convergence(ExperimentConfig(m_grid=[2, 4, 8, 16], dims=300))
    err, tail = t.column("error"), t.column("tail")
    np.testing.assert_allclose(err, tail, rtol=1e-10)
    assert all(a > b for a, b in zip(err, err[1:]))
    assert t.column("set_size") == [2, 4, 8, 16]
    assert "error_vs_m" in t.fits


def test_known_pipeline_full_support():
    # S = {0, e_1..e_{m-1}} covers all 10 active coordinates once m >= 11
    t = ex.run_known_convergence(ExperimentConfig(m_grid=[10, 11, 20], dims=10))
    assert t.column("tail") == [pytest.approx(0.01), 0.0, 0.0]
    assert max(t.column("error")[1:]) <= 1e-14


def test_known_pipeline_holomorphic_family():
    t = ex.run_known_convergence(ExperimentConfig(m_grid=[4, 8, 16], dims=100, family="holomorphic"))
    err = t.column("error")
    assert all(a >= b for a, b in zip(err, err[1:]))


def test_unknown_pipeline_rows_and_ceiling():
    t = ex.run_unknown_convergence(ExperimentConfig(pipeline="unknown", m_grid=[16, 32, 64], dims=40, trials=2))
    assert [(r[0], r[1]) for r in t.rows] == [(m, k) for m in (16, 32, 64) for k in range(2)]
    for err, ceil in zip(t.column("error"), t.column("ceiling")):
        assert 0 <= err <= ceil
    assert set(t.fits) == {"mean_vs_m_over_log2m", "mean_vs_m"}
    summ = ex.unknown_summary(t)
    assert [s[0] for s in summ] == [16, 32, 64]


def test_width_table_columns():
    cfg = ExperimentConfig(pipeline="widths", m_grid=[1, 4, 16], dims=100)
    t = ex.run_width_tables(cfg)
    u = measure_moments("uniform")
    unk = theta_lower_bound_unknown(0.5, u)
    assert set(t.column("theta_lb_unknown")) == {unk}
    for r in t.rows:
        fam, m, N = r[0], r[1], r[2]
        row = dict(zip(t.header, r))
        assert N == 2 * m and row["upper_fit"] is None
        if fam == "flat":
            want = known_constant(make_flat_b(m, 0.5), u) * 0.25 * m ** -1.5
            assert row["rate_rhs"] == pytest.approx(want, rel=1e-12)
            assert row["theta_lb_known"] == pytest.approx(want, rel=1e-10)
            assert row["stesin"] == pytest.approx(0.25 * m ** -1.5, rel=1e-10)
        elif fam == "log":
            assert row["theta_lb_known"] >= row["rate_rhs"]
        else:
            assert row["rate_rhs"] is None


def test_impossibility_pipeline():
    t = ex.run_impossibility_demo(ExperimentConfig(pipeline="impossibility", m_grid=[16, 64], trials=2))
    J = max(t.column("cross_max_dim"))
    for r in t.rows:
        row = dict(zip(t.header, r))
        if row["kind"] == "out_of_range":
            assert J < row["j"] <= J + 100
            assert row["deficit"] <= 1e-10
        else:
            assert row["j"] == J
    summ = ex.impossibility_summary(t)
    assert summ["out_of_range"][64] >= 10 * summ["control"][64]


# --- selftest and CLI ------------------------------------------------------------

def test_selftest_deterministic_across_threads(tmp_path, monkeypatch):
    outs = []
    for n in ("1", "4"):
        monkeypatch.setenv("HOLOWIDTHS_THREADS", n)
        d = tmp_path / n
        ex.selftest(3, d, plots=True)
        outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert outs[0] == outs[1]
    assert {"known_convergence.csv", "unknown_convergence.csv", "width_table.csv",
            "impossibility.csv", "known_convergence.svg"} <= set(outs[0])


def test_cli_known_with_config(tmp_path, capsys):
    cfg = tmp_path / "k.json"
    cfg.write_text(json.dumps({"m_grid": [2, 4, 8], "dims": 50}))
    assert cli.main(["known", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-plot"]) == 0
    out = capsys.readouterr().out
    assert "error_vs_m: slope=" in out
    text = (tmp_path / "o" / "known_convergence.csv").read_text()
    assert text.splitlines()[0] == "m,set_size,error,tail"
    assert not (tmp_path / "o" / "known_convergence.svg").exists()


def test_cli_rejects_mismatched_config(tmp_path):
    cfg = tmp_path / "k.json"
    cfg.write_text(json.dumps({"pipeline": "unknown", "m_grid": [16, 32]}))
    with pytest.raises(SystemExit):
        cli.main(["known", "--config", str(cfg), "--out", str(tmp_path)])


def test_cli_widths_table(tmp_path):
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({"m_grid": [1, 2, 4], "dims": 50}))
    assert cli.main(["widths", "table", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "width_table.csv").exists() and (tmp_path / "width_table.svg").exists()
