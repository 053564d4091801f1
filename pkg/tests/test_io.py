import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from matchedflow import io
from matchedflow.dgp import SimConfig, simulate_panel
from matchedflow.econo import RegressionSpec, fama_macbeth, pooled_fe
from matchedflow.errors import ConfigError, DataError
from matchedflow.mc import run_experiment, run_sweep
from matchedflow.signal import analytic_snr, uniform_turnover_moments

HEADER = "date,stock_id,flow,market_cap,traded_value,return\n"
CANONICAL = (HEADER
             + "2021-06-01,AAA,1234.5,1.5e9,2250000.0,0.0125\n"
             + "2021-06-01,BBB,-87.25,300000000.0,1200000.0,-0.003\n"
             + "2021-06-02,AAA,0.1,1.51e9,3000000.0,1e-05\n")


def _write(tmp_path, text, name="panel.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- panels -----------------------------------------------------------------

def test_header_only_file(tmp_path):
    panel, report = io.read_panel(_write(tmp_path, HEADER))
    assert len(panel) == 0 and list(panel.columns) == list(io.PANEL_HEADER.split(","))
    assert report.n_rows == report.n_accepted == report.n_rejected == 0


def test_nonpositive_market_cap_rejected(tmp_path):
    text = HEADER + "2021-06-01,AAA,1.0,0,100.0,0.01\n2021-06-01,BBB,1.0,5.0,100.0,0.01\n"
    panel, report = io.read_panel(_write(tmp_path, text))
    assert report.rejections == [(2, "nonpositive market_cap")]
    assert panel["stock_id"].tolist() == ["BBB"]


def test_bad_rows_get_reasons_and_lines(tmp_path):
    text = (HEADER
            + "2021-13-01,A,1,1,1,0\n"       # line 2
            + "2021-06-01,,1,1,1,0\n"        # line 3
            + "2021-06-01,B,abc,1,1,0\n"     # line 4
            + "2021-06-01,C,1,1,-2,0\n"      # line 5
            + "2021-06-01,D,1,1,1\n"         # line 6
            + "2021-06-01,E,1,1,1,0\n"       # line 7
            + "2021-06-01,E,2,1,1,0\n"       # line 8
            + "2021/06/01,F,1,1,1,0\n")      # line 9
    panel, report = io.read_panel(_write(tmp_path, text))
    reasons = dict(report.rejections)
    assert reasons[2] == "invalid date"
    assert reasons[3] == "empty stock_id"
    assert reasons[4] == "non-numeric flow"
    assert reasons[5] == "nonpositive traded_value"
    assert "fields" in reasons[6]
    assert reasons[8] == "duplicate (date, stock_id)"
    assert reasons[9] == "invalid date"
    assert [ln for ln, _ in report.rejections] == sorted(reasons)
    assert panel["stock_id"].tolist() == ["E"] and panel["flow"].tolist() == [1.0]
    assert report.n_accepted + report.n_rejected == report.n_rows == 8


def test_malformed_header_is_fatal(tmp_path):
    with pytest.raises(DataError):
        io.read_panel(_write(tmp_path, "date,stock,flow,market_cap,traded_value,return\n"))
    with pytest.raises(DataError):
        io.read_panel(_write(tmp_path, ""))
    with pytest.raises(DataError, match="not found"):
        io.read_panel(tmp_path / "missing.csv")


def test_canonical_round_trip_is_bit_identical(tmp_path):
    src = _write(tmp_path, CANONICAL)
    panel, report = io.read_panel(src)
    assert report.n_accepted == 3
    # each value is its source text parsed once
    assert panel["market_cap"].tolist() == [float("1.5e9"), 300000000.0, float("1.51e9")]
    dst = tmp_path / "copy.csv"
    io.write_panel(panel, dst)
    again, _ = io.read_panel(dst)
    pd.testing.assert_frame_equal(panel, again, check_exact=True)
    io.write_panel(again, tmp_path / "copy2.csv")
    assert dst.read_bytes() == (tmp_path / "copy2.csv").read_bytes()


def test_simulated_panel_round_trip(tmp_path):
    panel = simulate_panel(SimConfig(n_stocks=20, seed=3), 5)
    io.write_panel(panel, tmp_path / "p.csv")
    back, report = io.read_panel(tmp_path / "p.csv")
    assert report.n_rejected == 0
    for col in ("flow", "market_cap", "traded_value", "return"):
        assert np.array_equal(back[col].to_numpy(), panel[col].to_numpy())


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["2020-01-02", "2020-01-03", "bad"]),
                          st.sampled_from(["A", "B", ""]),
                          st.sampled_from(["1.5", "-2", "x", "1e300"]),
                          st.sampled_from(["1", "0", "-1", "2.5"]),
                          st.sampled_from(["3", "0.1", "nan"]),
                          st.sampled_from(["0.01", "-0.5", ""])), max_size=25))
def test_row_accounting(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("acct") / "p.csv"
    path.write_text(HEADER + "".join(",".join(r) + "\n" for r in rows))
    panel, report = io.read_panel(path)
    assert report.n_accepted + report.n_rejected == report.n_rows == len(rows)
    assert len(panel) == report.n_accepted
    assert not panel.duplicated(["date", "stock_id"]).any()


# -- configuration ----------------------------------------------------------

def test_empty_config_is_baseline(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("")
    rc = io.read_config(p)
    assert rc.simulation == SimConfig()
    assert set(rc.provenance.values()) == {"default"}
    assert io.read_config("baseline").simulation == SimConfig()


def test_config_override_and_provenance(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[simulation]\nsigma_alpha = 0.10\n")
    rc = io.read_config(p)
    assert rc.simulation == SimConfig().replace(sigma_alpha=0.10)
    assert rc.provenance["simulation.sigma_alpha"] == "file"
    assert rc.provenance["simulation.sigma_zeta"] == "default"


def test_bare_keys_go_to_simulation():
    assert io.parse_config("n_stocks = 50\n").simulation.n_stocks == 50


@pytest.mark.parametrize("text, needle", [
    ("[simulation]\nsigma_alpha_typo = 1\n", "sigma_alpha_typo"),
    ("[simulation]\nn_stocks = many\n", "n_stocks"),
    ("[simulation]\nsigma_alpha = -1\n", "sigma_alpha"),
    ("[plots]\nx = 1\n", "plots"),
    ("[regression]\nhorizon = 3\n", "horizon"),
    ("[regression]\nstandardize_within_day = maybe\n", "standardize_within_day"),
    ("[sweep]\naxis = turnover_range\nvalues = 0.1-0.2\n", "values"),
])
def test_config_errors_name_the_problem(text, needle):
    with pytest.raises(ConfigError, match=needle):
        io.parse_config(text, source="run.ini")


def test_type_mismatch_reports_location():
    with pytest.raises(ConfigError, match=r"run.ini \[simulation\] n_sims"):
        io.parse_config("[simulation]\nn_sims = 1.5\n", source="run.ini")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        io.read_config(tmp_path / "nope.ini")


def test_config_round_trip(tmp_path):
    rc = io.parse_config("[simulation]\nsigma_alpha = 0.03\nseed = 17\n"
                         "[sweep]\naxis = turnover_range\nvalues = 0.001:0.003, 0.0001:0.02\n"
                         "[regression]\nspec = horse\nhorizon = 5\nwinsor_scope = per_day\n")
    io.write_config(rc, tmp_path / "a.ini")
    back = io.read_config(tmp_path / "a.ini")
    assert back.as_dict() == rc.as_dict() and back.hash() == rc.hash()
    assert back.sweep_values() == [(0.001, 0.003), (0.0001, 0.02)]
    spec = back.regression_spec()
    assert spec.regressors == ("s_mc", "s_tv") and spec.horizon == 5
    io.write_config(back, tmp_path / "b.ini")
    assert (tmp_path / "a.ini").read_bytes() == (tmp_path / "b.ini").read_bytes()


# -- result tables ----------------------------------------------------------

def _csv(path):
    return path.read_text().splitlines()


def test_fmt():
    assert io.fmt(0.123456789) == "0.123457"
    assert io.fmt(float("nan")) == "" and io.fmt(None) == ""
    assert io.fmt(7) == "7" and io.fmt(1234567.0) == "1.23457e+06"


def test_experiment_table(tmp_path):
    s = run_experiment(SimConfig(n_sims=20, n_stocks=200))
    path = io.write_table(s, tmp_path / "exp.csv", "experiment", config=SimConfig(), seed=5)
    lines = _csv(path)
    assert lines[0] == "method,mean,std,min,max"
    assert [ln.split(",")[0] for ln in lines[1:6]] == ["tv", "mc", "ratio_mc_tv", "paired_t",
                                                     "p_value"]
    assert lines[3] == f"ratio_mc_tv,{io.fmt(s.ratio_mc_tv)},,,"
    meta = json.loads(io.meta_path(path).read_text())
    assert meta["seed"] == 5 and meta["kind"] == "experiment"
    assert meta["config_hash"] == io.config_hash(SimConfig().to_dict())
    assert meta["version"]


def test_sweep_table_and_empty(tmp_path):
    rows = run_sweep(SimConfig(n_stocks=100), "sigma_zeta", (1.0, 7.0), sims_per_point=5)
    lines = _csv(io.write_table(rows, tmp_path / "s.csv", "sweep"))
    assert lines[0].startswith("scenario,rho_tv,rho_mc,ratio")
    assert lines[1].startswith("sigma_zeta=1,") and len(lines) == 3
    empty = _csv(io.write_table([], tmp_path / "e.csv", "sweep"))
    assert empty == [",".join(io.TABLE_COLUMNS["sweep"])]


def test_regression_tables(tmp_path):
    panel = simulate_panel(SimConfig(n_stocks=40, seed=2), 12)
    fm = {"horse": fama_macbeth(panel, RegressionSpec(regressors=("s_mc", "s_tv")))}
    fe = pooled_fe(panel, RegressionSpec(regressors=("s_mc",)))
    fm_lines = _csv(io.write_table(fm, tmp_path / "fm.csv", "fm"))
    assert fm_lines[0] == ",".join(io.TABLE_COLUMNS["fm"])
    assert [ln.split(",")[:2] for ln in fm_lines[1:]] == [["horse", "const"], ["horse", "s_mc"],
                                                          ["horse", "s_tv"]]
    fe_lines = _csv(io.write_table(fe, tmp_path / "fe.csv", "fe"))
    assert len(fe_lines) == 2 and fe_lines[1].startswith(",s_mc,")


def test_snr_and_moment_tables(tmp_path):
    snr = _csv(io.write_table(analytic_snr(SimConfig()), tmp_path / "snr.csv", "snr"))
    assert snr[0] == "method,cov,var_signal,var_r,snr,corr"
    assert [ln.split(",")[0] for ln in snr[1:]] == ["mc", "tv", "snr_ratio"]
    mom = io.read_table(io.write_table(uniform_turnover_moments(0.0005, 0.01),
                                       tmp_path / "m.csv", "moments"))
    assert dict(zip(mom["moment"], mom["value"]))["e_inv_tau_sq"] == 200000.0


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        io.write_table([], blocker / "sub" / "t.csv", "sweep")


def test_unknown_kind(tmp_path):
    with pytest.raises(ValueError):
        io.write_table([], tmp_path / "t.csv", "figure")
