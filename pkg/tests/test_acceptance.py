"""Acceptance suite: one check per headline criterion.

Each criterion returns ``(passed, detail)``. Under pytest every criterion is
a test, and a summary hook prints one ``PASS``/``FAIL`` line for each. Run
the file directly (``python3 tests/test_acceptance.py``) for the same lines
without pytest.
"""

import contextlib
import io
import sys
import tempfile
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import oracles  # noqa: E402

from matchedflow.cli import main  # noqa: E402
from matchedflow.dgp import SimConfig, simulate_panel  # noqa: E402
from matchedflow.econo import RegressionSpec, fama_macbeth, forward_return, \
    pooled_fe_design, winsorize, zscore_within_group  # noqa: E402
from matchedflow.mc import run_experiment, run_sweep, simulate_many  # noqa: E402
from matchedflow.signal import analytic_snr, uniform_turnover_moments  # noqa: E402

RESULTS = {}


def _within(x, lo, hi):
    return lo <= x <= hi


@lru_cache(maxsize=None)
def _baseline():
    return run_experiment(SimConfig(), threads=0)


def baseline_replication():
    s = _baseline()
    checks = {
        "mean_tv": (s.mean_tv, _within(s.mean_tv, 0.597, 0.607)),
        "mean_mc": (s.mean_mc, _within(s.mean_mc, 0.787, 0.797)),
        "ratio": (s.ratio_mc_tv, _within(s.ratio_mc_tv, 1.30, 1.34)),
        "t": (s.paired_t, s.paired_t > 100),
        "std_tv": (s.std_tv, _within(s.std_tv, 0.022, 0.030)),
        "std_mc": (s.std_mc, _within(s.std_mc, 0.013, 0.021)),
    }
    ok = all(c for _, c in checks.values())
    return ok, "  ".join(f"{k}={v:.4f}" for k, (v, _) in checks.items())


def analytic_agreement():
    s = _baseline()
    a = analytic_snr(SimConfig())
    d_mc, d_tv = abs(a.corr_mc - s.mean_mc), abs(a.corr_tv - s.mean_tv)
    return (d_mc <= 0.01 and d_tv <= 0.01,
            f"corr_mc {a.corr_mc:.4f} vs {s.mean_mc:.4f}  corr_tv {a.corr_tv:.4f} vs "
            f"{s.mean_tv:.4f}  max gap {max(d_mc, d_tv):.4f}")


def uniform_moments():
    m = uniform_turnover_moments(0.0005, 0.01)
    ok = (m.e_tau == 0.00525 and m.e_inv_tau_sq == 200000.0
          and abs(m.e_inv_tau - 315.3) <= 0.5 and abs(m.e_tau_sq / 3.5e-5 - 1) <= 0.02
          and m.e_inv_tau > 1 / m.e_tau and m.e_inv_tau_sq > m.e_inv_tau ** 2
          and m.e_tau_sq > m.e_tau ** 2)
    return ok, (f"E[tau]={m.e_tau!r}  E[tau^-2]={m.e_inv_tau_sq!r}  "
                f"E[tau^-1]={m.e_inv_tau:.2f}  E[tau^2]={m.e_tau_sq:.4g}  Jensen strict")


SWEEP_TARGETS = [
    ("sigma_alpha", (0.01, 0.03, 0.05, 0.10), (0.78, 1.20, 1.31, 1.39), 0.05),
    ("sigma_zeta", (1.0, 3.5, 7.0), (1.41, 1.32, 1.14), 0.05),
    ("turnover_range", ((0.001, 0.003), (0.0005, 0.01), (0.0001, 0.02)),
     (1.05, 1.32, 1.92), 0.10),
    ("n_stocks", (100, 500, 1000), (1.32, 1.32, 1.32), 0.08),
]


def robustness_sweeps():
    ok, parts = True, []
    for axis, values, targets, tol in SWEEP_TARGETS:
        rows = run_sweep(SimConfig(), axis, values, sims_per_point=200, threads=0)
        for row, target in zip(rows, targets):
            hit = abs(row.ratio - target) <= tol
            ok &= hit
            parts.append(f"{row.scenario}:{row.ratio:.3f}{'' if hit else '(!)'}")
    return ok, "  ".join(parts)


def degenerate_identities():
    flat = simulate_many(SimConfig(tau_min=0.004, tau_max=0.004, n_sims=50), threads=0)
    gap = max(abs(r.rho_tv - r.rho_mc) for r in flat)
    quiet = simulate_many(SimConfig(sigma_zeta=0.0, sigma_eps=0.0, n_sims=50), threads=0)
    dev = max(abs(r.rho_mc - 1.0) for r in quiet)
    return gap <= 1e-12 and dev <= 1e-9, \
        f"const tau max|rho_tv-rho_mc|={gap:.1e}  noiseless max|rho_mc-1|={dev:.1e}"


def econometric_oracles():
    notes, ok = [], True
    # Fama-MacBeth vs per-day normal equations: 20 usable days x 50 stocks
    fm_gap = 0.0
    for seed in (1, 2, 3):
        panel = simulate_panel(SimConfig(n_stocks=50, seed=seed), 21)
        for regs in (("s_mc",), ("s_tv",), ("s_mc", "s_tv")):
            res = fama_macbeth(panel, RegressionSpec(regressors=regs))
            mean, se, _, T = oracles.fama_macbeth_from_panel(panel, regs)
            ok &= T == 20
            fm_gap = max(fm_gap, np.abs(res.params.to_numpy() - mean).max(),
                         np.abs(res.std_errors.to_numpy() - se).max())
    ok &= fm_gap <= 1e-10
    notes.append(f"FM {fm_gap:.1e}")

    # pooled FE vs dummy-variable OLS up to 50 x 50, balanced and not
    rng = np.random.default_rng(8)
    fe_gap = 0.0
    for n_s, n_d, drop in ((5, 4, 0.0), (20, 15, 0.25), (50, 50, 0.0), (50, 50, 0.2)):
        keep = rng.random(n_s * n_d) >= drop
        stocks = np.repeat([f"S{i:02d}" for i in range(n_s)], n_d)[keep]
        days = np.tile([f"D{j:02d}" for j in range(n_d)],
                       n_s)[keep]
        x1, x2 = rng.normal(size=(2, keep.sum()))
        y = 0.5 * x1 - 2 * x2 + pd.factorize(stocks)[0] * 0.1 + rng.normal(size=keep.sum())
        df = pd.DataFrame({"date": days, "stock_id": stocks, "y": y, "s_mc": x1, "s_tv": x2})
        res = pooled_fe_design(df, ("s_mc", "s_tv"))
        ref, _ = oracles.dummy_ols(y, [x1, x2], list(stocks), list(days))
        fe_gap = max(fe_gap, np.abs(res.params.to_numpy() - ref).max())
    ok &= fe_gap <= 1e-8
    notes.append(f"FE {fe_gap:.1e}")

    # idempotence of the cleaning steps
    vals = rng.standard_t(2, size=5000)
    w = winsorize(vals, 0.005, 0.995)
    win_ok = np.array_equal(winsorize(w, 0.005, 0.995), w)
    frame = pd.DataFrame({"date": np.repeat(np.arange(40), 30), "x": rng.normal(size=1200)})
    z1 = zscore_within_group(frame, "x")
    z_gap = np.abs(zscore_within_group(z1, "x")["x"] - z1["x"]).max()
    ok &= win_ok and z_gap <= 1e-12
    notes.append(f"winsorize idempotent={win_ok} zscore {z_gap:.1e}")

    # forward returns vs explicit compounding
    panel = simulate_panel(SimConfig(n_stocks=30, seed=4), 40).iloc[lambda d: rng.random(
        len(d)) > 0.1]
    fr_gap = 0.0
    for h in (1, 5, 20):
        out = forward_return(panel, h)
        ref = oracles.forward_returns(list(zip(panel["date"], panel["stock_id"],
                                               panel["return"])), h)
        ok &= len(out) == len(ref)
        fr_gap = max(fr_gap, max(abs(f - ref[(d, s)]) for d, s, f in
                                 zip(out["date"], out["stock_id"], out["fwd_return"])))
    ok &= fr_gap <= 1e-12
    notes.append(f"fwd return {fr_gap:.1e}")
    return ok, "  ".join(notes)


def sign_reversal():
    panel = simulate_panel(SimConfig(n_stocks=500, seed=2024), 51, reversal=-0.02)
    res = fama_macbeth(panel, RegressionSpec(regressors=("s_mc", "s_tv")))
    b, t = res.params, res.tstats
    ok = b["s_mc"] > 0 and b["s_tv"] < 0 and abs(t["s_mc"]) > 3 and abs(t["s_tv"]) > 3
    return ok, (f"beta_mc {b['s_mc']:.4g} (t={t['s_mc']:.1f})  "
                f"beta_tv {b['s_tv']:.4g} (t={t['s_tv']:.1f})  days {res.n_days}")


def thread_determinism():
    def tables(d):
        return {p.relative_to(d): p.read_bytes() for p in sorted(Path(d).rglob("*"))
                if p.is_file()}

    with tempfile.TemporaryDirectory() as tmp:
        runs = {}
        for threads in ("1", "3", "0"):
            out = Path(tmp) / f"t{threads}"
            with contextlib.redirect_stdout(io.StringIO()):
                codes = (main(["simulate", "--sims", "200", "--seed", "77", "--threads", threads,
                               "--out", str(out / "sim")]),
                         main(["sweep", "--axis", "sigma_zeta", "--sims", "50", "--seed", "77",
                               "--threads", threads, "--out", str(out / "sweep")]))
            if codes != (0, 0):
                return False, f"exit codes {codes} at --threads {threads}"
            runs[threads] = tables(out)
        same = all(r == runs["1"] for r in runs.values())
        return same, f"{len(runs['1'])} files byte-identical across --threads 1, 3, 0: {same}"


CRITERIA = [
    ("Baseline experiment replication", baseline_replication),
    ("Analytic vs simulated correlations", analytic_agreement),
    ("Uniform turnover moments", uniform_moments),
    ("Robustness sweeps", robustness_sweeps),
    ("Degenerate identities", degenerate_identities),
    ("Econometric oracle equivalence", econometric_oracles),
    ("Horse-race sign reversal", sign_reversal),
    ("Thread-count determinism", thread_determinism),
]


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("name, check", CRITERIA, ids=[n for n, _ in CRITERIA])
def test_criterion(name, check):
    ok, detail = check()
    RESULTS[name] = (ok, detail)
    print(_line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
