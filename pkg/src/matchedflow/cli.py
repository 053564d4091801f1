"""Command-line front end.

Every subcommand writes into ``--out DIR`` and records the resolved
configuration there (``config.ini``), so ``--config DIR/config.ini``
replays a run byte for byte.

Exit codes: 0 ok, 2 configuration, 3 data, 4 numerical, 5 I/O.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .econo import SPEC_REGRESSORS, fama_macbeth, pooled_fe
from .errors import ConfigError, DataError, DomainError, NumericError
from .mc import ROBUSTNESS_GRID, SAMPLE_SIZES, ExperimentSummary, run_experiment, run_sweep
from .signal import analytic_snr, turnover_moments, uniform_turnover_moments

log = logging.getLogger("matchedflow")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 2, 3, 4, 5
HIST_BINS = 40


# ---------------------------------------------------------------------------
# plot data

def emit_plot_data(results, path) -> list[Path]:
    """Write plot-ready CSV files for an experiment summary or sweep rows.

    Experiment: ``correlation_hist.csv`` (per-method histogram of
    per-simulation correlations) and ``mean_ci.csv`` (mean with a 95%
    interval, ``1.96 * std / sqrt(n_sims)``). Sweep rows: one
    ``sweep_<parameter>.csv`` curve per parameter.
    """
    path = Path(path)
    if results is None or (not isinstance(results, ExperimentSummary) and not list(results)):
        warnings.warn("no results to plot; nothing written", RuntimeWarning, stacklevel=2)
        return []
    io.ensure_dir(path)
    written = []
    if isinstance(results, ExperimentSummary):
        hist = path / "correlation_hist.csv"
        with io._open_w(hist) as fh:
            fh.write("method,bin_left,bin_right,count\n")
            for method, rho in (("tv", results.rho_tv), ("mc", results.rho_mc)):
                counts, edges = np.histogram(rho, bins=HIST_BINS)
                for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
                    fh.write(f"{method},{io.fmt(lo)},{io.fmt(hi)},{int(c)}\n")
        ci = path / "mean_ci.csv"
        with io._open_w(ci) as fh:
            fh.write("method,mean,ci_low,ci_high\n")
            for method, mean, std in (("tv", results.mean_tv, results.std_tv),
                                      ("mc", results.mean_mc, results.std_mc)):
                half = 1.96 * std / math.sqrt(results.n_sims)
                fh.write(f"{method},{io.fmt(mean)},{io.fmt(mean - half)},"
                         f"{io.fmt(mean + half)}\n")
        return [hist, ci]

    by_param = {}
    for row in results:
        by_param.setdefault(row.parameter, []).append(row)
    for param, rows in by_param.items():
        curve = path / f"sweep_{param}.csv"
        with io._open_w(curve) as fh:
            fh.write("value,rho_tv,rho_mc,ratio,analytic_tv,analytic_mc\n")
            for r in rows:
                fh.write(",".join([r.value] + [io.fmt(v) for v in (
                    r.rho_tv, r.rho_mc, r.ratio, r.analytic_tv, r.analytic_mc)]) + "\n")
        written.append(curve)
    return written


# ---------------------------------------------------------------------------
# subcommands

def _resolve(args):
    rc = io.read_config(args.config) if args.config else io.parse_config("", "baseline")
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "sims", None) is not None:
        overrides["n_sims"] = args.sims
    if getattr(args, "stocks", None) is not None:
        overrides["n_stocks"] = args.stocks
    if overrides:
        rc.simulation = rc.simulation.replace(**overrides)
        rc.provenance.update({f"simulation.{k}": "cli" for k in overrides})
    return rc


def _save_config(rc, out):
    io.write_config(rc, out / "config.ini")


def cmd_simulate(args):
    rc = _resolve(args)
    out = io.ensure_dir(args.out)
    cfg = rc.simulation
    summary = run_experiment(cfg, threads=args.threads)
    _save_config(rc, out)
    io.write_table(summary, out / "experiment.csv", "experiment",
                   config=rc.as_dict(), seed=cfg.seed)
    emit_plot_data(summary, out / "plots")
    print(f"rho_tv  mean {summary.mean_tv:.4f}  std {summary.std_tv:.4f}  "
          f"min/max {summary.min_tv:.4f}/{summary.max_tv:.4f}")
    print(f"rho_mc  mean {summary.mean_mc:.4f}  std {summary.std_mc:.4f}  "
          f"min/max {summary.min_mc:.4f}/{summary.max_mc:.4f}")
    p = "< 1e-300" if summary.p_below_floor else f"{summary.p_value:.3g}"
    print(f"ratio {summary.ratio_mc_tv:.3f}   paired t {summary.paired_t:.2f}   p {p}")
    return 0


def _sweep_plan(args, rc):
    if args.axis:
        text = args.values if args.values is not None else rc.sweep["values"]
        values = io.parse_sweep_values(args.axis, text)
        if not values:
            values = ROBUSTNESS_GRID.get(args.axis, SAMPLE_SIZES)
        return [(args.axis, values)]
    if rc.provenance.get("sweep.axis") == "file":
        return [(rc.sweep["axis"], rc.sweep_values() or ROBUSTNESS_GRID.get(
            rc.sweep["axis"], SAMPLE_SIZES))]
    return list(ROBUSTNESS_GRID.items()) + [("n_stocks", SAMPLE_SIZES)]


def cmd_sweep(args):
    rc = _resolve(args)
    out = io.ensure_dir(args.out)
    per_point = args.sims_per_point or rc.sweep["sims_per_point"]
    _save_config(rc, out)
    all_rows = []
    for axis, values in _sweep_plan(args, rc):
        rows = run_sweep(rc.simulation, axis, values, sims_per_point=per_point,
                         threads=args.threads)
        io.write_table(rows, out / f"sweep_{axis}.csv", "sweep", config=rc.as_dict(),
                       seed=rc.simulation.seed, extra={"sims_per_point": per_point})
        for r in rows:
            print(f"{r.scenario:<28} rho_tv {r.rho_tv:.3f}  rho_mc {r.rho_mc:.3f}  "
                  f"ratio {r.ratio:.2f}")
        all_rows.extend(rows)
    emit_plot_data(all_rows, out / "plots")
    return 0


def cmd_moments(args):
    rc = _resolve(args)
    a = args.a if args.a is not None else rc.simulation.tau_min
    b = args.b if args.b is not None else rc.simulation.tau_max
    try:
        m = uniform_turnover_moments(a, b)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"E[tau]     = {m.e_tau:.6g}")
    print(f"E[tau^2]   = {m.e_tau_sq:.6g}")
    print(f"E[tau^-1]  = {m.e_inv_tau:.6g}")
    print(f"E[tau^-2]  = {m.e_inv_tau_sq:.6g}")
    print(f"1/E[tau]^2 = {1 / m.e_tau**2:.6g}")
    if args.out:
        out = io.ensure_dir(args.out)
        io.write_table(m, out / "moments.csv", "moments", config={"a": a, "b": b})
    return 0


def cmd_analytic(args):
    rc = _resolve(args)
    report = analytic_snr(rc.simulation, turnover_moments(rc.simulation))
    print(f"corr_mc {report.corr_mc:.4f}   snr_mc {report.snr_mc:.4f}")
    print(f"corr_tv {report.corr_tv:.4f}   snr_tv {report.snr_tv:.4f}")
    print(f"snr ratio (mc/tv) {report.snr_ratio:.4f}")
    if args.out:
        out = io.ensure_dir(args.out)
        _save_config(rc, out)
        io.write_table(report, out / "snr.csv", "snr", config=rc.as_dict(),
                       seed=rc.simulation.seed)
    return 0


def cmd_estimate(args):
    rc = _resolve(args)
    if args.horizon is not None:
        rc.regression["horizon"] = args.horizon
    if args.dependent is not None:
        rc.regression["dependent"] = args.dependent
    specs = list(SPEC_REGRESSORS) if args.spec == "all" else [args.spec or rc.regression["spec"]]
    panel, report = io.read_panel(args.panel)
    log.info(report.summary())
    for line, reason in report.rejections[:20]:
        log.warning("line %d rejected: %s", line, reason)
    if report.n_accepted == 0:
        raise DataError(f"{args.panel}: no valid observations")
    out = io.ensure_dir(args.out)
    _save_config(rc, out)
    with io._open_w(out / "ingest_report.csv") as fh:
        fh.write("line,reason\n")
        for line, reason in report.rejections:
            fh.write(f"{line},\"{reason}\"\n")

    meta = {"panel": str(args.panel), "rows": report.n_rows,
            "rejected": report.n_rejected}
    if args.method in ("fm", "both"):
        fm = {name: fama_macbeth(panel, rc.regression_spec(name)) for name in specs}
        io.write_table(fm, out / "fm.csv", "fm", config=rc.as_dict(), extra=meta)
        for name, res in fm.items():
            terms = "  ".join(f"{t} {res.params[t]:.4g} (t={res.tstats[t]:.2f})"
                              for t in res.params.index if t != "const")
            print(f"FM {name:<6} {terms}  avgR2 {res.avg_r2:.4g}  days {res.n_days}")
    if args.method in ("fe", "both"):
        fe = {name: pooled_fe(panel, rc.regression_spec(name)) for name in specs}
        io.write_table(fe, out / "fe.csv", "fe", config=rc.as_dict(), extra={
            **meta, "small_sample": {k: v.small_sample for k, v in fe.items()}})
        for name, res in fe.items():
            terms = "  ".join(f"{t} {res.params[t]:.4g} (t={res.tstats[t]:.2f})"
                              for t in res.params.index)
            print(f"FE {name:<6} {terms}  within R2 {res.r2_within:.4g}")
    return 0


def cmd_report(args):
    out = Path(args.out)
    tables = sorted(out.rglob("*.csv")) if out.is_dir() else []
    if not tables:
        warnings.warn(f"no result tables under {out}; nothing to report", RuntimeWarning,
                      stacklevel=2)
        return 0
    lines = [f"# Run report: {out}", ""]
    cfg = out / "config.ini"
    if cfg.is_file():
        lines += ["## Configuration", "", "```ini", cfg.read_text().rstrip(), "```", ""]
    for t in tables:
        rel = t.relative_to(out)
        lines += [f"## [{rel}]({rel})", ""]
        meta = io.meta_path(t)
        if meta.is_file():
            lines.append(f"metadata: [{meta.name}]({meta.relative_to(out)})")
            lines.append("")
        lines += ["```", t.read_text().rstrip(), "```", ""]
    with io._open_w(out / "report.md") as fh:
        fh.write("\n".join(lines))
    print(out / "report.md")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="matchedflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    def common(sp, out_required=True):
        sp.add_argument("--config", help="INI run configuration, or 'baseline'")
        sp.add_argument("--out", required=out_required, help="run directory")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads, 0 = auto; never changes results")
        return sp

    s = common(sub.add_parser("simulate", help="baseline Monte Carlo experiment"))
    s.add_argument("--sims", type=int)
    s.add_argument("--stocks", type=int)
    s.set_defaults(func=cmd_simulate)

    s = common(sub.add_parser("sweep", help="robustness sweeps"))
    s.add_argument("--sims", type=int, dest="sims_per_point", help="simulations per point")
    s.add_argument("--stocks", type=int)
    s.add_argument("--axis", choices=("sigma_alpha", "sigma_zeta", "turnover_range",
                                      "n_stocks"))
    s.add_argument("--values", help="comma list; turnover pairs as lo:hi")
    s.set_defaults(func=cmd_sweep)

    s = common(sub.add_parser("moments", help="uniform turnover moments"), out_required=False)
    s.add_argument("--a", type=float, help="lower turnover bound")
    s.add_argument("--b", type=float, help="upper turnover bound")
    s.set_defaults(func=cmd_moments)

    s = common(sub.add_parser("analytic", help="closed-form SNR and correlations"),
               out_required=False)
    s.set_defaults(func=cmd_analytic)

    s = common(sub.add_parser("estimate", help="Fama-MacBeth / pooled FE on a panel"))
    s.add_argument("--panel", required=True)
    s.add_argument("--horizon", type=int, choices=(1, 5, 20))
    s.add_argument("--dependent", choices=("forward_return", "log_abs_flow"))
    s.add_argument("--spec", choices=("mc", "tv", "horse", "all"))
    s.add_argument("--method", choices=("fm", "fe", "both"), default="fm")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("report", help="bundle a run directory into report.md")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DomainError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
