"""File formats: stock-day panels, run configurations and result tables.

Panel files
    CSV with header ``date,stock_id,flow,market_cap,traded_value,return``,
    ISO-8601 dates and decimal numbers. Rows that fail validation are
    rejected and reported with their line number; nothing is coerced.

Run configuration
    INI document with optional sections ``[simulation]``, ``[sweep]`` and
    ``[regression]``. Missing keys take the baseline defaults; unknown keys
    are an error.

Result tables
    CSV with a fixed column order per table kind, floats written to six
    significant digits, plus a ``<name>.meta.json`` sidecar holding the kind,
    columns, package version, seed and a hash of the resolved configuration.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .dgp import PANEL_COLUMNS, SimConfig
from .econo import SPEC_REGRESSORS, RegressionSpec
from .errors import ConfigError, DataError
from .mc import SWEEP_AXES

PANEL_HEADER = ",".join(PANEL_COLUMNS)

TABLE_COLUMNS = {
    "experiment": ("method", "mean", "std", "min", "max"),
    "sweep": ("scenario", "rho_tv", "rho_mc", "ratio", "parameter", "value",
              "n_sims", "analytic_tv", "analytic_mc"),
    "fm": ("spec", "term", "coef", "se", "t", "avg_r2", "n_obs", "n_days",
           "avg_stocks_per_day"),
    "fe": ("spec", "term", "coef", "se", "t", "r2_within", "n_obs", "n_stocks",
           "n_days"),
    "snr": ("method", "cov", "var_signal", "var_r", "snr", "corr"),
    "moments": ("moment", "value"),
}


# ---------------------------------------------------------------------------
# panels

@dataclass
class IngestReport:
    n_rows: int = 0
    n_accepted: int = 0
    rejections: list = field(default_factory=list)  # (line number, reason)

    @property
    def n_rejected(self):
        return len(self.rejections)

    def summary(self):
        return (f"{self.n_rows} data rows: {self.n_accepted} accepted, "
                f"{self.n_rejected} rejected")


def _parse_floats(texts):
    arr = np.asarray(texts, dtype=object)
    try:
        return arr.astype(float), np.zeros(len(arr), dtype=bool)
    except (ValueError, TypeError):
        out = np.empty(len(arr))
        bad = np.zeros(len(arr), dtype=bool)
        for i, s in enumerate(arr):
            try:
                out[i] = float(s)
            except ValueError:
                out[i] = np.nan
                bad[i] = True
        return out, bad


def read_panel(path) -> tuple[pd.DataFrame, IngestReport]:
    """Load and validate a panel file.

    Returns
    -------
    panel : pandas.DataFrame
        Accepted rows in file order, ``date`` and ``stock_id`` as strings.
    report : IngestReport
        Row counts and ``(line, reason)`` for every rejected row.

    Raises
    ------
    DataError
        Missing file or malformed header.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"panel file not found: {path}")
    report = IngestReport()
    good_lines, rows = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(PANEL_COLUMNS):
            raise DataError(f"{path}: header must be exactly {PANEL_HEADER!r}, "
                            f"got {','.join(header or [])!r}")
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            report.n_rows += 1
            if len(row) != len(PANEL_COLUMNS):
                report.rejections.append(
                    (line, f"expected {len(PANEL_COLUMNS)} fields, got {len(row)}"))
                continue
            good_lines.append(line)
            rows.append(row)

    if not rows:
        return pd.DataFrame({c: pd.Series(dtype=float if c not in ("date", "stock_id")
                                          else object) for c in PANEL_COLUMNS}), report

    cols = list(zip(*rows))
    lines = np.array(good_lines)
    reasons = [[] for _ in rows]

    dates = np.array(cols[0], dtype=object)
    parsed = pd.to_datetime(pd.Series(dates), format="%Y-%m-%d", errors="coerce")
    iso = pd.Series(dates).str.fullmatch(r"\d{4}-\d{2}-\d{2}")
    for i in np.flatnonzero(parsed.isna().to_numpy() | ~iso.to_numpy()):
        reasons[i].append("invalid date")
    ids = np.array(cols[1], dtype=object)
    for i in np.flatnonzero(np.array([not s.strip() for s in ids])):
        reasons[i].append("empty stock_id")

    numeric = {}
    for name, texts in zip(PANEL_COLUMNS[2:], cols[2:]):
        vals, bad = _parse_floats(texts)
        bad |= ~np.isfinite(vals)
        for i in np.flatnonzero(bad):
            reasons[i].append(f"non-numeric {name}")
        numeric[name] = vals
    for name in ("market_cap", "traded_value"):
        vals = numeric[name]
        with np.errstate(invalid="ignore"):
            nonpos = np.isfinite(vals) & (vals <= 0)
        for i in np.flatnonzero(nonpos):
            reasons[i].append(f"nonpositive {name}")

    seen = set()
    for i, key in enumerate(zip(dates, ids)):
        if reasons[i]:
            continue
        if key in seen:
            reasons[i].append("duplicate (date, stock_id)")
        else:
            seen.add(key)

    ok = np.array([not r for r in reasons])
    for i in np.flatnonzero(~ok):
        report.rejections.append((int(lines[i]), "; ".join(reasons[i])))
    report.rejections.sort()
    report.n_accepted = int(ok.sum())

    panel = pd.DataFrame({"date": dates[ok], "stock_id": ids[ok],
                          **{k: v[ok] for k, v in numeric.items()}})
    return panel, report


def _fmt_exact(x):
    return repr(float(x))


def write_panel(panel: pd.DataFrame, path) -> None:
    """Write a panel with shortest round-trip float formatting."""
    missing = [c for c in PANEL_COLUMNS if c not in panel.columns]
    if missing:
        raise DataError(f"panel lacks columns {missing}")
    with _open_w(path) as fh:
        fh.write(PANEL_HEADER + "\n")
        for row in panel[list(PANEL_COLUMNS)].itertuples(index=False):
            fh.write(",".join([str(row[0]), str(row[1])] +
                              [_fmt_exact(v) for v in row[2:]]) + "\n")


# ---------------------------------------------------------------------------
# configuration

SIM_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
SWEEP_DEFAULTS = {"axis": "sigma_alpha", "values": "", "sims_per_point": 200}
REGRESSION_DEFAULTS = {
    "dependent": "forward_return", "horizon": 1, "spec": "mc",
    "standardize_within_day": True, "winsor_lower": 0.005, "winsor_upper": 0.995,
    "winsor_scope": "pooled", "log_constant": 1.0,
}
_REG_TYPES = {"dependent": "str", "horizon": "int", "spec": "str",
              "standardize_within_day": "bool", "winsor_lower": "float",
              "winsor_upper": "float", "winsor_scope": "str", "log_constant": "float"}
_SWEEP_TYPES = {"axis": "str", "values": "str", "sims_per_point": "int"}


@dataclass
class RunConfig:
    """Fully resolved run configuration.

    ``provenance`` maps ``"section.key"`` to ``"file"`` or ``"default"``.
    """

    simulation: SimConfig = field(default_factory=SimConfig)
    sweep: dict = field(default_factory=lambda: dict(SWEEP_DEFAULTS))
    regression: dict = field(default_factory=lambda: dict(REGRESSION_DEFAULTS))
    provenance: dict = field(default_factory=dict)

    def regression_spec(self, name: str | None = None) -> RegressionSpec:
        r = self.regression
        return RegressionSpec(
            dependent=r["dependent"], regressors=SPEC_REGRESSORS[name or r["spec"]],
            horizon=r["horizon"], standardize_within_day=r["standardize_within_day"],
            winsor_bounds=(r["winsor_lower"], r["winsor_upper"]),
            winsor_scope=r["winsor_scope"], log_constant=r["log_constant"])

    def sweep_values(self):
        return parse_sweep_values(self.sweep["axis"], self.sweep["values"])

    def hash(self) -> str:
        return config_hash(self.as_dict())

    def as_dict(self):
        return {"simulation": self.simulation.to_dict(), "sweep": dict(self.sweep),
                "regression": dict(self.regression)}


def parse_sweep_values(axis, text):
    """``"0.01, 0.03"`` or, for turnover ranges, ``"0.001:0.003, 0.0005:0.01"``."""
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    try:
        if axis == "turnover_range":
            return [tuple(float(p) for p in s.split(":", 1)) for s in items]
        if axis == "n_stocks":
            return [int(s) for s in items]
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"[sweep] values: cannot parse {text!r} for axis {axis}") from exc


def _convert(raw, kind, where):
    text = raw.strip()
    try:
        if kind in ("int", int):
            return int(text)
        if kind in ("float", float):
            return float(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        name = kind if isinstance(kind, str) else kind.__name__
        raise ConfigError(f"{where}: expected {name}, got {raw!r}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        try:
            parser.read_string(text, source=source)
        except configparser.MissingSectionHeaderError:
            parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
            parser.optionxform = str
            parser.read_string("[simulation]\n" + text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    schema = {"simulation": {k: v for k, v in SIM_TYPES.items()},
              "sweep": _SWEEP_TYPES, "regression": _REG_TYPES}
    values = {"simulation": SimConfig().to_dict(), "sweep": dict(SWEEP_DEFAULTS),
              "regression": dict(REGRESSION_DEFAULTS)}
    provenance = {f"{s}.{k}": "default" for s in values for k in values[s]}
    for section in parser.sections():
        if section not in schema:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in schema[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            values[section][key] = _convert(raw, schema[section][key],
                                            f"{source} [{section}] {key}")
            provenance[f"{section}.{key}"] = "file"

    try:
        sim = SimConfig(**values["simulation"])
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if values["sweep"]["axis"] not in SWEEP_AXES:
        raise ConfigError(f"{source} [sweep] axis: unknown axis {values['sweep']['axis']!r}")
    parse_sweep_values(values["sweep"]["axis"], values["sweep"]["values"])
    if values["regression"]["spec"] not in SPEC_REGRESSORS:
        raise ConfigError(f"{source} [regression] spec: expected one of "
                          f"{tuple(SPEC_REGRESSORS)}")
    rc = RunConfig(simulation=sim, sweep=values["sweep"],
                   regression=values["regression"], provenance=provenance)
    rc.regression_spec()  # validate
    return rc


def read_config(path) -> RunConfig:
    """Read a run configuration; ``"baseline"`` yields the defaults."""
    if str(path) == "baseline":
        return parse_config("", source="baseline")
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def _ini_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(rc: RunConfig) -> str:
    parts = []
    for section, vals in rc.as_dict().items():
        parts.append(f"[{section}]")
        parts.extend(f"{k} = {_ini_value(v)}" for k, v in vals.items())
        parts.append("")
    return "\n".join(parts)


def write_config(rc: RunConfig, path) -> None:
    with _open_w(path) as fh:
        fh.write(dump_config(rc))


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# result tables

def fmt(x) -> str:
    """Six significant digits; blank for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else f"{float(x):.6g}"
    return str(x)


def _rows_experiment(s):
    out = [("tv", s.mean_tv, s.std_tv, s.min_tv, s.max_tv),
           ("mc", s.mean_mc, s.std_mc, s.min_mc, s.max_mc),
           ("ratio_mc_tv", s.ratio_mc_tv, None, None, None),
           ("paired_t", s.paired_t, None, None, None),
           ("p_value", s.p_value, None, None, None),
           ("n_sims", s.n_sims, None, None, None)]
    return out


def _rows_sweep(rows):
    return [(r.scenario, r.rho_tv, r.rho_mc, r.ratio, r.parameter, r.value, r.n_sims,
             r.analytic_tv, r.analytic_mc) for r in rows]


def _named(results):
    return results.items() if isinstance(results, dict) else [("", results)]


def _rows_fm(results):
    out = []
    for name, res in _named(results):
        for term in res.params.index:
            out.append((name, term, res.params[term], res.std_errors[term], res.tstats[term],
                        res.avg_r2, res.n_obs, res.n_days, res.avg_stocks_per_day))
    return out


def _rows_fe(results):
    out = []
    for name, res in _named(results):
        for term in res.params.index:
            out.append((name, term, res.params[term], res.std_errors[term], res.tstats[term],
                        res.r2_within, res.n_obs, res.n_stocks, res.n_days))
    return out


def _rows_snr(s):
    return [("mc", s.cov_mc, s.var_mc, s.var_r, s.snr_mc, s.corr_mc),
            ("tv", s.cov_tv, s.var_tv, s.var_r, s.snr_tv, s.corr_tv),
            ("snr_ratio", None, None, None, s.snr_ratio, None)]


def _rows_moments(m):
    return list(m.to_dict().items())


_ROWS = {"experiment": _rows_experiment, "sweep": _rows_sweep, "fm": _rows_fm,
         "fe": _rows_fe, "snr": _rows_snr, "moments": _rows_moments}


def _open_w(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_table(rows, path, kind: str, config=None, seed=None, extra=None) -> Path:
    """Write a result table and its metadata sidecar.

    Parameters
    ----------
    rows
        ``ExperimentSummary`` (experiment), sequence of ``SweepRow`` (sweep),
        ``FMResult``/``FEResult`` or a dict of them keyed by spec name
        (fm/fe), ``SnrReport`` (snr) or ``TurnoverMoments`` (moments).
    kind : {"experiment", "sweep", "fm", "fe", "snr", "moments"}
    config : dict or dataclass, optional
        Hashed into the sidecar.
    """
    if kind not in TABLE_COLUMNS:
        raise ValueError(f"unknown table kind {kind!r}")
    cols = TABLE_COLUMNS[kind]
    body = _ROWS[kind](rows)
    with _open_w(path) as fh:
        fh.write(",".join(cols) + "\n")
        for r in body:
            fh.write(",".join(fmt(v) for v in r) + "\n")
    if dataclasses.is_dataclass(config):
        config = dataclasses.asdict(config)
    meta = {"kind": kind, "columns": list(cols), "version": __version__,
            "seed": seed, "config_hash": config_hash(config) if config is not None else None}
    if kind == "experiment":
        # the p_value row shows the floor; flag whether it was hit
        meta["p_below_floor"] = bool(rows.p_below_floor)
    if extra:
        meta.update(extra)
    with _open_w(meta_path(path)) as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return Path(path)


def read_table(path) -> pd.DataFrame:
    return pd.read_csv(path, keep_default_na=True)


def ensure_dir(path) -> Path:
    path = Path(path)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {path}: {exc.strerror or exc}") from exc
    return path
