"""Stock-day panel regressions for normalized order flow.

Panels are :class:`pandas.DataFrame` objects with the columns
``date, stock_id, flow, market_cap, traded_value, return`` (see
:func:`matchedflow.io.read_panel`). Two estimators are provided:

* :func:`fama_macbeth` -- one OLS per day, coefficients averaged over days,
  t-statistics from the time series of daily coefficients.
* :func:`pooled_fe` -- pooled OLS after sweeping out stock and day means,
  with standard errors clustered by stock and by date.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ConfigError, ConvergenceError, DegenerateError, DomainError, \
    InferenceError, RankError

REGRESSORS = ("s_mc", "s_tv")
DEPENDENTS = ("log_abs_flow", "forward_return")
HORIZONS = (1, 5, 20)
SPEC_REGRESSORS = {"mc": ("s_mc",), "tv": ("s_tv",), "horse": ("s_mc", "s_tv")}


# ---------------------------------------------------------------------------
# transforms

def winsorize(values, lower: float = 0.005, upper: float = 0.995) -> np.ndarray:
    """Clamp values to their ``lower`` and ``upper`` empirical quantiles.

    Quantiles are the order statistic nearest to position ``p * (n - 1)``
    (numpy's ``method="nearest"``). Because both bounds are observed values,
    winsorizing twice gives the same result as winsorizing once. NaNs are
    ignored when computing the bounds and passed through.
    """
    if not 0 <= lower < upper <= 1:
        raise DomainError(f"need 0 <= lower < upper <= 1, got ({lower}, {upper})")
    x = np.asarray(values, dtype=float)
    finite = x[~np.isnan(x)]
    if finite.size == 0:
        raise DomainError("cannot winsorize an empty sequence")
    lo, hi = np.quantile(finite, [lower, upper], method="nearest")
    return np.clip(x, lo, hi)


def zscore_within_group(panel: pd.DataFrame, field: str, group: str = "date",
                        out: str | None = None) -> pd.DataFrame:
    """Standardize ``field`` to mean 0 and sample std 1 within each group.

    Groups with fewer than two rows or zero variance are dropped; the number
    dropped is stored in ``result.attrs["zscore_excluded"]`` and reported
    with a :class:`RuntimeWarning`.
    """
    out = out or field
    g = panel.groupby(group, sort=False)[field]
    mean = g.transform("mean")
    std = g.transform(lambda s: s.std(ddof=1))
    ok = std.notna() & (std > 0)
    n_bad = int(panel.loc[~ok, group].nunique())
    res = panel.loc[ok].copy()
    res[out] = (res[field] - mean[ok]) / std[ok]
    res.attrs["zscore_excluded"] = n_bad
    if n_bad:
        warnings.warn(f"{n_bad} {group} group(s) with zero variance in {field!r} excluded",
                      RuntimeWarning, stacklevel=2)
    return res


def log_abs_flow(d, c: float = 1.0):
    """``log(|d| + c)`` for a positive constant ``c``."""
    if not c > 0:
        raise ConfigError(f"log constant must be > 0, got {c}")
    return np.log(np.abs(d) + c)


def forward_return(panel: pd.DataFrame, h: int, out: str = "fwd_return") -> pd.DataFrame:
    """Compounded return over each stock's next ``h`` trading days.

    For the row dated ``t`` the result is ``prod(1 + r[t+1 .. t+h]) - 1``,
    counting only dates on which that stock is observed. Rows without ``h``
    later observations are dropped; the count is left in
    ``result.attrs["forward_return_dropped"]``.
    """
    if h < 1:
        raise DomainError(f"horizon must be >= 1, got {h}")
    df = panel.sort_values(["stock_id", "date"], kind="mergesort")
    g = df.groupby("stock_id", sort=False)["return"]
    growth = pd.Series(1.0, index=df.index)
    for j in range(1, h + 1):
        growth = growth * (1.0 + g.shift(-j))
    df = df.assign(**{out: growth - 1.0})
    keep = df[out].notna()
    res = df.loc[keep].sort_values(["date", "stock_id"], kind="mergesort")
    res.attrs["forward_return_dropped"] = int((~keep).sum())
    return res


# ---------------------------------------------------------------------------
# specification and design

@dataclass(frozen=True)
class RegressionSpec:
    """What to regress on what, and how to prepare the variables.

    ``winsor_scope`` is ``"pooled"`` (bounds from the whole sample) or
    ``"per_day"``. Pass ``winsor_bounds=None`` to skip winsorization.
    """

    dependent: str = "forward_return"
    regressors: tuple = ("s_mc",)
    horizon: int = 1
    standardize_within_day: bool = True
    winsor_bounds: tuple | None = (0.005, 0.995)
    winsor_scope: str = "pooled"
    log_constant: float = 1.0

    def __post_init__(self):
        if self.dependent not in DEPENDENTS:
            raise ConfigError(f"dependent must be one of {DEPENDENTS}, got {self.dependent!r}")
        regs = tuple(self.regressors)
        object.__setattr__(self, "regressors", regs)
        if not regs or any(r not in REGRESSORS for r in regs) or len(set(regs)) != len(regs):
            raise ConfigError(f"regressors must be a nonempty subset of {REGRESSORS}, got {regs}")
        if self.dependent == "forward_return" and self.horizon not in HORIZONS:
            raise ConfigError(f"horizon must be one of {HORIZONS}, got {self.horizon}")
        if self.winsor_bounds is not None:
            lo, hi = self.winsor_bounds
            if not 0 <= lo < hi <= 1:
                raise ConfigError(f"winsor bounds need 0 <= lower < upper <= 1, got {self.winsor_bounds}")
        if self.winsor_scope not in ("pooled", "per_day"):
            raise ConfigError(f"winsor_scope must be 'pooled' or 'per_day', got {self.winsor_scope!r}")
        if not self.log_constant > 0:
            raise ConfigError(f"log_constant must be > 0, got {self.log_constant}")

    @classmethod
    def named(cls, name: str, **kwargs) -> RegressionSpec:
        """Spec for ``"mc"``, ``"tv"`` or ``"horse"`` (both signals)."""
        if name not in SPEC_REGRESSORS:
            raise ConfigError(f"unknown spec {name!r}; expected one of {tuple(SPEC_REGRESSORS)}")
        return cls(regressors=SPEC_REGRESSORS[name], **kwargs)


def _winsorize_column(df, col, spec):
    lo, hi = spec.winsor_bounds
    if spec.winsor_scope == "pooled":
        return winsorize(df[col].to_numpy(), lo, hi)
    return df.groupby("date", sort=False)[col].transform(
        lambda s: winsorize(s.to_numpy(), lo, hi)).to_numpy()


def prepare_design(panel: pd.DataFrame, spec: RegressionSpec,
                   standardize: bool | None = None) -> pd.DataFrame:
    """Build the regression frame: ``date, stock_id, y`` plus one column per regressor.

    Steps: normalized signals, dependent variable (dropping rows without a
    forward return), winsorization of every variable, then optional within-day
    z-scoring of the regressors.
    """
    if standardize is None:
        standardize = spec.standardize_within_day
    df = panel
    if spec.dependent == "forward_return":
        df = forward_return(df, spec.horizon)
        y = df["fwd_return"].to_numpy()
    else:
        y = log_abs_flow(df["flow"].to_numpy(), spec.log_constant)
    design = pd.DataFrame({"date": df["date"].to_numpy(),
                           "stock_id": df["stock_id"].to_numpy(), "y": y})
    flow = df["flow"].to_numpy(dtype=float)
    if "s_mc" in spec.regressors:
        design["s_mc"] = flow / df["market_cap"].to_numpy(dtype=float)
    if "s_tv" in spec.regressors:
        design["s_tv"] = flow / df["traded_value"].to_numpy(dtype=float)
    dropped = df.attrs.get("forward_return_dropped", 0)

    if spec.winsor_bounds is not None:
        for col in ("y",) + spec.regressors:
            design[col] = _winsorize_column(design, col, spec)
    excluded = 0
    if standardize:
        for col in spec.regressors:
            design = zscore_within_group(design, col)
            excluded += design.attrs.get("zscore_excluded", 0)
    design = design.reset_index(drop=True)
    design.attrs.update(forward_return_dropped=dropped, zscore_excluded=excluded)
    return design


# ---------------------------------------------------------------------------
# Fama-MacBeth

def daily_cross_section_ols(y, x):
    """OLS of ``y`` on an intercept and the columns of ``x``.

    Returns
    -------
    coef : ndarray
        Intercept first, then one slope per column of ``x``.
    r2 : float
        Unadjusted R-squared.

    Raises
    ------
    RankError
        Too few observations or collinear regressors.
    DegenerateError
        ``y`` is constant, so R-squared is undefined.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, p = x.shape
    if n <= p + 1:
        raise RankError(f"{n} observations for {p} regressors plus intercept")
    design = np.column_stack([np.ones(n), x])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < p + 1:
        raise RankError("collinear regressors")
    yc = y - y.mean()
    sst = yc @ yc
    if sst == 0:
        raise DegenerateError("dependent variable is constant")
    resid = y - design @ coef
    return coef, float(1.0 - (resid @ resid) / sst)


@dataclass
class FMResult:
    """Fama-MacBeth estimates.

    ``std_errors`` is the standard error of the mean coefficient,
    ``coef_std / sqrt(n_days)``, and ``tstats = params / std_errors``.
    """

    params: pd.Series
    coef_std: pd.Series
    std_errors: pd.Series
    tstats: pd.Series
    daily_coefs: pd.DataFrame
    daily_r2: pd.Series
    avg_r2: float
    n_obs: int
    n_days: int
    avg_stocks_per_day: float
    n_excluded_days: int = 0
    spec: RegressionSpec | None = field(default=None, repr=False)


def fama_macbeth_design(design: pd.DataFrame, regressors, spec=None) -> FMResult:
    """Fama-MacBeth on an already prepared design (see :func:`prepare_design`)."""
    regressors = tuple(regressors)
    names = ("const",) + regressors
    coefs, r2s, days, counts = [], [], [], []
    excluded = 0
    for day, g in design.groupby("date", sort=True):
        try:
            b, r2 = daily_cross_section_ols(g["y"].to_numpy(), g[list(regressors)].to_numpy())
        except (RankError, DegenerateError):
            excluded += 1
            continue
        coefs.append(b)
        r2s.append(r2)
        days.append(day)
        counts.append(len(g))
    if excluded:
        warnings.warn(f"{excluded} day(s) excluded from Fama-MacBeth (too few stocks, "
                      "collinear or constant data)", RuntimeWarning, stacklevel=2)
    t_days = len(coefs)
    if t_days < 2:
        raise InferenceError(f"Fama-MacBeth needs >= 2 usable days, got {t_days}")

    daily = pd.DataFrame(np.array(coefs), index=pd.Index(days, name="date"), columns=names)
    mean = daily.mean()
    sd = daily.std(ddof=1)
    se = sd / math.sqrt(t_days)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstats = mean / se
    daily_r2 = pd.Series(r2s, index=daily.index, name="r2")
    return FMResult(params=mean, coef_std=sd, std_errors=se, tstats=tstats,
                    daily_coefs=daily, daily_r2=daily_r2, avg_r2=float(daily_r2.mean()),
                    n_obs=int(sum(counts)), n_days=t_days,
                    avg_stocks_per_day=float(np.mean(counts)),
                    n_excluded_days=excluded + design.attrs.get("zscore_excluded", 0),
                    spec=spec)


def fama_macbeth(panel: pd.DataFrame, spec: RegressionSpec) -> FMResult:
    """Winsorize, z-score within day, run daily OLS and average over days."""
    return fama_macbeth_design(prepare_design(panel, spec), spec.regressors, spec)


def size_quintile(panel: pd.DataFrame) -> pd.Series:
    """Within-day market-cap quintile, labelled ``Q1`` (small) to ``Q5``."""
    ranks = panel.groupby("date")["market_cap"].rank(method="first", pct=True)
    q = np.ceil(ranks * 5).clip(1, 5).astype(int)
    return "Q" + q.astype(str)


def grouped_fama_macbeth(panel: pd.DataFrame, spec: RegressionSpec, by) -> dict:
    """Run :func:`fama_macbeth` separately on each subsample.

    ``by`` is ``"size_quintile"``, ``"year"``, the name of a column in
    ``panel`` or a Series aligned with it. Groups that cannot be estimated are
    skipped with a warning.
    """
    if isinstance(by, pd.Series):
        labels = by
    elif by == "size_quintile":
        labels = size_quintile(panel)
    elif by == "year":
        labels = pd.to_datetime(panel["date"]).dt.year.astype(str)
    elif by in panel.columns:
        labels = panel[by]
    else:
        raise ConfigError(f"unknown grouping {by!r}")
    out = {}
    for label, idx in panel.groupby(labels, sort=True).groups.items():
        try:
            out[label] = fama_macbeth(panel.loc[idx], spec)
        except InferenceError as exc:
            warnings.warn(f"group {label!r} skipped: {exc}", RuntimeWarning, stacklevel=2)
    return out


# ---------------------------------------------------------------------------
# two-way fixed effects

def two_way_demean(values, stock_codes, day_codes, tol: float = 1e-10,
                   max_iter: int = 10_000):
    """Remove stock and day means by alternating projections.

    Iterates stock-demeaning then day-demeaning until the largest change in
    any cell, relative to the column's original max-abs scale, falls below
    ``tol``. Balanced panels converge in one pass.

    Returns
    -------
    demeaned : ndarray
    iterations : int
    """
    x = np.array(values, dtype=float, copy=True)
    if x.ndim == 1:
        x = x[:, None]
    scale = np.abs(x).max(axis=0)
    scale[scale == 0] = 1.0
    n_s = int(stock_codes.max()) + 1
    n_d = int(day_codes.max()) + 1
    cnt_s = np.bincount(stock_codes, minlength=n_s)[:, None]
    cnt_d = np.bincount(day_codes, minlength=n_d)[:, None]

    def group_means(codes, n, cnt):
        sums = np.zeros((n, x.shape[1]))
        np.add.at(sums, codes, x)
        return sums / np.maximum(cnt, 1)

    change = np.inf
    for it in range(1, max_iter + 1):
        prev = x.copy()
        x -= group_means(stock_codes, n_s, cnt_s)[stock_codes]
        x -= group_means(day_codes, n_d, cnt_d)[day_codes]
        change = float((np.abs(x - prev) / scale).max())
        if change < tol:
            return x, it
    raise ConvergenceError(
        f"demeaning did not converge in {max_iter} iterations (max change {change:.3g})",
        iterations=max_iter, max_change=change)


def _cluster_meat(scores, codes):
    n_g = int(codes.max()) + 1
    sums = np.zeros((n_g, scores.shape[1]))
    np.add.at(sums, codes, scores)
    return sums.T @ sums, n_g


@dataclass
class FEResult:
    """Pooled OLS with stock and day fixed effects.

    ``small_sample`` records the multiplier ``G/(G-1) * (N-1)/(N-K)`` applied
    to each one-way clustered covariance (``K`` counts slope coefficients
    only) and whether negative eigenvalues of the combined two-way matrix were
    clipped to zero.
    """

    params: pd.Series
    std_errors: pd.Series
    tstats: pd.Series
    cov: pd.DataFrame
    r2_within: float
    n_obs: int
    n_stocks: int
    n_days: int
    iterations: int
    small_sample: dict
    spec: RegressionSpec | None = field(default=None, repr=False)


def pooled_fe_design(design: pd.DataFrame, regressors, spec=None, tol: float = 1e-10,
                     max_iter: int = 10_000) -> FEResult:
    """Two-way FE regression of ``design.y`` on ``design[regressors]``."""
    regressors = tuple(regressors)
    stock_codes, stocks = pd.factorize(design["stock_id"], sort=True)
    day_codes, days = pd.factorize(design["date"], sort=True)
    n_stocks, n_days = len(stocks), len(days)
    if n_stocks < 2 or n_days < 2:
        raise InferenceError(f"need >= 2 stocks and >= 2 days, got {n_stocks} x {n_days}")

    raw = design[["y", *regressors]].to_numpy(dtype=float)
    dm, iters = two_way_demean(raw, stock_codes, day_codes, tol=tol, max_iter=max_iter)
    y, x = dm[:, 0], dm[:, 1:]
    n, k = x.shape

    raw_norm = np.linalg.norm(raw[:, 1:] - raw[:, 1:].mean(axis=0), axis=0)
    absorbed = [r for r, a, b in zip(regressors, np.linalg.norm(x, axis=0), raw_norm)
                if a <= 1e-9 * max(b, np.finfo(float).tiny)]
    if absorbed:
        raise RankError(f"regressor(s) {absorbed} absorbed by the fixed effects")
    if np.linalg.matrix_rank(x) < k:
        raise RankError("collinear regressors after demeaning")
    if n <= k:
        raise InferenceError("not enough observations")

    xtx = x.T @ x
    beta = np.linalg.solve(xtx, x.T @ y)
    u = y - x @ beta
    tss = y @ y
    if tss == 0:
        raise DegenerateError("dependent variable fully absorbed by fixed effects")
    r2 = float(max(0.0, 1.0 - (u @ u) / tss))

    bread = np.linalg.inv(xtx)
    scores = x * u[:, None]
    adj = {}
    cov = np.zeros((k, k))
    pair_codes = stock_codes.astype(np.int64) * n_days + day_codes
    _, pair_codes = np.unique(pair_codes, return_inverse=True)
    for name, codes, sign in (("stock", stock_codes, 1.0), ("date", day_codes, 1.0),
                              ("stock_date", pair_codes, -1.0)):
        meat, g = _cluster_meat(scores, codes)
        c = g / (g - 1) * (n - 1) / (n - k) if g > 1 else 1.0
        adj[name] = {"clusters": g, "multiplier": c}
        cov += sign * c * bread @ meat @ bread
    cov = (cov + cov.T) / 2
    w, vecs = np.linalg.eigh(cov)
    clipped = bool((w < 0).any())
    if clipped:
        cov = vecs @ np.diag(np.clip(w, 0, None)) @ vecs.T
    adj["eigen_clipped"] = clipped
    adj["k"] = k

    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    idx = pd.Index(regressors)
    return FEResult(params=pd.Series(beta, index=idx), std_errors=pd.Series(se, index=idx),
                    tstats=pd.Series(t, index=idx), cov=pd.DataFrame(cov, idx, idx),
                    r2_within=r2, n_obs=n, n_stocks=n_stocks, n_days=n_days,
                    iterations=iters, small_sample=adj, spec=spec)


def pooled_fe(panel: pd.DataFrame, spec: RegressionSpec, tol: float = 1e-10,
              max_iter: int = 10_000) -> FEResult:
    """Pooled OLS with stock and day fixed effects and two-way clustered errors.

    Variables are winsorized per ``spec`` but never standardized, so
    coefficients are in raw units.
    """
    design = prepare_design(panel, spec, standardize=False)
    return pooled_fe_design(design, spec.regressors, spec, tol=tol, max_iter=max_iter)
