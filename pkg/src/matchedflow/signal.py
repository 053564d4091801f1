"""Flow normalizations and their closed-form signal-to-noise ratios.

Dividing net flow by market cap gives ``k * alpha + zeta * tau``: the signal
passes through untouched and only the noise is scaled. Dividing by traded
value gives ``k * alpha / tau + zeta``: the signal itself is multiplied by
inverse turnover, which inflates its variance whenever turnover is dispersed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateError, DomainError

__all__ = [
    "normalize_mc", "normalize_tv", "pearson_correlation", "TurnoverMoments",
    "uniform_turnover_moments", "turnover_moments", "SnrReport", "analytic_snr",
]


def _ratio(num, den, name):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if num.shape != den.shape:
        raise DomainError(f"length mismatch: flow {num.shape} vs {name} {den.shape}")
    bad = np.flatnonzero(~(den > 0))
    if bad.size:
        i = int(bad[0])
        raise DomainError(f"nonpositive {name} at index {i}: {den.flat[i]!r}", index=i)
    return num / den


def normalize_mc(d, m):
    """Flow per unit of market cap, ``d / m``."""
    return _ratio(d, m, "market_cap")


def normalize_tv(d, v):
    """Flow per unit of traded value, ``d / v``."""
    return _ratio(d, v, "traded_value")


def pearson_correlation(x, y) -> float:
    """Sample Pearson correlation.

    Raises
    ------
    DegenerateError
        If either input has zero variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"expected equal-length 1-d inputs, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise DegenerateError("correlation needs at least 2 observations")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx == 0 or syy == 0:
        raise DegenerateError("correlation undefined: zero-variance input")
    rho = (xc @ yc) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, rho)))


@dataclass(frozen=True)
class TurnoverMoments:
    """Moments of the cross-sectional turnover distribution."""

    e_tau: float
    e_tau_sq: float
    e_inv_tau: float
    e_inv_tau_sq: float

    @classmethod
    def point(cls, c: float) -> TurnoverMoments:
        """Moments of a turnover rate fixed at ``c`` for every stock."""
        if not c > 0:
            raise DomainError(f"turnover must be > 0, got {c}")
        return cls(c, c * c, 1.0 / c, 1.0 / (c * c))

    def to_dict(self):
        return asdict(self)


def uniform_turnover_moments(a: float, b: float) -> TurnoverMoments:
    """Closed-form moments of ``tau ~ Uniform(a, b)``.

    >>> uniform_turnover_moments(0.0005, 0.01).e_inv_tau_sq
    200000.0
    """
    if not a > 0:
        raise DomainError(f"lower turnover bound must be > 0, got {a}")
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    width = b - a
    return TurnoverMoments(
        e_tau=(a + b) / 2,
        e_tau_sq=(b**3 - a**3) / (3 * width),
        e_inv_tau=math.log1p(width / a) / width,
        e_inv_tau_sq=(1 / a - 1 / b) / width,
    )


def turnover_moments(config) -> TurnoverMoments:
    """Uniform moments for ``config``'s turnover range, point mass if degenerate."""
    if config.tau_min == config.tau_max:
        return TurnoverMoments.point(config.tau_min)
    return uniform_turnover_moments(config.tau_min, config.tau_max)


@dataclass(frozen=True)
class SnrReport:
    cov_mc: float
    var_mc: float
    snr_mc: float
    corr_mc: float
    cov_tv: float
    var_tv: float
    snr_tv: float
    corr_tv: float
    snr_ratio: float
    var_r: float

    def to_dict(self):
        return asdict(self)


def _snr(cov, var_s, var_r):
    if var_s <= 0:
        raise DegenerateError("normalized signal has zero variance")
    snr = cov * cov / (var_s * var_r)
    corr = cov / math.sqrt(var_s * var_r)
    return snr, corr


def analytic_snr(config, moments: TurnoverMoments | None = None) -> SnrReport:
    """Population moments of both normalized signals against returns.

    Assumes signal, noise, return shock and turnover are mutually
    independent, so e.g. ``E[alpha**2 / tau] = sigma_alpha**2 * E[1/tau]``.

    Parameters
    ----------
    config : SimConfig
        Supplies ``k, gamma, sigma_alpha, sigma_zeta, sigma_eps``.
    moments : TurnoverMoments, optional
        Turnover law. Defaults to uniform on ``[tau_min, tau_max]``.
    """
    if moments is None:
        moments = turnover_moments(config)
    k, g = config.k, config.gamma
    sa2 = config.sigma_alpha**2
    sz2 = config.sigma_zeta**2
    var_r = g * g * sa2 + config.sigma_eps**2
    if var_r <= 0:
        raise DegenerateError("return variance is zero")

    cov_mc = k * g * sa2
    var_mc = k * k * sa2 + sz2 * moments.e_tau_sq
    cov_tv = k * g * sa2 * moments.e_inv_tau
    var_tv = k * k * sa2 * moments.e_inv_tau_sq + sz2

    snr_mc, corr_mc = _snr(cov_mc, var_mc, var_r)
    snr_tv, corr_tv = _snr(cov_tv, var_tv, var_r)
    ratio = snr_mc / snr_tv if snr_tv > 0 else math.nan
    return SnrReport(cov_mc=cov_mc, var_mc=var_mc, snr_mc=snr_mc, corr_mc=corr_mc,
                     cov_tv=cov_tv, var_tv=var_tv, snr_tv=snr_tv, corr_tv=corr_tv,
                     snr_ratio=ratio, var_r=var_r)
