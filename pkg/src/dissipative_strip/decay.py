"""Fitting asymptotic decay of sup-norm histories and checking guaranteed rates."""

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .modal import Params, decay_constants, mode_arrays

MIN_POINTS = 8
DEFAULT_FLOOR = 1e-14
TOLERANCES = {"homogeneous": 0.02, "exponential": 0.05, "algebraic": 0.1}


def _window_points(values, times, window, floor, need_positive_t=False):
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if values.shape != times.shape:
        raise ValueError("sup_norms and times must have equal length")
    lo, hi = window if window is not None else (times[0], times[-1])
    if need_positive_t and lo <= 0:
        raise ValueError("log-log fits need a window with t_lo > 0")
    inside = (times >= lo) & (times <= hi)
    floored = inside & (values < floor)
    keep = inside & ~floored
    if np.count_nonzero(keep) < MIN_POINTS:
        raise ValueError(
            f"only {np.count_nonzero(keep)} usable points in window [{lo}, {hi}] "
            f"({np.count_nonzero(floored)} below floor {floor}); need {MIN_POINTS}")
    return times[keep], values[keep], int(np.count_nonzero(floored))


def _line_fit(x, y):
    # centring keeps the slope independent of a constant offset in y
    xc = x - x.mean()
    yc = y - y.mean()
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    resid = yc - slope * xc
    return slope, float(np.sqrt(np.mean(resid * resid)))


def fit_exponential_rate(sup_norms, times, window=None, floor=DEFAULT_FLOOR, return_floored=False):
    """Negated least-squares slope of ``log(sup_norm)`` against ``t``.

    Points below ``floor`` are dropped (and counted), not clamped.
    Returns ``(rate, rms_residual)``.
    """
    t, v, n_floor = _window_points(sup_norms, times, window, floor)
    slope, resid = _line_fit(t, np.log(v))
    out = (-slope, resid)
    return out + (n_floor,) if return_floored else out


def fit_algebraic_slope(sup_norms, times, window=None, floor=DEFAULT_FLOOR, return_floored=False):
    """Least-squares slope of ``log(sup_norm)`` against ``log(t)``; returns ``(slope, rms_residual)``."""
    t, v, n_floor = _window_points(sup_norms, times, window, floor, need_positive_t=True)
    slope, resid = _line_fit(np.log(t), np.log(v))
    out = (slope, resid)
    return out + (n_floor,) if return_floored else out


@dataclass(frozen=True)
class DecayReport:
    scenario: str  # "homogeneous" | "exponential" | "algebraic"
    fitted_exp_rate: float
    fitted_loglog_slope: float
    window: tuple
    beta: float
    delta_star: Optional[float] = None
    alpha_expected: Optional[float] = None
    residual: float = 0.0
    floored_points: int = 0

    def as_record(self):
        """Flat key/value view (window split into two fields)."""
        rec = asdict(self)
        rec["window_lo"], rec["window_hi"] = rec.pop("window")
        return rec


@dataclass(frozen=True)
class DecayVerdict:
    passed: bool
    margin: float
    tolerance: float
    criterion: str


def default_window(T, scenario):
    if scenario == "algebraic":
        return (max(10.0, T / 8.0), T)
    return (T / 2.0, T)


def build_report(sup_norms, times, params: Params, scenario, window=None, delta=None, alpha=None,
                 floor=DEFAULT_FLOOR) -> DecayReport:
    """Fit both rates over ``window`` and attach the constants the scenario is judged against."""
    if scenario not in TOLERANCES:
        raise ValueError(f"unknown decay scenario {scenario!r}")
    times = np.asarray(times, dtype=float)
    window = tuple(window) if window is not None else default_window(float(times[-1]), scenario)
    beta = decay_constants(params).beta
    rate, res_e, n_floor = fit_exponential_rate(sup_norms, times, window, floor, return_floored=True)
    if window[0] > 0:
        slope, res_a, _ = fit_algebraic_slope(sup_norms, times, window, floor, return_floored=True)
    else:
        slope, res_a = math.nan, math.nan
    delta_star = min(beta, delta) if (scenario == "exponential" and delta is not None) else None
    residual = res_a if scenario == "algebraic" else res_e
    return DecayReport(scenario, rate, slope, window, beta, delta_star,
                       alpha if scenario == "algebraic" else None, residual, n_floor)


def verify_decay(report: DecayReport, tolerances=None) -> DecayVerdict:
    """Judge a report with "at least" semantics; a failure is a result, not an error.

    The margin is the fitted quantity minus the guaranteed one (sign chosen so
    that positive is good); the check passes when ``margin >= -tolerance``.
    """
    tol = dict(TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    if report.scenario == "homogeneous":
        margin = report.fitted_exp_rate - report.beta
        crit = "fitted_exp_rate >= beta - tol"
    elif report.scenario == "exponential":
        if report.delta_star is None:
            raise ValueError("exponential report needs delta_star")
        margin = report.fitted_exp_rate - report.delta_star
        crit = "fitted_exp_rate >= delta_star - tol"
    elif report.scenario == "algebraic":
        if report.alpha_expected is None:
            raise ValueError("algebraic report needs alpha_expected")
        margin = -report.alpha_expected - report.fitted_loglog_slope
        crit = "fitted_loglog_slope <= -alpha + tol"
    else:
        raise ValueError(f"unknown decay scenario {report.scenario!r}")
    t = tol[report.scenario]
    return DecayVerdict(bool(margin >= -t), float(margin), t, crit)


@dataclass(frozen=True)
class CoefficientCheck:
    statistic: np.ndarray  # n^2 |c^2 + eps phi_n| for n = 1..n_max
    maximum: float
    plateau_ratio: float
    limit: float


def coefficient_statistic(params: Params, n_max: int) -> np.ndarray:
    """``n^2 |c^2 + eps phi_n|`` with ``phi_n = omega_n - h_n`` (complex when oscillatory)."""
    modes = mode_arrays(params, n_max)
    h, b_sq, omega_sq = modes.h, modes.b_sq, modes.omega_sq
    c2, eps = params.c**2, params.epsilon
    n = modes.n.astype(float)
    out = np.empty(n.shape)
    over = omega_sq >= 0
    w = np.sqrt(omega_sq[over])
    slow = b_sq[over] / (h[over] + w)
    # c^2 - eps (h - omega) = c^2 (a - (h - omega)) / (h + omega), no cancellation
    out[over] = np.abs(c2 * (params.a - slow) / (h[over] + w))
    osc = ~over
    out[osc] = np.abs(c2 - eps * h[osc] + 1j * eps * np.sqrt(-omega_sq[osc]))
    return n * n * out


def coefficient_limit(params: Params) -> float:
    """Large-``n`` limit of the statistic: ``c^2 |a - c^2/eps| ell^2 / (eps pi^2)``."""
    c2, eps = params.c**2, params.epsilon
    return c2 * abs(params.a - c2 / eps) * params.ell**2 / (eps * math.pi**2)


def coefficient_check(params: Params, n_max: int) -> CoefficientCheck:
    """Sweep ``n = 1..n_max``; report the max and the ratio of the statistic at ``n_max`` vs ``n_max/2``.

    When ``c^2 = a eps`` the statistic vanishes identically for large ``n`` and
    the ratio is NaN.
    """
    if n_max < 100:
        raise ValueError("n_max must be >= 100")
    stat = coefficient_statistic(params, n_max)
    hi, lo = stat[n_max - 1], stat[n_max // 2 - 1]
    ratio = float(hi / lo) if lo > 0 else math.nan
    return CoefficientCheck(stat, float(stat.max()), ratio, coefficient_limit(params))
