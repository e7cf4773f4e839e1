"""Affine calibration of the Stanley-Zanello bounds against log(O_d).

All logarithms are natural.  Sums go through ``math.fsum`` so fitted
coefficients do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

LOG2 = math.log(2.0)
SQRT3 = math.sqrt(3.0)

UPPER = "upper"
LOWER = "lower"

# shift ranges for the lower calibration; d <= 7 holds a few irrelevant exceptions
FROM_8 = "from_8"
FROM_2 = "from_2"


def up_bound(d: int) -> float:
    """Explicit part of the asymptotic upper bound for log(O_d)."""
    if d < 1:
        raise ValueError("up(d) needs d >= 1")
    return math.sqrt(2 * d) * (math.log(d) + math.pi / SQRT3) - math.log(24 * d) / 2


def low_bound(d: int) -> float:
    """Explicit part of the asymptotic lower bound; undefined at d = 1."""
    if d < 2:
        raise ValueError("low(d) is not defined for d < 2")
    m = d - 1
    return math.pi * math.sqrt(2 * m / 3) - math.log(4 * m * SQRT3)


BOUNDS: dict[str, Callable[[int], float]] = {UPPER: up_bound, LOWER: low_bound}


def log_of_bigcount(x: int) -> float:
    """Natural log of a positive integer of any size."""
    x = int(x)
    if x < 1:
        raise ValueError("log needs a positive integer")
    bits = x.bit_length()
    if bits <= 1000:
        return math.log(x)
    shift = bits - 64
    return math.log(x >> shift) + shift * LOG2


@dataclass(frozen=True)
class FitLine:
    beta0: float
    beta1: float
    d_lo: int
    d_hi: int

    def __call__(self, d: float) -> float:
        return self.beta0 + self.beta1 * d


def least_squares(f: Mapping[int, float] | Callable[[int], float], d_lo: int, d_hi: int) -> FitLine:
    """Least-squares line through ``(d, f(d))`` for ``d_lo <= d <= d_hi``."""
    if d_hi <= d_lo:
        raise ValueError(f"degenerate fit range [{d_lo}, {d_hi}]")
    get = f.__getitem__ if isinstance(f, Mapping) else f
    ds = range(d_lo, d_hi + 1)
    ys = [float(get(d)) for d in ds]
    if not all(math.isfinite(y) for y in ys):
        raise ValueError("non-finite value in fit data")
    n = len(ys)
    d_mean = (d_lo + d_hi) / 2
    y_mean = math.fsum(ys) / n
    sxy = math.fsum((d - d_mean) * (y - y_mean) for d, y in zip(ds, ys))
    sxx = math.fsum((d - d_mean) ** 2 for d in ds)
    beta1 = sxy / sxx
    return FitLine(y_mean - beta1 * d_mean, beta1, d_lo, d_hi)


@dataclass
class CalibrationReport:
    """A bound mapped through the least-squares lines of the data, then shifted.

    ``rescaled(d) = (bound(d) - fit_bound.beta0) * slope_ratio + fit_target.beta0``
    and ``calibrated(d) = slope_ratio * bound(d) + intercept``.  The shift is
    added for the upper bound and subtracted for the lower one.
    """

    kind: str
    D: int
    fit_target: FitLine
    fit_bound: FitLine
    slope_ratio: float
    offset: float
    shift: float
    shift_range: tuple[int, int]
    stats_range: tuple[int, int]
    stats: dict[str, float] = field(default_factory=dict)

    @property
    def sign(self) -> int:
        return 1 if self.kind == UPPER else -1

    @property
    def intercept(self) -> float:
        return self.offset + self.sign * self.shift

    @property
    def bound_name(self) -> str:
        return "up" if self.kind == UPPER else "low"

    def bound(self, d: int) -> float:
        return BOUNDS[self.kind](d)

    def rescaled(self, d: int) -> float:
        return (self.bound(d) - self.fit_bound.beta0) * self.slope_ratio + self.fit_target.beta0

    def calibrated(self, d: int) -> float:
        return self.rescaled(d) + self.sign * self.shift

    def as_rows(self) -> list[tuple[str, object]]:
        rows: list[tuple[str, object]] = [
            ("kind", self.kind),
            ("D", self.D),
            ("fit_range", f"{self.fit_target.d_lo}..{self.fit_target.d_hi}"),
            ("beta0_logO", self.fit_target.beta0),
            ("beta1_logO", self.fit_target.beta1),
            (f"beta0_{self.bound_name}", self.fit_bound.beta0),
            (f"beta1_{self.bound_name}", self.fit_bound.beta1),
            ("F", self.slope_ratio),
            ("offset", self.offset),
            ("shift", self.shift),
            ("G", self.intercept),
            ("shift_range", f"{self.shift_range[0]}..{self.shift_range[1]}"),
            ("stats_range", f"{self.stats_range[0]}..{self.stats_range[1]}"),
        ]
        rows.extend(self.stats.items())
        return rows


def _extreme(values: Sequence[tuple[int, float]], pick) -> tuple[float, int]:
    d, v = pick(values, key=lambda dv: dv[1])
    return v, d


def _summarize(prefix: str, pairs: list[tuple[int, float]], out: dict[str, float], absolute: bool) -> None:
    v, d = _extreme(pairs, min)
    out[f"min_{prefix}"] = v
    out[f"argmin_{prefix}"] = d
    if absolute:
        v, d = _extreme([(d, abs(x)) for d, x in pairs], max)
        out[f"maxabs_{prefix}"] = v
        out[f"argmaxabs_{prefix}"] = d
    else:
        v, d = _extreme(pairs, max)
        out[f"max_{prefix}"] = v
        out[f"argmax_{prefix}"] = d


def _check_domain(logO: Mapping[int, float], lo: int, D: int) -> None:
    missing = [d for d in range(lo, D + 1) if d not in logO]
    if missing:
        raise ValueError(f"log(O_d) missing for d in {missing[:5]}{'...' if len(missing) > 5 else ''}")


def calibrate_upper(logO: Mapping[int, float], D: int) -> CalibrationReport:
    _check_domain(logO, 1, D)
    fit_t = least_squares(logO, 1, D)
    fit_b = least_squares(up_bound, 1, D)
    ratio = fit_t.beta1 / fit_b.beta1
    offset = fit_t.beta0 - fit_b.beta0 * ratio
    report = CalibrationReport(UPPER, D, fit_t, fit_b, ratio, offset, 0.0, (1, D), (1, D))
    ds = range(1, D + 1)
    report.shift = max(logO[d] - report.rescaled(d) for d in ds)

    stats: dict[str, float] = {}
    raw = [(d, up_bound(d) - logO[d]) for d in ds]
    hat = [(d, report.rescaled(d) - logO[d]) for d in ds]
    best = [(d, report.calibrated(d) - logO[d]) for d in ds]
    _summarize("up_minus_logO", raw, stats, absolute=True)
    _summarize("uphat_minus_logO", hat, stats, absolute=True)
    _summarize("uphathat_minus_logO", best, stats, absolute=False)
    report.stats = stats
    return report


def calibrate_lower(
    logO: Mapping[int, float], D: int, shift_range: str = FROM_8, stats_from: int = 8
) -> CalibrationReport:
    _check_domain(logO, 2, D)
    start = {FROM_8: 8, FROM_2: 2}[shift_range]
    if D < max(start, stats_from) + 1:
        raise ValueError(f"lower calibration needs D > {max(start, stats_from)}")
    if stats_from < 2:
        raise ValueError("lower statistics need d >= 2")
    fit_t = least_squares(logO, 2, D)
    fit_b = least_squares(low_bound, 2, D)
    ratio = fit_t.beta1 / fit_b.beta1
    offset = fit_t.beta0 - fit_b.beta0 * ratio
    report = CalibrationReport(LOWER, D, fit_t, fit_b, ratio, offset, 0.0, (start, D), (stats_from, D))
    report.shift = max(report.rescaled(d) - logO[d] for d in range(start, D + 1))

    stats: dict[str, float] = {}
    ds = range(stats_from, D + 1)
    raw = [(d, logO[d] - low_bound(d)) for d in ds]
    hat = [(d, logO[d] - report.rescaled(d)) for d in ds]
    best = [(d, logO[d] - report.calibrated(d)) for d in ds]
    _summarize("logO_minus_low", raw, stats, absolute=True)
    _summarize("logO_minus_lowhat", hat, stats, absolute=True)
    _summarize("logO_minus_lowhathat", best, stats, absolute=False)
    report.stats = stats
    return report


@dataclass(frozen=True)
class Alignment:
    """How lower-bound series are lined up against ``d``.

    ``AS_DEFINED`` evaluates every quantity at the same ``d``.  ``POSITIONAL``
    mimics tables built from arrays paired by position, where the lower-bound
    array starts at ``d = 2`` and the upper one at ``d = 1``.  Two things move:
    the lower statistics cut ``7 < i`` on the array index lands on ``d >= 9``,
    and the zone width pairs ``upper(d - 1)`` with ``lower(d)``.
    """

    lower_stats_from: int = 8
    zone_upper_lag: int = 0


AS_DEFINED = Alignment()
POSITIONAL = Alignment(lower_stats_from=9, zone_upper_lag=1)
ALIGNMENTS = {"defined": AS_DEFINED, "positional": POSITIONAL}


def predict(report: CalibrationReport, d_from: int, d_to: int) -> dict[int, float]:
    """Calibrated curve on ``d_from..d_to``; may run past the data horizon."""
    lowest = 1 if report.kind == UPPER else 2
    if d_from < lowest:
        raise ValueError(f"{report.kind} calibration is undefined below d={lowest}")
    return {d: report.calibrated(d) for d in range(d_from, d_to + 1)}


def max_excess(report: CalibrationReport, logO: Mapping[int, float], d_from: int, d_to: int) -> tuple[float, int]:
    """``max (calibrated(d) - log O_d)`` and its argmax over a range."""
    return max(((report.calibrated(d) - logO[d], d) for d in range(d_from, d_to + 1)))


@dataclass
class PredictionZone:
    band: dict[int, tuple[float, float]]
    max_width: float
    argmax: int
    inverted: list[int]


def prediction_zone(
    upper: CalibrationReport, lower: CalibrationReport, d_lo: int, d_hi: int, upper_lag: int = 0
) -> PredictionZone:
    """Band between the calibrated lower and upper curves on ``d_lo..d_hi``.

    ``band[d] = (lower(d), upper(d - upper_lag))``; see ``Alignment`` for why a
    non-zero lag exists.
    """
    if upper.kind != UPPER or lower.kind != LOWER:
        raise ValueError("need one upper and one lower report")
    if upper.D != lower.D:
        raise ValueError(f"reports use different horizons: {upper.D} vs {lower.D}")
    if d_lo < 2 or d_hi < d_lo or d_lo - upper_lag < 1 or upper_lag < 0:
        raise ValueError(f"bad zone range [{d_lo}, {d_hi}] with upper lag {upper_lag}")
    band = {d: (lower.calibrated(d), upper.calibrated(d - upper_lag)) for d in range(d_lo, d_hi + 1)}
    width, arg = max((hi - lo, d) for d, (lo, hi) in band.items())
    inverted = [d for d, (lo, hi) in band.items() if hi < lo]
    return PredictionZone(band, width, arg, inverted)


def log_table(O: Sequence[int]) -> dict[int, float]:
    """``{d: log(O_d)}`` from a 1-indexed list ``O[d-1]``."""
    return {d: log_of_bigcount(v) for d, v in enumerate(O, start=1)}
