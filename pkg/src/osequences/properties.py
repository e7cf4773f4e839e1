"""Checkers for the proven and observed properties of (O_d) and (A_d).

Sequences are passed 1-indexed by position: ``O[0]`` is ``O_1``.  Every
comparison on counts is exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .calibration import least_squares, log_of_bigcount
from .combinatorics import partition_numbers


@dataclass
class PropertyVerdict:
    name: str
    holds: bool
    witnesses: list[int]
    range_checked: tuple[int, int]
    tags: dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.holds == bool(self.witnesses):
            raise ValueError("a verdict holds exactly when it has no witnesses")

    def summary(self) -> str:
        lo, hi = self.range_checked
        status = "holds" if self.holds else "FAILS"
        line = f"{self.name}: {status} on [{lo}, {hi}]"
        if self.witnesses:
            shown = ", ".join(f"{w}({self.tags[w]})" if w in self.tags else str(w) for w in self.witnesses[:10])
            line += f"; witnesses: {shown}" + (" ..." if len(self.witnesses) > 10 else "")
        return line


def _verdict(name: str, witnesses: list[int], lo: int, hi: int, tags: dict[int, str] | None = None) -> PropertyVerdict:
    return PropertyVerdict(name, not witnesses, witnesses, (lo, hi), tags or {})


def is_sub_fibonacci(x: Sequence[int], name: str = "sub_fibonacci", first_index: int = 1) -> PropertyVerdict:
    """``x_1 = x_2 = 1``, non-decreasing, and ``x_k <= x_{k-1} + x_{k-2}``.

    Witnesses are reported as ``first_index + position``.
    """
    if len(x) < 3:
        raise ValueError("need at least three terms")
    bad: list[int] = []
    tags: dict[int, str] = {}
    for pos in (0, 1):
        if x[pos] != 1:
            bad.append(first_index + pos)
            tags[first_index + pos] = "start"
    for pos in range(1, len(x)):
        if x[pos] < x[pos - 1]:
            bad.append(first_index + pos)
            tags[first_index + pos] = "decrease"
        elif pos >= 2 and x[pos] > x[pos - 1] + x[pos - 2]:
            bad.append(first_index + pos)
            tags[first_index + pos] = "exceeds"
    return _verdict(name, sorted(set(bad)), first_index, first_index + len(x) - 1, tags)


def check_A_subfibonacci(A: Sequence[int]) -> list[PropertyVerdict]:
    """``A_d <= A_{d+1}`` for ``d > 2`` and ``(A_3, A_4, ...)`` sub-Fibonacci."""
    D = len(A)
    if D < 6:
        raise ValueError("need A_d up to at least d = 6")
    drops = [d + 1 for d in range(3, D) if A[d - 1] > A[d]]
    return [
        _verdict("A_nondecreasing", drops, 3, D),
        is_sub_fibonacci(A[2:], name="A_shifted_sub_fibonacci", first_index=3),
    ]


def check_o_a_consistency(O: Sequence[int], A: Sequence[int]) -> PropertyVerdict:
    """``O_d = O_{d-1} + A_d`` for ``d >= 3`` and ``A_1 = A_2 = 0``."""
    D = len(O)
    if len(A) != D:
        raise ValueError("O and A differ in length")
    bad = [d for d in (1, 2) if d <= D and A[d - 1] != 0]
    bad += [d for d in range(3, D + 1) if O[d - 1] != O[d - 2] + A[d - 1]]
    return _verdict("O_equals_prev_plus_A", bad, 1, D)


def check_ratio_decreasing(O: Sequence[int], start: int = 12) -> PropertyVerdict:
    """``O_d / O_{d-1}`` strictly decreasing for ``start <= d <= D``.

    Compared as ``O_d * O_{d-2} < O_{d-1}^2`` for ``start < d <= D``.
    """
    D = len(O)
    if D < start + 1:
        raise ValueError(f"need O_d up to at least d = {start + 1}")
    bad: list[int] = []
    tags: dict[int, str] = {}
    for d in range(max(start + 1, 3), D + 1):
        lhs = O[d - 1] * O[d - 3]
        rhs = O[d - 2] * O[d - 2]
        if lhs >= rhs:
            bad.append(d)
            tags[d] = "tie" if lhs == rhs else "increase"
    return _verdict("ratio_decreasing", bad, start, D, tags)


def _log_upper_envelope(d: int, log_p: float) -> float:
    return 0.5 * math.log(2 * d) + log_p + math.sqrt(2 * d) * math.log(d)


def check_sz_sandwich(O: Sequence[int], tol: float = 1e-9) -> PropertyVerdict:
    """``p(d-1) <= O_d <= sqrt(2d) p(d) exp(sqrt(2d) log d)`` for ``d >= 3``."""
    D = len(O)
    if D < 3:
        raise ValueError("the sandwich starts at d = 3")
    parts = partition_numbers(D)
    bad: list[int] = []
    tags: dict[int, str] = {}
    for d in range(3, D + 1):
        if parts[d - 1] > O[d - 1]:
            bad.append(d)
            tags[d] = "below_lower"
        elif log_of_bigcount(O[d - 1]) > _log_upper_envelope(d, log_of_bigcount(parts[d])) + tol:
            bad.append(d)
            tags[d] = "above_upper"
    return _verdict("sz_sandwich", bad, 3, D, tags)


@dataclass
class RobertsDiagnostic:
    series: list[tuple[int, float]]
    envelope: list[tuple[int, float]]
    trailing_slope: float

    @property
    def eventually_decreasing(self) -> bool:
        return self.trailing_slope < 0


def roberts_diagnostic(O: Sequence[int]) -> RobertsDiagnostic:
    """``log(O_d)/d`` with its raw-bound envelope and last-quartile trend.

    Informational only: finite data cannot certify the limit.
    """
    D = len(O)
    series = [(d, log_of_bigcount(O[d - 1]) / d) for d in range(1, D + 1)]
    parts = partition_numbers(D)
    envelope = [(d, _log_upper_envelope(d, log_of_bigcount(parts[d])) / d) for d in range(3, D + 1)]
    lo = max(1, D - D // 4)
    slope = least_squares(dict(series), lo, D).beta1 if D - lo >= 1 else 0.0
    return RobertsDiagnostic(series, envelope, slope)


def check_envelope(diag: RobertsDiagnostic) -> PropertyVerdict:
    values = dict(diag.series)
    bad = [d for d, bound in diag.envelope if values[d] > bound + 1e-12]
    hi = diag.series[-1][0] if diag.series else 0
    return _verdict("roberts_envelope", bad, 3, hi)


def run_property_suite(O: Sequence[int], A: Sequence[int] | None = None) -> list[PropertyVerdict]:
    """Every property that the data up to ``D = len(O)`` admits."""
    from .engine import differences

    O = list(O)
    A = differences(O) if A is None else list(A)
    D = len(O)
    verdicts = [check_o_a_consistency(O, A)]
    if D >= 3:
        verdicts.append(is_sub_fibonacci(O, name="O_sub_fibonacci"))
        verdicts.append(check_sz_sandwich(O))
        verdicts.append(check_envelope(roberts_diagnostic(O)))
    if D >= 6:
        verdicts.extend(check_A_subfibonacci(A))
    if D >= 13:
        verdicts.append(check_ratio_decreasing(O))
    return verdicts
