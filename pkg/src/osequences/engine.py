"""Layered truncated generating functions for O(p, n, k, d).

Layer ``p`` is the triangular table ``F_{p,n,k}(t) = sum_d O(p,n,k,d) t^d``
for ``0 <= k <= n <= D-1``, truncated at degree ``D``.  Layer ``p`` is built
from layer ``p-1`` alone, so only two layers are ever alive.

Inside the engine a polynomial is either ``None`` (identically zero) or a
pair ``(lo, coeffs)`` where ``coeffs`` is a numpy object array of exact
Python ints holding degrees ``lo .. lo+len-1`` with non-zero first and last
entries.  ``TruncPoly`` is the dense public view.
"""

from __future__ import annotations

import logging
import time
import weakref
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .combinatorics import DEFAULT_ENUMERATION_CAP, EnumerationBudgetError, count_opnkd_oracle

log = logging.getLogger(__name__)

Poly = Optional[tuple[int, np.ndarray]]


@dataclass
class TruncPoly:
    coeffs: list[int]
    cap: int

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.cap + 1:
            raise ValueError(f"expected {self.cap + 1} coefficients, got {len(self.coeffs)}")
        if any(c < 0 for c in self.coeffs):
            raise ValueError("coefficients must be non-negative")

    @classmethod
    def zero(cls, cap: int) -> TruncPoly:
        return cls([0] * (cap + 1), cap)

    @classmethod
    def from_terms(cls, terms: dict[int, int], cap: int) -> TruncPoly:
        coeffs = [0] * (cap + 1)
        for deg, c in terms.items():
            if deg <= cap:
                coeffs[deg] += c
        return cls(coeffs, cap)

    def __getitem__(self, degree: int) -> int:
        return self.coeffs[degree] if 0 <= degree <= self.cap else 0

    def is_zero(self) -> bool:
        return not any(self.coeffs)


def poly_mul_trunc(a: TruncPoly, b: TruncPoly, D: int) -> TruncPoly:
    """Classical truncated convolution, skipping zero coefficients on both sides."""
    if a.cap != D or b.cap != D:
        raise ValueError(f"degree caps differ: {a.cap}, {b.cap}, D={D}")
    out = [0] * (D + 1)
    bc = b.coeffs
    for i, ai in enumerate(a.coeffs):
        if ai == 0:
            continue
        for j in range(D - i + 1):
            bj = bc[j]
            if bj:
                out[i + j] += ai * bj
    return TruncPoly(out, D)


# ---------------------------------------------------------------------------
# sparse-support kernel used by the engine


def _pack(dense, lo: int = 0) -> Poly:
    nz = np.flatnonzero(dense)
    if nz.size == 0:
        return None
    first, last = int(nz[0]), int(nz[-1])
    return lo + first, np.array(dense[first:last + 1], dtype=object)


def _to_truncpoly(poly: Poly, D: int) -> TruncPoly:
    coeffs = [0] * (D + 1)
    if poly is not None:
        lo, c = poly
        coeffs[lo:lo + len(c)] = [int(x) for x in c]
    return TruncPoly(coeffs, D)


def _from_truncpoly(tp: TruncPoly) -> Poly:
    return _pack(np.array(tp.coeffs, dtype=object))


def _mul_acc(acc: np.ndarray, x: Poly, y: Poly, D: int) -> bool:
    """``acc += trunc_D(x * y)``; returns whether anything was added."""
    lo_x, cx = x
    lo_y, cy = y
    base = lo_x + lo_y
    if base > D:
        return False
    # the shorter factor is the outer loop; its zero coefficients are skipped
    if len(cx) > len(cy):
        cx, cy = cy, cx
    room = D - base + 1
    cy = cy[:room]
    ny = len(cy)
    for i in range(min(len(cx), room)):
        xi = cx[i]
        if xi == 0:
            continue
        m = min(ny, room - i)
        acc[base + i:base + i + m] += xi * cy[:m]
    return True


def _add_acc(acc: np.ndarray, x: Poly) -> None:
    lo, c = x
    acc[lo:lo + len(c)] += c


# ---------------------------------------------------------------------------
# layers


class _LayerTracker:
    """Counts live layers; the engine must never hold more than two."""

    def __init__(self) -> None:
        self._live: weakref.WeakSet = weakref.WeakSet()
        self.peak = 0

    def register(self, layer: Layer) -> None:
        self._live.add(layer)
        self.peak = max(self.peak, len(self._live))

    @property
    def live(self) -> int:
        return len(self._live)

    def reset(self) -> None:
        self.peak = self.live


TRACKER = _LayerTracker()


@dataclass(eq=False)
class Layer:
    """Triangular table ``rows[n][k] = F_{p,n,k}`` for ``0 <= k <= n <= D-1``."""

    p: int
    D: int
    rows: list[list[Poly]]

    def __post_init__(self) -> None:
        TRACKER.register(self)

    def entry(self, n: int, k: int) -> TruncPoly:
        if not (0 <= n < self.D) or k < 0:
            raise IndexError(f"({n}, {k}) outside the layer for D={self.D}")
        if k > n:
            return TruncPoly.zero(self.D)
        return _to_truncpoly(self.rows[n][k], self.D)

    def coefficient(self, n: int, k: int, d: int) -> int:
        if not (0 <= k <= n < self.D) or not (0 <= d <= self.D):
            return 0
        poly = self.rows[n][k]
        if poly is None:
            return 0
        lo, c = poly
        return int(c[d - lo]) if lo <= d < lo + len(c) else 0

    def nonzero_entries(self) -> int:
        return sum(poly is not None for row in self.rows for poly in row)

    def same_as(self, other: Layer) -> bool:
        if (self.p, self.D) != (other.p, other.D):
            return False
        for ra, rb in zip(self.rows, other.rows):
            for a, b in zip(ra, rb):
                if (a is None) != (b is None):
                    return False
                if a is not None and (a[0] != b[0] or len(a[1]) != len(b[1]) or any(a[1] != b[1])):
                    return False
        return True


def init_layer_p1(D: int) -> Layer:
    """``F_{1,n,k} = t^{k+1}`` for ``k+1 <= D``, ``n >= k``."""
    if D < 1:
        raise ValueError("D must be positive")
    rows = []
    for n in range(D):
        rows.append([(k + 1, np.array([1], dtype=object)) if k + 1 <= D else None for k in range(n + 1)])
    return Layer(1, D, rows)


def _row_entry(prev_row: list[Poly], nz_prev: list[int], curr: list[list[Poly]], n: int, k: int, D: int) -> Poly:
    acc = np.zeros(D + 1, dtype=object)
    touched = False
    for i in nz_prev[bisect_left(nz_prev, k):]:
        other = curr[i - 1][k - 1]
        if other is None:
            continue
        touched |= _mul_acc(acc, prev_row[i], other, D)
    return _pack(acc) if touched else None


def next_layer(prev: Layer, D: Optional[int] = None, threads: int = 1) -> Layer:
    """Build layer ``p`` from layer ``p-1``.

    Rows are filled with ``n`` ascending.  Entry ``(n, k)`` for ``k > 0`` only
    reads ``curr[i-1][k-1]`` with ``i-1 < n``, so all ``k`` of one row are
    independent and may be evaluated concurrently.
    """
    D = prev.D if D is None else D
    if D != prev.D:
        raise ValueError(f"layer has D={prev.D}, asked for D={D}")
    p = prev.p + 1
    curr: list[list[Poly]] = []
    curr_kmax = -1  # largest k with a non-zero entry in rows already built
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in range(D):
            prev_row = prev.rows[n]
            nz_prev = [i for i, poly in enumerate(prev_row) if poly is not None]
            row: list[Poly] = [None] * (n + 1)

            acc = np.zeros(D + 1, dtype=object)
            for h in nz_prev:
                _add_acc(acc, prev_row[h])
            row[0] = _pack(acc)

            # F_{p,n,k} needs some i >= k with prev(n, i) != 0 and curr(i-1, k-1) != 0
            k_top = min(n, nz_prev[-1] if nz_prev else 0, curr_kmax + 1)
            ks = range(1, k_top + 1)
            if pool is not None and len(ks) > 1:
                results = list(pool.map(lambda k: _row_entry(prev_row, nz_prev, curr, n, k, D), ks))
            else:
                results = [_row_entry(prev_row, nz_prev, curr, n, k, D) for k in ks]
            for k, poly in zip(ks, results):
                row[k] = poly
            for k in range(n, -1, -1):
                if row[k] is not None:
                    curr_kmax = max(curr_kmax, k)
                    break
            curr.append(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return Layer(p, D, curr)


# ---------------------------------------------------------------------------
# driver


@dataclass
class EngineOptions:
    threads: int = 1
    checkpoint_dir: Optional[Path] = None
    checkpoint_every: int = 25
    resume: bool = True
    progress: Optional[Callable[[int, float], None]] = None


@dataclass
class CountTable:
    D: int
    O: list[int]
    A: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.O) != self.D:
            raise ValueError(f"expected {self.D} values of O_d, got {len(self.O)}")
        if not self.A:
            self.A = differences(self.O)

    def o(self, d: int) -> int:
        return self.O[d - 1]

    def a(self, d: int) -> int:
        return self.A[d - 1]


def differences(O: list[int]) -> list[int]:
    """``A_d = O_d - O_{d-1}`` with ``A_1 = A_2 = 0``."""
    A = [0] * len(O)
    for d in range(3, len(O) + 1):
        A[d - 1] = O[d - 1] - O[d - 2]
    return A


def o_values_from_layer(layer: Layer) -> list[int]:
    """``O_d`` for ``d <= p``: with ``p >= d`` variables every sequence is counted."""
    return [layer.coefficient(d - 1, 0, d) for d in range(1, min(layer.p, layer.D) + 1)]


def _checkpoint_path(directory: Path, p: int) -> Path:
    return Path(directory) / f"layer_{p:05d}.bin"


def latest_checkpoint(directory: Path, D: int) -> Optional[Path]:
    """Newest checkpoint in ``directory`` that was written for this ``D``."""
    from .checkpoint import CheckpointError, read_header

    directory = Path(directory)
    if not directory.is_dir():
        return None
    best = None
    for path in sorted(directory.glob("layer_*.bin")):
        try:
            _, p, d = read_header(path)
        except CheckpointError:
            continue
        if d == D and (best is None or p > best[0]):
            best = (p, path)
    return best[1] if best else None


def run_iterative(D: int, opts: Optional[EngineOptions] = None) -> CountTable:
    """``O_d`` and ``A_d`` for ``1 <= d <= D``."""
    from .checkpoint import load_layer, save_layer

    if D < 1:
        raise ValueError("D must be positive")
    opts = opts or EngineOptions()
    layer = None
    if opts.checkpoint_dir is not None and opts.resume:
        path = latest_checkpoint(opts.checkpoint_dir, D)
        if path is not None:
            layer = load_layer(path, expected_D=D)
            log.info("resuming from %s (p=%d)", path, layer.p)
    if layer is None:
        layer = init_layer_p1(D)
    O = o_values_from_layer(layer)
    while layer.p < D:
        start = time.perf_counter()
        layer = next_layer(layer, D, threads=opts.threads)
        O.append(layer.coefficient(layer.p - 1, 0, layer.p))
        elapsed = time.perf_counter() - start
        log.debug("layer p=%d built in %.2fs", layer.p, elapsed)
        if opts.progress is not None:
            opts.progress(layer.p, elapsed)
        if opts.checkpoint_dir is not None and layer.p % opts.checkpoint_every == 0 and layer.p < D:
            save_layer(layer, _checkpoint_path(opts.checkpoint_dir, layer.p))
    return CountTable(D, O)


# ---------------------------------------------------------------------------
# closed sums over oracle factors


def _closed_sum(d: int, j_start: int, cap: int) -> int:
    if d < 3:
        raise ValueError("closed sums need d > 2")
    if d > cap:
        raise EnumerationBudgetError(f"d={d} exceeds the enumeration cap {cap}")
    O = count_opnkd_oracle
    total = 1
    for ell in range(1, d - 1):
        for k in range(1, d - 1):
            for i in range(k, d - 1):
                for j in range(j_start, d - 1):
                    left = O(d - ell - 1, d - 1, i, d - j, cap)
                    if left:
                        total += left * O(d - ell, i - 1, k - 1, j, cap)
    return total


def od_via_closed_sums(d: int, cap: int = 12) -> int:
    return _closed_sum(d, 1, cap)


def ad_via_closed_sums(d: int, cap: int = 12) -> int:
    return _closed_sum(d, 2, cap)


__all__ = [
    "CountTable",
    "DEFAULT_ENUMERATION_CAP",
    "EngineOptions",
    "Layer",
    "TRACKER",
    "TruncPoly",
    "ad_via_closed_sums",
    "differences",
    "init_layer_p1",
    "next_layer",
    "o_values_from_layer",
    "od_via_closed_sums",
    "poly_mul_trunc",
    "run_iterative",
]
