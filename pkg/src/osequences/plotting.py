"""Minimal deterministic SVG line charts (polyline + axes + legend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional, Sequence

from .dataio import write_series

PALETTE = ["black", "red", "green", "blue", "orange", "magenta", "cyan", "gray"]

WIDTH, HEIGHT = 800, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 50


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_svg(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str = "",
    colors: Optional[Mapping[str, str]] = None,
    x_label: str = "d",
    y_label: str = "",
) -> str:
    if not series or any(len(pts) == 0 for pts in series.values()):
        raise ValueError("cannot plot an empty series")
    colors = dict(colors or {})
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x: float) -> float:
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y: float) -> float:
        return MARGIN_T + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}" stroke="black"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(sx(t))}" y="{MARGIN_T + ph + 18}" text-anchor="middle" font-size="11">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(sy(t) + 4)}" text-anchor="end" font-size="11">{t:.4g}</text>')
    out.append(f'<text x="{MARGIN_L + pw // 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{x_label}</text>')
    if y_label:
        out.append(f'<text x="14" y="{MARGIN_T + ph // 2}" font-size="12" transform="rotate(-90 14 {MARGIN_T + ph // 2})">{y_label}</text>')
    for idx, (name, pts) in enumerate(series.items()):
        color = colors.get(name, PALETTE[idx % len(PALETTE)])
        path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{path}"/>')
        ly = MARGIN_T + 14 + 16 * idx
        out.append(f'<line x1="{MARGIN_L + 10}" y1="{ly}" x2="{MARGIN_L + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{MARGIN_L + 36}" y="{ly + 4}" font-size="11">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot_series(
    name: str,
    series: Mapping[str, Sequence[tuple[int, float]]],
    out_dir,
    svg: bool = True,
    colors: Optional[Mapping[str, str]] = None,
    title: str = "",
) -> list[Path]:
    """One ``d,value`` CSV per series, plus ``{name}.svg`` when asked."""
    if not series or any(len(pts) == 0 for pts in series.values()):
        raise ValueError(f"{name}: cannot emit an empty series")
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for label, pts in series.items():
            written.append(write_series(out_dir / f"{name}__{label}.csv", pts))
        if svg:
            path = out_dir / f"{name}.svg"
            path.write_text(render_svg(series, title=title or name, colors=colors), encoding="utf-8")
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write plot files for {name} under {out_dir}: {exc}") from exc
    return written
