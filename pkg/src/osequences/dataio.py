"""CSV persistence for O_d / A_d tables and two-column plot series."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .engine import CountTable, differences


class DatasetError(ValueError):
    pass


def format_od_csv(table: CountTable, with_a: bool = True) -> str:
    buf = io.StringIO()
    buf.write("d,O_d,A_d\n" if with_a else "d,O_d\n")
    for d in range(1, table.D + 1):
        if with_a:
            buf.write(f"{d},{table.o(d)},{table.a(d)}\n")
        else:
            buf.write(f"{d},{table.o(d)}\n")
    return buf.getvalue()


def write_od_csv(table: CountTable, path, with_a: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_od_csv(table, with_a), encoding="ascii")
    return path


def _parse_int(text: str, lineno: int, column: str) -> int:
    text = text.strip()
    if not text or not (text.isdigit() or (text[0] in "+-" and text[1:].isdigit())):
        raise DatasetError(f"line {lineno}: {column} is not a decimal integer: {text!r}")
    return int(text)


def parse_reference(text: str, source: str = "<string>") -> dict[int, int]:
    """``{d: O_d}`` from ``d,O_d[,A_d]`` rows; a header line is optional."""
    values: dict[int, int] = {}
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if lineno == 1 and not row[0].strip().lstrip("+-").isdigit():
            continue  # header
        if len(row) < 2:
            raise DatasetError(f"{source}: line {lineno}: expected 'd,O_d', got {row!r}")
        d = _parse_int(row[0], lineno, "d")
        o = _parse_int(row[1], lineno, "O_d")
        if d < 1 or o < 0:
            raise DatasetError(f"{source}: line {lineno}: negative or zero index/value")
        if d in values:
            raise DatasetError(f"{source}: line {lineno}: duplicate d={d}")
        values[d] = o
    if not values:
        raise DatasetError(f"{source}: no data rows")
    missing = sorted(set(range(1, max(values) + 1)) - set(values))
    if missing:
        raise DatasetError(f"{source}: missing d={missing[0]}" + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
    return values


def ingest_reference(path) -> dict[int, int]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    return parse_reference(text, str(path))


def load_table(path) -> CountTable:
    values = ingest_reference(path)
    O = [values[d] for d in range(1, len(values) + 1)]
    return CountTable(len(O), O, differences(O))


def bundled_path(name: str = "od_1100.csv") -> Path:
    """Location of a dataset shipped inside the package (``osequences/data``)."""
    path = Path(__file__).with_name("data") / name
    if not path.is_file():
        raise DatasetError(f"no bundled dataset named {name!r}")
    return path


def diff_reference(table: CountTable, reference: Mapping[int, int]) -> list[tuple[int, Optional[int], Optional[int]]]:
    """``(d, ours, theirs)`` for every ``d`` where the two disagree or one is missing."""
    out = []
    for d in range(1, max(table.D, max(reference)) + 1):
        ours = table.o(d) if d <= table.D else None
        theirs = reference.get(d)
        if ours is not None and theirs is not None and ours == theirs:
            continue
        if ours is None and theirs is None:
            continue
        out.append((d, ours, theirs))
    return out


def write_series(path, rows: Iterable[tuple[int, float]], header: str = "d,value") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header] + [f"{d},{v!r}" for d, v in rows]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def write_report(path, rows: Iterable[tuple[str, object]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["field,value"]
    for key, value in rows:
        lines.append(f"{key},{value!r}" if isinstance(value, float) else f"{key},{value}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path
