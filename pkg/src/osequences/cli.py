"""Command line entry point: ``osequences {compute,verify,calibrate,predict,plot,export}``.

Every flag with a RunConfig counterpart can also be set through an
``OSEQ_``-prefixed environment variable (``OSEQ_MAX_D``, ``OSEQ_THREADS``,
``OSEQ_CHECKPOINT_DIR``, ``OSEQ_CHECKPOINT_EVERY``, ``OSEQ_ENUMERATION_CAP``,
``OSEQ_RECOMPUTE_UP_TO``, ``OSEQ_REFERENCE``, ``OSEQ_LOWER_SHIFT_RANGE``,
``OSEQ_ALIGNMENT``, ``OSEQ_OUT``).  Explicit
flags win over the environment.

Exit codes: 0 success, 2 property violation, 3 I/O or configuration error,
4 budget exceeded.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import calibration as cal
from .checkpoint import CheckpointError, read_header
from .combinatorics import DEFAULT_ENUMERATION_CAP, EnumerationBudgetError, iter_o_sequences
from .dataio import DatasetError, bundled_path, diff_reference, ingest_reference, load_table, write_od_csv, write_report, write_series
from .engine import CountTable, EngineOptions, run_iterative
from .plotting import emit_plot_series, render_svg
from .properties import PropertyVerdict, run_property_suite

EXIT_OK = 0
EXIT_PROPERTY = 2
EXIT_IO = 3
EXIT_BUDGET = 4

ENV_PREFIX = "OSEQ_"

log = logging.getLogger("osequences")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    max_d: int = 60
    threads: int = 1
    checkpoint_dir: Optional[Path] = None
    checkpoint_every: int = 25
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    recompute_cap: int = 100
    reference_file: Optional[Path] = None
    lower_shift_range: str = cal.FROM_8
    alignment: str = "defined"
    output_dir: Path = Path(".")

    def validate(self) -> None:
        if self.max_d < 1:
            raise ConfigError("--max-d must be >= 1")
        if self.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("--checkpoint-every must be >= 1")
        if self.enumeration_cap < 1:
            raise ConfigError("--enumeration-cap must be >= 1")
        if self.recompute_cap < 0:
            raise ConfigError("--recompute-up-to must be >= 0")
        if self.lower_shift_range not in (cal.FROM_8, cal.FROM_2):
            raise ConfigError(f"--lower-shift-range must be {cal.FROM_8} or {cal.FROM_2}")
        if self.alignment not in cal.ALIGNMENTS:
            raise ConfigError(f"--alignment must be one of {sorted(cal.ALIGNMENTS)}")
        if self.reference_file is not None and not self.reference_file.is_file():
            raise ConfigError(f"reference file {self.reference_file} does not exist")


def _env(name: str, default=None, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_PREFIX}{name}={raw!r}: {exc}") from exc


def config_from_args(args: argparse.Namespace) -> RunConfig:
    def pick(attr: str, env: str, default, cast=str):
        value = getattr(args, attr, None)
        return value if value is not None else _env(env, default, cast)

    cfg = RunConfig(
        max_d=pick("max_d", "MAX_D", 60, int),
        threads=pick("threads", "THREADS", 1, int),
        checkpoint_dir=pick("checkpoint_dir", "CHECKPOINT_DIR", None, Path),
        checkpoint_every=pick("checkpoint_every", "CHECKPOINT_EVERY", 25, int),
        enumeration_cap=pick("enumeration_cap", "ENUMERATION_CAP", DEFAULT_ENUMERATION_CAP, int),
        recompute_cap=pick("recompute_up_to", "RECOMPUTE_UP_TO", 100, int),
        reference_file=pick("reference", "REFERENCE", None, Path),
        lower_shift_range=pick("lower_shift_range", "LOWER_SHIFT_RANGE", cal.FROM_8),
        alignment=pick("alignment", "ALIGNMENT", "defined"),
        output_dir=pick("out", "OUT", Path("."), Path),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# compute


def _check_checkpoints(directory: Optional[Path], D: int) -> None:
    if directory is None or not directory.is_dir():
        return
    others = set()
    compatible = False
    for path in directory.glob("layer_*.bin"):
        try:
            _, _, d = read_header(path)
        except CheckpointError:
            continue
        if d == D:
            compatible = True
        else:
            others.add(d)
    if others and not compatible:
        raise ConfigError(
            f"checkpoint directory {directory} holds layers for D={sorted(others)}; "
            f"they cannot seed a run with D={D} (use another directory or --no-resume)"
        )


def cmd_compute(cfg: RunConfig, resume: bool = True, quiet: bool = False) -> CountTable:
    if resume:
        _check_checkpoints(cfg.checkpoint_dir, cfg.max_d)
    start = time.perf_counter()

    def progress(p: int, elapsed: float) -> None:
        if not quiet:
            print(f"layer p={p}/{cfg.max_d} {elapsed:.2f}s (total {time.perf_counter() - start:.1f}s)", file=sys.stderr)

    opts = EngineOptions(
        threads=cfg.threads,
        checkpoint_dir=cfg.checkpoint_dir,
        checkpoint_every=cfg.checkpoint_every,
        resume=resume,
        progress=progress,
    )
    table = run_iterative(cfg.max_d, opts)
    write_od_csv(table, cfg.output_dir / "od.csv")
    return table


# ---------------------------------------------------------------------------
# verify


def oracle_verdict(table: CountTable, cap: int) -> PropertyVerdict:
    """Engine counts against exhaustive enumeration for ``d <= min(D, cap)``."""
    hi = min(table.D, cap)
    bad = [d for d in range(1, hi + 1) if sum(1 for _ in iter_o_sequences(d)) != table.o(d)]
    return PropertyVerdict("oracle_equivalence", not bad, bad, (1, hi))


def recompute_verdict(table: CountTable, cap: int, threads: int = 1) -> PropertyVerdict:
    """Exact agreement with a fresh engine run on ``d <= min(D, cap)``.

    The inequality checks have slack away from small ``d``, so this is what
    catches an isolated corrupted value there.
    """
    hi = min(table.D, cap)
    if hi < 1:
        return PropertyVerdict("engine_recompute", True, [], (1, 0))
    fresh = run_iterative(hi, EngineOptions(threads=threads))
    bad = [d for d in range(1, hi + 1) if fresh.o(d) != table.o(d)]
    return PropertyVerdict("engine_recompute", not bad, bad, (1, hi))


def cmd_verify(table: CountTable, cfg: RunConfig) -> list[PropertyVerdict]:
    verdicts = run_property_suite(table.O, table.A)
    verdicts.append(oracle_verdict(table, cfg.enumeration_cap))
    verdicts.append(recompute_verdict(table, cfg.recompute_cap, cfg.threads))
    if cfg.reference_file is not None:
        reference = ingest_reference(cfg.reference_file)
        diffs = diff_reference(table, reference)
        common = min(table.D, max(reference))
        bad = [d for d, ours, theirs in diffs if ours is not None and theirs is not None]
        verdicts.append(PropertyVerdict("reference_equality", not bad, bad, (1, common)))
    return verdicts


# ---------------------------------------------------------------------------
# calibrate / predict


def _log_table(table: CountTable) -> dict[int, float]:
    return cal.log_table(table.O)


def _require_horizon(table: CountTable, horizon: int) -> None:
    if horizon > table.D:
        raise ConfigError(f"horizon {horizon} exceeds the available data (D={table.D})")
    if horizon < 9:
        raise ConfigError("horizon must be at least 9")


def cmd_calibrate(
    table: CountTable,
    cfg: RunConfig,
    kind: str,
    horizon: int,
    predict_to: Optional[int] = None,
    svg: bool = False,
) -> dict[str, object]:
    _require_horizon(table, horizon)
    logO = _log_table(table)
    out = cfg.output_dir
    align = cal.ALIGNMENTS[cfg.alignment]
    reports: dict[str, cal.CalibrationReport] = {}
    kinds = [cal.UPPER, cal.LOWER] if kind == "both" else [kind]
    end = max(predict_to or horizon, horizon)
    data_range = range(1, table.D + 1)
    for k in kinds:
        if k == cal.UPPER:
            report = cal.calibrate_upper(logO, horizon)
        else:
            report = cal.calibrate_lower(logO, horizon, cfg.lower_shift_range, align.lower_stats_from)
        reports[k] = report
        rows = report.as_rows()
        if table.D > horizon:
            # out-of-sample quality of the calibrated curve on the remaining data
            excess, arg = cal.max_excess(report, logO, 1 if k == cal.UPPER else 2, table.D)
            rows.append(("max_calibrated_minus_logO_on_data", excess))
            rows.append(("argmax_calibrated_minus_logO_on_data", arg))
        write_report(out / f"calibration_{k}_{horizon}.csv", rows)
        lo = 1 if k == cal.UPPER else 2
        inside = range(lo, horizon + 1)
        series = {
            "logO": [(d, logO[d]) for d in data_range if d >= lo],
            report.bound_name: [(d, report.bound(d)) for d in inside],
            f"{report.bound_name}_hat": [(d, report.rescaled(d)) for d in inside],
            f"{report.bound_name}_hathat": [(d, report.calibrated(d)) for d in inside],
        }
        if end > horizon:
            series["prediction"] = sorted(cal.predict(report, horizon + 1, end).items())
        emit_plot_series(f"{k}_{horizon}", series, out / "plots", svg=svg)
    result: dict[str, object] = {"reports": reports}
    if len(reports) == 2:
        zone = cal.prediction_zone(reports[cal.UPPER], reports[cal.LOWER], 2, end, align.zone_upper_lag)
        result["zone"] = zone
        write_report(
            out / f"zone_{horizon}_{end}.csv",
            [("d_lo", 2), ("d_hi", end), ("alignment", cfg.alignment), ("max_width", zone.max_width),
             ("argmax", zone.argmax), ("inverted_count", len(zone.inverted))],
        )
        band = sorted(zone.band.items())
        emit_plot_series(
            f"zone_{horizon}_{end}",
            {"lower": [(d, lo) for d, (lo, _) in band], "upper": [(d, hi) for d, (_, hi) in band]},
            out / "plots",
            svg=svg,
            colors={"lower": "cyan", "upper": "orange"},
        )
    return result


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output directory (default .)")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_dataset(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", type=Path, default=None, help="od.csv to read (default <out>/od.csv); bundled:NAME reads a shipped table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osequences", description="Count finite O-sequences and calibrate their bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="run the layered engine and write od.csv")
    p.add_argument("--max-d", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--checkpoint-dir", type=Path, default=None)
    p.add_argument("--checkpoint-every", type=int, default=None)
    p.add_argument("--no-resume", action="store_true", help="ignore existing checkpoints")
    p.add_argument("--quiet", action="store_true")
    _add_common(p)

    p = sub.add_parser("verify", help="check every property against a dataset")
    _add_dataset(p)
    p.add_argument("--max-d", type=int, default=None, help="compute the dataset instead of reading one")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--reference", type=Path, default=None, help="CSV of d,O_d to compare against")
    p.add_argument("--enumeration-cap", type=int, default=None)
    p.add_argument("--recompute-up-to", type=int, default=None,
                   help="re-run the engine and compare exactly for d up to this bound (default 100)")
    _add_common(p)

    p = sub.add_parser("calibrate", help="affine calibration of the upper/lower bounds")
    _add_dataset(p)
    p.add_argument("--kind", choices=["upper", "lower", "both"], default="both")
    p.add_argument("--horizon", type=int, default=None, help="fit range end D' (default: all data)")
    p.add_argument("--predict-to", type=int, default=None)
    p.add_argument("--lower-shift-range", choices=[cal.FROM_8, cal.FROM_2], default=None)
    p.add_argument("--svg", action="store_true", help="also render SVG charts")
    p.add_argument("--alignment", choices=sorted(cal.ALIGNMENTS), default=None,
                   help="'positional' pairs lower/upper series by array position as in published tables")
    _add_common(p)

    p = sub.add_parser("predict", help="evaluate a calibrated curve on a range of d")
    _add_dataset(p)
    p.add_argument("--kind", choices=["upper", "lower"], default="upper")
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--from", dest="d_from", type=int, default=None)
    p.add_argument("--to", dest="d_to", type=int, required=True)
    p.add_argument("--lower-shift-range", choices=[cal.FROM_8, cal.FROM_2], default=None)
    _add_common(p)

    p = sub.add_parser("plot", help="render d,value series files into one SVG chart")
    p.add_argument("series", nargs="+", type=Path)
    p.add_argument("--title", default="")
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("export", help="write derived columns (log O_d, ratios) for a dataset")
    _add_dataset(p)
    _add_common(p)
    return parser


def _dataset(args: argparse.Namespace, cfg: RunConfig) -> CountTable:
    if args.dataset is not None and str(args.dataset).startswith("bundled:"):
        return load_table(bundled_path(str(args.dataset)[len("bundled:"):]))
    path = args.dataset or cfg.output_dir / "od.csv"
    if not Path(path).is_file():
        raise DatasetError(f"dataset {path} not found (run 'compute' first or pass --dataset)")
    return load_table(path)


def _read_series(path: Path) -> list[tuple[float, float]]:
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if lineno == 1 or not line.strip():
            continue
        x, y = line.split(",")[:2]
        rows.append((float(x), float(y)))
    return rows


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            series = {p.stem: _read_series(p) for p in args.series}
            args.output.parent.mkdir(parents=True, exist_ok=True)
            args.output.write_text(render_svg(series, title=args.title), encoding="utf-8")
            return EXIT_OK

        cfg = config_from_args(args)

        if args.command == "compute":
            table = cmd_compute(cfg, resume=not args.no_resume, quiet=args.quiet)
            print(f"wrote {cfg.output_dir / 'od.csv'} (D={table.D}, O_D={table.o(table.D)})")
            return EXIT_OK

        if args.command == "verify":
            if args.max_d is not None:
                table = run_iterative(cfg.max_d, EngineOptions(threads=cfg.threads))
            else:
                table = _dataset(args, cfg)
            verdicts = cmd_verify(table, cfg)
            for v in verdicts:
                print(v.summary())
            return EXIT_OK if all(v.holds for v in verdicts) else EXIT_PROPERTY

        if args.command == "calibrate":
            table = _dataset(args, cfg)
            horizon = args.horizon or table.D
            result = cmd_calibrate(table, cfg, args.kind, horizon, args.predict_to, svg=args.svg)
            for report in result["reports"].values():
                print(f"{report.kind} D={report.D}: F={report.slope_ratio!r} G={report.intercept!r} shift={report.shift!r}")
            if "zone" in result:
                zone = result["zone"]
                print(f"zone max width {zone.max_width!r} at d={zone.argmax}" +
                      (f"; inverted at {zone.inverted[:5]}" if zone.inverted else ""))
            return EXIT_OK

        if args.command == "predict":
            table = _dataset(args, cfg)
            horizon = args.horizon or table.D
            _require_horizon(table, horizon)
            logO = _log_table(table)
            if args.kind == "upper":
                report = cal.calibrate_upper(logO, horizon)
            else:
                report = cal.calibrate_lower(logO, horizon, cfg.lower_shift_range)
            d_from = args.d_from if args.d_from is not None else horizon + 1
            values = cal.predict(report, d_from, args.d_to)
            path = write_series(cfg.output_dir / f"predict_{args.kind}_{horizon}_{d_from}_{args.d_to}.csv",
                                sorted(values.items()))
            overlap = [d for d in values if d <= table.D]
            msg = f"wrote {path}"
            if overlap:
                excess = max(values[d] - logO[d] for d in overlap)
                msg += f"; max(prediction - log O_d) on data = {excess!r}"
            print(msg)
            return EXIT_OK

        if args.command == "export":
            table = _dataset(args, cfg)
            logO = _log_table(table)
            lines = ["d,O_d,A_d,log_O_d,log_O_d_over_d"]
            for d in range(1, table.D + 1):
                lines.append(f"{d},{table.o(d)},{table.a(d)},{logO[d]!r},{logO[d] / d!r}")
            path = cfg.output_dir / "export.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(lines) + "\n", encoding="ascii")
            print(f"wrote {path}")
            return EXIT_OK
    except EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, DatasetError, CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    parser.error(f"unknown command {args.command}")
    return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
