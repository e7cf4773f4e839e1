import pytest

from osequences import cli
from osequences.checkpoint import save_layer
from osequences.dataio import (
    DatasetError,
    diff_reference,
    format_od_csv,
    ingest_reference,
    load_table,
    parse_reference,
)
from osequences.engine import CountTable, init_layer_p1, run_iterative
from osequences.plotting import emit_plot_series, render_svg


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)] if argv[0] != "plot" else list(argv))


# --- compute ----------------------------------------------------------------


def test_compute_small(tmp_path, capsys):
    assert run(tmp_path, "compute", "--max-d", "6", "--quiet") == 0
    assert (tmp_path / "od.csv").read_text() == (
        "d,O_d,A_d\n1,1,0\n2,1,0\n3,2,1\n4,3,1\n5,5,2\n6,8,3\n"
    )
    assert "O_D=8" in capsys.readouterr().out


def test_compute_d2(tmp_path):
    assert run(tmp_path, "compute", "--max-d", "2", "--quiet") == 0
    assert (tmp_path / "od.csv").read_text() == "d,O_d,A_d\n1,1,0\n2,1,0\n"


def test_compute_rejects_bad_config(tmp_path, capsys):
    assert run(tmp_path, "compute", "--max-d", "0") == cli.EXIT_IO
    assert run(tmp_path, "compute", "--max-d", "5", "--threads", "0") == cli.EXIT_IO
    assert "threads" in capsys.readouterr().err


def test_resume_matches_cold_run(tmp_path):
    ck = tmp_path / "ck"
    cold, warm = tmp_path / "cold", tmp_path / "warm"
    assert run(cold, "compute", "--max-d", "100", "--quiet") == 0
    args = ["compute", "--max-d", "100", "--checkpoint-dir", str(ck), "--checkpoint-every", "50", "--quiet"]
    assert run(warm, *args) == 0
    assert sorted(p.name for p in ck.iterdir()) == ["layer_00050.bin"]
    (warm / "od.csv").unlink()
    assert run(warm, *args) == 0
    assert (warm / "od.csv").read_bytes() == (cold / "od.csv").read_bytes()


def test_incompatible_checkpoint_is_refused(tmp_path, capsys):
    ck = tmp_path / "ck"
    ck.mkdir()
    save_layer(init_layer_p1(30), ck / "layer_00001.bin")
    code = run(tmp_path, "compute", "--max-d", "20", "--checkpoint-dir", str(ck), "--quiet")
    assert code == cli.EXIT_IO
    assert "D=[30]" in capsys.readouterr().err
    # ignoring the directory is allowed
    assert run(tmp_path, "compute", "--max-d", "20", "--checkpoint-dir", str(ck), "--no-resume", "--quiet") == 0


def test_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("OSEQ_MAX_D", "7")
    monkeypatch.setenv("OSEQ_OUT", str(tmp_path / "env"))
    assert cli.main(["compute", "--quiet"]) == 0
    assert load_table(tmp_path / "env" / "od.csv").O == [1, 1, 2, 3, 5, 8, 12]
    # an explicit flag wins
    assert cli.main(["compute", "--quiet", "--max-d", "5"]) == 0
    assert load_table(tmp_path / "env" / "od.csv").D == 5
    monkeypatch.setenv("OSEQ_THREADS", "many")
    assert cli.main(["compute", "--quiet"]) == cli.EXIT_IO


def test_thread_count_does_not_change_bytes(tmp_path):
    one, eight = tmp_path / "t1", tmp_path / "t8"
    assert run(one, "compute", "--max-d", "60", "--threads", "1", "--quiet") == 0
    assert run(eight, "compute", "--max-d", "60", "--threads", "8", "--quiet") == 0
    assert (one / "od.csv").read_bytes() == (eight / "od.csv").read_bytes()


# --- verify -----------------------------------------------------------------


def test_verify_passes(tmp_path, capsys):
    assert run(tmp_path, "verify", "--max-d", "20", "--enumeration-cap", "10") == 0
    out = capsys.readouterr().out
    assert "oracle_equivalence" in out and "engine_recompute" in out and "FAIL" not in out


def test_verify_flags_tampered_value(tmp_path, capsys):
    table = run_iterative(20)
    O = list(table.O)
    O[6] += 1
    path = tmp_path / "bad.csv"
    path.write_text(format_od_csv(CountTable(20, O)))
    code = run(tmp_path, "verify", "--dataset", str(path), "--enumeration-cap", "8")
    assert code == cli.EXIT_PROPERTY
    out = capsys.readouterr().out
    assert "FAIL" in out and "7" in out


def test_verify_reference(tmp_path, capsys):
    ref = tmp_path / "ref.csv"
    ref.write_text("1,1\n2,1\n3,2\n4,3\n5,6\n")
    assert run(tmp_path, "verify", "--max-d", "8", "--reference", str(ref), "--enumeration-cap", "8") == 2
    assert "reference_equality" in capsys.readouterr().out
    ref.write_text("1,1\n2,1\n3,2\n4,3\n5,5\n")
    assert run(tmp_path, "verify", "--max-d", "8", "--reference", str(ref), "--enumeration-cap", "8") == 0


def test_verify_missing_dataset(tmp_path):
    assert run(tmp_path, "verify") == cli.EXIT_IO


# --- dataset ingestion --------------------------------------------------------


def test_parse_reference_examples():
    assert parse_reference("d,O_d\n1,1\n2,1\n3,2\n") == {1: 1, 2: 1, 3: 2}
    assert parse_reference("1,1\n\n2,1,0\n") == {1: 1, 2: 1}


@pytest.mark.parametrize(
    "text, message",
    [
        ("1,1\n2,1\n3,2.5\n", "line 3"),
        ("1,1\n3,2\n", "missing d=2"),
        ("1,1\n1,1\n", "duplicate"),
        ("1\n", "expected"),
        ("d,O_d\n", "no data"),
        ("1,1\n2,-1\n", "negative"),
    ],
)
def test_parse_reference_errors(text, message):
    with pytest.raises(DatasetError, match=message):
        parse_reference(text)


def test_ingest_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="cannot read"):
        ingest_reference(tmp_path / "nope.csv")


def test_od_csv_round_trip(tmp_path):
    table = run_iterative(40)
    path = tmp_path / "od.csv"
    path.write_text(format_od_csv(table))
    back = load_table(path)
    assert back.O == table.O and back.A == table.A
    assert diff_reference(table, ingest_reference(path)) == []


def test_diff_reference_reports_gaps():
    table = run_iterative(5)
    assert diff_reference(table, {1: 1, 2: 1, 3: 2, 4: 3, 5: 5, 6: 8}) == [(6, None, 8)]
    assert diff_reference(table, {1: 1, 2: 2}) == [(2, 1, 2), (3, 2, None), (4, 3, None), (5, 5, None)]


# --- plotting -----------------------------------------------------------------


def test_emit_plot_series(tmp_path):
    written = emit_plot_series("flat", {"c": [(1, 2.0), (2, 2.0)]}, tmp_path)
    assert [p.name for p in written] == ["flat__c.csv", "flat.svg"]
    assert (tmp_path / "flat__c.csv").read_text() == "d,value\n1,2.0\n2,2.0\n"
    assert (tmp_path / "flat.svg").read_text().startswith("<svg")
    with pytest.raises(ValueError, match="empty"):
        emit_plot_series("e", {"c": []}, tmp_path)


def test_render_svg_is_deterministic():
    series = {"a": [(1, 0.5), (2, 1.5), (3, 1.0)], "b": [(1, 1.0), (3, 2.0)]}
    assert render_svg(series, title="t") == render_svg(series, title="t")
    assert render_svg(series).count("<polyline") == 2
    with pytest.raises(ValueError):
        render_svg({})


def test_plot_command(tmp_path):
    src = tmp_path / "s.csv"
    src.write_text("d,value\n1,1.0\n2,4.0\n")
    out = tmp_path / "p" / "chart.svg"
    assert cli.main(["plot", str(src), "--output", str(out), "--title", "squares"]) == 0
    assert "squares" in out.read_text()


# --- calibrate / predict / export --------------------------------------------


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert cli.main(["compute", "--max-d", "80", "--quiet", "--out", str(out)]) == 0
    return out


def test_calibrate_writes_reports(dataset, capsys):
    assert cli.main(["calibrate", "--out", str(dataset), "--horizon", "60", "--predict-to", "200", "--svg"]) == 0
    for name in ("calibration_upper_60.csv", "calibration_lower_60.csv", "zone_60_200.csv"):
        assert (dataset / name).is_file()
    upper = dict(line.split(",") for line in (dataset / "calibration_upper_60.csv").read_text().splitlines()[1:])
    assert "max_calibrated_minus_logO_on_data" in upper
    assert (dataset / "plots" / "upper_60__prediction.csv").is_file()
    assert (dataset / "plots" / "zone_60_200.svg").is_file()
    assert "upper D=60" in capsys.readouterr().out


def test_calibrate_alignment(dataset):
    for mode in ("defined", "positional"):
        out = dataset / mode
        assert cli.main(["calibrate", "--dataset", str(dataset / "od.csv"), "--out", str(out),
                         "--horizon", "80", "--predict-to", "150", "--alignment", mode]) == 0
    rows = {m: dict(l.split(",") for l in (dataset / m / "zone_80_150.csv").read_text().splitlines()[1:])
            for m in ("defined", "positional")}
    assert rows["positional"]["alignment"] == "positional"
    assert float(rows["positional"]["max_width"]) < float(rows["defined"]["max_width"])
    lower = (dataset / "positional" / "calibration_lower_80.csv").read_text()
    assert "stats_range,9..80" in lower
    with pytest.raises(SystemExit):
        cli.main(["calibrate", "--out", str(dataset), "--alignment", "sideways"])


def test_calibrate_rejects_long_horizon(dataset):
    assert cli.main(["calibrate", "--out", str(dataset), "--horizon", "81"]) == cli.EXIT_IO


def test_predict(dataset):
    assert cli.main(["predict", "--out", str(dataset), "--horizon", "60", "--to", "100"]) == 0
    lines = (dataset / "predict_upper_60_61_100.csv").read_text().splitlines()
    assert lines[0] == "d,value" and len(lines) == 41
    assert cli.main(["predict", "--out", str(dataset), "--kind", "lower", "--horizon", "60", "--from", "2", "--to", "10"]) == 0


def test_export(dataset):
    assert cli.main(["export", "--out", str(dataset)]) == 0
    lines = (dataset / "export.csv").read_text().splitlines()
    assert lines[0] == "d,O_d,A_d,log_O_d,log_O_d_over_d"
    assert lines[1] == "1,1,0,0.0,0.0" and len(lines) == 81


def test_bundled_dataset_through_cli(tmp_path):
    args = ["calibrate", "--dataset", "bundled:od_1100.csv", "--horizon", "1100", "--predict-to", "2000",
            "--alignment", "positional", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    zone = dict(l.split(",") for l in (tmp_path / "zone_1100_2000.csv").read_text().splitlines()[1:])
    assert float(zone["max_width"]) == pytest.approx(6.31289617142, rel=1e-6)
    assert cli.main(["export", "--dataset", "bundled:nope.csv", "--out", str(tmp_path)]) == cli.EXIT_IO
