import csv
import math

import pytest
from hypothesis import given, settings, strategies as st

from rachtree import analytics, cli, sweep
from rachtree.config import SchemeConfig, SystemConfig
from rachtree.sweep import CSV_HEADER, SweepRow, SweepSpec, read_csv, run_sweep, write_csv

LOSSLESS = SystemConfig(p_error=0.0)


def quiet(spec, sys=LOSSLESS, **kw):
    return run_sweep(spec, sys, progress=None, **kw)


def test_single_lone_device_point():
    res = quiet(SweepSpec([1], [SchemeConfig.baseline()], runs_per_point=1))
    (row,) = res.rows
    assert res.ok and row.outage_mean == 0 and row.tx_mean == 1 and row.q is None
    assert row.analytic_t is None


def test_spec_invariants():
    with pytest.raises(ValueError):
        SweepSpec([], [SchemeConfig.baseline()])
    with pytest.raises(ValueError):
        SweepSpec([10, 5], [SchemeConfig.baseline()])
    with pytest.raises(ValueError):
        SweepSpec([10], [SchemeConfig.baseline()], runs_per_point=0)


def test_tree_point_carries_overlay():
    res = quiet(SweepSpec([1000], [SchemeConfig.tree(6)], runs_per_point=100))
    (row,) = res.rows
    model = analytics.TreeModel(1000, 54, 6)
    assert row.analytic_t == pytest.approx(analytics.expected_transmissions(model))
    assert row.analytic_r == analytics.expected_traos(model)
    assert row.tx_mean == pytest.approx(row.analytic_t, rel=0.02)


def test_byte_identical_output(tmp_path):
    spec = SweepSpec([50, 200], [SchemeConfig.dynamic(), SchemeConfig.tree(3)], runs_per_point=4, base_seed=7)
    paths = []
    for i, jobs in enumerate((1, 1, 2)):
        paths.append(write_csv(quiet(spec, SystemConfig(), jobs=jobs).rows, tmp_path / f"{i}.csv"))
    blobs = [p.read_bytes() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]
    assert b"\r" not in blobs[0]


def test_failed_point_does_not_stop_the_sweep():
    spec = SweepSpec([20], [SchemeConfig.tree(4), SchemeConfig.tree(6)], runs_per_point=2)
    res = quiet(spec)
    assert [r.q for r in res.rows] == [6]
    assert len(res.failures) == 1 and "q=4" in res.failures[0][0]


def test_header_only_file(tmp_path):
    p = write_csv([], tmp_path / "empty.csv")
    assert p.read_text(encoding="utf-8") == ",".join(CSV_HEADER) + "\n"


def test_one_row_file(tmp_path):
    res = quiet(SweepSpec([30], [SchemeConfig.tree(6)], runs_per_point=2))
    p = write_csv(res.rows, tmp_path / "one.csv")
    with p.open(newline="") as fh:
        records = list(csv.reader(fh))
    assert len(records) == 2 and records[0] == list(CSV_HEADER)


def test_non_tree_rows_leave_analytics_blank(tmp_path):
    res = quiet(SweepSpec([30], [SchemeConfig.baseline()], runs_per_point=2))
    p = write_csv(res.rows, tmp_path / "b.csv")
    rec = next(csv.DictReader(p.open(newline="")))
    assert rec["q"] == "" and all(rec[k] == "" for k in CSV_HEADER if k.startswith("analytic_"))


floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["baseline", "dynamic", "tree"]), st.one_of(st.none(), st.integers(2, 54)),
       st.integers(0, 10**6), st.integers(1, 1000), st.lists(st.one_of(st.none(), floats), min_size=14, max_size=14))
def test_round_trip(tmp_path_factory, scheme, q, n, runs, values):
    row = SweepRow(scheme, q, n, runs, *values)
    path = write_csv([row], tmp_path_factory.mktemp("rt") / "t.csv")
    (back,) = read_csv(path)
    for name in CSV_HEADER:
        a, b = getattr(row, name), getattr(back, name)
        if isinstance(a, float):
            assert b == pytest.approx(a, rel=1e-11, abs=1e-300)
        else:
            assert a == b


def test_nan_is_written_in_c_locale(tmp_path):
    row = SweepRow("tree", 6, 1, 1, delay_ms_mean=math.nan, tx_mean=1234567.0)
    text = write_csv([row], tmp_path / "n.csv").read_text()
    assert ",nan," in text and "1234567" in text


# -- command line -----------------------------------------------------------------

def test_cli_sweep(tmp_path, capsys):
    out = tmp_path / "s.csv"
    rc = cli.main(["--scheme", "tree", "--q", "6", "--q", "3", "--n", "100:300:100", "--runs", "2",
                   "--out", str(out)])
    assert rc == 0
    rows = read_csv(out)
    assert [(r.q, r.n_devices) for r in rows] == [(6, 100), (6, 200), (6, 300), (3, 100), (3, 200), (3, 300)]
    captured = capsys.readouterr()
    assert captured.out == "" and "runs done" in captured.err


def test_cli_figure_preset(tmp_path):
    out = tmp_path / "preset8.csv"
    assert cli.main(["--fig", "8", "--n", "40", "--runs", "2", "--q", "6", "--out", str(out)]) == 0
    dat = out.with_suffix(".dat").read_text()
    assert "# baseline" in dat and "# dynamic" in dat and "# tree_q6" in dat
    assert dat.count("\n\n\n") == 2


def test_cli_analytic_only(tmp_path, monkeypatch):
    monkeypatch.setattr(sweep, "run_scenario", None)  # any simulation would crash
    out = tmp_path / "a.csv"
    assert cli.main(["--analytic-only", "--q", "6", "--n", "1000,30000", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r.runs for r in rows] == [0, 0] and rows[1].analytic_r == 1882
    levels = list(csv.DictReader((tmp_path / "a_levels.csv").open(newline="")))
    assert len(levels) == 20 and levels[0]["m"] == "1"


def test_cli_invalid_configuration(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_preambles = 50\n")
    assert cli.main(["--config", str(cfg), "--q", "6", "--n", "10", "--out", str(tmp_path / "x.csv")]) == 2
    cfg.write_text("nonsense = 1\n")
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
    assert cli.main(["--scheme", "tree", "--q", "4", "--out", str(tmp_path / "x.csv")]) == 2


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("p_error = 0\nscheme = tree\nsplit_factor = 9\n")
    out = tmp_path / "c.csv"
    assert cli.main(["--config", str(cfg), "--n", "50", "--runs", "2", "--out", str(out)]) == 0
    (row,) = read_csv(out)
    assert row.q == 9


def test_cli_partial_failure(tmp_path, monkeypatch):
    real = sweep.run_scenario

    def flaky(sys, scheme, n, seed, **kw):
        if n == 20:
            raise RuntimeError("boom")
        return real(sys, scheme, n, seed, **kw)

    monkeypatch.setattr(sweep, "run_scenario", flaky)
    out = tmp_path / "p.csv"
    assert cli.main(["--scheme", "baseline", "--n", "10,20,30", "--runs", "1", "--out", str(out)]) == 1
    assert [r.n_devices for r in read_csv(out)] == [10, 30]


def test_parse_n():
    assert cli.parse_n("1000:3000:1000") == (1000, 2000, 3000)
    assert cli.parse_n("5, 10") == (5, 10)
    with pytest.raises(Exception):
        cli.parse_n("a:b")
