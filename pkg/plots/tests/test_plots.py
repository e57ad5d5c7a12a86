"""Unit tests on synthetic CSVs; no simulator required."""

import math

import pytest

from chemoplots import SCHEMA, SchemaError, SeriesBundle, load_series, main, plot_series

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def write_csv(path, n_rows=20, re_sign=1.0, e_level=10.0):
    lines = [",".join(SCHEMA)]
    for i in range(n_rows):
        t = 1e-4 * i
        row = [repr(t), repr(4.0), repr(4.0), repr(2.0 * math.exp(-t))]
        row.append(repr(e_level * math.exp(-5.0 * t)))       # E_mod
        row.append(repr(e_level * math.exp(-4.0 * t)))       # E_exact
        row.append(repr(re_sign * (1e-3 + 1e-4 * i)))        # RE_exact
        row.append(repr(1e-4 - 1e-5 * i))                    # min_u
        row.append(repr(1e-6 * i))                           # neg_norm_u
        row.append(str(2))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def test_load_series_roundtrip(tmp_path):
    path = write_csv(tmp_path / "a.csv")
    cols = load_series(str(path))
    assert set(cols) == set(SCHEMA)
    assert len(cols["t"]) == 20
    assert cols["mass_lumped"][0] == 4.0
    assert cols["picard_iters"][3] == 2.0


def test_load_series_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,mass\n0,1\n")
    with pytest.raises(SchemaError, match="does not match"):
        load_series(str(path))


def test_load_series_rejects_short_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(SCHEMA) + "\n1,2,3\n")
    with pytest.raises(SchemaError, match="expected 10 fields"):
        load_series(str(path))


def test_load_series_rejects_bad_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(",".join(SCHEMA) + "\n" + ",".join(["x"] * 10) + "\n")
    with pytest.raises(SchemaError, match="bad number"):
        load_series(str(path))


def test_load_series_rejects_empty_and_headeronly(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError, match="empty file"):
        load_series(str(empty))
    head = tmp_path / "head.csv"
    head.write_text(",".join(SCHEMA) + "\n")
    with pytest.raises(SchemaError, match="no data rows"):
        load_series(str(head))


def test_load_series_missing_file():
    with pytest.raises(SchemaError, match="cannot read"):
        load_series("/nonexistent/file.csv")


def test_plot_series_curve_count_and_png(tmp_path):
    paths = [write_csv(tmp_path / f"{i}.csv", e_level=10.0 + i) for i in range(3)]
    out = tmp_path / "fig.png"
    bundle = SeriesBundle(series=tuple((f"eps{i}", str(p))
                                       for i, p in enumerate(paths)),
                          column="min_u", out_path=str(out))
    assert plot_series(bundle) == 3
    data = out.read_bytes()
    assert data.startswith(PNG_MAGIC)
    assert len(data) > 1000


def test_plot_series_deterministic(tmp_path):
    path = write_csv(tmp_path / "a.csv")
    outs = []
    for name in ("one.png", "two.png"):
        out = tmp_path / name
        bundle = SeriesBundle(series=(("run", str(path)),), column="E_exact",
                              out_path=str(out), title="decay")
        plot_series(bundle)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_plot_series_single_constant_column(tmp_path):
    # constant data must still produce one drawable curve
    path = tmp_path / "c.csv"
    lines = [",".join(SCHEMA)]
    for i in range(5):
        lines.append(",".join([repr(1e-4 * i)] + [repr(4.0)] * 8 + ["1"]))
    path.write_text("\n".join(lines) + "\n")
    out = tmp_path / "flat.png"
    assert plot_series(SeriesBundle(series=(("const", str(path)),),
                                    column="E_exact", out_path=str(out))) == 1
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_plot_series_log_y(tmp_path):
    path = write_csv(tmp_path / "a.csv", re_sign=1.0)
    out = tmp_path / "log.png"
    bundle = SeriesBundle(series=(("beuv", str(path)),), column="RE_exact",
                          out_path=str(out), log_y=True)
    assert plot_series(bundle) == 1


def test_plot_series_log_y_rejects_nonpositive(tmp_path):
    path = write_csv(tmp_path / "a.csv", re_sign=-1.0)
    bundle = SeriesBundle(series=(("uv", str(path)),), column="RE_exact",
                          out_path=str(tmp_path / "x.png"), log_y=True)
    with pytest.raises(SchemaError, match="no positive values"):
        plot_series(bundle)


def test_plot_series_rejects_unknown_columns(tmp_path):
    path = write_csv(tmp_path / "a.csv")
    with pytest.raises(SchemaError, match="unknown column"):
        plot_series(SeriesBundle(series=(("a", str(path)),), column="energy",
                                 out_path=str(tmp_path / "x.png")))
    with pytest.raises(SchemaError, match="unknown x column"):
        plot_series(SeriesBundle(series=(("a", str(path)),), column="E_mod",
                                 x_column="step", out_path=str(tmp_path / "x.png")))


def test_plot_series_rejects_empty_bundle(tmp_path):
    with pytest.raises(SchemaError, match="no input series"):
        plot_series(SeriesBundle(series=(), column="E_mod",
                                 out_path=str(tmp_path / "x.png")))


# -- CLI ------------------------------------------------------------------------------


def test_cli_happy_path(tmp_path, capsys):
    a = write_csv(tmp_path / "a.csv")
    b = write_csv(tmp_path / "b.csv", e_level=20.0)
    out = tmp_path / "fig.png"
    code = main(["--series", f"first={a}", "--series", f"second={b}",
                 "--column", "E_mod", "--out", str(out)])
    assert code == 0
    assert "2 curve(s)" in capsys.readouterr().out
    assert out.read_bytes().startswith(PNG_MAGIC)


def test_cli_bare_path_label_defaults_to_stem(tmp_path, capsys):
    path = write_csv(tmp_path / "series.csv")
    out = tmp_path / "fig.png"
    assert main(["--series", str(path), "--column", "min_u",
                 "--out", str(out)]) == 0
    capsys.readouterr()


def test_cli_schema_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    code = main(["--series", f"x={bad}", "--column", "min_u",
                 "--out", str(tmp_path / "f.png")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_cli_bad_column_exit_code(tmp_path, capsys):
    path = write_csv(tmp_path / "a.csv")
    code = main(["--series", f"x={path}", "--column", "notacolumn",
                 "--out", str(tmp_path / "f.png")])
    assert code == 2
    capsys.readouterr()


def test_cli_missing_required_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--column", "min_u", "--out", "f.png"])
    assert exc.value.code == 2
