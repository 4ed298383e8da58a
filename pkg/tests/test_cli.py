import pytest

from fewbody_otto.cli import main


def _body(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def test_spectrum_and_determinism(tmp_path):
    assert main(["spectrum", "--n", "2", "--stat", "dist", "--gtilde", "1.6", "--out", str(tmp_path)]) == 0
    f = tmp_path / "spectrum_N2_distinguishable_g1.6.csv"
    first = _body(f)
    assert first[0] == "index,energy,degeneracy,label"
    assert float(first[1].split(",")[1]) == pytest.approx(1.52, abs=0.01)
    main(["spectrum", "--n", "2", "--stat", "dist", "--gtilde", "1.6", "--out", str(tmp_path)])
    assert _body(f) == first
    assert "# config:" in f.read_text()


def test_three_body_ladder(tmp_path):
    assert main(["spectrum", "--n", "3", "--stat", "boson", "--gtilde", "0", "--quanta", "4",
                 "--out", str(tmp_path)]) == 0
    rows = _body(tmp_path / "spectrum_N3_bosonic_g0.csv")
    assert float(rows[1].split(",")[1]) == pytest.approx(1.5)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('out = "%s"\n[cycle]\nstat = "boson"\ngi = 1.6\ngf = 1.6\n' % tmp_path)
    assert main(["cycle", "--config", str(cfg), "--gf", "50"]) == 0
    text = (tmp_path / "cycle.csv").read_text()
    assert '"gf": 50.0' in text and '"gi": 1.6' in text


def test_exit_codes(tmp_path, capsys):
    assert main(["cycle", "--kappa", "1.5", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[cycle]\nnope = 1\n")
    assert main(["cycle", "--config", str(bad)]) == 2
    assert main(["spectrum", "--n", "3", "--method", "product", "--e-cut", "60",
                 "--gtilde", "1", "--out", str(tmp_path)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2


def test_selftest(tmp_path):
    assert main(["selftest", "--out", str(tmp_path)]) == 0


def test_heatmap_writes_plot_script(tmp_path):
    assert main(["heatmap", "--n", "2", "--stat", "b", "--points", "4", "--no-polish", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "plot_heatmap_N2_bosonic.py").exists()
    assert len(_body(tmp_path / "heatmap_N2_bosonic.csv")) == 17


def test_large_gtilde_warning(tmp_path, capsys):
    assert main(["spectrum", "--n", "3", "--gtilde", "40", "--quanta", "3", "--levels", "3",
                 "--out", str(tmp_path)]) == 0
    assert "warning" in capsys.readouterr().err
