import csv
import json

import numpy as np
import pytest

from toepspec.cli import main, parse_complex
from toepspec.matrices import load_matrix


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_parse_complex():
    assert parse_complex("1.5,-0.2") == 1.5 - 0.2j
    assert parse_complex("2-1j") == 2 - 1j


def test_symbol_info(capsys):
    assert main(["symbol-info", "z + z^2", "--z", "0.5,0", "--z=-2,0"]) == 0
    out = _json(capsys)
    assert (out["N_plus"], out["N_minus"]) == (-1, 2)
    assert [p["winding"] for p in out["points"]] == [1, 0]


def test_bad_symbol_returns_one():
    assert main(["symbol-info", "z +* 2"]) == 1


def test_spectrum_csv_and_dump(tmp_path):
    out, dump = tmp_path / "s.csv", tmp_path / "m.txt"
    assert main(["spectrum", "z", "--n", "16", "--gamma", "2", "--out", str(out), "--vectors",
                 "--dump", str(dump)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][:3] == ["re", "im", "abs_v1"] and len(rows) == 17 and len(rows[1]) == 18
    hdr, m = load_matrix(dump)
    assert m.shape == (16, 16) and np.allclose(np.diag(m, 1), 1, atol=16 ** -2 * 10)


def test_large_guard():
    assert main(["spectrum", "z", "--n", "2048"]) == 1


def test_gaps(capsys):
    assert main(["gaps", "z + z^2", "--z", "1.9,0", "--n", "64"]) == 0
    out = _json(capsys)
    assert out["n"] == 64 and out["d"] == 1 and out["t_next"] > out["t_d"]


def test_quasimodes(tmp_path, capsys):
    prof = tmp_path / "q.csv"
    assert main(["quasimodes", "z", "--z", "0.5,0", "--n", "32", "--csv", str(prof)]) == 0
    out = _json(capsys)
    assert out["d"] == 1
    assert prof.read_text().splitlines()[0] == "nu,psi1"


def test_detexp(capsys):
    assert main(["detexp", "z + z^2", "--z", "0.5,0.5", "--n", "12", "--gamma", "1.5"]) == 0
    assert len(_json(capsys)["terms"]) == 13


def test_tubes_and_localize(tmp_path, capsys):
    cs = tmp_path / "t.csv"
    assert main(["tubes", "z + z^2", "--n", "64", "--csv", str(cs)]) == 0
    out = _json(capsys)
    assert out["n_total"] == 64 and len(cs.read_text().splitlines()) == 65
    assert main(["localize", "z + z^2", "--n", "64", "--count", "3", "--z0", "0.5,0"]) == 0
    assert len(_json(capsys)["reports"]) == 3


def test_experiment(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 32, "trials": 2}))
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "3"]) == 0
    assert _json(capsys)["n_ok"] == 2
    assert (tmp_path / "o" / "summary.json").exists()


def test_figures_flag(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    fig = tmp_path / "fig"
    assert main(["experiment", "--n", "32", "--out", str(tmp_path / "o"), "--figures", str(fig)]) == 0
    assert any(p.suffix == ".png" for p in fig.iterdir())
    assert main(["spectrum", "z + z^2", "--n", "32", "--out", str(tmp_path / "s.csv"),
                 "--figures", str(fig)]) == 0
    assert (fig / "spectrum.png").exists()
