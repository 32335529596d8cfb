import json
import os

import pytest

from sturmspec.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_bands_json(capsys):
    code, out, _ = run(capsys, "bands", "--V", "24", "--depth", "4")
    assert code == 0
    doc = json.loads(out)
    assert doc["depth"] == 4
    assert len(doc["gap_report"]) == 4


def test_bands_csv_has_config_header(capsys):
    code, out, _ = run(capsys, "bands", "--V", "24", "--depth", "3",
                       "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# config ")
    assert lines[1] == "order,n_gaps,min_gap_ratio"


def test_tree_cache_roundtrip(capsys, tmp_path):
    cache = str(tmp_path / "cache")
    code1, out1, _ = run(capsys, "bands", "--V", "24", "--depth", "3",
                         "--cache-dir", cache)
    files = os.listdir(cache)
    assert len(files) == 1 and files[0].endswith(".json")
    code2, out2, _ = run(capsys, "bands", "--V", "24", "--depth", "3",
                         "--cache-dir", cache)
    assert code1 == code2 == 0
    assert out1 == out2


def test_corrupt_cache_recomputed(capsys, tmp_path):
    cache = tmp_path / "cache"
    cache.mkdir()
    run(capsys, "bands", "--V", "24", "--depth", "3", "--cache-dir",
        str(cache))
    f = next(cache.iterdir())
    f.write_text("{not json")
    code, out, _ = run(capsys, "bands", "--V", "24", "--depth", "3",
                       "--cache-dir", str(cache))
    assert code == 0
    assert json.loads(out)["depth"] == 3


def test_v_floor_rejected(capsys):
    code, _, err = run(capsys, "bands", "--V", "3")
    assert code == 2
    assert "floor" in err


def test_low_v_warns(capsys):
    code, _, err = run(capsys, "bands", "--V", "12", "--depth", "2")
    assert code == 0
    assert "exploratory" in err


def test_dims_json(capsys):
    code, out, _ = run(capsys, "dims", "--V", "100", "--depth", "7",
                       "--bits", "192")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) >= {"s_hat", "d_hat", "gamma_hat", "diagnostics"}
    assert 0 < doc["gamma_hat"] < doc["s_hat"] < 1


def test_dims_silver_note(capsys):
    code, out, _ = run(capsys, "dims", "--kappa", "2", "--V", "60",
                       "--depth", "6", "--bits", "192")
    assert code == 0
    assert "silver" in json.loads(out)["note"]


def test_dims_precision_failure_is_exit_1(capsys):
    code, _, err = run(capsys, "dims", "--V", "100", "--depth", "8")
    assert code == 1
    assert "PrecisionExhausted" in err


def test_dos_csv(capsys):
    code, out, _ = run(capsys, "dos", "--V", "24", "--depth", "4",
                       "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "word,type,order,lo,hi,weight"
    weights = [float(l.rsplit(",", 1)[1]) for l in lines[2:]]
    assert sum(weights) == pytest.approx(1.0, abs=1e-10)


def test_multifractal_json(capsys):
    code, out, _ = run(capsys, "multifractal", "--V", "24", "--depth", "6",
                       "--bits", "192")
    assert code == 0
    doc = json.loads(out)
    assert set(doc["summary"]) == {"beta_star", "beta_sup", "tangency_beta"}
    assert len(doc["tau"]["q"]) == 101


def test_asymptotics_json(capsys):
    code, out, _ = run(capsys, "asymptotics", "--kappa-max", "4")
    assert code == 0
    rows = json.loads(out)
    assert [r["kappa"] for r in rows] == [1, 2, 3, 4]
    assert rows[1]["tie"]


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--V", "24", "--depth", "5")
    assert code == 0
    assert "all checks passed" in out
    assert "FAIL" not in out
