import json

import numpy as np
import pytest

from bradyquant import __version__, synth
from bradyquant.cli import main
from bradyquant.config import PipelineConfig
from bradyquant.features import FeatureRow, FeatureVector, read_feature_csv, write_feature_csv
from bradyquant.landmarks import save_recording
from bradyquant.synth import generate

FAST = {"train": {"epochs": 5}, "boost": {"n_rounds": 10}, "stats": {"bootstrap": 20}}


@pytest.fixture
def fast_config(tmp_path):
    p = tmp_path / "fast.json"
    p.write_text(json.dumps(FAST))
    return str(p)


def _recordings(dirpath, n=3):
    dirpath.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n):
        s = generate(synth.profile_for_score(i % 4, i), "finger_tapping", subject_id=f"r{i}")
        paths.append(save_recording(s.recording, dirpath / f"r{i}.jsonl") or dirpath / f"r{i}.jsonl")
    return paths


def test_extract_three_files(tmp_path, capsys):
    paths = _recordings(tmp_path / "in")
    out = tmp_path / "f.csv"
    assert main(["extract", *map(str, paths), "--out", str(out), "--json"]) == 0
    rows = read_feature_csv(out.read_text())
    assert [r.subject_id for r in rows] == ["r0", "r1", "r2"]
    assert json.loads(capsys.readouterr().out)["rows"] == 3


def test_extract_partial_failure(tmp_path, capsys):
    good = _recordings(tmp_path / "in", 1)[0]
    bad = tmp_path / "in" / "bad.jsonl"
    bad.write_text('{"not": "a recording"\n')
    out = tmp_path / "f.csv"
    assert main(["extract", str(bad), str(good), "--out", str(out)]) == 0
    assert len(read_feature_csv(out.read_text())) == 1
    assert "bad.jsonl" in capsys.readouterr().err


def test_extract_all_failed(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("garbage\n")
    assert main(["extract", str(bad), "--out", str(tmp_path / "f.csv")]) == 1


def test_extract_debug_files(tmp_path):
    paths = _recordings(tmp_path / "in", 2)
    out = tmp_path / "f.csv"
    assert main(["extract", *map(str, paths), "--out", str(out), "--debug",
                 "--debug-dir", str(tmp_path / "dbg")]) == 0
    files = sorted(p.name for p in (tmp_path / "dbg").iterdir())
    assert files == ["r0.signal.csv", "r1.signal.csv"]


def test_missing_input_and_model(tmp_path):
    assert main(["extract", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "x.csv")]) == 2
    f = tmp_path / "f.csv"
    f.write_text(write_feature_csv([]))
    assert main(["score", str(f), "--model", str(tmp_path / "none.json"), "--out", str(tmp_path / "s.json")]) == 2


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text('{"boost": {"depth": 2}}')
    assert main(["--config", str(bad), "--json", "--dump-config"]) == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"] == "ConfigError" and err["exit_code"] == 2


def test_dump_config_round_trip(tmp_path, capsys):
    assert main(["--dump-config"]) == 0
    text = capsys.readouterr().out
    assert text == PipelineConfig().dumps()
    p = tmp_path / "c.json"
    p.write_text(text)
    assert main(["--config", str(p), "--seed", "3", "--dump-config"]) == 0
    assert json.loads(capsys.readouterr().out)["boost"]["seed"] == 3


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0 and __version__ in capsys.readouterr().out


def _feature_csv(path, n_per=30, seed=0, fatigue_effect=True):
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(4 * n_per):
        score = i % 4
        fat = 0.8 * score + rng.normal(0, 0.5) if fatigue_effect else rng.normal(0, 0.5)
        fv = FeatureVector(rng.normal(0.9, 0.1), rng.normal(0.1, 0.03), rng.normal(0.4, 0.05),
                           rng.normal(0.1, 0.03), fat, int(rng.integers(0, 4)))
        rows.append(FeatureRow(f"s{i:03d}", "finger_tapping", "right" if i % 2 else "left", fv, score))
    path.write_text(write_feature_csv(rows))
    return rows


def test_sigtest_detects_fatigue(tmp_path, fast_config):
    f = tmp_path / "f.csv"
    _feature_csv(f, n_per=50)
    out = tmp_path / "sig.json"
    assert main(["--config", fast_config, "sigtest", str(f), "--out", str(out), "--pool-sides"]) == 0
    rep = json.loads(out.read_text())
    (row,) = rep["rows"]
    assert row["fatigue_p"] < 0.05 and row["n"] == 200


def test_evaluate_length_mismatch(tmp_path, fast_config):
    f = tmp_path / "f.csv"
    _feature_csv(f, n_per=10)
    d = tmp_path / "clf"
    assert main(["--config", fast_config, "train-classifier", str(f), "--out-dir", str(d)]) == 0
    sheet = tmp_path / "s.json"
    assert main(["score", str(f), "--model", str(d / "classifier.json"), "--out", str(sheet)]) == 0
    doc = json.loads(sheet.read_text())
    doc["entries"] = doc["entries"][:-1]
    sheet.write_text(json.dumps(doc))
    assert main(["evaluate", str(f), str(sheet), "--out", str(tmp_path / "e.json")]) == 2


@pytest.mark.slow
def test_end_to_end_and_determinism(tmp_path, fast_config):
    def run(root):
        data = root / "data"
        assert main(["--seed", "4", "synth", "--out", str(data), "--counts", "12,12,12,12",
                     "--movements", "finger_tapping,rapid_am"]) == 0
        assert len(list(data.iterdir())) == 96
        net = root / "arrest.npz"
        assert main(["--config", fast_config, "train-arrest", str(data), "--out", str(net)]) == 0
        f = root / "f.csv"
        assert main(["extract", str(data), "--out", str(f), "--arrest-model", str(net)]) == 0
        clf = root / "clf"
        assert main(["--config", fast_config, "train-classifier", str(f), "--out-dir", str(clf)]) == 0
        sheet = root / "s.json"
        assert main(["score", str(f), "--model", str(clf / "classifier.json"), "--out", str(sheet)]) == 0
        ev = root / "e.json"
        assert main(["evaluate", str(f), str(sheet), "--out", str(ev), "--roc-csv", str(root / "roc.csv")]) == 0
        sig = root / "sig.json"
        assert main(["--config", fast_config, "sigtest", str(f), "--pred", str(sheet), "--out", str(sig)]) == 0
        return [p.read_bytes() for p in (net, f, clf / "classifier.json", clf / "cv_report.json", sheet, ev, sig)]

    a = run(tmp_path / "a")
    b = run(tmp_path / "b")
    assert a == b
    report = json.loads(a[5])
    assert set(report) == {"overall", "finger_tapping", "rapid_am"}
    assert "mixed_model" in json.loads(a[6])
