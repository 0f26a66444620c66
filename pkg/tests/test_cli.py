import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from vfe.cli import main


@pytest.fixture(scope="module")
def model_paths(small_corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    paths = {}
    for kind in ("absolute", "relative"):
        paths[kind] = out / f"{kind}.json"
        assert main(["profile", str(small_corpus_dir), "--out", str(paths[kind]), "--kind", kind]) == 0
    return paths


def first_session(corpus):
    return sorted(p for p in corpus.iterdir() if p.is_dir())[0]


def test_simulate_writes_bundles(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path / "c"), "--n", "3", "--seed", "1"]) == 0
    dirs = sorted(p.name for p in (tmp_path / "c").iterdir() if p.is_dir())
    assert dirs == ["session_000", "session_001", "session_002"]
    for d in dirs:
        assert {p.name for p in (tmp_path / "c" / d).iterdir()} == {"imu.csv", "force.csv", "meta.json"}
    manifest = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert manifest["n_sessions"] == 3
    assert "wrote 3 sessions" in capsys.readouterr().out


def test_simulate_base_spec(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"duration_s": 6.0}))
    assert main(["simulate", "--out", str(tmp_path / "c"), "--n", "1", "--config", str(spec)]) == 0
    meta = json.loads((tmp_path / "c" / "session_000" / "meta.json").read_text())
    assert meta["nominal_duration_s"] == 6.0


@pytest.mark.parametrize("argv, code", [
    (["simulate", "--out", "x", "--n", "0"], 2),
    (["profile", "/nonexistent/corpus", "--out", "m.json"], 3),
    (["predict", "/nonexistent/s", "--model", "/nonexistent/m.json", "--out", "p.csv"], 3),
])
def test_error_exit_codes(tmp_path, monkeypatch, argv, code):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["evaluate"])
    assert exc.value.code == 2


def test_evaluate_outputs(small_corpus_dir, tmp_path, capsys):
    out = tmp_path / "rep"
    assert main(["evaluate", str(small_corpus_dir), "--out", str(out), "--traces"]) == 0
    assert (tmp_path / "rep.json").exists() and (tmp_path / "rep.csv").exists()
    assert len(list((tmp_path / "rep_traces").glob("fold_*.csv"))) == 4
    line = capsys.readouterr().out.splitlines()[0]
    assert line.startswith("absolute: 4 folds, mean MAE")


def test_evaluate_figures(small_corpus_dir, tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "rep"
    assert main(["evaluate", str(small_corpus_dir), "--out", str(out), "--kind", "relative", "--figures"]) == 0
    pngs = list((tmp_path / "rep_figures").glob("*.png"))
    assert len(pngs) >= 2
    assert all(p.read_bytes()[:4] == b"\x89PNG" for p in pngs)


def test_predict_headers(small_corpus_dir, model_paths, tmp_path):
    session = first_session(small_corpus_dir)
    for kind, column in (("absolute", "force_est"), ("relative", "force_pct")):
        out = tmp_path / f"{kind}.csv"
        assert main(["predict", str(session), "--model", str(model_paths[kind]), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == f"t,{column}"
        assert len(lines) > 1000


def test_predict_never_reads_force(small_corpus_dir, model_paths, tmp_path):
    session = tmp_path / "nof"
    shutil.copytree(first_session(small_corpus_dir), session)
    (session / "force.csv").unlink()
    out = tmp_path / "p.csv"
    assert main(["predict", str(session), "--model", str(model_paths["absolute"]), "--out", str(out)]) == 0
    values = np.loadtxt(out, delimiter=",", skiprows=1)
    assert np.all(np.isfinite(values))
    # replay mode does need the force file
    assert main(["predict", str(session), "--model", str(model_paths["absolute"]),
                 "--out", str(out), "--align-with-force"]) == 3


def test_predict_warns_on_config_change(small_corpus_dir, model_paths, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"envelope": {"upsample": 4}}))
    out = tmp_path / "p.csv"
    argv = ["predict", str(first_session(small_corpus_dir)), "--model", str(model_paths["absolute"]),
            "--out", str(out)]
    assert main(argv) == 0
    assert "warning" not in capsys.readouterr().err
    assert main(argv + ["--config", str(cfg)]) == 0
    assert "warning: model was trained with config" in capsys.readouterr().err


def test_model_schema_error(small_corpus_dir, model_paths, tmp_path):
    bad = tmp_path / "m.json"
    data = json.loads(model_paths["absolute"].read_text())
    data["schema_version"] = 99
    bad.write_text(json.dumps(data))
    code = main(["predict", str(first_session(small_corpus_dir)), "--model", str(bad),
                 "--out", str(tmp_path / "p.csv")])
    assert code == 5


def test_corrupt_session_exit_code(small_corpus_dir, tmp_path):
    session = tmp_path / "bad"
    shutil.copytree(first_session(small_corpus_dir), session)
    lines = (session / "imu.csv").read_text().splitlines()
    lines[10], lines[11] = lines[11], lines[10]
    (session / "imu.csv").write_text("\n".join(lines) + "\n")
    assert main(["inspect", str(session), "--stage", "filtered", "--out", str(tmp_path / "o")]) == 4


@pytest.mark.parametrize("stage, files", [
    ("filtered", 6), ("envelope", 6), ("repaired", 8), ("aligned", 2), ("features", 1),
])
def test_inspect_stages(small_corpus_dir, tmp_path, stage, files):
    out = tmp_path / stage
    assert main(["inspect", str(first_session(small_corpus_dir)), "--stage", stage, "--out", str(out)]) == 0
    assert len(list(out.iterdir())) == files


def test_inspect_unknown_stage(small_corpus_dir, tmp_path):
    assert main(["inspect", str(first_session(small_corpus_dir)), "--stage", "raw",
                 "--out", str(tmp_path / "o")]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "vfe", "simulate", "--out", str(tmp_path / "c"), "--n", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "error:" in proc.stderr


def test_profile_writes_eight_weights(model_paths):
    data = json.loads(model_paths["absolute"].read_text())
    assert len(data["weights"]) == 8 and data["kind"] == "absolute"
    assert len(json.loads(model_paths["relative"].read_text())["weights"]) == 2


def test_profile_names_corrupt_session(small_corpus_dir, tmp_path, capsys):
    corpus = tmp_path / "corpus"
    shutil.copytree(small_corpus_dir, corpus)
    imu = corpus / "session_002" / "imu.csv"
    lines = imu.read_text().splitlines()
    lines[5] = lines[5].replace(lines[5].split(",")[3], "nan", 1)
    imu.write_text("\n".join(lines) + "\n")
    assert main(["profile", str(corpus), "--out", str(tmp_path / "m.json")]) == 4
    assert "session_002" in capsys.readouterr().err
