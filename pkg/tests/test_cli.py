"""CLI behavior: exit codes, output shapes, dry-run purity, determinism."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tikzforge.cli import main
from tikzforge.images import RasterImage

GOOD = "\\begin{tikzpicture}\n\\draw (0,0) -- (1,1);\n\\draw (2,0) -- (2,2);\n\\draw (0,3) circle (1);\n\\end{tikzpicture}\n"
BROKEN = "\\usepackage{tikz}\n\\usepackage{tikz}\n\\begin{tikzpicture}\n\\draw (0,0) -- (1,1);\n\\draw (2,2) --\n"


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_repair_fixable_file(tmp_path, capsys):
    f = tmp_path / "bad.tikz"
    f.write_text(BROKEN)
    code, out, err = run_cli(["repair", str(f)], capsys)
    assert code == 0
    assert out.count("\\usepackage{tikz}") == 1
    assert "\\end{tikzpicture}" in out
    diag = json.loads(err.strip().splitlines()[-1])
    assert diag["changed"] is True


def test_repair_stdin(tmp_path, capsys, monkeypatch):
    import io

    complete = (
        "\\documentclass{standalone}\n\\begin{document}\n" + GOOD + "\\end{document}"
    )
    monkeypatch.setattr("sys.stdin", io.StringIO(complete))
    code, out, err = run_cli(["repair", "-"], capsys)
    assert code == 0
    assert json.loads(err.strip().splitlines()[-1])["changed"] is False


def test_render_ok_and_exit_codes(tmp_path, capsys):
    f = tmp_path / "ok.tikz"
    f.write_text(GOOD)
    out_png = tmp_path / "out.png"
    code, _, _ = run_cli(["render", str(f), "-o", str(out_png)], capsys)
    assert code == 0
    assert out_png.exists()
    img = RasterImage.from_file(out_png)
    assert img.width > 0

    bad = tmp_path / "bad.tikz"
    bad.write_text("\\begin{tikzpicture}\\nosuchmacro\\end{tikzpicture}")
    code, _, err = run_cli(["render", str(bad), "-o", str(tmp_path / "x.png")], capsys)
    assert code == 1


def test_transform_jsonl_output(tmp_path, capsys):
    f = tmp_path / "doc.tikz"
    f.write_text(GOOD)
    code, out, err = run_cli(
        ["--seed", "3", "transform", str(f), "--count", "3"], capsys
    )
    assert code == 0
    lines = [json.loads(l) for l in out.strip().splitlines()]
    assert 1 <= len(lines) <= 3
    for rec in lines:
        assert rec["render_status"] == "compiled_nonblank"
        assert len(rec["code_sha256"]) == 64
    stats = json.loads(err.strip().splitlines()[-1])
    assert stats["requested"] == 3


def test_augment_roundtrip(tmp_path, capsys):
    src = tmp_path / "in.png"
    arr = np.full((60, 80, 3), 255, dtype=np.uint8)
    arr[20:40, 30:60] = 0
    RasterImage.from_array(arr).save(src)
    out = tmp_path / "out.png"
    code, _, _ = run_cli(["--seed", "5", "augment", str(src), "-o", str(out)], capsys)
    assert code == 0
    img = RasterImage.from_file(out)
    assert (img.width, img.height) == (80, 60)


def test_score_pair(tmp_path, capsys):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    arr = np.full((40, 40), 255, dtype=np.uint8)
    RasterImage.from_array(arr).save(a)
    arr2 = arr.copy()
    arr2[10:20, 10:20] = 0
    RasterImage.from_array(arr2).save(b)
    code, out, _ = run_cli(["--mock-clients", "score", "--pair", str(a), str(b)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["mse"] > 0
    assert -1 <= report["ssim"] <= 1
    assert "cosine" in report


def test_score_sets_fid(tmp_path, capsys):
    rng = np.random.default_rng(0)
    for d, offset in (("a", 0), ("b", 40)):
        directory = tmp_path / d
        directory.mkdir()
        for i in range(3):
            arr = rng.integers(offset, offset + 120, (32, 32), dtype=np.int64).astype(np.uint8)
            RasterImage.from_array(arr).save(directory / f"{i}.png")
    code, out, _ = run_cli(
        ["--mock-clients", "score", "--sets", str(tmp_path / "a"), str(tmp_path / "b")],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["fid"] >= 0


def test_score_usage_error(capsys):
    code, _, err = run_cli(["score"], capsys)
    assert code == 3


def test_validate_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("tau: 0.9\nmax_iterations: 2\n")
    code, out, _ = run_cli(["--config", str(cfg), "validate-config"], capsys)
    assert code == 0
    snap = json.loads(out)
    assert snap["tau"] == 0.9
    assert snap["max_iterations"] == 2


def test_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("no_such_key: 1\n")
    code, _, err = run_cli(["--config", str(cfg), "validate-config"], capsys)
    assert code == 3
    assert "config error" in err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_dry_run_touches_nothing(tmp_path, capsys):
    code, out, _ = run_cli(
        ["--json", "--dry-run", "--mock-clients", "refine", "--out", str(tmp_path / "run")],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["plan"] == "refine"
    assert not (tmp_path / "run").exists()


def test_refine_mock_dry_run_deterministic(tmp_path, capsys):
    argv = [
        "--json",
        "--mock-clients",
        "--seed",
        "7",
        "refine",
        "--pool-size",
        "6",
        "--iterations",
        "1",
    ]
    code1, out1, _ = run_cli(argv + ["--out", str(tmp_path / "r1")], capsys)
    code2, out2, _ = run_cli(argv + ["--out", str(tmp_path / "r2")], capsys)
    assert code1 == code2 == 0
    for name in ("candidates.jsonl", "refined_1.jsonl", "transform_1.jsonl", "d1.jsonl"):
        a = (tmp_path / "r1" / "manifests" / name).read_bytes()
        b = (tmp_path / "r2" / "manifests" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
    assert json.loads(out1)["final_size"] > 0


def test_infrastructure_exit_code(tmp_path, capsys, monkeypatch):
    f = tmp_path / "x.tikz"
    f.write_text(GOOD)
    monkeypatch.setenv("TEX_BIN", "/no/such/binary")
    code, _, err = run_cli(["render", str(f), "-o", str(tmp_path / "o.png")], capsys)
    assert code == 4
    assert "infrastructure" in err


def test_console_entrypoint_help():
    proc = subprocess.run(
        [sys.executable, "-m", "tikzforge.cli", "--help"], capture_output=True
    )
    assert proc.returncode == 0
    assert b"repair" in proc.stdout
