import json
import hashlib
import math

import numpy as np
import pytest

from gaplab import UnitPoint, cosine_sum_closed, frac_mul
from gaplab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# solve

def test_solve_lil_unit(capsys):
    code, out, _ = run(capsys, "solve", "--lil", "1.0")
    assert code == 0
    assert "block_len      3" in out
    assert "0.23488878485229078" in out  # 17 significant digits


def test_solve_json_output(capsys):
    code, out, _ = run(capsys, "solve", "--lil", "1.0", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["block_len"] == 3
    assert doc["select_prob"] == pytest.approx((17 - math.sqrt(73)) / 36, abs=1e-15)


def test_solve_disc_matches_lil_double(capsys):
    _, out_l, _ = run(capsys, "solve", "--lil", "1.0", "--format", "json")
    _, out_d, _ = run(capsys, "solve", "--disc", "0.5", "--format", "json")
    a, b = json.loads(out_l), json.loads(out_d)
    assert (a["block_len"], a["select_prob"]) == (b["block_len"], b["select_prob"])


def test_solve_zero_target_message(capsys):
    code, out, _ = run(capsys, "solve", "--lil", "0")
    assert code == 0
    assert "every positive integer" in out


def test_solve_invalid_target_exits_2(capsys):
    code, _, err = run(capsys, "solve", "--lil", "-3")
    assert code == 2
    assert "error" in err


def test_solve_requires_exactly_one_mode():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--lil", "1", "--disc", "0.5"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# generate

def test_generate_odds(capsys):
    code, out, err = run(capsys, "generate", "--p", "0", "--limit", "9")
    assert code == 0
    assert out.split() == ["1", "3", "5", "7", "9"]
    assert "2:4" in err


def test_generate_all_integers(capsys):
    code, out, err = run(capsys, "generate", "--p", "1", "--lambda", "1", "--limit", "4")
    assert code == 0
    assert out.split() == ["1", "2", "3", "4"]
    assert "1:3" in err


def test_generate_gap_histogram_only_ones_and_twos(capsys):
    code, _, err = run(
        capsys, "generate", "--target", "1.0", "--seed", "5", "--limit", "100000"
    )
    assert code == 0
    hist = err[err.index("gap histogram") :]
    assert "1:" in hist and "2:" in hist
    assert "3:" not in hist


def test_generate_binary_roundtrip(tmp_path, capsys):
    out_file = tmp_path / "seq.bin"
    code, _, _ = run(
        capsys,
        "generate", "--p", "0.5", "--lambda", "2", "--seed", "3",
        "--limit", "1000", "--out", str(out_file), "--format", "bin",
    )
    assert code == 0
    from_bin = np.frombuffer(out_file.read_bytes(), dtype="<u8")
    txt_file = tmp_path / "seq.txt"
    run(
        capsys,
        "generate", "--p", "0.5", "--lambda", "2", "--seed", "3",
        "--limit", "1000", "--out", str(txt_file),
    )
    from_txt = np.array([int(v) for v in txt_file.read_text().split()], dtype=np.uint64)
    assert np.array_equal(from_bin, from_txt)


def test_generate_without_probability_exits_2(capsys):
    code, _, err = run(capsys, "generate", "--limit", "10")
    assert code == 2
    assert "error" in err


# ---------------------------------------------------------------------------
# config commands

def _write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_trace_odds_matches_closed_form(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {
            "target": {"lambda": 1, "p": 0.0},
            "functions": [{"cos": 1}],
            "max_n": 10_000,
            "num_x": 1,
            "num_seeds": 1,
            "master_seed": 4,
        },
    )
    code, out, _ = run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "run"))
    assert code == 0
    rows = (tmp_path / "run" / "trace.csv").read_text().splitlines()
    assert rows[0] == "N,S_N,ratio,running_sup,theory,function,x_index,seed_index"
    last = rows[-1].split(",")
    n, s_n = int(last[0]), float(last[1])
    assert n == 10_000
    # odd-frequency sum assembled from the anchored closed form
    doc = json.loads((tmp_path / "run" / "trace.json").read_text())
    x = UnitPoint(int(doc["traces"][0]["x_frac"], 16))
    oracle = (
        cosine_sum_closed(2 * n, x).value - cosine_sum_closed(n, frac_mul(x, 2)).value
    )
    assert abs(s_n - oracle) < 1e-6


def test_trace_rerun_byte_identical(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {
            "target": {"lil": 1.0},
            "functions": [{"cos": 1}, {"indicator": [0, 0.5]}],
            "max_n": 2_000,
            "checkpoints": {"geometric": 1.6},
            "num_x": 2,
            "num_seeds": 1,
            "master_seed": 11,
        },
    )
    code, _, _ = run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "a"))
    assert code == 0
    code, _, _ = run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "b"))
    assert code == 0
    for name in ("trace.csv", "trace.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["outputs"] == mb["outputs"]
    assert ma["config"] == mb["config"]


def test_manifest_digests_match_files(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {"target": {"lil": 0.5}, "max_n": 500, "num_x": 1, "num_seeds": 1},
    )
    run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        payload = (tmp_path / "out" / name).read_bytes()
        assert hashlib.sha256(payload).hexdigest() == digest


def test_trace_outputs_all_finite(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {"target": {"lil": 1.0}, "max_n": 1_000, "num_x": 2, "num_seeds": 2},
    )
    run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    rows = (tmp_path / "out" / "trace.csv").read_text().splitlines()[1:]
    for row in rows:
        assert all(math.isfinite(float(v)) for v in row.split(","))


def test_disc_points_file_centered_grid(tmp_path, capsys):
    n = 64
    pts = tmp_path / "grid.txt"
    pts.write_text("\n".join(str((2 * i - 1) / (2 * n)) for i in range(1, n + 1)))
    cfg = _write_config(tmp_path, {"points_file": str(pts)})
    code, _, _ = run(capsys, "disc", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 0
    header, row = (tmp_path / "out" / "disc.csv").read_text().splitlines()
    assert header == "N,d_star,d_ext,scaled,theory,x_index,seed_index"
    fields = row.split(",")
    assert int(fields[0]) == 64
    assert float(fields[1]) == pytest.approx(1 / 128, abs=1e-15)


def test_disc_generated_columns(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {"target": {"lil": 1.0}, "max_n": 600, "num_x": 1, "num_seeds": 1, "master_seed": 7},
    )
    code, _, _ = run(capsys, "disc", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 0
    rows = (tmp_path / "out" / "disc.csv").read_text().splitlines()[1:]
    assert len(rows) > 5
    for row in rows:
        n, d_star, d_ext, scaled, theory = (float(v) for v in row.split(",")[:5])
        assert 1 / (2 * n) <= d_star <= 1.0
        assert d_star <= d_ext <= 2 * d_star + 1e-15
        assert math.isfinite(scaled) and theory == pytest.approx(0.5, abs=1e-12)


def test_mc_single_trajectory_quantiles_collapse(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {
            "target": {"lambda": 3, "p": 0.3},
            "max_n": 800,
            "num_x": 1,
            "num_seeds": 1,
            "master_seed": 21,
        },
    )
    code, _, _ = run(capsys, "mc", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 0
    rows = (tmp_path / "out" / "mc_quantiles.csv").read_text().splitlines()[1:]
    for row in rows:
        q = [float(v) for v in row.split(",")[2:7]]
        assert max(q) - min(q) < 1e-15


def test_mc_report_contains_variance_block(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        {
            "target": {"lambda": 3, "p": 0.5},
            "max_n": 400,
            "num_x": 1,
            "num_seeds": 2,
            "master_seed": 2,
            "variance": {"num_blocks": 200, "num_realizations": 400},
        },
    )
    code, _, _ = run(capsys, "mc", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 0
    doc = json.loads((tmp_path / "out" / "mc_report.json").read_text())
    var = doc["report"]["variance"]
    assert var["predicted"] > 0
    assert var["rel_err"] < 0.5


def test_mc_resource_cap_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("GAPLAB_MAX_ELEMENTS", "100")
    cfg = _write_config(
        tmp_path, {"target": {"lil": 1.0}, "max_n": 5_000, "num_x": 2, "num_seeds": 2}
    )
    code, _, err = run(capsys, "mc", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 2
    assert "cap" in err


def test_config_schema_violation_reports_path(tmp_path, capsys):
    cfg = _write_config(
        tmp_path, {"target": {"lil": 1.0}, "functions": [{"cos": 0}], "max_n": 100}
    )
    code, _, err = run(capsys, "trace", "--config", cfg, "--out-dir", str(tmp_path / "out"))
    assert code == 2
    assert "$.functions[0]" in err


def test_config_missing_file_exits_2(tmp_path, capsys):
    code, _, err = run(
        capsys, "trace", "--config", str(tmp_path / "absent.json"), "--out-dir", str(tmp_path)
    )
    assert code == 2
    assert "error" in err


def test_unwritable_out_dir_exits_3(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    cfg = _write_config(
        tmp_path, {"target": {"lil": 1.0}, "max_n": 100, "num_x": 1, "num_seeds": 1}
    )
    code, _, err = run(
        capsys, "trace", "--config", cfg, "--out-dir", str(blocker / "sub")
    )
    assert code == 3
    assert "error" in err


# ---------------------------------------------------------------------------
# signs

def test_signs_odds_pattern(capsys):
    code, out, _ = run(capsys, "signs", "--p", "0", "--limit", "6")
    assert code == 0
    assert out.split() == ["+1", "-1", "+1", "-1", "+1", "-1"]


def test_signs_to_file(tmp_path, capsys):
    out_file = tmp_path / "signs.txt"
    code, _, _ = run(
        capsys, "signs", "--target", "1.0", "--seed", "9", "--limit", "100",
        "--out", str(out_file),
    )
    assert code == 0
    values = out_file.read_text().split()
    assert len(values) == 100
    assert set(values) <= {"+1", "-1"}
