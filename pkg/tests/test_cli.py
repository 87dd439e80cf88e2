import csv
import json

import numpy as np
import pytest

from scfpose import serialize
from scfpose.cli import basin_map, main
from scfpose.model import ShapeProblem, precompute
from scfpose.synthetic import SynthConfig, generate


@pytest.fixture
def clean_problem(tmp_path):
    prob, gt = generate(SynthConfig(sigma_m=0.0, seed=5), 0)
    path = tmp_path / "problem.json"
    serialize.write_problem(path, prob)
    return path, prob, gt


@pytest.fixture
def noisy_problem(tmp_path):
    # seed chosen so that the problem has two attraction basins
    prob, gt = generate(SynthConfig(sigma_m=5.0, seed=31), 0)
    path = tmp_path / "noisy.json"
    serialize.write_problem(path, prob)
    return path, prob, gt


# ------------------------------------------------------------------- serialize


def test_problem_round_trip(tmp_path, clean_problem):
    path, prob, _ = clean_problem
    loaded = serialize.load_problem(path)
    assert np.allclose(loaded.keypoints, prob.keypoints)
    assert np.allclose(loaded.library, prob.library)
    assert np.allclose(loaded.weights, prob.weights)
    assert loaded.lam == prob.lam


def test_problem_weights_default_to_one(tmp_path):
    prob, _ = generate(SynthConfig(sigma_m=0.1, seed=1), 0)
    data = serialize.problem_to_dict(prob)
    del data["weights"]
    del data["lambda"]
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    loaded = serialize.load_problem(path)
    assert np.all(loaded.weights == 1.0)
    assert loaded.lam == 0.0


def test_load_problem_missing_key(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"keypoints": [[0,0,0]]}')
    with pytest.raises(ValueError, match="library"):
        serialize.load_problem(path)


# ----------------------------------------------------------------------- solve


def test_solve_clean_fixture(tmp_path, clean_problem, capsys):
    path, _, _ = clean_problem
    out = tmp_path / "result.json"
    code = main(["solve", str(path), "-o", str(out)])
    assert code == 0
    result = json.loads(out.read_text())
    assert result["converged"] is True
    assert result["certified"] is True
    assert result["certificate"]["verdict"] == "certified"
    assert abs(sum(result["c"]) - 1.0) < 1e-9
    assert len(result["R"]) == 9 and len(result["q"]) == 4


def test_solve_exit_2_when_iteration_capped(tmp_path, noisy_problem):
    path, _, _ = noisy_problem
    out = tmp_path / "r.json"
    code = main(["solve", str(path), "-o", str(out), "--max-iters", "1"])
    assert code == 2
    assert json.loads(out.read_text())["converged"] is False


def test_solve_trace_csv(tmp_path, clean_problem):
    path, _, _ = clean_problem
    out = tmp_path / "r.json"
    trace = tmp_path / "trace.csv"
    assert main(["solve", str(path), "-o", str(out), "--trace", str(trace)]) == 0
    with open(trace) as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["iter"] == "0"
    assert set(rows[0]) == {"iter", "q1", "q2", "q3", "q4", "mu", "objective"}
    q0 = [float(rows[0][k]) for k in ("q1", "q2", "q3", "q4")]
    assert q0 == [1.0, 0.0, 0.0, 0.0]


def test_solve_truncated_json_names_offset(tmp_path, clean_problem, capsys):
    path, _, _ = clean_problem
    full = path.read_text()
    bad = path.parent / "trunc.json"
    bad.write_text(full[: len(full) // 2])
    code = main(["solve", str(bad), "-o", str(path.parent / "r.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert "byte offset" in captured.err
    assert "line" in captured.err


def test_solve_gnc_emits_weights(tmp_path):
    rng = np.random.default_rng(0)
    prob, _ = generate(SynthConfig(sigma_m=0.25, seed=31), 0)
    y = prob.keypoints.copy()
    y[2] += 60.0 * rng.standard_normal(3)
    path = tmp_path / "outlier.json"
    serialize.write_problem(path, ShapeProblem(y, prob.library, prob.weights, prob.lam))
    out = tmp_path / "r.json"
    code = main(["solve", str(path), "-o", str(out), "--gnc", "--cbar2", "0.05"])
    assert code == 0
    result = json.loads(out.read_text())
    weights = result["gnc"]["weights"]
    assert weights[2] < 1e-3
    assert result["gnc"]["iterations"] >= 1


def test_solve_rejects_gnc_with_multistart(tmp_path, clean_problem):
    path, _, _ = clean_problem
    code = main(["solve", str(path), "--gnc", "--multi-start", "3", "-o", str(path) + ".r"])
    assert code == 1


def test_solve_drop_keypoints(tmp_path, clean_problem):
    path, prob, _ = clean_problem
    out = tmp_path / "r.json"
    assert main(["solve", str(path), "-o", str(out), "--drop-keypoints", "0,3"]) == 0
    assert main(["solve", str(path), "-o", str(out), "--drop-keypoints", "0,99"]) == 1


def test_unknown_flag_exits_1(clean_problem):
    path, _, _ = clean_problem
    assert main(["solve", str(path), "--definitely-not-a-flag"]) == 1


def test_no_command_exits_1(capsys):
    assert main([]) == 1


def test_cli_never_raises_on_adversarial_input(tmp_path):
    corpus = [
        "",
        "{",
        "[1,2,3",
        '{"keypoints": "nope"}',
        '{"keypoints": [[0,0,0]], "library": "x"}',
        '{"keypoints": [[1e999]], "library": []}',
        "\x00\x01\x02binary",
        '{"keypoints": [[0,0]], "library": [[[1],[2],[3]]]}',
        json.dumps({"keypoints": [[0, 0, 0]] * 4, "library": [[[1, 2]] * 3] * 4, "lambda": -1}),
        '{"keypoints": [], "library": []}',
    ]
    for i, text in enumerate(corpus):
        path = tmp_path / f"fuzz{i}.json"
        path.write_text(text)
        code = main(["solve", str(path), "-o", str(tmp_path / "out.json")])
        assert code == 1, f"case {i}: expected input-error exit, got {code}"


# --------------------------------------------------------------------- certify


def test_certify_round_trip_same_verdict(tmp_path, clean_problem):
    path, _, _ = clean_problem
    out = tmp_path / "result.json"
    assert main(["solve", str(path), "-o", str(out)]) == 0
    first = json.loads(out.read_text())["certificate"]

    cert_out = tmp_path / "cert.json"
    assert main(["certify", str(path), str(out), "-o", str(cert_out)]) == 0
    second = json.loads(cert_out.read_text())
    assert second["verdict"] == first["verdict"]
    assert second["certified"] == first["certified"]
    assert abs(second["min_eig_S"] - first["min_eig_S"]) < 1e-9
    assert len(second["multipliers"]) == 7


def test_certify_missing_rotation(tmp_path, clean_problem):
    path, _, _ = clean_problem
    bad = tmp_path / "no_r.json"
    bad.write_text("{}")
    assert main(["certify", str(path), str(bad)]) == 1


# ----------------------------------------------------------------------- bench


def test_bench_deterministic_modulo_runtime(tmp_path):
    args = [
        "bench",
        "--trials",
        "20",
        "--sigma-m",
        "0.25",
        "--seed",
        "7",
        "--solver",
        "scf,gn",
        "--warmup",
        "1",
        "--no-plot",
    ]
    rows = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(args + ["--out-dir", str(out)]) == 0
        with open(out / "results.csv") as f:
            rows.append(list(csv.DictReader(f)))
    drop = {"runtime_s", "precompute_s"}
    for ra, rb in zip(rows[0], rows[1]):
        assert {k: v for k, v in ra.items() if k not in drop} == {
            k: v for k, v in rb.items() if k not in drop
        }


def test_bench_runs_all_requested_solvers(tmp_path):
    out = tmp_path / "bench"
    code = main(
        [
            "bench",
            "--trials",
            "5",
            "--sigma-m",
            "0.5,2.5",
            "--seed",
            "3",
            "--solver",
            "scf,gn,lm",
            "--warmup",
            "0",
            "--out-dir",
            str(out),
            "--no-plot",
        ]
    )
    assert code == 0
    with open(out / "results.csv") as f:
        rows = list(csv.DictReader(f))
    assert {r["solver"] for r in rows} == {"scf", "gn", "lm"}
    assert {float(r["sigma_m"]) for r in rows} == {0.5, 2.5}
    assert len(rows) == 5 * 3 * 2
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["solvers"]) == {"scf", "gn", "lm"}
    assert summary["config"]["seed"] == 3


def test_bench_renders_figures(tmp_path):
    out = tmp_path / "bench"
    code = main(
        ["bench", "--trials", "6", "--sigma-m", "0.25", "--seed", "1", "--solver", "scf",
         "--warmup", "0", "--out-dir", str(out)]
    )
    assert code == 0
    assert (out / "rotation_errors.png").exists()
    assert (out / "runtimes.png").exists()
    assert (out / "results.csv").exists()


def test_bench_rejects_bad_solver(tmp_path):
    assert main(["bench", "--solver", "magic", "--out-dir", str(tmp_path)]) == 1


def test_env_var_seed(tmp_path, monkeypatch):
    out = tmp_path / "bench"
    monkeypatch.setenv("SCFPOSE_SEED", "99")
    assert main(
        ["bench", "--trials", "3", "--sigma-m", "0.5", "--solver", "scf", "--warmup", "0",
         "--out-dir", str(out), "--no-plot"]
    ) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["seed"] == 99


# ----------------------------------------------------------------------- basin


def test_basin_zero_noise_single_label(tmp_path, clean_problem):
    path, prob, _ = clean_problem
    out = tmp_path / "basin.csv"
    code = main(["basin", str(path), "-o", str(out), "--samples", "40", "--seed", "2"])
    assert code == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 40
    assert {r["label"] for r in rows} == {"0"}
    assert (tmp_path / "basin.png").exists()


def test_basin_high_noise_multiple_labels(tmp_path, noisy_problem):
    path, _, _ = noisy_problem
    out = tmp_path / "basin.csv"
    code = main(
        ["basin", str(path), "-o", str(out), "--samples", "60", "--seed", "2", "--no-plot"]
    )
    assert code == 0
    with open(out) as f:
        rows = list(csv.DictReader(f))
    labels = {r["label"] for r in rows if r["label"] != "-1"}
    assert len(labels) >= 2


def test_basin_projections_inside_unit_ball(tmp_path, noisy_problem):
    path, prob, _ = noisy_problem
    pre = precompute(prob)
    rows = basin_map(pre, 50, seed=4)
    for r in rows:
        assert r["proj_x"] ** 2 + r["proj_y"] ** 2 + r["proj_z"] ** 2 <= 1.0 + 1e-12
