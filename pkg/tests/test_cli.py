import json
import math
import os

from safedual.cli import main
from safedual.problem import load_problem
from safedual.trace import CSV_HEADER


def generate_args(path, seed=0):
    return [
        "generate",
        "--seed", str(seed),
        "--n-range", "3", "5",
        "--m-range", "2", "3",
        "--out", str(path),
    ]


class TestGenerate:
    def test_writes_valid_problem_file(self, tmp_path):
        path = tmp_path / "problem.json"
        assert main(generate_args(path)) == 0
        problem = load_problem(path)
        assert 3 <= problem.n <= 5
        assert 2 <= problem.m <= 3

    def test_stdout_mode_emits_json(self, capsys, tmp_path):
        assert main(["generate", "--seed", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert "A" in doc and doc["n"] == len(doc["theta"])

    def test_seed_reproducibility(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(generate_args(a, seed=9))
        main(generate_args(b, seed=9))
        assert a.read_text() == b.read_text()


class TestSolve:
    def test_outputs_certified_solution(self, tmp_path, capsys):
        path = tmp_path / "problem.json"
        main(generate_args(path))
        capsys.readouterr()
        assert main(["solve", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["kkt_residual"] <= 1e-8
        assert len(doc["x_star"]) == load_problem(path).n
        assert math.isfinite(doc["f_star"])

    def test_missing_file_errors(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "nope.json")]) == 1
        err = json.loads(capsys.readouterr().err)
        assert "message" in err and "error" in err


class TestRun:
    def test_safe_method_trace_to_file(self, tmp_path, capsys):
        problem_path = tmp_path / "problem.json"
        trace_path = tmp_path / "trace.csv"
        main(generate_args(problem_path))
        code = main([
            "run",
            "--problem", str(problem_path),
            "--algorithm", "SDGM",
            "--horizon", "25",
            "--out", str(trace_path),
        ])
        assert code == 0
        lines = trace_path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 26
        min_slack = [float(line.split(",")[-1]) for line in lines[1:]]
        assert min(min_slack) >= -1e-9

    def test_baseline_trace_to_stdout(self, tmp_path, capsys):
        problem_path = tmp_path / "problem.json"
        main(generate_args(problem_path))
        capsys.readouterr()
        code = main([
            "run", "--problem", str(problem_path),
            "--algorithm", "DGM", "--horizon", "10",
        ])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == CSV_HEADER
        assert len(out) == 11


class TestCompareAndReport:
    def test_end_to_end(self, tmp_path, capsys):
        out_dir = tmp_path / "exp"
        config = {
            "generator": {"n_range": [3, 5], "m_range": [2, 3]},
            "horizon": 20,
            "trials": 2,
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        code = main([
            "compare",
            "--config", str(config_path),
            "--out", str(out_dir),
            "--seed", "4",
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["trials"] == 2
        assert set(doc["final_mean_distance"]) == {"SDGM", "DGM", "FDGM", "NDGM"}
        assert os.path.exists(out_dir / "manifest.json")

        assert main(["report", "--out", str(out_dir)]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["trials"] == 2

    def test_flag_overrides_without_config(self, tmp_path, capsys):
        out_dir = tmp_path / "exp2"
        code = main([
            "compare",
            "--trials", "1",
            "--horizon", "10",
            "--algorithms", "SDGM,FDGM",
            "--seed", "2",
            "--out", str(out_dir),
        ])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc["final_mean_distance"]) == {"SDGM", "FDGM"}
        manifest = json.load(open(out_dir / "manifest.json"))
        assert manifest["config"]["trials"] == 1
        assert manifest["config"]["master_seed"] == 2
