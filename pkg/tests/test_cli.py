from __future__ import annotations

import json

import pytest

from partysolve.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_TOO_LARGE, main


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.is_file()}


def test_gen_pool_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen-pool", "--size", "30", "--seed", "4", "--out", str(a)]) == EXIT_OK
    assert main(["gen-pool", "--size", "30", "--seed", "4", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_gen_pool_bad_size(tmp_path):
    assert main(["gen-pool", "--size", "0", "--seed", "4", "--out",
                 str(tmp_path / "x.json")]) == EXIT_INPUT


def test_solve_writes_feasible_solution(tmp_path):
    out = tmp_path / "s.json"
    assert main(["solve", "--pool", "default", "--puzzle", "type1", "--seed", "3",
                 "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["feasible"] is True and all(r["passed"] for r in data["requirements"])
    first = out.read_bytes()
    main(["solve", "--pool", "default", "--puzzle", "type1", "--seed", "3", "--out", str(out)])
    assert out.read_bytes() == first


def test_solve_infeasible_exit_code(tmp_path, capsys):
    from partysolve.persistence import template_text

    puzzle = json.loads(template_text("tiny"))
    puzzle["requirements"].append({"type": "min_count", "trait": "race", "value": "elf",
                                   "bound": 4})
    pz = tmp_path / "hard.json"
    pz.write_text(json.dumps(puzzle))
    out = tmp_path / "r.json"
    code = main(["solve", "--pool", "tiny", "--puzzle", str(pz), "--seed", "1", "--out",
                 str(out)])
    assert code == EXIT_INFEASIBLE
    assert "no feasible solution" in capsys.readouterr().err
    assert out.exists()


def test_input_errors(tmp_path):
    out = str(tmp_path / "x.json")
    assert main(["solve", "--pool", str(tmp_path / "missing.json"), "--puzzle", "type1",
                 "--seed", "1", "--out", out]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "partysolve.puzzle/1", "graph": ')
    assert main(["solve", "--pool", "default", "--puzzle", str(bad), "--seed", "1",
                 "--out", out]) == EXIT_INPUT
    with pytest.raises(SystemExit):
        main(["solve", "--pool", "default"])


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "--pool", "tiny", "--puzzle", "tiny", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["feasible_count"] == 232 and data["optimal_fitness"] == pytest.approx(846.09)
    assert main(["oracle", "--pool", "tiny", "--puzzle", "tiny", "--max-enumeration", "100",
                 "--out", str(out)]) == EXIT_TOO_LARGE


def _optimize(out, *extra):
    return main(["optimize", "--pool", "default", "--puzzle", "type1", "--seed", "2",
                 "--generations", "3", "--population", "8", "--offspring", "16",
                 "--migration-period", "2", "--out", str(out), *extra])


def test_optimize_identical_across_workers(tmp_path, capsys):
    assert _optimize(tmp_path / "w1", "--islands", "2", "--workers", "1") == EXIT_OK
    assert _optimize(tmp_path / "w2", "--islands", "2", "--workers", "2") == EXIT_OK
    a, b = _files(tmp_path / "w1"), _files(tmp_path / "w2")
    assert set(a) == {"best.json", "population.json", "convergence.csv"}
    assert a == b
    assert "near-optimal" in capsys.readouterr().out


def test_optimize_vanilla_and_divisibility(tmp_path):
    assert _optimize(tmp_path / "v", "--vanilla") == EXIT_OK
    assert _optimize(tmp_path / "bad", "--islands", "3") == EXIT_INPUT


def test_bench_guidance(tmp_path):
    assert main(["bench", "guidance", "--attempts", "10", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "guidance_summary.json").exists()
