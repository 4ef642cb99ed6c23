import json
import subprocess
import sys

import pytest

from laser.cli import main
from laser.generator import GeneratorSpec, generate_slab_instance, instance_hash
from laser.model import load_instance, load_schedule
from laser.pipeline import solve


@pytest.fixture
def slab(tmp_path):
    path = tmp_path / "slab.json"
    args = ["generate", "--out", str(path), "--session", "full", "--elements", "3", "--bottom-screws", "6",
            "--top-screws", "12", "--length", "1.5", "--seed", "4"]
    assert main(args) == 0
    return path


def test_generate_matches_library(slab):
    spec = GeneratorSpec(session="full", n_elements=3, bottom_screws=6, top_screws=12, length=1.5)
    assert instance_hash(load_instance(slab)) == instance_hash(generate_slab_instance(spec, 4))


def test_solve_matches_library_and_exits_feasible(slab, tmp_path, capsys):
    out = tmp_path / "s.json"
    code = main(["solve", "--instance", str(slab), "--out", str(out), "--mode", "hybrid", "--time-limit", "5"])
    assert code == 2
    summary = json.loads(capsys.readouterr().out)
    inst = load_instance(slab)
    lib = solve(inst, "hybrid", time_limit_s=5)
    got = load_schedule(out, inst)
    assert summary["status"] == "feasible"
    assert (got.makespan, got.n_levels, got.start) == (lib.schedule.makespan, lib.schedule.n_levels, lib.schedule.start)


def test_same_seed_same_file(tmp_path):
    paths = []
    for name in ("a", "b"):
        p = tmp_path / f"{name}.json"
        assert main(["--seed", "9", "generate", "--out", str(p), "--random", "6"]) == 0
        paths.append(p)
    assert paths[0].read_text() == paths[1].read_text()


def test_validate_and_simulate(slab, tmp_path, capsys):
    sched = tmp_path / "s.json"
    main(["solve", "--instance", str(slab), "--out", str(sched), "--mode", "hybrid", "--time-limit", "5"])
    assert main(["validate", "--instance", str(slab), "--schedule", str(sched)]) == 0
    report = tmp_path / "r.json"
    code = main(["simulate", "--instance", str(slab), "--schedule", str(sched), "--noise", "uniform:0.05",
                 "--seeds", "3", "--report", str(report)])
    assert code == 0
    data = json.loads(report.read_text())
    assert len(data["runs"]) == 3 and data["total_barrier_violations"] == 0
    inst = load_instance(slab)
    last = inst.task_ids[max(range(inst.n_tasks), key=lambda i: load_schedule(sched, inst).level[i])]
    capsys.readouterr()
    main(["simulate", "--instance", str(slab), "--schedule", str(sched), "--fault", f"{last}:fail",
          "--report", str(report)])
    run = json.loads(report.read_text())["runs"][0]
    assert run["halted"] and run["checkpoint_level"] == load_schedule(sched, inst).max_level
    assert main(["simulate", "--instance", str(slab), "--schedule", str(sched), "--fault", "nope:2"]) == 1


def test_exit_codes(tmp_path, slab):
    assert main(["solve", "--instance", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.json")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--mode", "sideways"])
    assert exc.value.code == 64


def test_infeasible_exit_code(tmp_path):
    data = {"schema": "laser/1", "actors": [{"id": "R1"}],
            "tasks": [{"id": "a", "kind": "screw", "coords": [[0, 0]], "durations": {"R1": 10}}],
            "temporal_constraints": [{"u": None, "v": "a", "eta_v": "end", "upper": 5}]}
    p = tmp_path / "inf.json"
    p.write_text(json.dumps(data))
    assert main(["solve", "--instance", str(p), "--out", str(tmp_path / "o.json"), "--time-limit", "5"]) == 3


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "laser.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
