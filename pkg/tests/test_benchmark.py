import csv

from laser.benchmark import FIELDS, run_benchmark, run_one, write_rows
from laser.generator import GeneratorSpec


def test_rows_for_both_modes(tmp_path):
    spec = GeneratorSpec(n_elements=4, top_screws=40, length=1.5, name="mini")
    rows = run_benchmark([spec], modes=("monolithic", "hybrid"), time_limit_s=2, n_workers=1)
    assert [(r.instance, r.mode) for r in rows] == [("mini", "monolithic"), ("mini", "hybrid")]
    hybrid = rows[1]
    assert hybrid.status == "feasible" and hybrid.objective is not None
    assert hybrid.n_tasks == 40 and hybrid.assignment_fraction is not None
    assert rows[0].status in ("optimal", "feasible", "timeout")
    out = tmp_path / "bench.csv"
    write_rows(rows, out)
    with open(out) as fh:
        got = list(csv.DictReader(fh))
    assert tuple(got[0]) == FIELDS and len(got) == 2


def test_failure_becomes_an_error_row():
    row = run_one(GeneratorSpec(top_screws=10_000, name="broken"), "hybrid", 1)
    assert row.status == "error" and "SpecError" in row.error
    assert row.instance == "broken"


def test_unknown_mode_is_recorded():
    row = run_one(GeneratorSpec(session="top", n_elements=2, top_screws=6, length=1.2), "sideways", 1)
    assert row.status == "error"
