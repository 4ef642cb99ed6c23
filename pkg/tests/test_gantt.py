import csv

from laser.gantt import CSV_FIELDS, draw, export_gantt, gantt_data
from laser.model import Actor, ProblemInstance, TaskKind, TaskPrimitive
from laser.stn import Propagator, make_schedule, trivial_horizon


def schedule_of(n_levels, actors=1):
    tasks = [TaskPrimitive(i, TaskKind.SCREW, None, ((float(i), 0.0),), {k: 10 for k in range(actors)})
             for i in range(n_levels)]
    inst = ProblemInstance(tasks, [Actor(k, f"R{k}") for k in range(actors)], [],
                           transitions={(k, i, j): 0 for k in range(actors) for i in range(n_levels)
                                        for j in range(n_levels) if i != j})
    assignment = {i: i % actors for i in range(n_levels)}
    seqs = {k: [i for i in range(n_levels) if i % actors == k] for k in range(actors)}
    level = {i: i for i in range(n_levels)}
    t = Propagator(inst, [], trivial_horizon(inst)).times(assignment, seqs, level)
    return inst, make_schedule(assignment, seqs, level, t)


def test_single_task_one_bar_one_barrier(tmp_path):
    inst, s = schedule_of(1)
    data = gantt_data(s, inst)
    assert len(data.rows) == 1 and data.barriers == [(0, 10)]
    fig = draw(data, tmp_path / "g.svg")
    ax = fig.axes[0]
    assert len(ax.collections) == 1 and len(ax.lines) == 1


def test_two_levels_two_barrier_lines(tmp_path):
    inst, s = schedule_of(2, actors=2)
    data = gantt_data(s, inst)
    ax = draw(data, tmp_path / "g.svg").axes[0]
    assert len(ax.lines) == 2
    assert [t.get_text() for t in ax.get_yticklabels()] == ["R0", "R1"]


def test_export_writes_svg_and_csv(tmp_path):
    inst, s = schedule_of(3, actors=2)
    svg, table = export_gantt(s, inst, tmp_path / "chart")
    assert svg.suffix == ".svg" and svg.read_text().lstrip().startswith("<?xml")
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == CSV_FIELDS and len(rows) == 3
    assert [int(r["level"]) for r in rows] == [0, 1, 2]


def test_until_crops_later_bars(tmp_path):
    inst, s = schedule_of(3)
    ax = draw(gantt_data(s, inst), tmp_path / "g.svg", until=15).axes[0]
    assert len(ax.collections) == 2 and len(ax.lines) == 1
