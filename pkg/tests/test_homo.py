import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laser.generator import GeneratorSpec, generate_slab_instance
from laser.homo import TopConfig, set_partition, top_pipeline
from laser.model import Actor, ConflictMatrices, PriorityClass, ProblemInstance, TaskKind, TaskPrimitive
from laser.oracle import validate_schedule


def grid_screws(n, cycles=(16, 11), spacing=0.1, cols=10, conflicts=(), classes=None):
    tasks = []
    for i in range(n):
        x, y = (i % cols) * spacing, (i // cols) * spacing
        cls = classes[i] if classes else PriorityClass.REINFORCEMENT
        tasks.append(TaskPrimitive(i, TaskKind.SCREW, None, ((x, y),), {k: c for k, c in enumerate(cycles)},
                                   priority_class=cls))
    actors = [Actor(k, f"R{k}", travel_speed=1.0) for k in range(len(cycles))]
    return ProblemInstance(tasks, actors, [], conflicts=ConflictMatrices(conflicts))


def test_twenty_seven_screws_balance_exactly():
    inst = grid_screws(27)
    res = set_partition(inst, list(range(27)), L_max=1)
    assert not res.unassigned
    counts = [sum(1 for k, _ in res.assignment.values() if k == a) for a in range(2)]
    assert counts == [11, 16]
    assert res.workload[0] == {0: 176, 1: 176}
    assert res.g[0] == 0


def test_conflicting_screws_go_to_different_levels():
    inst = grid_screws(2, conflicts=[(0, 1, a, b) for a in range(2) for b in range(2)])
    res = set_partition(inst, [0, 1], L_max=2, delta_dist=10.0)
    assert not res.unassigned
    assert res.assignment[0][1] != res.assignment[1][1]


def test_large_grid_places_nearly_everything():
    rng = random.Random(3)
    pairs = set()
    while len(pairs) < 40:
        i, j = rng.sample(range(100), 2)
        pairs.add((i, j, 0, 1))
    inst = grid_screws(100, conflicts=sorted(pairs))
    res = set_partition(inst, list(range(100)), L_max=2, time_budget_s=60)
    assert len(res.assignment) >= 98
    assert res.assigned_fraction >= 0.98


def test_priority_only_uses_few_levels():
    inst = grid_screws(10, classes=[PriorityClass.PRIORITY] * 10)
    rep = top_pipeline(inst, TopConfig(time_budget_s=30))
    assert rep.schedule.n_levels <= 3
    assert not validate_schedule(inst, rep.schedule)


def test_priority_levels_come_first():
    classes = [PriorityClass.PRIORITY if i % 2 else PriorityClass.REINFORCEMENT for i in range(40)]
    inst = grid_screws(40, classes=classes)
    rep = top_pipeline(inst, TopConfig(time_budget_s=30, exact_limit=12))
    s = rep.schedule
    prio = [s.level[i] for i in range(40) if classes[i] is PriorityClass.PRIORITY and i not in rep.demoted]
    reinf = [s.level[i] for i in range(40) if classes[i] is PriorityClass.REINFORCEMENT]
    assert max(prio) < min(reinf)
    assert not validate_schedule(inst, s)


def test_prototype_top_session():
    inst = generate_slab_instance(GeneratorSpec(session="top"), 0)
    rep = top_pipeline(inst, TopConfig(time_budget_s=120))
    assert 3 <= rep.schedule.n_levels <= 5
    assert rep.utilization(inst) >= 0.9
    assert not validate_schedule(inst, rep.schedule)


def test_empty_screw_set():
    res = set_partition(grid_screws(3), [], L_max=2)
    assert res.assignment == {} and res.assigned_fraction == 1.0
    with pytest.raises(ValueError):
        set_partition(grid_screws(3), [0], L_max=0)


# ---------------------------------------------------------------------------
# properties


@given(st.integers(4, 40), st.integers(0, 10_000), st.sampled_from([8, 16, 30]))
@settings(max_examples=25)
def test_partition_covers_and_respects_gap(n, seed, delta):
    rng = random.Random(seed)
    pairs = {(i, j, a, b) for i, j in itertools.permutations(range(n), 2) for a in range(2) for b in range(2)
             if a != b and rng.random() < 0.03}
    inst = grid_screws(n, conflicts=sorted(pairs))
    res = set_partition(inst, list(range(n)), L_max=2, delta=delta, time_budget_s=2, exact_limit=12)
    # coverage: every screw is placed once or reported unassigned
    assert set(res.assignment) | res.unassigned == set(range(n))
    assert not set(res.assignment) & res.unassigned
    for l, gap in res.g.items():
        if any(lv == l for _, lv in res.assignment.values()):
            assert gap <= delta
    for (i, (ka, la)), (j, (kb, lb)) in itertools.combinations(res.assignment.items(), 2):
        if la == lb and ka != kb:
            assert not inst.conflicts.node(i, j, ka, kb)


@given(st.integers(0, 10_000))
@settings(max_examples=10)
def test_top_schedule_is_valid(seed):
    spec = GeneratorSpec(session="top", n_elements=4, top_screws=20 + seed % 40, length=1.2 + (seed % 5) * 0.3)
    inst = generate_slab_instance(spec, seed)
    rep = top_pipeline(inst, TopConfig(time_budget_s=2, exact_limit=12))
    s = rep.schedule
    assert sorted(s.assignment) == list(range(inst.n_tasks))
    assert not validate_schedule(inst, s, strict_windows=True)
    prio = [s.level[i] for i, t in enumerate(inst.tasks)
            if t.priority_class is PriorityClass.PRIORITY and i not in rep.demoted]
    reinf = [s.level[i] for i, t in enumerate(inst.tasks) if t.priority_class is PriorityClass.REINFORCEMENT]
    if prio and reinf:
        assert max(prio) < min(reinf)
