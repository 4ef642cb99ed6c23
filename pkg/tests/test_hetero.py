from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laser.errors import IterationLimit
from laser.generator import GeneratorSpec, generate_slab_instance
from laser.hetero import (BottomConfig, WindowViolation, apply_relaxation, bottom_pipeline,
                          build_active, find_violations, initialize_batches, split_batches)
from laser.model import INF, TaskKind
from laser.oracle import validate_schedule
from laser.stn import Timing


def bottom(n_elements, screws, **kw):
    return generate_slab_instance(GeneratorSpec(session="bottom", n_elements=n_elements, bottom_screws=screws, **kw), 0)


def test_one_element_five_screws():
    inst = bottom(1, 5)
    plan = initialize_batches(inst)
    kinds = Counter(plan.kinds)
    assert kinds[TaskKind.GLUE] == 1 and kinds[TaskKind.PLACE] == 1
    place = plan.groups[plan.kinds.index(TaskKind.PLACE)]
    assert len(place) == 4  # the place itself and 3 critical screws
    assert len(plan.deferred) == 2


def test_adjacent_glues_are_batched():
    plan = initialize_batches(bottom(2, 0, crown_every=0))
    batched = [g for g, k in zip(plan.groups, plan.kinds) if k is TaskKind.BATCHED_GLUE]
    assert len(batched) == 1 and len(batched[0]) == 2
    assert plan.batch_membership == {plan.kinds.index(TaskKind.BATCHED_GLUE): list(batched[0])}


def test_element_without_screws():
    plan = initialize_batches(bottom(1, 0))
    place = plan.groups[plan.kinds.index(TaskKind.PLACE)]
    assert len(place) == 1 and plan.deferred == []


def test_max_batch_caps_coalescing():
    plan = initialize_batches(bottom(5, 0, crown_every=0), max_batch=2)
    assert max(len(g) for g, k in zip(plan.groups, plan.kinds) if k is not TaskKind.PLACE) <= 2


def _glue_plan(n_glues):
    inst = bottom(n_glues, 0, crown_every=0)
    return inst, initialize_batches(inst)


def test_relaxation_single_glue():
    inst = bottom(1, 0)
    plan = initialize_batches(inst)
    relaxed, idx = apply_relaxation(inst.temporal, plan)
    windows = [n for n, c in enumerate(inst.temporal) if c.upper == 900]
    assert len(windows) == 1 and idx == set(windows)
    assert relaxed[windows[0]].upper == INF
    assert inst.temporal[windows[0]].upper == 900  # original kept for the strict re-check


def test_relaxation_leaves_precedences_alone():
    inst, plan = _glue_plan(2)
    relaxed, idx = apply_relaxation(inst.temporal, plan)
    for n, c in enumerate(inst.temporal):
        if c.upper == INF:
            assert relaxed[n] == c and n not in idx


def test_relaxation_counts_batch_members():
    inst, plan = _glue_plan(3)
    assert sorted(len(g) for g, k in zip(plan.groups, plan.kinds) if k is TaskKind.BATCHED_GLUE) == [3]
    _, idx = apply_relaxation(inst.temporal, plan)
    assert len(idx) == 3


def test_loose_windows_need_one_round():
    inst = bottom(2, 4, open_s=100_000, close_s=200_000)
    rep = bottom_pipeline(inst)
    assert rep.iterations == 1 and rep.history[-1] == []
    assert not validate_schedule(inst, rep.schedule)


def test_overshooting_batch_is_split_once():
    spec = dict(crown_every=0, glue_speed=0.0044, buffer_fraction=0.0)
    inst = bottom(2, 0, **spec)
    glue = [inst.duration(i, 0) for i, t in enumerate(inst.tasks) if t.kind is TaskKind.GLUE]
    # together the two glue lines outlast the open time, each alone fits
    assert sum(glue) > 900 and max(glue) + 40 < 900
    rep = bottom_pipeline(inst)
    assert rep.splits == 1 and rep.iterations == 2
    assert [len(h) > 0 for h in rep.history] == [True, False]
    assert not validate_schedule(inst, rep.schedule, strict_windows=True)


def test_find_violations_reports_overshoot():
    inst = bottom(1, 0)
    g, p = 0, 1
    timing = Timing({g: 0, p: 960}, {g: inst.duration(g, 0), p: 1000}, [1000])
    v = find_violations(inst, timing, inst.temporal)
    assert len(v) == 1 and v[0].overshoot == 60 and v[0].element == 0


def test_split_bisects_and_derelaxes_singletons():
    inst, plan = _glue_plan(3)
    n = plan.kinds.index(TaskKind.BATCHED_GLUE)
    members = plan.groups[n]
    window = next(c for c in inst.temporal if c.u == members[0] and c.upper != INF)
    plan2, changed = split_batches(plan, [WindowViolation(0, window, 5)])
    assert changed == 1
    sizes = sorted(len(g) for g, k in zip(plan2.groups, plan2.kinds) if k is not TaskKind.PLACE)
    assert sizes == [1, 2]
    plan3, _ = split_batches(plan2, [WindowViolation(0, window, 5)])
    plan4, _ = split_batches(plan3, [WindowViolation(0, window, 5)])
    node = plan4.node_of()[members[0]]
    assert plan4.groups[node] == (members[0],) and not plan4.relaxed[node]
    with pytest.raises(IterationLimit):
        split_batches(plan4, [WindowViolation(0, window, 5)])


def test_merged_constraints_are_conservative():
    inst = bottom(2, 8)
    plan = initialize_batches(inst)
    relaxed, _ = apply_relaxation(inst.temporal, plan)
    active = build_active(plan, relaxed)
    assert active.n_tasks == len(plan.groups)
    # every node's duration covers its members back to back
    for n, g in enumerate(plan.groups):
        for k, d in active.tasks[n].durations.items():
            assert d >= sum(inst.duration(i, k) for i in g)


# ---------------------------------------------------------------------------
# properties


@given(st.integers(1, 5), st.integers(0, 14), st.integers(0, 3), st.sampled_from([0, 2, 4]))
@settings(max_examples=15)
def test_bottom_conservation_and_soundness(n_elements, screws, seed, crown_every):
    inst = generate_slab_instance(GeneratorSpec(session="bottom", n_elements=n_elements, bottom_screws=screws,
                                                crown_every=crown_every), seed)
    rep = bottom_pipeline(inst, BottomConfig(cp_time_limit_s=2, check_insertions=True))
    s = rep.schedule
    seen = Counter(i for seq in s.sequences.values() for i in seq)
    assert sorted(seen) == list(range(inst.n_tasks)) and set(seen.values()) == {1}
    assert not validate_schedule(inst, s, strict_windows=True)
    # batches only ever shrink, so the loop ends within the glue count
    assert rep.iterations <= sum(1 for t in inst.tasks if t.kind is TaskKind.GLUE) + 1


def test_plan_is_a_partition_of_non_deferred_tasks():
    inst = bottom(6, 20)
    plan = initialize_batches(inst)
    members = [i for g in plan.groups for i in g] + plan.deferred
    assert sorted(members) == list(range(inst.n_tasks))
