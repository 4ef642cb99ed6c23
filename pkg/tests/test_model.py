import json
import math

import pytest

from laser.errors import CapabilityError, ParseError, ValidationError
from laser.generator import (GeneratorSpec, candidate_screw_positions, generate_slab_instance,
                             instance_hash)
from laser.model import (INF, Actor, Eta, ProblemInstance, TaskKind, TaskPrimitive, TemporalConstraint,
                         compute_transitions, dumps, instance_from_dict, instance_to_dict, load_instance,
                         round_half_up, save_instance)


def minimal_file():
    return {
        "schema": "laser/1",
        "actors": [{"id": "R1"}],
        "tasks": [{"id": "t0", "kind": "screw", "coords": [[0, 0]], "durations": {"R1": 10}}],
    }


def test_minimal_file_loads():
    inst = instance_from_dict(minimal_file())
    assert inst.n_tasks == 1 and inst.n_actors == 1
    assert inst.task_ids == ["t0"] and inst.actor_ids == ["R1"]


def test_empty_durations_is_capability_error():
    data = minimal_file()
    data["tasks"][0]["durations"] = {}
    with pytest.raises(CapabilityError):
        instance_from_dict(data)


def test_unknown_actor_and_task_references():
    data = minimal_file()
    data["tasks"][0]["durations"] = {"R9": 3}
    with pytest.raises(ValidationError):
        instance_from_dict(data)
    data = minimal_file()
    data["temporal_constraints"] = [{"u": "t0", "v": "nope"}]
    with pytest.raises(ValidationError):
        instance_from_dict(data)


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_instance(p)
    with pytest.raises(ParseError):
        instance_from_dict({"actors": []})


def test_decimal_seconds_round_half_up(caplog):
    data = minimal_file()
    data["tasks"][0]["durations"] = {"R1": 10.5}
    with caplog.at_level("WARNING"):
        inst = instance_from_dict(data)
    assert inst.duration(0, 0) == 11
    assert "rounded" in caplog.text
    assert round_half_up(2.5) == 3 and round_half_up(3.5) == 4 and round_half_up(2.49) == 2


def _two_task_instance(tool_a="vacuum", tool_b="glue", prep=None, dist=2.0, speed=1.0, switch=30):
    actor = Actor(0, "R1", travel_speed=speed, tool_switch_times={(tool_a, tool_b): switch},
                  prep_times=prep or {})
    t0 = TaskPrimitive(0, TaskKind.PLACE, 0, ((0.0, 0.0),), {0: 5}, tool=tool_a)
    t1 = TaskPrimitive(1, TaskKind.GLUE, 1, ((dist, 0.0), (dist, 1.0)), {0: 5}, tool=tool_b)
    return ProblemInstance([t0, t1], [actor], [])


def test_rho_zero_case():
    actor = Actor(0, "R1")
    t = [TaskPrimitive(i, TaskKind.SCREW, None, ((1.0, 1.0),), {0: 5}) for i in range(2)]
    assert ProblemInstance(t, [actor], []).rho(0, 0, 1) == 0


def test_rho_arithmetic():
    inst = _two_task_instance(prep={TaskKind.GLUE: 5})
    assert inst.rho(0, 0, 1) == 37


def test_rho_is_sum_of_configured_components():
    # vacuum gripper stored, glue effector picked up: the switch time covers both
    inst = _two_task_instance(prep={TaskKind.GLUE: 10}, dist=1.0, speed=0.5, switch=45)
    travel, switch, prep = inst.transition_parts(0, 0, 1)
    assert (travel, switch, prep) == (2.0, 45, 10)
    assert inst.rho(0, 0, 1) == 57


def test_rho_asymmetric_prep():
    inst = _two_task_instance(prep={TaskKind.GLUE: 5, TaskKind.PLACE: 20})
    # glue -> place leaves from the glue line's exit at (2, 1)
    assert inst.rho(0, 0, 1) == 37
    assert inst.rho(0, 1, 0) == round_half_up(math.dist((2, 1), (0, 0)) + 30 + 20)
    assert inst.rho(0, 0, 1) != inst.rho(0, 1, 0)
    full = compute_transitions(inst)
    assert full[(0, 0, 1)] == 37 and (0, 0, 0) not in full


def test_explicit_transitions_override():
    inst = _two_task_instance()
    inst.transitions[(0, 0, 1)] = 3
    assert inst.rho(0, 0, 1) == 3


def test_buffered_bounds():
    c = TemporalConstraint(0, 1, Eta.START, Eta.START, 0, 900)
    assert c.buffered(0.1).upper == 810
    assert TemporalConstraint(0, 1, lower=100, upper=1000).buffered(0.1).upper == 100 + 810
    assert TemporalConstraint(0, 1, lower=0, upper=INF).buffered(0.5).upper == INF
    assert c.buffered(0.0) == c


def test_instance_validation_rejects_bad_windows():
    t = [TaskPrimitive(i, TaskKind.SCREW, None, ((0.0, 0.0),), {0: 5}) for i in range(2)]
    with pytest.raises(ValidationError):
        ProblemInstance(t, [Actor(0, "R1")], [TemporalConstraint(0, 1, lower=5, upper=4)]).validate()
    with pytest.raises(ValidationError):
        ProblemInstance(t, [Actor(0, "R1")], [TemporalConstraint(0, 7)]).validate()


def test_subset_remaps_ids():
    inst = generate_slab_instance(GeneratorSpec(session="bottom", n_elements=2, bottom_screws=4), 0)
    sub = inst.subset([1, 2, 3])
    assert sub.n_tasks == 3
    assert sub.task_ids == inst.task_ids[1:4]
    assert all(c.v in range(3) and (c.u is None or c.u in range(3)) for c in sub.temporal)


def test_round_trip_is_identical(tmp_path):
    inst = generate_slab_instance(GeneratorSpec(session="full", n_elements=3, bottom_screws=9, top_screws=12), 1)
    p1 = tmp_path / "a.json"
    save_instance(inst, p1)
    again = load_instance(p1)
    p2 = tmp_path / "b.json"
    save_instance(again, p2)
    assert json.loads(p1.read_text()) == json.loads(p2.read_text())
    assert instance_hash(inst) == instance_hash(again)


def test_external_string_ids_survive(tmp_path):
    data = minimal_file()
    data["tasks"].append({"id": "t1", "kind": "glue", "coords": [[0, 0], [0, 1]], "durations": {"R1": 4}})
    data["temporal_constraints"] = [{"u": "t1", "v": "t0", "eta_u": "end", "lower": 2, "upper": 50}]
    inst = instance_from_dict(data)
    out = instance_to_dict(inst)
    assert [t["id"] for t in out["tasks"]] == ["t0", "t1"]
    assert out["temporal_constraints"][0]["u"] == "t1"
    assert instance_from_dict(json.loads(dumps(out))).temporal == inst.temporal


# ---------------------------------------------------------------------------
# generator


def test_smallest_chain():
    inst = generate_slab_instance(GeneratorSpec(session="bottom", n_elements=1, bottom_screws=1), 0)
    kinds = sorted(t.kind.value for t in inst.tasks)
    assert kinds == ["glue", "place", "screw"]
    assert sum(1 for c in inst.temporal if c.upper != INF) == 2


def test_candidate_positions_area_quotient():
    spec = GeneratorSpec(length=6.0, width=2.4)
    expected = (240 * 600) // 220
    assert expected == 654
    assert candidate_screw_positions(spec) == expected
    inst = generate_slab_instance(spec, 0)
    assert sum(1 for t in inst.tasks if t.priority_class is not None) <= expected


def test_prototype_scale_counts(tmp_path):
    spec = GeneratorSpec()
    assert (spec.n_elements, spec.bottom_screws + spec.top_screws) == (34, 352)
    inst = generate_slab_instance(spec, 0)
    assert sum(1 for t in inst.tasks if t.kind is TaskKind.SCREW) == 352
    save_instance(inst, tmp_path / "proto.json")
    assert load_instance(tmp_path / "proto.json").n_tasks == inst.n_tasks


@pytest.mark.parametrize("elements,screws,length", [(15, 41, 3.0), (74, 743, 9.6)])
def test_generator_accepts_envelope_extremes(elements, screws, length):
    spec = GeneratorSpec(n_elements=elements, top_screws=screws, bottom_screws=elements * 3,
                         length=length, session="top")
    spec.validate()
    inst = generate_slab_instance(spec, 0)
    assert sum(1 for t in inst.tasks if t.kind is TaskKind.SCREW) == screws


def test_generator_determinism():
    spec = GeneratorSpec(n_elements=4, bottom_screws=10, top_screws=20)
    assert instance_hash(generate_slab_instance(spec, 5)) == instance_hash(generate_slab_instance(spec, 5))
    assert instance_hash(generate_slab_instance(spec, 5)) != instance_hash(generate_slab_instance(spec, 6))


def test_generator_rejects_bad_spec():
    from laser.errors import SpecError

    with pytest.raises(SpecError):
        generate_slab_instance(GeneratorSpec(top_screws=10_000), 0)
    with pytest.raises(SpecError):
        generate_slab_instance(GeneratorSpec(session="middle"), 0)


def test_crown_precedes_neighbours():
    inst = generate_slab_instance(GeneratorSpec(session="bottom", n_elements=6, bottom_screws=6), 0)
    places = {t.element: i for i, t in enumerate(inst.tasks) if t.kind is TaskKind.PLACE}
    pre = {(c.u, c.v) for c in inst.temporal if c.u is not None and c.eta_u is Eta.END}
    assert (places[4], places[3]) in pre and (places[4], places[5]) in pre
    assert (places[0], places[1]) in pre
