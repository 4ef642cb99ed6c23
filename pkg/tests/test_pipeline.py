import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laser.cp import Status
from laser.generator import GeneratorSpec, generate_slab_instance, session_split
from laser.oracle import validate_schedule
from laser.pipeline import MODES, solve
from instances import small_slab


def test_hybrid_stacks_top_levels_above_bottom():
    inst = generate_slab_instance(GeneratorSpec(n_elements=4, bottom_screws=12, top_screws=24, length=1.8), 0)
    out = solve(inst, "hybrid", time_limit_s=5)
    s = out.schedule
    assert out.status is Status.FEASIBLE and out.exit_code == 2
    low, high = session_split(inst)
    assert max(s.level[i] for i in low) < min(s.level[i] for i in high)
    assert out.details["bottom_levels"] + out.details["top_levels"] >= s.n_levels
    assert not validate_schedule(inst, s, strict_windows=True)


def test_unknown_mode():
    with pytest.raises(ValueError):
        solve(small_slab(0), "sideways")


@given(st.integers(0, 10_000), st.sampled_from(MODES))
@settings(max_examples=30)
def test_every_mode_returns_valid_schedules(seed, mode):
    inst = small_slab(seed, 5, 20)
    out = solve(inst, mode, time_limit_s=1)
    if out.schedule is None:
        assert out.status in (Status.TIMEOUT, Status.INFEASIBLE)
    else:
        assert not validate_schedule(inst, out.schedule, strict_windows=True)
