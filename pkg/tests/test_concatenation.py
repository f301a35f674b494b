import dataclasses
import logging
import math

import numpy as np
import pytest

from spectra.concatenation import (
    Schedule,
    build_schedule,
    build_tower,
    check_schedule,
    check_tower,
    concat_map_psi,
    exponent_envelope_check,
    extend_backward,
    level_skeletons,
    limsup_points,
    mirrored_model,
)
from spectra.exceptions import (
    BudgetExceededError,
    InadmissibleWordError,
    InfeasibleScheduleError,
)
from spectra.legendre import spectrum
from spectra.pressure import pressure_curve, q_grid
from spectra.symbolic import CenterCocycle, SymbolicSystem

from .conftest import assert_checks_pass, manual_schedule


@pytest.fixture(scope="module")
def reference_spectrum():
    system = SymbolicSystem.full_shift(2)
    cocycle = CenterCocycle.from_symbol_values(system, [math.log(0.25), math.log(2)])
    curve = pressure_curve(system, cocycle, q_grid(-20.0, 20.0, 401))
    return spectrum(curve, 201)


def test_concat_map_psi(golden_mean, full_shift):
    assert concat_map_psi(golden_mean, ["00", "10"], 1) == (0, 0, 0, 1, 0)
    assert concat_map_psi(full_shift, ["01", "10"], 0) == (0, 1, 1, 0)
    assert concat_map_psi(golden_mean, ["01"], 1) == (0, 1)
    with pytest.raises(InadmissibleWordError):
        concat_map_psi(golden_mean, ["11"], 1)


def test_single_level_schedule(full_shift, reference_cocycle, reference_spectrum):
    schedule = build_schedule(
        full_shift, reference_cocycle, [0.4], 1, reference_spectrum, max_length=256
    )
    level = schedule.level(1)

    assert schedule.K == 1
    assert level.chi < 0
    assert level.h >= schedule.h_zero - 0.4
    assert level.eps_e == pytest.approx(0.2)
    assert level.n > level.t_sharp
    assert level.N == 1
    assert level.skeleton_count > 1
    assert schedule.prefix_length(1) == level.n
    assert_checks_pass(check_schedule(schedule))


def test_two_level_schedule(full_shift, reference_cocycle, reference_spectrum):
    schedule = build_schedule(
        full_shift, reference_cocycle, [0.4, 0.2], 2, reference_spectrum, max_length=256
    )
    first, second = schedule.levels

    checks = check_schedule(schedule)
    assert len(checks) == 2 * 8
    assert "time-ratio[k=2]" in [check.name for check in checks]
    assert_checks_pass(checks)

    assert schedule.t(0) == 0
    assert schedule.t(1) == first.N * first.n
    assert second.n + schedule.bridge_length < 0.4 * schedule.t(1)
    assert schedule.t(1) / schedule.t(2) < 0.2 / schedule.c_max
    assert Schedule.from_dict(schedule.as_dict()) == schedule
    assert schedule.as_dict()["levels"][1]["t"] == schedule.t(2)


def test_schedule_arguments(full_shift, reference_cocycle, reference_spectrum):
    for eps_seq, K in [([0.2, 0.4], 2), ([0.4], 2), ([0.4, 0.0], 2), ([0.4], 0)]:
        with pytest.raises(ValueError):
            build_schedule(
                full_shift, reference_cocycle, eps_seq, K, reference_spectrum
            )


def test_infeasible_schedule(full_shift, reference_cocycle, reference_spectrum):
    with pytest.raises(InfeasibleScheduleError) as err:
        build_schedule(
            full_shift, reference_cocycle, [0.4], 1, reference_spectrum, max_length=3
        )
    assert err.value.inequality == "length-floor"
    assert err.value.level == 1


def test_zero_outside_domain(full_shift):
    cocycle = CenterCocycle.from_symbol_values(full_shift, [1.0, 2.0])
    curve = pressure_curve(full_shift, cocycle, q_grid(-20.0, 20.0, 201))
    with pytest.raises(InfeasibleScheduleError) as err:
        build_schedule(full_shift, cocycle, [0.4], 1, spectrum(curve, 21))
    assert err.value.inequality == "exponent-choice"


def test_small_tower(golden_mean, small_tower):
    members = small_tower.members

    assert small_tower.length == 19
    assert not small_tower.sampled
    assert small_tower.cardinality == (
        small_tower.level(1).card_s ** 2 * small_tower.level(2).card_s ** 2
    )
    assert len(members) == small_tower.cardinality
    # no two adjacent 1s anywhere
    assert not np.any(members[:, :-1] & members[:, 1:])

    checks = check_tower(small_tower)
    assert [check.name for check in checks] == [
        "cardinality",
        "nesting",
        "separation",
        "multiplicity",
    ]
    assert_checks_pass(checks)


def test_tower_layout(small_tower):
    segments = list(small_tower.segments())
    assert [segment.kind for segment in segments] == [
        "block",
        "connector",
        "block",
        "pad",
        "bridge",
        "block",
        "connector",
        "block",
        "pad",
    ]
    assert [segment.start for segment in segments] == [0, 4, 5, 9, 10, 11, 14, 15, 18]

    assert small_tower.segment_at(10).kind == "bridge"
    assert small_tower.segment_at(9).kind == "pad"
    assert small_tower.segment_at(12).level == 2
    with pytest.raises(IndexError):
        small_tower.segment_at(19)

    assert small_tower.block_mask(1).sum() == 8
    assert small_tower.block_mask(2).sum() == 14
    assert len(small_tower.block_slots()) == 4
    assert len(small_tower.block_slots(1)) == 2


def test_glue(small_tower):
    first, last = small_tower.block_slots(1)
    assert small_tower.glue_after(first, 1, 1).tolist() == [0]
    # pad after 1 is 0, then the bridge from 0 to 1
    assert small_tower.glue_after(last, 1, 1).tolist() == [0, 0]
    assert small_tower.pad_after(last, 0).tolist() == [0]


def test_assemble_from_blocks(small_tower):
    members = small_tower.members
    blocks = [small_tower.blocks(members, k) for k in (1, 2)]
    assert blocks[0].shape == (len(members), 2, 4)
    assert blocks[1].shape == (len(members), 2, 3)
    np.testing.assert_array_equal(small_tower.assemble(blocks), members)


def test_least_member(small_tower):
    least = small_tower.least_member()
    assert any(np.array_equal(least, row) for row in small_tower.members)
    description = small_tower.description()
    assert description["members"] == len(small_tower.members)
    assert description["sampled"] is False
    assert len(description["schedule"]["levels"]) == 2


def test_tower_budget(golden_mean, signed_golden_cocycle, small_schedule):
    skeletons = level_skeletons(golden_mean, signed_golden_cocycle, small_schedule)
    with pytest.raises(BudgetExceededError):
        build_tower(
            golden_mean, signed_golden_cocycle, small_schedule, skeletons, budget=10
        )

    sampled = build_tower(
        golden_mean,
        signed_golden_cocycle,
        small_schedule,
        skeletons,
        budget=10,
        sample_size=5,
        seed=3,
    )
    again = build_tower(
        golden_mean,
        signed_golden_cocycle,
        small_schedule,
        skeletons,
        budget=10,
        sample_size=5,
        seed=3,
    )
    assert sampled.sampled
    assert len({row.tobytes() for row in sampled.members}) == 5
    np.testing.assert_array_equal(sampled.members, again.members)
    assert_checks_pass(check_tower(sampled))


def test_skeleton_mismatch(golden_mean, signed_golden_cocycle, small_schedule):
    skeletons = level_skeletons(golden_mean, signed_golden_cocycle, small_schedule)
    with pytest.raises(ValueError):
        build_tower(golden_mean, signed_golden_cocycle, small_schedule, skeletons[::-1])
    with pytest.raises(ValueError):
        build_tower(golden_mean, signed_golden_cocycle, small_schedule, skeletons[:1])


def test_limsup_points(small_tower):
    points = limsup_points(small_tower, 3, 10)
    assert len(points) == 3
    assert all(len(point) == 10 for point in points)
    assert points == sorted(points)
    assert points[0] == min(tuple(row[:10].tolist()) for row in small_tower.members)

    with pytest.raises(ValueError):
        limsup_points(small_tower, 0, 10)
    with pytest.raises(ValueError):
        limsup_points(small_tower, 1, 20)


@pytest.fixture
def three_levels(golden_mean, signed_golden_cocycle):
    schedule = manual_schedule(
        golden_mean, signed_golden_cocycle, [(4, 2), (3, 2), (2, 2)]
    )
    skeletons = level_skeletons(golden_mean, signed_golden_cocycle, schedule)
    tower = build_tower(
        golden_mean,
        signed_golden_cocycle,
        schedule,
        skeletons,
        budget=10,
        sample_size=4,
    )
    return schedule, tower


def test_envelope(three_levels):
    schedule, tower = three_levels
    report = exponent_envelope_check(tower, schedule)

    assert report.words == 4
    assert [row.k0 for row in report.rows] == [1, 2]
    # level 3 ends before t_3, so only k0 = 1 has exponents to check
    assert report.rows[0].n > schedule.t(2)
    assert report.rows[1].word == -1
    assert len(report.level_ratios) == 3
    assert report.passed
    assert report.as_dict()["passed"] is True


def test_envelope_violation(three_levels, caplog):
    schedule, tower = three_levels
    first = dataclasses.replace(schedule.level(1), eps=0.01)
    strict = dataclasses.replace(schedule, levels=(first,) + schedule.levels[1:])
    constant = np.zeros(tower.length, dtype=np.uint8)

    with caplog.at_level(logging.WARNING):
        report = exponent_envelope_check(tower, strict, [constant])

    row = report.rows[0]
    assert not report.passed
    assert row.ratio == pytest.approx(0.5 / 0.06)
    assert row.n == schedule.t(2) + 1
    assert row.segment.kind == "block"
    assert row.segment.level == 3
    assert row.dominant is not None
    assert "Envelope exceeded" in caplog.text


def test_envelope_violation_by_bridge(golden_mean, signed_golden_cocycle, caplog):
    """A long bridge of zeros after short level 1 blocks drifts by 0.5 a step."""
    base = manual_schedule(
        golden_mean, signed_golden_cocycle, [(4, 2), (3, 2), (2, 2)]
    )
    first = dataclasses.replace(base.level(1), eps=0.01, m=40)
    schedule = dataclasses.replace(base, levels=(first,) + base.levels[1:])
    assert first.m * schedule.c_max / first.n >= first.eps
    skeletons = level_skeletons(golden_mean, signed_golden_cocycle, schedule)
    tower = build_tower(
        golden_mean,
        signed_golden_cocycle,
        schedule,
        skeletons,
        budget=10,
        sample_size=4,
    )

    with caplog.at_level(logging.WARNING):
        report = exponent_envelope_check(tower, schedule)

    row = report.rows[0]
    assert not report.passed
    assert row.ratio > 1.0
    assert row.dominant.kind == "bridge"
    assert row.dominant.level == 1
    assert row.dominant.stop - row.dominant.start == 40
    assert "dominated by bridge of level 1" in caplog.text


def test_extend_backward(golden_mean, signed_golden_cocycle, small_tower):
    back_system, back_cocycle = mirrored_model(golden_mean, signed_golden_cocycle)
    assert back_cocycle.birkhoff_sum((1,)) == pytest.approx(1.0)
    backward_schedule = manual_schedule(back_system, back_cocycle, [(4, 2)])

    forward = small_tower.least_member()
    two_sided = extend_backward(
        golden_mean, signed_golden_cocycle, forward, backward_schedule
    )

    assert two_sided.origin == backward_schedule.prefix_length(1) + 1
    np.testing.assert_array_equal(two_sided.forward, forward)
    assert golden_mean.is_admissible(two_sided.in_time_order().tolist())
    assert two_sided.report.words == 1

    alone = extend_backward(golden_mean, signed_golden_cocycle, [], backward_schedule)
    assert alone.origin == backward_schedule.prefix_length(1)
