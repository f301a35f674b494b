import itertools
import math
from collections import Counter
from fractions import Fraction

import pytest

from spectra.distribution import (
    MarkovCylinderMeasure,
    TowerMeasure,
    UniformWordsMeasure,
    ball_mass,
    choose_theta,
    consistency_checks,
    edp_certificate,
    local_entropy_audit,
)
from spectra.entropy_estimation import ExplicitWords, SystemWords
from spectra.exceptions import CertificateError, WordTooShortError
from spectra.pressure import MarkovMeasure
from spectra.symbolic import Resolution

from .conftest import assert_checks_pass


@pytest.fixture
def uniform_bernoulli(full_shift):
    return MarkovCylinderMeasure(MarkovMeasure.bernoulli(full_shift, [0.5, 0.5]), 12)


@pytest.fixture
def leading_zero():
    """Every word of length 6 that starts with 0."""
    return UniformWordsMeasure(
        (0,) + tail for tail in itertools.product((0, 1), repeat=5)
    )


def test_uniform_words_measure():
    measure = UniformWordsMeasure(["00", "01", "10"])
    assert measure.mass(()) == 1
    assert measure.mass("0") == Fraction(2, 3)
    assert measure.mass("11") == 0
    assert measure.max_mass(1) == Fraction(2, 3)
    assert measure.max_mass(2) == Fraction(1, 3)
    assert measure.mass_parts("0") == (2, 3)
    with pytest.raises(ValueError):
        measure.max_mass(3)
    with pytest.raises(ValueError):
        UniformWordsMeasure([])


def test_tower_measure_matches_members(small_tower):
    members = [tuple(row.tolist()) for row in small_tower.members]
    card = len(members)
    measure = TowerMeasure(small_tower)
    assert measure.length == small_tower.length

    for depth in range(small_tower.length + 1):
        counts = Counter(word[:depth] for word in members)
        assert measure.max_mass(depth) == Fraction(max(counts.values()), card)
        for prefix, count in itertools.islice(counts.items(), 25):
            assert measure.mass(prefix) == Fraction(count, card), (depth, prefix)

    assert measure.mass(members[0]) == Fraction(1, card)
    assert measure.mass((1, 1)) == 0


def test_tower_measure_lower_level(small_tower):
    measure = TowerMeasure(small_tower, 1)
    assert measure.length == small_tower.schedule.prefix_length(1)
    assert measure.mass(small_tower.members[0][: measure.length].tolist()) == Fraction(
        1, small_tower.level(1).card_e
    )
    for level in (0, 3):
        with pytest.raises(ValueError):
            TowerMeasure(small_tower, level)


def test_consistency(small_tower):
    checks = consistency_checks(small_tower)
    assert [check.name for check in checks] == [
        "level-consistency[k=1]",
        "level-consistency[k=2]",
    ]
    assert_checks_pass(checks)


def test_markov_cylinder_measure(full_shift):
    bernoulli = MarkovMeasure.bernoulli(full_shift, [0.25, 0.75])
    measure = MarkovCylinderMeasure(bernoulli, 5)
    assert measure.mass(()) == 1
    assert measure.mass((0, 1, 1)) == Fraction(9, 64)
    assert measure.max_mass(2) == Fraction(9, 16)
    assert measure.max_mass(0) == 1
    with pytest.raises(ValueError):
        measure.mass((0,) * 6)


def test_ball_mass(uniform_bernoulli):
    assert ball_mass(uniform_bernoulli, (0,) * 8, 3, Resolution(2)) == Fraction(1, 32)
    with pytest.raises(WordTooShortError):
        ball_mass(uniform_bernoulli, (0, 1), 3, Resolution(2))


def test_audit_passes(uniform_bernoulli):
    report = local_entropy_audit(uniform_bernoulli, math.log(2), 0.01, range(1, 13))
    assert report.passed
    assert report.n0 == 1
    assert report.worst.n == 1
    assert report.worst.margin == pytest.approx(0.01, abs=1e-9)
    assert report.as_dict()["failing_n"] == []


def test_audit_tail(leading_zero):
    # the heaviest n-cylinder has mass 2^-(n-1), below exp(-n (log 2 - 0.2)) from n = 4
    report = local_entropy_audit(leading_zero, math.log(2), 0.2, range(1, 7))
    assert report.passed
    assert report.n0 == 4
    assert report.as_dict()["failing_n"] == [1, 2, 3]


def test_audit_fails(uniform_bernoulli):
    report = local_entropy_audit(
        uniform_bernoulli, math.log(2) + 0.1, 0.01, range(1, 13)
    )
    assert not report.passed
    assert report.n0 is None
    assert report.worst.n == 12


def test_audit_arguments(uniform_bernoulli):
    vacuous = local_entropy_audit(uniform_bernoulli, 0.3, 0.5, range(1, 5))
    assert vacuous.vacuous
    assert vacuous.passed
    with pytest.raises(ValueError):
        local_entropy_audit(uniform_bernoulli, 0.5, 0.0, range(1, 5))
    with pytest.raises(ValueError):
        local_entropy_audit(uniform_bernoulli, 0.5, 0.1, [])
    with pytest.raises(ValueError):
        local_entropy_audit(uniform_bernoulli, 0.5, 0.1, range(1, 5), Resolution(9))


def test_certificate(full_shift, uniform_bernoulli):
    certificate = edp_certificate(
        uniform_bernoulli, SystemWords(full_shift), math.log(2), 0.01, range(1, 13)
    )
    assert certificate.bound == pytest.approx(math.log(2) - 0.01)
    assert certificate.estimate.rate == pytest.approx(math.log(2), abs=1e-12)
    assert certificate.consistency.passed
    assert certificate.as_dict()["statement"].startswith("h_top(support, 2^-0) >=")


def test_certificate_refused(full_shift, uniform_bernoulli):
    with pytest.raises(CertificateError):
        edp_certificate(
            uniform_bernoulli,
            SystemWords(full_shift),
            math.log(2) + 0.1,
            0.01,
            range(1, 13),
        )
    with pytest.raises(CertificateError):
        edp_certificate(
            uniform_bernoulli, ExplicitWords([]), math.log(2), 0.01, range(1, 13)
        )


def test_choose_theta():
    h, eps_prime = 0.6365, 0.05
    theta = choose_theta(h, eps_prime)
    assert theta > h - (h - eps_prime) * (1 - eps_prime) * (1 - 2 * eps_prime)
    assert theta == pytest.approx(0.1350, abs=1e-3)
    for bad in (0.0, 0.5):
        with pytest.raises(ValueError):
            choose_theta(h, bad)
