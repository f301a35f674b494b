import math

import pytest

from spectra.exceptions import SkeletonError
from spectra.report import all_passed
from spectra.skeleton import (
    default_k0,
    extract_preskeleton,
    skeleton_rate_curve,
    verify_skeleton,
)
from spectra.symbolic import Resolution


def test_default_k0(reference_cocycle, symmetric_cocycle):
    assert default_k0(symmetric_cocycle) == pytest.approx(math.e)
    assert default_k0(reference_cocycle) == pytest.approx(4.0)


def test_narrow_window(full_shift, symmetric_cocycle):
    skeleton = extract_preskeleton(
        full_shift,
        symmetric_cocycle,
        alpha=0.0,
        eps_e=0.0,
        eps_h=0.05,
        h_target=math.log(2) / 2,
        m=4,
        k0=math.e,
    )
    assert skeleton.count == 4
    assert skeleton.certified_rate == pytest.approx(math.log(4) / 4)
    assert skeleton.success
    assert skeleton.summary()["count"] == 4


@pytest.mark.parametrize("method", ["lattice", "enumerate"])
def test_methods_agree(golden_mean, golden_cocycle, method):
    skeleton = extract_preskeleton(
        golden_mean,
        golden_cocycle,
        alpha=-0.2,
        eps_e=0.1,
        eps_h=0.1,
        h_target=0.3,
        m=12,
        method=method,
    )
    reference = extract_preskeleton(
        golden_mean,
        golden_cocycle,
        alpha=-0.2,
        eps_e=0.1,
        eps_h=0.1,
        h_target=0.3,
        m=12,
    )
    assert list(skeleton.words) == list(reference.words)


def test_empty_window_reports_k0(full_shift, symmetric_cocycle):
    with pytest.raises(SkeletonError) as err:
        extract_preskeleton(
            full_shift,
            symmetric_cocycle,
            alpha=0.0,
            eps_e=0.0,
            eps_h=0.1,
            h_target=0.5,
            m=6,
            k0=1.0,
        )
    assert err.value.minimal_log_k0 == pytest.approx(1.0)
    assert "log K0 must be at least 1" in str(err.value)


def test_bad_arguments(full_shift, symmetric_cocycle):
    arguments = dict(alpha=0.0, eps_e=0.1, eps_h=0.1, h_target=0.5)
    with pytest.raises(SkeletonError):
        extract_preskeleton(full_shift, symmetric_cocycle, m=0, **arguments)
    with pytest.raises(ValueError):
        extract_preskeleton(full_shift, symmetric_cocycle, m=5, k0=0.5, **arguments)
    with pytest.raises(ValueError):
        extract_preskeleton(
            full_shift, symmetric_cocycle, m=5, method="guess", **arguments
        )


def test_rate_approaches_spectrum(full_shift, reference_cocycle):
    """At alpha = 0 the skeleton rate tends to H(0) = 0.6365..."""
    skeleton = extract_preskeleton(
        full_shift,
        reference_cocycle,
        alpha=0.0,
        eps_e=0.05,
        eps_h=0.1,
        h_target=0.636514,
        m=200,
    )
    assert skeleton.success
    assert 0.636514 - 0.1 <= skeleton.certified_rate <= math.log(2)


def test_verify_skeleton(golden_mean, golden_cocycle):
    skeleton = extract_preskeleton(
        golden_mean,
        golden_cocycle,
        alpha=-0.2,
        eps_e=0.1,
        eps_h=0.1,
        h_target=0.3,
        m=40,
        resolution=Resolution(2),
    )
    checks = verify_skeleton(golden_mean, golden_cocycle, skeleton, sample_size=64)
    assert [check.name for check in checks] == [
        "admissible",
        "window",
        "separation",
        "count",
    ]
    assert all_passed(checks)


def test_representative_extends_to_resolution(golden_mean, golden_cocycle):
    skeleton = extract_preskeleton(
        golden_mean,
        golden_cocycle,
        alpha=-0.25,
        eps_e=0.25,
        eps_h=0.1,
        h_target=0.3,
        m=6,
        resolution=Resolution(3),
    )
    word = skeleton.words.least()
    padded = skeleton.representative(golden_mean, word)
    assert padded[:6] == word
    assert len(padded) == 9
    assert golden_mean.is_admissible(padded)


def test_rate_curve(full_shift, symmetric_cocycle):
    curve = skeleton_rate_curve(
        full_shift, symmetric_cocycle, 0.0, 0.0, math.e, [1, 2, 4]
    )
    assert [m for m, _ in curve] == [1, 2, 4]
    assert [rate for _, rate in curve] == pytest.approx(
        [math.log(2), math.log(2) / 2, math.log(4) / 4]
    )
    assert skeleton_rate_curve(full_shift, symmetric_cocycle, 0.0, 0.0, 1.0, [3]) == [
        (3, None)
    ]
