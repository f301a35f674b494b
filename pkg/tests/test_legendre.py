import math

import numpy as np
import pytest

from spectra.exceptions import DomainError
from spectra.legendre import (
    SpectrumCurve,
    alpha_grid,
    check_spectrum_properties,
    lf_transform,
    spectrum,
    spectrum_brute_force,
    zero_exponent_entropies,
)
from spectra.oracle import BernoulliOracle
from spectra.pressure import pressure_curve, q_grid

from .conftest import assert_checks_pass, check_named

H_ZERO = 0.636514168294813


@pytest.fixture
def reference_curve(full_shift, reference_cocycle):
    return pressure_curve(full_shift, reference_cocycle, q_grid(-20.0, 20.0, 401))


def test_spectrum_at_zero(reference_curve):
    assert lf_transform(reference_curve, 0.0) == pytest.approx(H_ZERO, abs=1e-8)
    result = spectrum(reference_curve, [0.0])
    assert result.values[0] == pytest.approx(H_ZERO, abs=1e-8)


def test_spectrum_matches_oracle(reference_curve, reference_cocycle):
    oracle = BernoulliOracle(reference_cocycle)
    result = spectrum(reference_curve, 41)
    inner = (result.alpha_grid > -1.3) & (result.alpha_grid < 0.6)
    expected = np.array([oracle.spectrum(alpha) for alpha in result.alpha_grid[inner]])
    np.testing.assert_allclose(result.values[inner], expected, atol=1e-6)
    # the maximum is the topological entropy, at the exponent of the uniform measure
    assert result.at(-math.log(2) / 2) == pytest.approx(math.log(2), abs=1e-3)


def test_outside_domain(reference_curve):
    assert lf_transform(reference_curve, 1.0) is None
    assert lf_transform(reference_curve, -2.0) is None
    with pytest.raises(DomainError):
        spectrum(reference_curve, [1.0, 2.0])

    result = spectrum(reference_curve, [-2.0, 0.0, 1.0])
    assert result.alpha_grid.tolist() == [0.0]
    with pytest.raises(DomainError):
        result.at(1.0)


def test_alpha_grid(reference_curve):
    grid = alpha_grid(reference_curve, 5)
    assert grid[0] == pytest.approx(-math.log(4), abs=1e-6)
    assert grid[-1] == pytest.approx(math.log(2), abs=1e-6)
    assert len(alpha_grid(reference_curve, 1)) == 1
    with pytest.raises(ValueError):
        alpha_grid(reference_curve, 0)


def test_zero_exponent_entropies(reference_curve):
    entropies = zero_exponent_entropies(reference_curve)
    assert entropies.zero == pytest.approx(H_ZERO, abs=1e-8)
    assert entropies.negative == pytest.approx(H_ZERO, abs=1e-5)
    assert entropies.positive == pytest.approx(H_ZERO, abs=1e-5)


def test_zero_outside_domain(full_shift):
    from spectra.symbolic import CenterCocycle

    cocycle = CenterCocycle.from_symbol_values(full_shift, [1.0, 2.0])
    curve = pressure_curve(full_shift, cocycle, q_grid(-20.0, 20.0, 201))
    with pytest.raises(DomainError):
        zero_exponent_entropies(curve)


def test_spectrum_properties(reference_curve):
    result = spectrum(reference_curve, 101)
    checks = check_spectrum_properties(result, reference_curve)
    assert [check.name for check in checks] == [
        "concavity",
        "contiguous-domain",
        "maximum-is-entropy",
        "bounds",
    ]
    assert_checks_pass(checks)


def test_spectrum_properties_with_oracle(reference_curve, reference_cocycle):
    result = spectrum(reference_curve, 101)
    oracle = BernoulliOracle(reference_cocycle)
    checks = check_spectrum_properties(result, reference_curve, oracle=oracle)
    assert checks[-1].name == "oracle"
    assert_checks_pass(checks)

    values = result.values.copy()
    values[40] -= 1e-3
    shifted = SpectrumCurve(result.alpha_grid, values, result.domain)
    checks = check_spectrum_properties(shifted, reference_curve, oracle=oracle)
    assert not check_named(checks, "oracle").passed


def test_concavity_tolerance(reference_curve):
    """A dent of 1e-7 in a flat spectrum is a second difference of 2e-7."""
    values = np.full(11, 0.3)
    values[5] -= 1e-7
    dented = SpectrumCurve(np.linspace(-1.0, 0.6, 11), values, (-1.0, 0.6))

    check = check_named(check_spectrum_properties(dented, reference_curve), "concav")
    assert not check.passed
    assert check.values["worst"] == pytest.approx(2e-7, rel=1e-2)
    loose = check_spectrum_properties(
        dented, reference_curve, concavity_tolerance=1e-6
    )
    assert check_named(loose, "concav").passed


def test_domain_hole(reference_curve):
    result = spectrum(reference_curve, 101)
    low, high = result.domain
    widened = SpectrumCurve(result.alpha_grid, result.values, (low - 0.5, high))
    check = check_named(check_spectrum_properties(widened, reference_curve), "contig")
    assert not check.passed
    assert check.values["holes"][0] == pytest.approx(low - 0.5)

    values = result.values.copy()
    values[3] = np.nan
    broken = SpectrumCurve(result.alpha_grid, values, result.domain)
    check = check_named(check_spectrum_properties(broken, reference_curve), "contig")
    assert not check.passed


def test_brute_force_near_oracle(full_shift, reference_cocycle):
    oracle = BernoulliOracle(reference_cocycle)
    for alpha in (-0.8, 0.0, 0.3):
        counted = spectrum_brute_force(full_shift, reference_cocycle, alpha, 0.1, 200)
        assert abs(counted - oracle.windowed_spectrum(alpha, 0.1)) <= 0.03


def test_brute_force_edge_cases(full_shift, reference_cocycle):
    counted = spectrum_brute_force(full_shift, reference_cocycle, 5.0, 0.1, 10)
    assert counted == -math.inf
    with pytest.raises(ValueError):
        spectrum_brute_force(full_shift, reference_cocycle, 0.0, 0.1, 0)
    with pytest.raises(ValueError):
        spectrum_brute_force(full_shift, reference_cocycle, 0.0, -0.1, 10)


def test_brute_force_falls_back_to_enumeration(full_shift, reference_cocycle):
    counted = spectrum_brute_force(
        full_shift, reference_cocycle, 0.0, 0.1, 12, state_budget=2
    )
    exact = spectrum_brute_force(full_shift, reference_cocycle, 0.0, 0.1, 12)
    assert counted == pytest.approx(exact)
