import math

import pytest

from spectra.exceptions import DomainError
from spectra.oracle import BernoulliOracle
from spectra.symbolic import CenterCocycle, SymbolicSystem

H_ZERO = 0.636514168294813


def test_reference_values(reference_cocycle):
    oracle = BernoulliOracle(reference_cocycle)

    assert oracle.pressure(0.0) == pytest.approx(math.log(2))
    assert oracle.pressure(1.0) == pytest.approx(math.log(2.25))
    assert oracle.alpha_min == pytest.approx(-math.log(4))
    assert oracle.alpha_max == pytest.approx(math.log(2))

    # exponent 0 needs a third of the symbols to be 0
    assert oracle.spectrum(0.0) == pytest.approx(H_ZERO, abs=1e-12)
    third = 1 / 3
    assert oracle.zero_entropy() == pytest.approx(
        -third * math.log(third) - (1 - third) * math.log(1 - third)
    )
    assert oracle.spectrum(math.log(2)) == pytest.approx(0.0, abs=1e-12)
    assert oracle.spectrum(-math.log(4)) == pytest.approx(0.0, abs=1e-12)
    assert oracle.spectrum(1.0) is None


def test_weights(reference_cocycle):
    oracle = BernoulliOracle(reference_cocycle)
    assert oracle.weights(0.0).tolist() == pytest.approx([0.5, 0.5])
    # at q = 1/3 the equilibrium state has exponent 0
    weights = oracle.weights(1 / 3)
    assert weights.tolist() == pytest.approx([1 / 3, 2 / 3])


def test_three_symbols():
    system = SymbolicSystem.full_shift(3)
    oracle = BernoulliOracle(CenterCocycle.from_symbol_values(system, [-1.0, 0.0, 1.0]))
    assert oracle.pressure(0.0) == pytest.approx(math.log(3))
    assert oracle.spectrum(0.0) == pytest.approx(math.log(3), abs=1e-10)
    assert oracle.spectrum(1.0) == pytest.approx(0.0, abs=1e-12)
    assert 0 < oracle.spectrum(0.5) < math.log(3)


def test_repeated_extreme_values():
    system = SymbolicSystem.full_shift(3)
    cocycle = CenterCocycle.from_symbol_values(system, [-1.0, -1.0, 2.0])
    oracle = BernoulliOracle(cocycle)
    assert oracle.spectrum(-1.0) == pytest.approx(math.log(2))


def test_windowed_spectrum(reference_cocycle):
    oracle = BernoulliOracle(reference_cocycle)
    peak = -math.log(2) / 2
    assert oracle.windowed_spectrum(0.0, 0.5) == pytest.approx(math.log(2))
    assert oracle.windowed_spectrum(0.0, 0.1) == pytest.approx(oracle.spectrum(-0.1))
    assert oracle.windowed_spectrum(peak, 0.0) == pytest.approx(math.log(2))
    assert oracle.windowed_spectrum(3.0, 0.1) is None


def test_refuses_other_models(golden_cocycle, full_shift):
    with pytest.raises(DomainError):
        BernoulliOracle(golden_cocycle)
    cocycle = CenterCocycle(full_shift, 2, {"00": 0, "01": 1, "10": 1, "11": 0})
    with pytest.raises(DomainError):
        BernoulliOracle(cocycle)
