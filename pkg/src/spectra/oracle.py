"""Closed-form pressure and spectrum of a depth-one cocycle on a full shift.

Used as a reference for the numerical pipeline. For a cocycle taking value
``phi_i`` on symbol ``i`` the pressure is ``log sum exp(q phi_i)`` and the spectrum at
``alpha`` is the largest entropy of a probability vector with mean ``alpha``.
"""

from typing import Optional
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .exceptions import DomainError
from .symbolic import CenterCocycle

EXTREME_TOLERANCE = 1e-12


class BernoulliOracle:
    """Exact formulas for full shifts with symbol-valued cocycles."""

    def __init__(self, cocycle: CenterCocycle):
        system = cocycle.system
        if cocycle.depth != 1 or not system.is_full_shift:
            raise DomainError(
                "The closed form needs a full shift and a cocycle of depth one"
            )
        self.values = np.array([cocycle.table[(i,)] for i in system.symbols])

    @property
    def alpha_min(self) -> float:
        return float(self.values.min())

    @property
    def alpha_max(self) -> float:
        return float(self.values.max())

    def pressure(self, q: float) -> float:
        return float(logsumexp(q * self.values))

    def weights(self, q: float) -> np.ndarray:
        """Equilibrium probability vector at inverse temperature ``q``."""
        logs = q * self.values
        return np.exp(logs - logsumexp(logs))

    def spectrum(self, alpha: float) -> Optional[float]:
        """Maximal entropy at mean ``alpha``.

        ``None`` outside ``[min phi, max phi]``.
        """
        low, high = self.alpha_min, self.alpha_max
        if alpha < low - EXTREME_TOLERANCE or alpha > high + EXTREME_TOLERANCE:
            return None
        if high - low <= EXTREME_TOLERANCE:
            return math.log(len(self.values))
        if alpha <= low + EXTREME_TOLERANCE:
            return math.log(int(np.sum(self.values == low)))
        if alpha >= high - EXTREME_TOLERANCE:
            return math.log(int(np.sum(self.values == high)))

        if len(self.values) == 2:
            p = (alpha - self.values[1]) / (self.values[0] - self.values[1])
            return float(-p * math.log(p) - (1 - p) * math.log(1 - p))

        def mean_gap(q: float) -> float:
            return float(self.weights(q) @ self.values) - alpha

        span = 1.0
        while mean_gap(-span) > 0 or mean_gap(span) < 0:
            span *= 2.0
        q = brentq(mean_gap, -span, span, xtol=1e-14)
        p = self.weights(q)
        p = p[p > 0]
        return float(-np.sum(p * np.log(p)))

    def windowed_spectrum(self, alpha: float, window: float) -> Optional[float]:
        """``sup H(beta)`` over ``|beta - alpha| <= window`` within the domain."""
        low = max(alpha - window, self.alpha_min)
        high = min(alpha + window, self.alpha_max)
        if low > high:
            return None
        peak = float(self.values.mean())
        return self.spectrum(min(max(peak, low), high))

    def zero_entropy(self) -> Optional[float]:
        return self.spectrum(0.0)
