"""Target-detection scenario: hypothesis states, exponents, and bounds.

A scenario is the triple (``n_s``, ``n_b``, ``kappa``): mean signal photons
per mode of the entangled source, mean background photons per mode, and
round-trip reflectivity.  Under hypothesis H0 the receiver sees only the
thermal background in the return arm; under H1 a weak reflection of the
signal survives together with the return-idler cross correlation
``sqrt(kappa) * C_q`` where ``C_q = sqrt(n_s (n_s + 1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .gaussian import GaussianState

RETURN_MODE = 0
IDLER_MODE = 1


@dataclass(frozen=True)
class Scenario:
    """Physical parameters of one detection scenario."""

    n_s: float
    n_b: float
    kappa: float

    def __post_init__(self):
        if self.n_s < 0:
            raise ValueError(f"n_s must be non-negative, got {self.n_s}")
        if self.n_b < 0:
            raise ValueError(f"n_b must be non-negative, got {self.n_b}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")

    @property
    def quantum_correlation(self) -> float:
        """Cross-correlation strength ``C_q = sqrt(n_s (n_s + 1))`` of the source."""
        return math.sqrt(self.n_s * (self.n_s + 1.0))


@dataclass(frozen=True)
class HypothesisPair:
    """Joint return-idler states under both hypotheses.

    Mode 0 is the return arm, mode 1 the retained idler.
    """

    h0_state: GaussianState
    h1_state: GaussianState


def build_hypotheses(sc: Scenario) -> HypothesisPair:
    """Construct the return-idler state pair for a scenario.

    H0: return thermal with ``n_b``, idler thermal with ``n_s``, uncorrelated.
    H1: return occupation ``kappa n_s + n_b``, idler ``n_s``, anomalous cross
    moment ``sqrt(kappa) C_q``.  The background is rescaled under H1 so both
    hypotheses carry the same background photon number in the return arm.
    """
    h0 = GaussianState(
        n=np.diag([sc.n_b, sc.n_s]).astype(complex),
        m=np.zeros((2, 2), dtype=complex),
    )
    cross = math.sqrt(sc.kappa) * sc.quantum_correlation
    h1 = GaussianState(
        n=np.diag([sc.kappa * sc.n_s + sc.n_b, sc.n_s]).astype(complex),
        m=np.array([[0.0, cross], [cross, 0.0]], dtype=complex),
    )
    return HypothesisPair(h0_state=h0, h1_state=h1)


def classical_exponent(sc: Scenario) -> float:
    """Per-mode error exponent of the ideal coherent-state radar."""
    if sc.n_b <= 0:
        raise ValueError("classical exponent requires n_b > 0")
    return sc.kappa * sc.n_s / (4.0 * sc.n_b)


def quantum_exponent(sc: Scenario) -> float:
    """Asymptotic per-mode exponent of the entangled protocol.

    Valid in the weak-signal, bright-background, high-loss regime; exactly
    four times :func:`classical_exponent` by construction.
    """
    if sc.n_b <= 0:
        raise ValueError("quantum exponent requires n_b > 0")
    return sc.kappa * sc.n_s / sc.n_b


def qcb_curve(sc: Scenario, modes: float) -> float:
    """Quantum Chernoff upper bound ``0.5 exp(-R_Q M)`` on the error probability."""
    return 0.5 * math.exp(-quantum_exponent(sc) * modes)


def _cs_exponent(sc: Scenario) -> float:
    """Exponent of the coherent-state homodyne reference, ``kappa n_s / (2 (2 n_b + 1))``."""
    return sc.kappa * sc.n_s / (2.0 * (2.0 * sc.n_b + 1.0))


def classical_error_probability(sc: Scenario, modes: float) -> float:
    """Error probability of the coherent-state transmitter with homodyne detection.

    ``P_e = 0.5 erfc(sqrt(kappa M n_s / (2 (2 n_b + 1))))``; its exponent
    tends to ``kappa n_s / (4 n_b)`` for bright backgrounds.
    """
    if modes < 0:
        raise ValueError("mode count must be non-negative")
    return 0.5 * float(special.erfc(math.sqrt(_cs_exponent(sc) * modes)))


def classical_log10_error_probability(sc: Scenario, modes: float) -> float:
    """log10 of :func:`classical_error_probability`, stable far below underflow."""
    if modes < 0:
        raise ValueError("mode count must be non-negative")
    z = math.sqrt(2.0 * _cs_exponent(sc) * modes)
    return float(special.log_ndtr(-z)) / math.log(10.0)
