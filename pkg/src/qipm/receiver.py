"""Parametric-mixer receiver chain and its detection statistics.

The receiver applies a two-mode squeezing interaction (gain ``G``) between
the retained idler and the return mode.  Counter 1 sees the idler-dominated
output (occupation of order the signal photon number), counter 2 the
return-dominated output (occupation of order the background).  Decisions are
made by thresholding either a single counter's total count over ``M`` mode
pairs (individual detection) or the weighted difference
``w1 N1 - w2 N2`` of both counters (correlated photon counting, CPC).

Detector imperfections are modeled as a beam splitter of transmissivity
``eta`` in front of an ideal counter, whose dark port carries a thermal mode
calibrated so the detected mode gains the dark-count mean
``N_dc = 1 / (1 - P_dc) - 1``.  Finite photon-number resolution is handled
separately (see :mod:`qipm.resolution`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .gaussian import (
    GaussianState,
    apply_beam_splitter,
    apply_two_mode_squeezer,
    mean_photon,
    photon_covariance,
    photon_variance,
    reduced,
    tensor,
    thermal_state,
)
from .scenario import IDLER_MODE, RETURN_MODE, HypothesisPair, Scenario

_VARIANCE_TOL = 1e-12


class Counter(Enum):
    """Selector for one of the two photon counters on the mixer outputs."""

    PC1 = 0
    PC2 = 1

    @property
    def mode(self) -> int:
        return self.value


@dataclass(frozen=True)
class DetectorModel:
    """One photon counter: efficiency, dark counts, and number resolution.

    ``resolution=None`` means unbounded photon-number resolution; an integer
    ``K >= 1`` means outcomes saturate at ``K``.
    """

    eta: float = 1.0
    p_dc: float = 0.0
    resolution: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"detection efficiency must lie in [0, 1], got {self.eta}")
        if not 0.0 <= self.p_dc < 1.0:
            raise ValueError(f"dark-count probability must lie in [0, 1), got {self.p_dc}")
        if self.resolution is not None and self.resolution < 1:
            raise ValueError(f"photon-number resolution must be >= 1, got {self.resolution}")

    @property
    def dark_count_mean(self) -> float:
        """Mean spurious count per detection window, ``1 / (1 - P_dc) - 1``."""
        return 1.0 / (1.0 - self.p_dc) - 1.0

    @property
    def is_ideal(self) -> bool:
        return self.eta == 1.0 and self.p_dc == 0.0


IDEAL_DETECTOR = DetectorModel()


@dataclass(frozen=True)
class ReceiverConfig:
    """Mixer gain, per-counter detector models, and CPC post-processing weights."""

    gain: float
    detector_1: DetectorModel = IDEAL_DETECTOR
    detector_2: DetectorModel = IDEAL_DETECTOR
    weights: tuple[float, float] | None = None

    def __post_init__(self):
        if self.gain < 1.0:
            raise ValueError(f"mixer gain must be >= 1, got {self.gain}")
        if self.weights is None:
            object.__setattr__(self, "weights", (self.gain, self.gain - 1.0))
        w1, w2 = self.weights
        if w1 < 0 or w2 < 0:
            raise ValueError(f"weights must be non-negative, got {self.weights}")

    def detector_for(self, which: Counter) -> DetectorModel:
        return self.detector_1 if which is Counter.PC1 else self.detector_2


@dataclass(frozen=True)
class DetectionStatistics:
    """Per-mode mean/variance of a decision statistic under both hypotheses.

    For two-counter (CPC) schemes the per-mode counter covariance under each
    hypothesis is recorded alongside.
    """

    mu_h0: float
    mu_h1: float
    var_h0: float
    var_h1: float
    cov_h0: float | None = None
    cov_h1: float | None = None

    def __post_init__(self):
        for name in ("var_h0", "var_h1"):
            value = getattr(self, name)
            if value < -_VARIANCE_TOL:
                raise ValueError(f"{name} must be non-negative, got {value}")
            if value < 0.0:
                object.__setattr__(self, name, 0.0)


def mixer_output(pair: HypothesisPair, gain: float) -> tuple[GaussianState, GaussianState]:
    """Both hypothesis states after the mixer.

    Output mode 0 carries the idler-dominated field (counter 1), output
    mode 1 the return-dominated field (counter 2).
    """
    if gain < 1.0:
        raise ValueError(f"mixer gain must be >= 1, got {gain}")
    outputs = []
    perm = np.array([IDLER_MODE, RETURN_MODE])
    for state in (pair.h0_state, pair.h1_state):
        mixed = apply_two_mode_squeezer(state, IDLER_MODE, RETURN_MODE, gain)
        outputs.append(GaussianState(n=mixed.n[np.ix_(perm, perm)], m=mixed.m[np.ix_(perm, perm)]))
    return outputs[0], outputs[1]


def apply_detector(state: GaussianState, mode: int, det: DetectorModel) -> GaussianState:
    """Fold efficiency and dark counts of one counter into the state.

    For ``eta < 1`` the mode is coupled through a beam splitter of
    transmissivity ``eta`` to a thermal ancilla of mean ``N_dc / (1 - eta)``
    and the ancilla is traced out, so the detected mean becomes
    ``eta N + N_dc``.  For ``eta = 1`` the beam-splitter construction is
    singular and the dark-count mean is added directly to the occupation.
    Photon-number resolution is not applied here.
    """
    n_dc = det.dark_count_mean
    if det.eta == 1.0:
        if n_dc == 0.0:
            return state
        n = np.array(state.n)
        n[mode, mode] += n_dc
        return GaussianState(n=n, m=state.m)
    ancilla = thermal_state(n_dc / (1.0 - det.eta))
    extended = tensor(state, ancilla)
    mixed = apply_beam_splitter(extended, mode, state.mode_count, det.eta)
    return reduced(mixed, range(state.mode_count))


def detected_statistics(
    h0_out: GaussianState, h1_out: GaussianState, mode: int, det: DetectorModel
) -> DetectionStatistics:
    """Single-counter statistics from a pair of post-mixer states."""
    moments = []
    for state in (h0_out, h1_out):
        seen = apply_detector(state, mode, det)
        moments.append((mean_photon(seen, mode), photon_variance(seen, mode)))
    return DetectionStatistics(
        mu_h0=moments[0][0], mu_h1=moments[1][0], var_h0=moments[0][1], var_h1=moments[1][1]
    )


def detected_cpc_statistics(
    h0_out: GaussianState,
    h1_out: GaussianState,
    detector_1: DetectorModel,
    detector_2: DetectorModel,
    weights: tuple[float, float],
) -> DetectionStatistics:
    """CPC statistics from a pair of post-mixer states.

    The counter covariance is evaluated on the joint state after both loss
    channels, so imperfections propagate into the correlations as well.
    """
    w1, w2 = weights
    mus, variances, covariances = [], [], []
    for state in (h0_out, h1_out):
        seen = apply_detector(state, Counter.PC1.mode, detector_1)
        seen = apply_detector(seen, Counter.PC2.mode, detector_2)
        n1 = mean_photon(seen, Counter.PC1.mode)
        n2 = mean_photon(seen, Counter.PC2.mode)
        v1 = photon_variance(seen, Counter.PC1.mode)
        v2 = photon_variance(seen, Counter.PC2.mode)
        c12 = photon_covariance(seen, Counter.PC1.mode, Counter.PC2.mode)
        if abs(c12) > math.sqrt(v1 * v2) * (1.0 + 1e-9):
            raise ValueError("counter covariance exceeds the Cauchy-Schwarz bound")
        mus.append(w1 * n1 - w2 * n2)
        variances.append(w1**2 * v1 + w2**2 * v2 - 2.0 * w1 * w2 * c12)
        covariances.append(c12)
    return DetectionStatistics(
        mu_h0=mus[0],
        mu_h1=mus[1],
        var_h0=variances[0],
        var_h1=variances[1],
        cov_h0=covariances[0],
        cov_h1=covariances[1],
    )


def individual_statistics(pair: HypothesisPair, cfg: ReceiverConfig, which: Counter) -> DetectionStatistics:
    """Decision statistics for photon counting on a single mixer output."""
    h0_out, h1_out = mixer_output(pair, cfg.gain)
    return detected_statistics(h0_out, h1_out, which.mode, cfg.detector_for(which))


def cpc_statistics(pair: HypothesisPair, cfg: ReceiverConfig) -> DetectionStatistics:
    """Decision statistics for the weighted counter difference ``w1 N1 - w2 N2``."""
    h0_out, h1_out = mixer_output(pair, cfg.gain)
    return detected_cpc_statistics(h0_out, h1_out, cfg.detector_1, cfg.detector_2, cfg.weights)


def ml_threshold(stats: DetectionStatistics, modes: float) -> float:
    """Maximum-likelihood decision threshold for the summed statistic.

    ``N_th = M (sigma_1 mu_0 + sigma_0 mu_1) / (sigma_0 + sigma_1)`` in the
    Gaussian approximation of the two count distributions.
    """
    sigma0 = math.sqrt(stats.var_h0)
    sigma1 = math.sqrt(stats.var_h1)
    if sigma0 + sigma1 == 0.0:
        raise ValueError("degenerate distributions: both variances vanish")
    return modes * (sigma1 * stats.mu_h0 + sigma0 * stats.mu_h1) / (sigma0 + sigma1)


def _deflection(stats: DetectionStatistics) -> float:
    """|mu_1 - mu_0| / (sigma_0 + sigma_1); raises for degenerate statistics."""
    sigma_sum = math.sqrt(stats.var_h0) + math.sqrt(stats.var_h1)
    if sigma_sum == 0.0:
        raise ValueError("degenerate distributions: both variances vanish")
    return abs(stats.mu_h1 - stats.mu_h0) / sigma_sum


def error_probability(stats: DetectionStatistics, modes: float) -> float:
    """Average error probability of the ML-threshold test over ``M`` modes.

    In the Gaussian approximation both conditional error terms coincide at
    the ML threshold, giving ``P_e = Q(sqrt(M) |dmu| / (sigma_0 + sigma_1))``
    with ``Q`` the standard normal upper tail.
    """
    if modes <= 0:
        raise ValueError("mode count must be positive")
    z = math.sqrt(modes) * _deflection(stats)
    return float(special.ndtr(-z))


def log10_error_probability(stats: DetectionStatistics, modes: float) -> float:
    """log10 of :func:`error_probability`, computed in log space.

    Remains finite far beyond the underflow point of the linear value, for
    emission into figure data.
    """
    if modes <= 0:
        raise ValueError("mode count must be positive")
    z = math.sqrt(modes) * _deflection(stats)
    return float(special.log_ndtr(-z)) / math.log(10.0)


def effective_exponent(stats: DetectionStatistics) -> float:
    """Per-mode error exponent implied by the Gaussian approximation.

    ``R = dmu^2 / (2 (sigma_0 + sigma_1)^2)``, so that
    ``P_e = Q(sqrt(2 R M))`` decays as ``exp(-R M)`` to leading order.
    """
    return 0.5 * _deflection(stats) ** 2


def classical_reference_exponent(sc: Scenario) -> float:
    """Exponent of the coherent-state homodyne benchmark used for the advantage metric."""
    return sc.kappa * sc.n_s / (2.0 * (2.0 * sc.n_b + 1.0))


def quantum_advantage_db(stats: DetectionStatistics, sc: Scenario) -> float:
    """Receiver exponent over the classical reference exponent, in decibels.

    Non-positive values mean the receiver does not beat the ideal classical
    radar.  Raises if the classical reference exponent vanishes.
    """
    reference = classical_reference_exponent(sc)
    if reference <= 0.0:
        raise ValueError("classical reference exponent vanishes; advantage undefined")
    exponent = effective_exponent(stats)
    if exponent == 0.0:
        return -math.inf
    return 10.0 * math.log10(exponent / reference)


def _pc1_exponent(sc: Scenario, pair: HypothesisPair, gain: float) -> float:
    h0_out, h1_out = mixer_output(pair, gain)
    return effective_exponent(detected_statistics(h0_out, h1_out, Counter.PC1.mode, IDEAL_DETECTOR))


def optimal_gain(sc: Scenario, rel_tol: float = 1e-10) -> float:
    """Mixer gain maximizing the ideal counter-1 exponent.

    Golden-section search over ``G`` in ``(1, 1 + 10 sqrt(n_s (n_s + 1)) / n_b]``.
    """
    if sc.n_s <= 0 or sc.n_b <= 0 or sc.kappa <= 0:
        raise ValueError("optimal gain requires n_s > 0, n_b > 0 and kappa > 0")
    from .scenario import build_hypotheses

    pair = build_hypotheses(sc)
    lo = 1.0
    hi = 1.0 + 10.0 * sc.quantum_correlation / sc.n_b
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1 = _pc1_exponent(sc, pair, x1)
    f2 = _pc1_exponent(sc, pair, x2)
    while (hi - lo) > rel_tol * hi:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = _pc1_exponent(sc, pair, x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = _pc1_exponent(sc, pair, x1)
    return 0.5 * (lo + hi)


def optimal_weights(sc: Scenario, w1: float) -> tuple[float, float]:
    """CPC weight pair maximizing the exponent at fixed ``w1``.

    The returned ``w2`` follows the closed affine relation

        w2 = [sqrt(n_s (n_s+1) (n_b + k n_s) (n_b + k n_s + 1)) + n_s (n_s+1) w1]
             / [(n_b + (k-1) n_s) (n_b + (k+1) n_s + 1)]

    with ``k = kappa``.  See :func:`proportional_weights` for the slope-only
    variant proportional to ``w1``.
    """
    if w1 <= 0:
        raise ValueError(f"w1 must be positive, got {w1}")
    ns, nb, k = sc.n_s, sc.n_b, sc.kappa
    denominator = (nb + (k - 1.0) * ns) * (nb + (k + 1.0) * ns + 1.0)
    if denominator == 0.0:
        raise ValueError("weight relation is singular for these parameters")
    numerator = math.sqrt(ns * (ns + 1.0) * (nb + k * ns) * (nb + k * ns + 1.0)) + ns * (ns + 1.0) * w1
    return (w1, numerator / denominator)


def proportional_weights(sc: Scenario, w1: float, gain: float | None = None) -> tuple[float, float]:
    """Slope-only weighting ``w2 = (G* - 1) w1`` with the optimal mixer gain."""
    if w1 <= 0:
        raise ValueError(f"w1 must be positive, got {w1}")
    if gain is None:
        gain = optimal_gain(sc)
    return (w1, (gain - 1.0) * w1)


def weight_relation_residual(sc: Scenario, gain: float | None = None) -> float:
    """Mismatch between the affine optimal-weight relation and ``w2 = (G*-1) w1``.

    Evaluated at ``w1 = G*``; returns ``w2_affine - (G* - 1) G*``.  A small
    residual indicates the two published forms of the relation agree at the
    canonical operating point.
    """
    if gain is None:
        gain = optimal_gain(sc)
    _, w2 = optimal_weights(sc, gain)
    return w2 - (gain - 1.0) * gain


def h0_cross_covariance(sc: Scenario, gain: float) -> float:
    """Closed-form counter covariance under H0 for ideal detectors.

    ``Cov(N1, N2) = G (G - 1) (n_s + n_b + 1)^2``.
    """
    return gain * (gain - 1.0) * (sc.n_s + sc.n_b + 1.0) ** 2


def h1_cross_covariance(sc: Scenario, gain: float, scaled_correlation: bool = True) -> float:
    """Closed-form counter covariance under H1 for ideal detectors.

    With ``scaled_correlation`` the quantum-correlation term enters as
    ``sqrt(kappa) C_q``, which is what the moment engine yields; with
    ``scaled_correlation=False`` it enters as bare ``C_q``, an alternative
    normalization that disagrees with the engine by design.  Both are exposed
    so the discrepancy can be quantified rather than silently resolved.
    """
    correlation = sc.quantum_correlation
    if scaled_correlation:
        correlation *= math.sqrt(sc.kappa)
    return (
        (2.0 * gain - 1.0) * correlation
        + math.sqrt(gain * (gain - 1.0)) * (sc.n_s * (sc.kappa + 1.0) + sc.n_b + 1.0)
    ) ** 2
