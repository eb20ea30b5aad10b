"""Photon counting with finite number resolution on thermal light.

A counter that resolves at most ``K`` photons reports ``min(n, K)``.  On a
thermal mode with mean ``N`` the underlying counts are geometric with ratio
``q = N / (N + 1)``, so the reported outcome follows a geometric
distribution truncated at ``K`` with all tail weight collapsed onto ``K``:

    p(n) = (1 - q) q^n   for 0 <= n < K,      p(K) = q^K.

Closed forms for the truncated mean and variance feed the same ML-threshold
machinery as the full-resolution case.
"""

from __future__ import annotations

from dataclasses import dataclass

from .receiver import (
    Counter,
    DetectionStatistics,
    ReceiverConfig,
    apply_detector,
    individual_statistics,
    mixer_output,
)
from .scenario import HypothesisPair

_THERMAL_MODE_TOL = 1e-9


class ModelViolationError(ValueError):
    """The detected mode is not thermal-like, so the geometric model does not apply."""


@dataclass(frozen=True)
class TruncatedGeometric:
    """Count distribution of a ``K``-resolving counter on a thermal mode."""

    mean_photons: float
    resolution: int

    def __post_init__(self):
        if self.mean_photons < 0:
            raise ValueError(f"mean photon number must be non-negative, got {self.mean_photons}")
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")

    @property
    def q(self) -> float:
        """Geometric ratio ``N / (N + 1)`` of the underlying thermal counts."""
        return self.mean_photons / (self.mean_photons + 1.0)


def pmf(dist: TruncatedGeometric, n: int) -> float:
    """Probability of reporting ``n`` counts, ``0 <= n <= K``."""
    if not 0 <= n <= dist.resolution:
        raise ValueError(f"outcome {n} outside [0, {dist.resolution}]")
    q = dist.q
    if n < dist.resolution:
        return (1.0 - q) * q**n
    return q**dist.resolution


def truncated_mean(dist: TruncatedGeometric) -> float:
    """Mean reported count, ``q (1 - q^K) / (1 - q)``."""
    q = dist.q
    if q == 0.0:
        return 0.0
    return q * (1.0 - q**dist.resolution) / (1.0 - q)


def truncated_variance(dist: TruncatedGeometric) -> float:
    """Variance of the reported count.

    ``q/(1-q) (1 - (2K+1) q^K + 2q (1-q^K)/(1-q)) - mean^2``; recovers the
    thermal value ``N (N + 1)`` as ``K`` grows.
    """
    q = dist.q
    if q == 0.0:
        return 0.0
    k = dist.resolution
    mean = truncated_mean(dist)
    second = (q / (1.0 - q)) * (
        1.0 - (2.0 * k + 1.0) * q**k + 2.0 * q * (1.0 - q**k) / (1.0 - q)
    )
    return second - mean**2


def truncated_statistics(h0_out, h1_out, mode: int, det) -> DetectionStatistics:
    """Truncated-count statistics of one counter on a pair of post-mixer states.

    Efficiency and dark counts are folded into the detected mode first; the
    truncated-geometric moments of the resulting thermal occupation then
    replace the full-resolution mean and variance.
    """
    moments = []
    for state in (h0_out, h1_out):
        seen = apply_detector(state, mode, det)
        anomalous = abs(seen.m[mode, mode])
        if anomalous > _THERMAL_MODE_TOL:
            raise ModelViolationError(
                f"detected mode is not thermal-like (|<a a>| = {anomalous:.3e})"
            )
        dist = TruncatedGeometric(seen.occupation(mode), det.resolution)
        moments.append((truncated_mean(dist), truncated_variance(dist)))
    return DetectionStatistics(
        mu_h0=moments[0][0], mu_h1=moments[1][0], var_h0=moments[0][1], var_h1=moments[1][1]
    )


def finite_k_statistics(
    pair: HypothesisPair, cfg: ReceiverConfig, which: Counter
) -> DetectionStatistics:
    """Single-counter decision statistics with finite number resolution.

    A detector with unbounded resolution reduces exactly to
    :func:`individual_statistics`; otherwise the detected mode must be
    thermal-like, which holds for all mixer outputs here.
    """
    det = cfg.detector_for(which)
    if det.resolution is None:
        return individual_statistics(pair, cfg, which)
    h0_out, h1_out = mixer_output(pair, cfg.gain)
    return truncated_statistics(h0_out, h1_out, which.mode, det)
