"""Sampling oracle for the analytic detection pipeline.

Post-mixer states in the bright-background regime are classical (they admit
a positive Glauber-Sudarshan description), so their photon statistics can be
sampled exactly: draw a zero-mean complex Gaussian amplitude vector with the
state's second moments, then draw counts conditionally Poissonian in the
intensities.  Detector imperfections are applied per mode as binomial
thinning (efficiency) plus an independent thermal dark count; finite
resolution clips each mode's count at ``K``.

The oracle estimates error probabilities empirically against the analytic
threshold, validating every closed-form pipeline including finite-K CPC,
which has no closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState, is_p_representable, photon_covariance
from .receiver import (
    Counter,
    DetectionStatistics,
    DetectorModel,
    apply_detector,
    detected_cpc_statistics,
    detected_statistics,
    ml_threshold,
)
from .resolution import truncated_statistics

_CHUNK_ELEMENTS = 1 << 21


class NonClassicalStateError(ValueError):
    """The state has no classical phase-space description; the oracle does not apply."""


@dataclass(frozen=True)
class SamplerSpec:
    """What to sample: post-mixer hypothesis states, detectors, and sizes.

    ``states`` holds the (H0, H1) pair of post-mixer Gaussian states (mode 0
    feeds counter 1, mode 1 counter 2).  Both must be P-representable.
    ``modes_per_trial`` is the number of transmitted mode pairs summed into
    one decision, ``trials`` the number of Monte-Carlo decisions per
    hypothesis.
    """

    states: tuple[GaussianState, GaussianState]
    detectors: tuple[DetectorModel, DetectorModel]
    modes_per_trial: int
    trials: int
    seed: int
    budget: float = 1e12

    def __post_init__(self):
        if self.modes_per_trial < 1:
            raise ValueError("modes_per_trial must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.trials * self.modes_per_trial > self.budget:
            raise ValueError(
                f"trials * modes_per_trial = {self.trials * self.modes_per_trial:.3e} "
                f"exceeds the sampling budget {self.budget:.3e}"
            )
        for label, state in zip(("H0", "H1"), self.states):
            if not is_p_representable(state):
                raise NonClassicalStateError(
                    f"{label} state is not P-representable; the amplitude-then-Poisson "
                    "oracle cannot sample nonclassical photon statistics"
                )

    def state_for(self, hypothesis: int) -> GaussianState:
        if hypothesis not in (0, 1):
            raise ValueError(f"hypothesis must be 0 or 1, got {hypothesis}")
        return self.states[hypothesis]


@dataclass(frozen=True)
class EmpiricalResult:
    """Empirical error probability with its binomial standard error."""

    p_e_hat: float
    std_err: float
    trials: int

    def __post_init__(self):
        if not 0.0 <= self.p_e_hat <= 1.0:
            raise ValueError(f"estimated probability out of range: {self.p_e_hat}")


def _amplitude_factor(state: GaussianState) -> np.ndarray:
    """Factor L with L L^T the real covariance of (x_1..x_d, y_1..y_d).

    For amplitudes ``alpha = x + i y`` with ``E[conj(a_i) a_j] = n_ij`` and
    ``E[a_i a_j] = m_ij`` the real second moments are

        E[x x^T] = (Re n + Re m) / 2,   E[y y^T] = (Re n - Re m) / 2,
        E[x_i y_j] = (Im n + Im m)_ij / 2.
    """
    n, m = state.n, state.m
    sxx = 0.5 * (n.real + m.real)
    syy = 0.5 * (n.real - m.real)
    sxy = 0.5 * (n.imag + m.imag)
    cov = np.block([[sxx, sxy], [sxy.T, syy]])
    eigenvalues, vectors = np.linalg.eigh(cov)
    return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def _dark_counts(rng: np.random.Generator, mean: float, size) -> np.ndarray:
    """Thermal (geometric) dark counts with the given mean, support {0, 1, ...}."""
    if mean == 0.0:
        return np.zeros(size, dtype=np.int64)
    return rng.geometric(1.0 / (1.0 + mean), size=size).astype(np.int64) - 1


def sample_counts(spec: SamplerSpec, hypothesis: int) -> np.ndarray:
    """Per-trial total counts of both counters, shape ``(trials, 2)``.

    For every mode pair a complex Gaussian amplitude pair is drawn with the
    state's second moments and counts are Poissonian in the intensities;
    efficiency thins each count binomially, dark counts add an independent
    thermal draw, and finite resolution clips at ``K``.  Totals are the sums
    over the ``modes_per_trial`` mode pairs.  Deterministic for fixed spec
    and seed.
    """
    state = spec.state_for(hypothesis)
    factor = _amplitude_factor(state)
    d = state.mode_count
    root = np.random.SeedSequence(spec.seed).spawn(2)[hypothesis]
    totals = np.zeros((spec.trials, d), dtype=np.int64)
    trials_per_chunk = max(1, _CHUNK_ELEMENTS // spec.modes_per_trial)
    chunk_seeds = root.spawn(math.ceil(spec.trials / trials_per_chunk))
    start = 0
    for chunk_seed in chunk_seeds:
        rng = np.random.default_rng(chunk_seed)
        count = min(trials_per_chunk, spec.trials - start)
        draws = count * spec.modes_per_trial
        z = rng.standard_normal((draws, 2 * d)) @ factor.T
        intensities = z[:, :d] ** 2 + z[:, d:] ** 2
        counts = rng.poisson(intensities)
        for i, det in enumerate(spec.detectors[:d]):
            column = counts[:, i]
            if det.eta < 1.0:
                column = rng.binomial(column, det.eta)
            dark = _dark_counts(rng, det.dark_count_mean, draws)
            column = column + dark
            if det.resolution is not None:
                column = np.minimum(column, det.resolution)
            counts[:, i] = column
        totals[start : start + count] = counts.reshape(count, spec.modes_per_trial, d).sum(axis=1)
        start += count
    return totals


def _sample_marginal_totals(spec: SamplerSpec, hypothesis: int, mode: int) -> np.ndarray:
    """Per-trial totals of one counter without per-mode draws, shape ``(trials,)``.

    The marginal of one thermal-like mode is exponential in intensity, so
    the summed intensity over ``M`` modes is Gamma(M), the thinned total
    count is Poisson of it, and the summed dark counts are negative
    binomial.  This samples exactly the same distribution as summing
    :func:`sample_counts` records, in O(trials) instead of O(trials * M).
    """
    state = spec.state_for(hypothesis)
    det = spec.detectors[mode]
    occupation = state.occupation(mode)
    root = np.random.SeedSequence(spec.seed).spawn(2)[hypothesis]
    rng = np.random.default_rng(root)
    intensity = rng.gamma(spec.modes_per_trial, det.eta * occupation, size=spec.trials)
    totals = rng.poisson(intensity)
    n_dc = det.dark_count_mean
    if n_dc > 0.0:
        totals = totals + rng.negative_binomial(
            spec.modes_per_trial, 1.0 / (1.0 + n_dc), size=spec.trials
        )
    return totals


def _analytic_statistics(spec: SamplerSpec, selector) -> DetectionStatistics:
    """Analytic mean/variance pipeline matching the sampled receiver."""
    h0_out, h1_out = spec.states
    if isinstance(selector, Counter):
        det = spec.detectors[selector.mode]
        if det.resolution is None:
            return detected_statistics(h0_out, h1_out, selector.mode, det)
        return truncated_statistics(h0_out, h1_out, selector.mode, det)
    w1, w2 = selector
    det1, det2 = spec.detectors
    if det1.resolution is None and det2.resolution is None:
        return detected_cpc_statistics(h0_out, h1_out, det1, det2, (w1, w2))
    # No closed form exists for truncated joint counts: combine per-counter
    # truncated moments with the untruncated post-loss covariance to define
    # the threshold; the empirical error rate then measures that receiver.
    per_counter = [
        truncated_statistics(h0_out, h1_out, which.mode, spec.detectors[which.mode])
        for which in (Counter.PC1, Counter.PC2)
    ]
    covariances = []
    for state in spec.states:
        seen = apply_detector(state, Counter.PC1.mode, det1)
        seen = apply_detector(seen, Counter.PC2.mode, det2)
        covariances.append(photon_covariance(seen, Counter.PC1.mode, Counter.PC2.mode))
    mus, variances = [], []
    for h in range(2):
        mu1, var1 = _moments(per_counter[0], h)
        mu2, var2 = _moments(per_counter[1], h)
        mus.append(w1 * mu1 - w2 * mu2)
        variances.append(w1**2 * var1 + w2**2 * var2 - 2.0 * w1 * w2 * covariances[h])
    return DetectionStatistics(
        mu_h0=mus[0],
        mu_h1=mus[1],
        var_h0=variances[0],
        var_h1=variances[1],
        cov_h0=covariances[0],
        cov_h1=covariances[1],
    )


def _moments(stats: DetectionStatistics, hypothesis: int) -> tuple[float, float]:
    if hypothesis == 0:
        return stats.mu_h0, stats.var_h0
    return stats.mu_h1, stats.var_h1


def empirical_error_probability(spec: SamplerSpec, selector) -> EmpiricalResult:
    """Empirical error rate of the thresholded decision statistic.

    ``selector`` is either a :class:`~qipm.receiver.Counter` (individual
    detection) or a ``(w1, w2)`` weight pair (CPC).  The decision threshold
    comes from the analytic pipeline, so the estimate tests the Gaussian
    distributional approximation rather than the threshold choice.  Runs
    ``spec.trials`` decisions per hypothesis; the reported ``trials`` is the
    total number of decisions.
    """
    stats = _analytic_statistics(spec, selector)
    threshold = ml_threshold(stats, spec.modes_per_trial)
    h1_is_high = stats.mu_h1 >= stats.mu_h0

    errors = 0
    single_counter = isinstance(selector, Counter)
    fast = single_counter and spec.detectors[selector.mode].resolution is None
    for hypothesis in (0, 1):
        if fast:
            statistic = _sample_marginal_totals(spec, hypothesis, selector.mode)
        else:
            records = sample_counts(spec, hypothesis)
            if single_counter:
                statistic = records[:, selector.mode]
            else:
                w1, w2 = selector
                statistic = w1 * records[:, 0] - w2 * records[:, 1]
        decide_h1 = statistic > threshold if h1_is_high else statistic < threshold
        if hypothesis == 0:
            errors += int(np.count_nonzero(decide_h1))
        else:
            errors += int(np.count_nonzero(~decide_h1))
    total = 2 * spec.trials
    p_hat = errors / total
    return EmpiricalResult(
        p_e_hat=p_hat,
        std_err=math.sqrt(p_hat * (1.0 - p_hat) / total),
        trials=total,
    )
