"""Figure-reproduction sweeps: grids, curves, maps, and verification tables.

Each public function consumes a :class:`RunConfig` and returns a
:class:`SweepResult` of named data blocks, ready for the text or structured
writer in :mod:`qipm.cli`.  All computations are deterministic; grid cells
are independent and may be evaluated in parallel without changing output
content.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .gaussian import mean_photon
from .montecarlo import NonClassicalStateError, SamplerSpec, empirical_error_probability
from .receiver import (
    Counter,
    DetectionStatistics,
    DetectorModel,
    ReceiverConfig,
    cpc_statistics,
    effective_exponent,
    error_probability,
    log10_error_probability,
    mixer_output,
    optimal_gain,
    optimal_weights,
    quantum_advantage_db,
    weight_relation_residual,
)
from .resolution import finite_k_statistics
from .scenario import (
    Scenario,
    build_hypotheses,
    classical_error_probability,
    classical_log10_error_probability,
    qcb_curve,
)

LOG10 = math.log(10.0)


@dataclass(frozen=True)
class SweepAxis:
    """One sweep axis: name, bounds, point count and spacing."""

    name: str
    minimum: float
    maximum: float
    points: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError(f"axis '{self.name}' needs at least 2 points, got {self.points}")
        if self.minimum >= self.maximum:
            raise ValueError(f"axis '{self.name}' needs min < max")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"axis '{self.name}' spacing must be 'linear' or 'log'")
        if self.spacing == "log" and self.minimum <= 0:
            raise ValueError(f"log axis '{self.name}' requires positive bounds")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.minimum, self.maximum, self.points)
        return np.linspace(self.minimum, self.maximum, self.points)


@dataclass
class RunConfig:
    """Resolved run description: scenario, receiver, sweep, and options."""

    scenario: Scenario
    gain_spec: object = "optimal"
    w1_spec: object = "gain"
    w2_spec: object = "gain-1"
    detector_1: DetectorModel = DetectorModel()
    detector_2: DetectorModel = DetectorModel()
    sweep: dict = field(default_factory=dict)
    montecarlo: dict = field(default_factory=dict)
    threads: int = 1

    def resolve_gain(self, sc: Scenario | None = None) -> float:
        sc = sc or self.scenario
        if self.gain_spec == "optimal":
            return optimal_gain(sc)
        return float(self.gain_spec)

    def resolve_weights(self, gain: float, sc: Scenario | None = None) -> tuple[float, float]:
        sc = sc or self.scenario
        w1 = gain if self.w1_spec == "gain" else float(self.w1_spec)
        if self.w2_spec == "gain-1":
            w2 = gain - 1.0
        elif self.w2_spec == "optimal":
            w2 = optimal_weights(sc, w1)[1]
        else:
            w2 = float(self.w2_spec)
        return (w1, w2)


@dataclass
class DataBlock:
    """One rectangular block of output data."""

    name: str
    columns: list
    units: list
    rows: list


@dataclass
class SweepResult:
    """Everything one command emits: resolved metadata plus data blocks."""

    command: str
    meta: dict
    blocks: list


def _pe_pair(stats: DetectionStatistics, modes: float) -> tuple[float, float]:
    return error_probability(stats, modes), log10_error_probability(stats, modes)


def error_curve(cfg: RunConfig) -> SweepResult:
    """Error probability of every receiver variant versus mode count.

    Columns: PC1 and PC2 individual detection (honoring the configured
    detector imperfections and resolution), CPC with the configured weights,
    the coherent-state reference, and the Chernoff bound, all both linear
    and log10.  With ``delta_log10`` enabled, per-receiver columns of
    ``log10 P_e - log10 P_e_CS`` are appended.
    """
    sc = cfg.scenario
    gain = cfg.resolve_gain()
    weights = cfg.resolve_weights(gain)
    pair = build_hypotheses(sc)
    rcfg = ReceiverConfig(
        gain=gain, detector_1=cfg.detector_1, detector_2=cfg.detector_2, weights=weights
    )
    stats = {
        "pc1": finite_k_statistics(pair, rcfg, Counter.PC1),
        "pc2": finite_k_statistics(pair, rcfg, Counter.PC2),
    }
    finite_k = cfg.detector_1.resolution is not None or cfg.detector_2.resolution is not None
    stats["cpc"] = None if finite_k else cpc_statistics(pair, rcfg)

    axis = SweepAxis("m", cfg.sweep["m_min"], cfg.sweep["m_max"], cfg.sweep["m_points"], "log")
    delta = bool(cfg.sweep.get("delta_log10", False))
    columns = ["m", "pe_pc1", "pe_pc2", "pe_cpc", "pe_cs", "qcb"]
    units = ["modes"] + ["probability"] * 5
    columns += ["log10_pe_pc1", "log10_pe_pc2", "log10_pe_cpc", "log10_pe_cs", "log10_qcb"]
    units += ["log10(probability)"] * 5
    if delta:
        columns += ["delta_log10_pc1", "delta_log10_pc2", "delta_log10_cpc"]
        units += ["decades"] * 3

    rows = []
    for m in axis.values():
        pe, lg = {}, {}
        for key in ("pc1", "pc2", "cpc"):
            if stats[key] is None:
                pe[key], lg[key] = math.nan, math.nan
            else:
                pe[key], lg[key] = _pe_pair(stats[key], m)
        pe_cs = classical_error_probability(sc, m)
        lg_cs = classical_log10_error_probability(sc, m)
        bound = qcb_curve(sc, m)
        row = [m, pe["pc1"], pe["pc2"], pe["cpc"], pe_cs, bound]
        row += [lg["pc1"], lg["pc2"], lg["cpc"], lg_cs, math.log10(bound)]
        if delta:
            row += [lg["pc1"] - lg_cs, lg["pc2"] - lg_cs, lg["cpc"] - lg_cs]
        rows.append(row)

    meta = {"gain": gain, "w1": weights[0], "w2": weights[1]}
    if finite_k:
        meta["note"] = "finite-resolution CPC has no closed form; CPC columns are NaN"
    return SweepResult(
        command="error-curve", meta=meta, blocks=[DataBlock("curve", columns, units, rows)]
    )


def _qa_cell(args) -> float:
    """Quantum advantage of counter-1 detection for one (p_dc, eta) cell."""
    ns, nb, kappa, gain, p_dc, eta, resolution = args
    sc = Scenario(ns, nb, kappa)
    pair = build_hypotheses(sc)
    det = DetectorModel(eta=eta, p_dc=p_dc, resolution=resolution)
    rcfg = ReceiverConfig(gain=gain, detector_1=det)
    stats = finite_k_statistics(pair, rcfg, Counter.PC1)
    return quantum_advantage_db(stats, sc)


def _map_cells(cell_fn, jobs, threads: int) -> list:
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(cell_fn, jobs, chunksize=64))
    return [cell_fn(job) for job in jobs]


def _crossing(levels: np.ndarray, values: np.ndarray, target: float) -> float:
    """First axis value where ``values`` crosses ``target`` (linear interpolation)."""
    for i in range(len(values) - 1):
        lo, hi = values[i], values[i + 1]
        if (lo - target) * (hi - target) <= 0 and lo != hi:
            frac = (target - lo) / (hi - lo)
            return float(levels[i] + frac * (levels[i + 1] - levels[i]))
    return math.nan


def qa_map(cfg: RunConfig) -> SweepResult:
    """Quantum-advantage map over dark-count probability and efficiency.

    Emits one row per grid cell, interpolated 0 dB and 1 dB contours (the
    efficiency at which the advantage crosses the level, per dark-count
    value), and the quantum advantage at any user-supplied detector
    coordinates.
    """
    sc = cfg.scenario
    gain = cfg.resolve_gain()
    pdc_axis = SweepAxis(
        "p_dc",
        cfg.sweep["pdc_min"],
        cfg.sweep["pdc_max"],
        cfg.sweep["pdc_points"],
        cfg.sweep.get("pdc_scale", "log"),
    )
    eta_axis = SweepAxis(
        "eta",
        cfg.sweep["eta_min"],
        cfg.sweep["eta_max"],
        cfg.sweep["eta_points"],
        cfg.sweep.get("eta_scale", "linear"),
    )
    resolution = cfg.detector_1.resolution
    pdc_values = pdc_axis.values()
    eta_values = eta_axis.values()
    jobs = [
        (sc.n_s, sc.n_b, sc.kappa, gain, p_dc, eta, resolution)
        for p_dc in pdc_values
        for eta in eta_values
    ]
    flat = _map_cells(_qa_cell, jobs, cfg.threads)
    grid = np.array(flat).reshape(pdc_axis.points, eta_axis.points)

    cell_rows = [
        [pdc_values[i], eta_values[j], grid[i, j]]
        for i in range(pdc_axis.points)
        for j in range(eta_axis.points)
    ]
    contour_rows = [
        [pdc_values[i], _crossing(eta_values, grid[i], 0.0), _crossing(eta_values, grid[i], 1.0)]
        for i in range(pdc_axis.points)
    ]
    blocks = [
        DataBlock("qa_map", ["p_dc", "eta", "qa_db"], ["probability/window", "dimensionless", "dB"], cell_rows),
        DataBlock(
            "qa_contours",
            ["p_dc", "eta_at_0db", "eta_at_1db"],
            ["probability/window", "dimensionless", "dimensionless"],
            contour_rows,
        ),
    ]
    point_rows = []
    for point in cfg.sweep.get("detector_points", []):
        qa = _qa_cell((sc.n_s, sc.n_b, sc.kappa, gain, point["p_dc"], point["eta"], resolution))
        point_rows.append([point.get("label", ""), point["p_dc"], point["eta"], qa])
    if point_rows:
        blocks.append(
            DataBlock(
                "detector_points",
                ["label", "p_dc", "eta", "qa_db"],
                ["text", "probability/window", "dimensionless", "dB"],
                point_rows,
            )
        )
    return SweepResult(command="qa-map", meta={"gain": gain}, blocks=blocks)


def _weight_cell(args) -> float:
    ns, nb, kappa, gain, w1, w2 = args
    sc = Scenario(ns, nb, kappa)
    pair = build_hypotheses(sc)
    rcfg = ReceiverConfig(gain=gain, weights=(w1, w2))
    return quantum_advantage_db(cpc_statistics(pair, rcfg), sc)


def weight_map(cfg: RunConfig) -> SweepResult:
    """Quantum-advantage map of CPC over the post-processing weights.

    Two traced series accompany the grid: the gain-matched line
    ``(w1, w2) = (G, G - 1)`` parametrized by the gain, and the optimal
    affine weight relation evaluated along the ``w1`` axis.
    """
    sc = cfg.scenario
    gain = cfg.resolve_gain()
    w1_axis = SweepAxis(
        "w1", cfg.sweep["w1_min"], cfg.sweep["w1_max"], cfg.sweep["w1_points"],
        cfg.sweep.get("w1_scale", "linear"),
    )
    w2_axis = SweepAxis(
        "w2", cfg.sweep["w2_min"], cfg.sweep["w2_max"], cfg.sweep["w2_points"],
        cfg.sweep.get("w2_scale", "linear"),
    )
    w1_values, w2_values = w1_axis.values(), w2_axis.values()
    jobs = [
        (sc.n_s, sc.n_b, sc.kappa, gain, w1, w2) for w1 in w1_values for w2 in w2_values
    ]
    flat = _map_cells(_weight_cell, jobs, cfg.threads)
    cell_rows = [
        [w1_values[i], w2_values[j], flat[i * w2_axis.points + j]]
        for i in range(w1_axis.points)
        for j in range(w2_axis.points)
    ]

    gain_line_rows = []
    for w2 in w2_values:
        line_gain = 1.0 + max(w2, 0.0)
        qa = _weight_cell((sc.n_s, sc.n_b, sc.kappa, gain, line_gain, w2))
        gain_line_rows.append([line_gain, w2, qa])
    optimal_rows = []
    for w1 in w1_values:
        if w1 <= 0:
            continue
        w2 = optimal_weights(sc, w1)[1]
        qa = _weight_cell((sc.n_s, sc.n_b, sc.kappa, gain, w1, w2))
        optimal_rows.append([w1, w2, qa])

    units = ["dimensionless", "dimensionless", "dB"]
    blocks = [
        DataBlock("qa_weights", ["w1", "w2", "qa_db"], units, cell_rows),
        DataBlock("gain_line", ["w1", "w2", "qa_db"], units, gain_line_rows),
        DataBlock("optimal_line", ["w1", "w2", "qa_db"], units, optimal_rows),
    ]
    return SweepResult(command="weight-map", meta={"gain": gain}, blocks=blocks)


def _nb_tag(n_b: float) -> str:
    if float(n_b).is_integer():
        return f"nb{int(n_b)}"
    return "nb" + repr(float(n_b)).replace(".", "p")


def resolution_curve(cfg: RunConfig) -> SweepResult:
    """Error probability versus mode count for each photon-number resolution.

    Curves for every configured ``K`` plus the unbounded counter, for both
    counters, at every configured background level.
    """
    resolutions = list(cfg.sweep.get("resolutions", [1, 2, 3]))
    if not resolutions:
        raise ValueError("resolution list must not be empty")
    nb_values = list(cfg.sweep.get("n_b_values", [cfg.scenario.n_b]))
    axis = SweepAxis("m", cfg.sweep["m_min"], cfg.sweep["m_max"], cfg.sweep["m_points"], "log")

    variants = []  # (column suffix, scenario, statistics)
    meta = {}
    imperfect = not (cfg.detector_1.is_ideal and cfg.detector_2.is_ideal)
    for n_b in nb_values:
        sc = Scenario(cfg.scenario.n_s, n_b, cfg.scenario.kappa)
        gain = cfg.resolve_gain(sc)
        meta[f"gain_{_nb_tag(n_b)}"] = gain
        pair = build_hypotheses(sc)
        for counter in (Counter.PC1, Counter.PC2):
            for k in [*resolutions, None]:
                det1 = DetectorModel(cfg.detector_1.eta, cfg.detector_1.p_dc, k)
                det2 = DetectorModel(cfg.detector_2.eta, cfg.detector_2.p_dc, k)
                rcfg = ReceiverConfig(gain=gain, detector_1=det1, detector_2=det2)
                stats = finite_k_statistics(pair, rcfg, counter)
                tag = f"{counter.name.lower()}_{'full' if k is None else f'k{k}'}_{_nb_tag(n_b)}"
                variants.append((tag, sc, stats))
    if imperfect:
        meta["note"] = (
            "detector efficiency/dark counts folded into the thermal mean before "
            "truncation; curves extend beyond the ideal-counter model"
        )

    columns = ["m"] + [f"pe_{tag}" for tag, _, _ in variants]
    columns += [f"pe_cs_{_nb_tag(n_b)}" for n_b in nb_values]
    units = ["modes"] + ["probability"] * (len(columns) - 1)
    log_columns = [f"log10_{name}" for name in columns[1:]]
    rows = []
    for m in axis.values():
        linear = [error_probability(stats, m) for _, _, stats in variants]
        linear += [
            classical_error_probability(Scenario(cfg.scenario.n_s, n_b, cfg.scenario.kappa), m)
            for n_b in nb_values
        ]
        logs = [log10_error_probability(stats, m) for _, _, stats in variants]
        logs += [
            classical_log10_error_probability(
                Scenario(cfg.scenario.n_s, n_b, cfg.scenario.kappa), m
            )
            for n_b in nb_values
        ]
        rows.append([m] + linear + logs)
    return SweepResult(
        command="resolution-curve",
        meta=meta,
        blocks=[
            DataBlock(
                "curves",
                columns + log_columns,
                units + ["log10(probability)"] * len(log_columns),
                rows,
            )
        ],
    )


def optimal_gain_report(cfg: RunConfig) -> SweepResult:
    """Optimal mixer gain and derived operating point for one scenario."""
    sc = cfg.scenario
    gain = optimal_gain(sc)
    pair = build_hypotheses(sc)
    h0_out, h1_out = mixer_output(pair, gain)
    from .receiver import h0_cross_covariance, h1_cross_covariance
    from .gaussian import photon_covariance

    wick_h1 = photon_covariance(h1_out, 0, 1)
    scaled = h1_cross_covariance(sc, gain, scaled_correlation=True)
    unscaled = h1_cross_covariance(sc, gain, scaled_correlation=False)
    rows = [
        ["gain", gain],
        ["gain_minus_one", gain - 1.0],
        ["n1_h0", mean_photon(h0_out, 0)],
        ["n1_h1", mean_photon(h1_out, 0)],
        ["n2_h0", mean_photon(h0_out, 1)],
        ["n2_h1", mean_photon(h1_out, 1)],
        ["weight_relation_residual", weight_relation_residual(sc, gain)],
        ["h0_cross_covariance", h0_cross_covariance(sc, gain)],
        ["h1_cross_covariance_engine", wick_h1],
        ["h1_cross_covariance_scaled_form", scaled],
        ["h1_cross_covariance_unscaled_form", unscaled],
        ["unscaled_form_relative_deviation", (unscaled - wick_h1) / wick_h1],
    ]
    return SweepResult(
        command="optimal-gain",
        meta={},
        blocks=[DataBlock("report", ["quantity", "value"], ["text", "mixed"], rows)],
    )


def _mc_target_modes(stats: DetectionStatistics, target: float) -> int:
    """Mode count at which the analytic error probability hits ``target``."""
    z = -float(special.ndtri(target))
    exponent = effective_exponent(stats)
    if exponent <= 0:
        raise ValueError("cannot place an operating point: zero exponent")
    return max(1, int(round(z * z / (2.0 * exponent))))


def mc_verify(cfg: RunConfig, seed: int | None = None) -> SweepResult:
    """Monte-Carlo concordance table for the configured operating points.

    Each row compares the analytic error probability against the empirical
    estimate at 4 binomial standard errors.  Finite-resolution CPC points
    carry no analytic value and are reported as empirical-only; scenarios
    whose post-mixer states are nonclassical are skipped with a diagnostic.
    """
    mc = cfg.montecarlo
    trials = int(mc.get("trials", 50000))
    effective_seed = int(seed if seed is not None else mc.get("seed", 0))
    receiver_name = mc.get("receiver", "pc1")
    sc = cfg.scenario
    gain = cfg.resolve_gain()
    weights = cfg.resolve_weights(gain)
    pair = build_hypotheses(sc)
    h0_out, h1_out = mixer_output(pair, gain)
    rcfg = ReceiverConfig(
        gain=gain, detector_1=cfg.detector_1, detector_2=cfg.detector_2, weights=weights
    )

    finite_k = cfg.detector_1.resolution is not None or cfg.detector_2.resolution is not None
    if receiver_name == "cpc":
        selector = weights
        analytic_stats = None if finite_k else cpc_statistics(pair, rcfg)
    else:
        selector = Counter.PC1 if receiver_name == "pc1" else Counter.PC2
        analytic_stats = finite_k_statistics(pair, rcfg, selector)

    if "modes" in mc:
        modes_list = [int(m) for m in mc["modes"]]
    else:
        if analytic_stats is None:
            raise ValueError("pe_targets require an analytic pipeline; give explicit 'modes'")
        modes_list = [_mc_target_modes(analytic_stats, t) for t in mc["pe_targets"]]

    columns = ["receiver", "modes", "pe_analytic", "pe_empirical", "std_err", "sigma_distance", "status"]
    units = ["text", "modes", "probability", "probability", "probability", "sigma", "text"]
    rows = []
    for modes in modes_list:
        try:
            spec = SamplerSpec(
                states=(h0_out, h1_out),
                detectors=(cfg.detector_1, cfg.detector_2),
                modes_per_trial=modes,
                trials=trials,
                seed=effective_seed,
            )
        except NonClassicalStateError:
            rows.append([receiver_name, modes, math.nan, math.nan, math.nan, math.nan, "skipped: nonclassical"])
            continue
        result = empirical_error_probability(spec, selector)
        if analytic_stats is None:
            rows.append(
                [receiver_name, modes, math.nan, result.p_e_hat, result.std_err, math.nan, "empirical-only"]
            )
            continue
        analytic = error_probability(analytic_stats, modes)
        sigma = abs(result.p_e_hat - analytic) / result.std_err if result.std_err > 0 else math.inf
        status = "pass" if sigma <= 4.0 else "fail"
        rows.append([receiver_name, modes, analytic, result.p_e_hat, result.std_err, sigma, status])

    return SweepResult(
        command="mc-verify",
        meta={"gain": gain, "seed": effective_seed, "trials": trials, "source": "montecarlo"},
        blocks=[DataBlock("verification", columns, units, rows)],
    )
