"""Configuration-driven command-line front end.

Subcommands reproduce each figure's data as structured files:

    qipm error-curve      --config cfg.toml --out data.txt
    qipm qa-map           --config cfg.toml --out map.txt --threads 4
    qipm weight-map       --config cfg.toml --out map.txt
    qipm resolution-curve --config cfg.toml --out data.txt
    qipm optimal-gain     --config cfg.toml
    qipm mc-verify        --config cfg.toml --out table.txt --seed 7

Config files are TOML with sections ``[scenario]``, ``[receiver]``,
``[detector1]``, ``[detector2]``, ``[sweep]`` and ``[montecarlo]``; unknown
sections or keys are hard errors.  Output is a delimited text table
(``--format text``, default) or a JSON document (``--format structured``)
carrying identical content, including a header block with the fully
resolved configuration so a rerun with the same config and seed reproduces
the file byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .receiver import DetectorModel
from .scenario import Scenario
from .sweep import (
    RunConfig,
    SweepResult,
    error_curve,
    mc_verify,
    optimal_gain_report,
    qa_map,
    resolution_curve,
    weight_map,
)


class ConfigError(ValueError):
    """A configuration file is malformed or inconsistent."""


def _type_name(expected) -> str:
    return " or ".join(t.__name__ for t in expected) if isinstance(expected, tuple) else expected.__name__


def _check_keys(section: str, table: dict, known: dict) -> None:
    for key in table:
        if key not in known:
            raise ConfigError(f"[{section}] unknown key '{key}'")


def _get(section: str, table: dict, key: str, expected, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key '{key}'")
        return default
    value = table[key]
    if isinstance(expected, tuple) and float in expected and isinstance(value, int):
        value = float(value)
    if expected is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, expected if isinstance(expected, tuple) else (expected,)):
        raise ConfigError(f"[{section}] key '{key}' must be {_type_name(expected)}, got {value!r}")
    return value


def _parse_scenario(table: dict) -> Scenario:
    _check_keys("scenario", table, {"n_s", "n_b", "kappa"})
    try:
        return Scenario(
            n_s=_get("scenario", table, "n_s", float, required=True),
            n_b=_get("scenario", table, "n_b", float, required=True),
            kappa=_get("scenario", table, "kappa", float, required=True),
        )
    except ValueError as exc:
        raise ConfigError(f"[scenario] {exc}") from exc


def _parse_detector(section: str, table: dict) -> DetectorModel:
    _check_keys(section, table, {"eta", "p_dc", "resolution"})
    resolution = table.get("resolution", "unbounded")
    if resolution == "unbounded":
        resolution = None
    elif not isinstance(resolution, int) or isinstance(resolution, bool):
        raise ConfigError(f"[{section}] key 'resolution' must be an integer or 'unbounded'")
    try:
        return DetectorModel(
            eta=_get(section, table, "eta", float, default=1.0),
            p_dc=_get(section, table, "p_dc", float, default=0.0),
            resolution=resolution,
        )
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _parse_gain_like(section: str, table: dict, key: str, default, allowed: tuple):
    value = table.get(key, default)
    if isinstance(value, str):
        if value not in allowed:
            raise ConfigError(f"[{section}] key '{key}' must be a number or one of {allowed}")
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"[{section}] key '{key}' must be a number or one of {allowed}")


def _parse_receiver(table: dict) -> tuple:
    _check_keys("receiver", table, {"gain", "w1", "w2"})
    gain = _parse_gain_like("receiver", table, "gain", "optimal", ("optimal",))
    w1 = _parse_gain_like("receiver", table, "w1", "gain", ("gain",))
    w2 = _parse_gain_like("receiver", table, "w2", "gain-1", ("gain-1", "optimal"))
    return gain, w1, w2


_SWEEP_SCHEMAS = {
    "error-curve": {
        "m_min": (float, True),
        "m_max": (float, True),
        "m_points": (int, True),
        "delta_log10": (bool, False),
    },
    "qa-map": {
        "pdc_min": (float, True),
        "pdc_max": (float, True),
        "pdc_points": (int, True),
        "pdc_scale": (str, False),
        "eta_min": (float, True),
        "eta_max": (float, True),
        "eta_points": (int, True),
        "eta_scale": (str, False),
        "detector_points": (list, False),
    },
    "weight-map": {
        "w1_min": (float, True),
        "w1_max": (float, True),
        "w1_points": (int, True),
        "w1_scale": (str, False),
        "w2_min": (float, True),
        "w2_max": (float, True),
        "w2_points": (int, True),
        "w2_scale": (str, False),
    },
    "resolution-curve": {
        "m_min": (float, True),
        "m_max": (float, True),
        "m_points": (int, True),
        "resolutions": (list, False),
        "n_b_values": (list, False),
    },
    "optimal-gain": {},
    "mc-verify": {},
}


def _parse_sweep(command: str, table: dict) -> dict:
    schema = _SWEEP_SCHEMAS[command]
    _check_keys("sweep", table, schema)
    sweep = {}
    for key, (expected, required) in schema.items():
        value = _get("sweep", table, key, expected, required=required)
        if value is not None:
            sweep[key] = value
    if "detector_points" in sweep:
        for point in sweep["detector_points"]:
            if not isinstance(point, dict) or not {"eta", "p_dc"} <= set(point):
                raise ConfigError(
                    "[sweep] each detector_points entry needs 'eta' and 'p_dc' (optional 'label')"
                )
            extra = set(point) - {"eta", "p_dc", "label"}
            if extra:
                raise ConfigError(f"[sweep] detector_points entry has unknown keys {sorted(extra)}")
    for key in ("resolutions", "n_b_values"):
        if key in sweep and not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in sweep[key]
        ):
            raise ConfigError(f"[sweep] key '{key}' must be a list of numbers")
    if "resolutions" in sweep:
        if not all(isinstance(v, int) and v >= 1 for v in sweep["resolutions"]):
            raise ConfigError("[sweep] key 'resolutions' must be a list of integers >= 1")
    return sweep


def _parse_montecarlo(table: dict) -> dict:
    known = {"trials", "seed", "receiver", "pe_targets", "modes"}
    _check_keys("montecarlo", table, known)
    mc = {}
    mc["trials"] = _get("montecarlo", table, "trials", int, default=50000)
    mc["seed"] = _get("montecarlo", table, "seed", int, default=0)
    receiver = _get("montecarlo", table, "receiver", str, default="pc1")
    if receiver not in ("pc1", "pc2", "cpc"):
        raise ConfigError("[montecarlo] key 'receiver' must be 'pc1', 'pc2' or 'cpc'")
    mc["receiver"] = receiver
    if "modes" in table:
        modes = _get("montecarlo", table, "modes", list)
        if not all(isinstance(m, int) and m >= 1 for m in modes):
            raise ConfigError("[montecarlo] key 'modes' must be a list of integers >= 1")
        mc["modes"] = modes
    elif "pe_targets" in table:
        targets = _get("montecarlo", table, "pe_targets", list)
        if not all(isinstance(t, (int, float)) and 0 < t < 0.5 for t in targets):
            raise ConfigError("[montecarlo] key 'pe_targets' must be a list of floats in (0, 0.5)")
        mc["pe_targets"] = [float(t) for t in targets]
    else:
        raise ConfigError("[montecarlo] needs either 'pe_targets' or 'modes'")
    return mc


_KNOWN_SECTIONS = {"scenario", "receiver", "detector1", "detector2", "sweep", "montecarlo"}


def load_config(path: str, command: str, threads: int = 1) -> RunConfig:
    """Parse and validate a TOML run configuration for one subcommand."""
    with open(path, "rb") as handle:
        try:
            raw = tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(raw) - _KNOWN_SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    if "scenario" not in raw:
        raise ConfigError("missing required section [scenario]")
    scenario = _parse_scenario(raw["scenario"])
    gain, w1, w2 = _parse_receiver(raw.get("receiver", {}))
    detector_1 = _parse_detector("detector1", raw.get("detector1", {}))
    detector_2 = _parse_detector("detector2", raw.get("detector2", {}))
    needs_sweep = bool(_SWEEP_SCHEMAS[command])
    if needs_sweep and "sweep" not in raw:
        raise ConfigError(f"command '{command}' requires a [sweep] section")
    sweep = _parse_sweep(command, raw.get("sweep", {})) if needs_sweep else {}
    montecarlo = {}
    if command == "mc-verify":
        if "montecarlo" not in raw:
            raise ConfigError("command 'mc-verify' requires a [montecarlo] section")
        montecarlo = _parse_montecarlo(raw["montecarlo"])
    return RunConfig(
        scenario=scenario,
        gain_spec=gain,
        w1_spec=w1,
        w2_spec=w2,
        detector_1=detector_1,
        detector_2=detector_2,
        sweep=sweep,
        montecarlo=montecarlo,
        threads=threads,
    )


def _resolved_config_dict(cfg: RunConfig) -> dict:
    def detector_dict(det: DetectorModel) -> dict:
        return {
            "eta": det.eta,
            "p_dc": det.p_dc,
            "resolution": "unbounded" if det.resolution is None else det.resolution,
        }

    resolved = {
        "scenario": {"n_s": cfg.scenario.n_s, "n_b": cfg.scenario.n_b, "kappa": cfg.scenario.kappa},
        "receiver": {"gain": cfg.gain_spec, "w1": cfg.w1_spec, "w2": cfg.w2_spec},
        "detector1": detector_dict(cfg.detector_1),
        "detector2": detector_dict(cfg.detector_2),
    }
    if cfg.sweep:
        resolved["sweep"] = dict(cfg.sweep)
    if cfg.montecarlo:
        resolved["montecarlo"] = dict(cfg.montecarlo)
    return resolved


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(prefix: str, value, lines: list) -> None:
    if isinstance(value, dict):
        for key in value:
            _flatten(f"{prefix}.{key}" if prefix else key, value[key], lines)
    elif isinstance(value, list):
        lines.append(f"{prefix} = {json.dumps(value)}")
    else:
        lines.append(f"{prefix} = {_format_value(value)}")


def render_text(result: SweepResult, cfg: RunConfig) -> str:
    """Delimited text rendering: '#'-prefixed metadata, one header line per block."""
    lines = [f"# qipm {__version__}", f"# command: {result.command}"]
    config_lines = []
    _flatten("", _resolved_config_dict(cfg), config_lines)
    lines += [f"# config.{line}" for line in config_lines]
    meta_lines = []
    _flatten("", result.meta, meta_lines)
    lines += [f"# meta.{line}" for line in meta_lines]
    for block in result.blocks:
        lines.append(f"# block: {block.name}")
        lines.append("# units: " + "\t".join(block.units))
        lines.append("\t".join(block.columns))
        for row in block.rows:
            lines.append("\t".join(_format_value(value) for value in row))
    return "\n".join(lines) + "\n"


def render_structured(result: SweepResult, cfg: RunConfig) -> str:
    """JSON rendering with identical content to the text format."""

    def clean(value):
        if isinstance(value, float) and math.isnan(value):
            return None
        return value

    payload = {
        "artifact": "qipm",
        "version": __version__,
        "command": result.command,
        "config": _resolved_config_dict(cfg),
        "meta": result.meta,
        "blocks": [
            {
                "name": block.name,
                "columns": block.columns,
                "units": block.units,
                "rows": [[clean(value) for value in row] for row in block.rows],
            }
            for block in result.blocks
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


_COMMANDS = {
    "error-curve": error_curve,
    "qa-map": qa_map,
    "weight-map": weight_map,
    "resolution-curve": resolution_curve,
    "optimal-gain": optimal_gain_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qipm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qipm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_COMMANDS, "mc-verify"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="TOML run configuration")
        cmd.add_argument("--out", default=None, help="output path (default: stdout)")
        cmd.add_argument(
            "--format", choices=("text", "structured"), default="text", help="output format"
        )
        cmd.add_argument("--threads", type=int, default=1, help="parallel grid workers")
        cmd.add_argument("--seed", type=int, default=None, help="Monte-Carlo seed override")
    return parser


def run_command(command: str, cfg: RunConfig, seed: int | None = None) -> SweepResult:
    if command == "mc-verify":
        return mc_verify(cfg, seed=seed)
    return _COMMANDS[command](cfg)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command, threads=args.threads)
        if args.command == "mc-verify" and args.seed is not None:
            cfg.montecarlo["seed"] = args.seed
        result = run_command(args.command, cfg, seed=args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    renderer = render_text if args.format == "text" else render_structured
    content = renderer(result, cfg)
    if args.out is None:
        sys.stdout.write(content)
    else:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(content)
    return 0


if __name__ == "__main__":
    sys.exit(main())
