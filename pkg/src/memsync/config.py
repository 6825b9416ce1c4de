"""Experiment configuration: a single flat JSON document.

An empty document yields the documented defaults (d=0, pump rate 1e9 Hz,
n_max=8, exact decoherence).  Unknown keys anywhere are rejected, and every
range error names the offending key path (e.g. "source.h").
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import MemoryParams, SourceParams, SystemParams
from .errors import ConfigError

MODES = ("analytic", "simulate", "fig2", "sweep")

DEFAULTS = {
    "mode": "analytic",
    "N": 2,
    "pump_rate": 1e9,
    "n_max": 8,
    "theta": 0.9,
    "fidelity_kind": "postselected",
    "denominator_mode": "normalized",
    "out": "out",
    "source": {"p": 0.01, "h": 0.5, "d": 0.0},
    "memory": {"eta_s": 0.75, "eta_r": 0.75, "B": 1000.0, "decoherence_mode": "exact"},
    "sim": {"steps": 200_000, "seed": 0, "replicas": 4, "warmup_steps": None},
}

#: The published figure's caption parameters (series efficiencies are set
#: per series by the fig2 command itself).
FIG2_PRESET = {
    "mode": "fig2",
    "theta": 0.9,
    "pump_rate": 1e9,
    "source": {"h": 0.5, "d": 0.0},
    "memory": {"B": 1000.0},
}

SWEEPABLE = (
    "N", "pump_rate", "n_max", "theta",
    "source.p", "source.h", "source.d",
    "memory.eta_s", "memory.eta_r", "memory.B",
)


@dataclass(frozen=True)
class SimSettings:
    steps: int
    seed: int
    replicas: int
    warmup_steps: int | None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration for one CLI invocation."""

    mode: str
    system: SystemParams
    theta: float
    fidelity_kind: str
    denominator_mode: str
    sim: SimSettings
    out_dir: str
    sweep: dict = field(default_factory=dict)


def _require_number(value, key, lo=None, hi=None, lo_open=False, hi_open=False,
                    integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
    if integer:
        if float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
        value = int(value)
    else:
        value = float(value)
    if lo is not None and (value <= lo if lo_open else value < lo):
        raise ConfigError(f"{key}: value {value} out of range", key=key)
    if hi is not None and (value >= hi if hi_open else value > hi):
        raise ConfigError(f"{key}: value {value} out of range", key=key)
    return value


def _require_choice(value, key, choices):
    if value not in choices:
        raise ConfigError(f"{key}: expected one of {choices}, got {value!r}", key=key)
    return value


def _check_keys(doc, key_prefix, allowed):
    for k in doc:
        if k not in allowed:
            path = f"{key_prefix}{k}"
            raise ConfigError(f"unknown key {path!r}", key=path)


def _merged(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merged(out[k], v)
        else:
            out[k] = v
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON configuration document."""
    if not text.strip():
        doc = {}
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed configuration document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a JSON object")
    return config_from_dict(doc)


def config_from_dict(doc: dict) -> ExperimentConfig:
    _check_keys(doc, "", set(DEFAULTS) | {"preset", "sweep"})

    merged = DEFAULTS
    preset = doc.get("preset")
    if preset is not None:
        if preset != "fig2":
            raise ConfigError(f"preset: unknown preset {preset!r}", key="preset")
        merged = _merged(merged, FIG2_PRESET)
    user = {k: v for k, v in doc.items() if k not in ("preset", "sweep")}
    merged = _merged(merged, user)

    for section in ("source", "memory", "sim"):
        if not isinstance(merged[section], dict):
            raise ConfigError(f"{section}: expected an object", key=section)
    _check_keys(merged["source"], "source.", {"p", "h", "d"})
    _check_keys(merged["memory"], "memory.",
                {"eta_s", "eta_r", "B", "decoherence_mode"})
    _check_keys(merged["sim"], "sim.",
                {"steps", "seed", "replicas", "warmup_steps"})

    mode = _require_choice(merged["mode"], "mode", MODES)
    src = merged["source"]
    mem = merged["memory"]
    source = SourceParams(
        p=_require_number(src["p"], "source.p", 0.0, 1.0, hi_open=True),
        h=_require_number(src["h"], "source.h", 0.0, 1.0),
        d=_require_number(src["d"], "source.d", 0.0, 1.0, hi_open=True),
    )
    memory = MemoryParams(
        eta_s=_require_number(mem["eta_s"], "memory.eta_s", 0.0, 1.0),
        eta_r=_require_number(mem["eta_r"], "memory.eta_r", 0.0, 1.0),
        B=_require_number(mem["B"], "memory.B", 1.0),
        decoherence_mode=_require_choice(
            mem["decoherence_mode"], "memory.decoherence_mode",
            ("exact", "linearized")),
    )
    system = SystemParams(
        N=_require_number(merged["N"], "N", 1, integer=True),
        source=source,
        memory=memory,
        pump_rate=_require_number(merged["pump_rate"], "pump_rate", 0.0, lo_open=True),
        n_max=_require_number(merged["n_max"], "n_max", 1, integer=True),
    )

    sim_doc = merged["sim"]
    warmup = sim_doc["warmup_steps"]
    sim = SimSettings(
        steps=_require_number(sim_doc["steps"], "sim.steps", 1, integer=True),
        seed=_require_number(sim_doc["seed"], "sim.seed", 0, integer=True),
        replicas=_require_number(sim_doc["replicas"], "sim.replicas", 1, integer=True),
        warmup_steps=None if warmup is None else _require_number(
            warmup, "sim.warmup_steps", 0, integer=True),
    )

    sweep = {}
    raw_sweep = doc.get("sweep", {})
    if not isinstance(raw_sweep, dict):
        raise ConfigError("sweep: expected an object of key -> list", key="sweep")
    for key, values in raw_sweep.items():
        if key not in SWEEPABLE:
            raise ConfigError(f"sweep.{key}: not a sweepable key", key=f"sweep.{key}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{key}: expected a non-empty list",
                              key=f"sweep.{key}")
        sweep[key] = list(values)

    if not isinstance(merged["out"], str):
        raise ConfigError("out: expected a string path", key="out")

    return ExperimentConfig(
        mode=mode,
        system=system,
        theta=_require_number(merged["theta"], "theta", 0.0, 1.0, lo_open=True),
        fidelity_kind=_require_choice(
            merged["fidelity_kind"], "fidelity_kind",
            ("postselected", "unpostselected")),
        denominator_mode=_require_choice(
            merged["denominator_mode"], "denominator_mode",
            ("normalized", "paper_literal")),
        sim=sim,
        out_dir=merged["out"],
        sweep=sweep,
    )
