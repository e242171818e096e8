"""Audit configuration files: JSON schema, loading and validation.

A configuration names everything an audit run needs: the wavelength band,
the attack case, the filter and component chain (library references, with an
optional per-instance direction swap for circulator port pairs), the
eavesdropper budget, system constants, protocol parameters, the leakage
model, and audit thresholds.  All state flows through this file plus the
component library; the CLI holds none of its own.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .bb84 import Bb84Params, SystemParams
from .channel import AttackCase, EveBudget
from .errors import ConfigError
from .leakage import DEFAULT_MODEL, available_models
from .mdi import MdiParams
from .spectral import Band

__all__ = [
    "AuditConfig",
    "AuditSettings",
    "OptimizerConfig",
    "load_config",
    "config_digest",
]


@dataclass(frozen=True)
class OptimizerConfig:
    enabled: bool = False
    starts: int = 16
    margin: float = 1e-6
    max_iterations: int = 400
    tolerance: float = 1e-10
    seed: int = 20230401


@dataclass(frozen=True)
class AuditSettings:
    reduction_threshold: float = 0.93
    distance_step_km: float = 5.0
    extra_mu_out: tuple = ()

    def __post_init__(self):
        if not 0.0 <= self.reduction_threshold <= 1.0:
            raise ConfigError("reduction_threshold must be in [0, 1]")
        if self.distance_step_km <= 0:
            raise ConfigError("distance_step_km must be positive")


@dataclass(frozen=True)
class AuditConfig:
    band: Band
    case: AttackCase
    filter_name: str
    chain: tuple              # of (component_name, swapped) pairs
    budget: EveBudget
    system: SystemParams
    protocol_name: str        # "bb84" or "mdi"
    protocol: object          # Bb84Params or MdiParams
    leakage_model: str = DEFAULT_MODEL
    audit: AuditSettings = field(default_factory=AuditSettings)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    emission_file: str | None = None
    base_dir: str = "."
    raw: dict = field(default_factory=dict, repr=False)

    def resolve_emission_path(self) -> str | None:
        if self.emission_file is None:
            return None
        if os.path.isabs(self.emission_file):
            return self.emission_file
        return os.path.join(self.base_dir, self.emission_file)


def _require(data: dict, key: str, context: str):
    if key not in data:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return data[key]


def _parse_chain(entries) -> tuple:
    chain = []
    for entry in entries:
        if isinstance(entry, str):
            name, _, flag = entry.partition(":")
            if flag not in ("", "swapped"):
                raise ConfigError(f"chain entry {entry!r}: unknown modifier "
                                  f"{flag!r} (only 'swapped' is supported)")
            chain.append((name, flag == "swapped"))
        elif isinstance(entry, dict):
            name = _require(entry, "component", "chain entry")
            swapped = bool(entry.get("swapped", False))
            repeat = int(entry.get("repeat", 1))
            if repeat < 1:
                raise ConfigError(f"chain entry {name!r}: repeat must be >= 1")
            chain.extend([(name, swapped)] * repeat)
        else:
            raise ConfigError(f"chain entries must be strings or objects, "
                              f"got {type(entry).__name__}")
    return tuple(chain)


def _parse_protocol(data: dict):
    name = _require(data, "name", "protocol").lower()
    fields = {k: v for k, v in data.items() if k != "name"}
    try:
        if name == "bb84":
            return name, Bb84Params(**fields)
        if name == "mdi":
            return name, MdiParams(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"protocol: {exc}") from exc
    raise ConfigError(f"unknown protocol {name!r}; expected 'bb84' or 'mdi'")


def parse_config(data: dict, base_dir: str = ".") -> AuditConfig:
    try:
        band_raw = data.get("band", [400.0, 2300.0])
        band = Band(float(band_raw[0]), float(band_raw[1]))
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"band: {exc}") from exc
    case = AttackCase.parse(data.get("case", "round-trip"))
    filter_name = _require(data, "filter", "configuration")
    chain = _parse_chain(data.get("chain", []))

    system_raw = data.get("system", {})
    try:
        system = SystemParams(**system_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from exc

    budget_raw = data.get("budget", {})
    try:
        budget = EveBudget(
            photon_rate=float(budget_raw.get("photon_rate", 1.9e20)),
            max_cw_power=float(budget_raw.get("max_cw_power_w", 15.6)),
            clock_rate=system.clock_hz,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"budget: {exc}") from exc

    protocol_name, protocol = _parse_protocol(_require(data, "protocol",
                                                       "configuration"))

    model = data.get("leakage_model", DEFAULT_MODEL)
    if model not in available_models():
        raise ConfigError(f"unknown leakage model {model!r}; available: "
                          f"{available_models()}")

    audit_raw = dict(data.get("audit", {}))
    audit_raw["extra_mu_out"] = tuple(float(x)
                                      for x in audit_raw.get("extra_mu_out", ()))
    try:
        audit = AuditSettings(**audit_raw)
    except TypeError as exc:
        raise ConfigError(f"audit: {exc}") from exc

    try:
        optimizer = OptimizerConfig(**data.get("optimizer", {}))
    except TypeError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc

    return AuditConfig(
        band=band, case=case, filter_name=filter_name, chain=chain,
        budget=budget, system=system, protocol_name=protocol_name,
        protocol=protocol, leakage_model=model, audit=audit,
        optimizer=optimizer, emission_file=data.get("emission_file"),
        base_dir=base_dir, raw=data,
    )


def load_config(path) -> AuditConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(f"configuration file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data, base_dir=os.path.dirname(os.path.abspath(path)))


def config_digest(config: AuditConfig) -> str:
    canonical = json.dumps(config.raw, sort_keys=True,
                           separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()
