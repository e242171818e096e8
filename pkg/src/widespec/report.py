"""Audit orchestration: compose, locate the worst wavelength, quantify the
attack, sweep key rates, and write the report bundle.

Outputs are a JSON report plus CSVs (spectra and key-rate curves) with PNG
siblings.  Runs are deterministic: identical inputs and seed produce
byte-identical reports, so a certification workflow can diff them.
"""

from __future__ import annotations

import json
import os

from .bb84 import Bb84Params, key_rate, max_distance
from .channel import (
    AttackCase,
    AttackChannelSpec,
    ChainLink,
    backflash_mu_leak,
    compose,
    power_at_target,
    trojan_mu_out,
    worst_case,
)
from .config import AuditConfig, config_digest
from .errors import ComponentResolutionError
from .ingestion import load_component
from .leakage import LeakageParams
from .mdi import MdiParams, mdi_key_rate, mdi_max_distance
from .optimize import (
    OptimizerSettings,
    bb84_problem,
    mdi_problem,
    optimize,
)
from .plots import save_keyrate_figure, save_spectrum_figure
from .spectral import Spectrum, Unit, read_spectrum, write_spectrum

__all__ = [
    "resolve_chain",
    "build_channel_spec",
    "protocol_rate",
    "protocol_max_distance",
    "compute_curve",
    "run_audit",
]


def resolve_chain(library_dir: str, config: AuditConfig):
    """Load the filter and chain records named by the configuration."""
    cache = {}

    def load(name: str):
        if name not in cache:
            path = os.path.join(library_dir, name)
            if not os.path.isdir(path):
                raise ComponentResolutionError(
                    f"component {name!r} not found in library {library_dir}")
            cache[name] = load_component(path)
        return cache[name]

    filt = load(config.filter_name)
    links = [ChainLink(load(name), swapped) for name, swapped in config.chain]
    return filt, links


def build_channel_spec(library_dir: str, config: AuditConfig) -> AttackChannelSpec:
    filt, links = resolve_chain(library_dir, config)
    return AttackChannelSpec(filt, links, config.case, config.band)


def protocol_rate(protocol_name: str, distance_km, sys, params, leak):
    if protocol_name == "bb84":
        return key_rate(distance_km, sys, params, leak).rate
    return mdi_key_rate(distance_km, sys, params, leak).rate


def protocol_max_distance(protocol_name: str, sys, params, leak):
    if protocol_name == "bb84":
        return max_distance(sys, params, leak)
    return mdi_max_distance(sys, params, leak)


def compute_curve(protocol_name: str, sys, params, leak, distances):
    return [protocol_rate(protocol_name, d, sys, params, leak)
            for d in distances]


def _optimized_params(config: AuditConfig):
    """Replace the configured protocol parameters by ones optimized at zero
    distance without leak; curves then use this fixed set throughout."""
    settings = OptimizerSettings(starts=config.optimizer.starts,
                                 margin=config.optimizer.margin,
                                 max_iterations=config.optimizer.max_iterations,
                                 tolerance=config.optimizer.tolerance,
                                 seed=config.optimizer.seed)
    leak0 = LeakageParams(0.0, config.leakage_model)
    if config.protocol_name == "bb84":
        problem = bb84_problem(0.0, config.system, leak0,
                               omega=config.protocol.omega,
                               margin=config.optimizer.margin)
        x, _ = optimize(problem, config.optimizer.seed, settings)
        return Bb84Params(mu=x[0], nu=x[1], omega=config.protocol.omega,
                          p_mu=x[2], p_nu=x[3], p_z=x[4])
    problem = mdi_problem(0.0, config.system, leak0,
                          omega=config.protocol.omega,
                          margin=config.optimizer.margin)
    x, _ = optimize(problem, config.optimizer.seed, settings)
    return MdiParams(s=x[0], mu=x[1], nu=x[2], omega=config.protocol.omega,
                     p_s=x[3], p_mu=x[4], p_nu=x[5])


def _params_dict(params) -> dict:
    if isinstance(params, Bb84Params):
        return {"mu": params.mu, "nu": params.nu, "omega": params.omega,
                "p_mu": params.p_mu, "p_nu": params.p_nu, "p_z": params.p_z}
    return {"s": params.s, "mu": params.mu, "nu": params.nu,
            "omega": params.omega, "p_s": params.p_s, "p_mu": params.p_mu,
            "p_nu": params.p_nu}


def _write_curve_csv(path, distances, rates) -> None:
    lines = ["distance_km,rate_bits_per_pulse"]
    lines.extend(f"{repr(float(d))},{repr(float(r))}"
                 for d, r in zip(distances, rates))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run_audit(config: AuditConfig, library_dir: str, out_dir: str,
              figures: bool = True):
    """Full audit: returns ``(report_dict, passed)`` and writes the bundle."""
    os.makedirs(out_dir, exist_ok=True)
    spec = build_channel_spec(library_dir, config)
    gamma = compose(spec)
    gamma_csv = os.path.join(out_dir, "gamma.csv")
    write_spectrum(gamma_csv, gamma)

    wl, db = worst_case(gamma, config.band)
    gamma_lin = 10.0 ** (db / 10.0)

    clamped = {link.record.name: link.record.clamped_fraction
               for link in spec.chain}
    clamped[spec.filter.name] = spec.filter.clamped_fraction

    report = {
        "config_digest": config_digest(config),
        "band_nm": [config.band.lo, config.band.hi],
        "case": config.case.value,
        "components": {
            "filter": config.filter_name,
            "chain": [{"component": name, "swapped": swapped}
                      for name, swapped in config.chain],
        },
        "clamped_fraction": {
            "per_component": clamped,
            "worst": max(clamped.values()) if clamped else 0.0,
        },
        "gamma": {
            "csv": os.path.basename(gamma_csv),
            "worst_wavelength_nm": wl,
            "worst_transmittance_db": db,
        },
    }
    if figures:
        gamma_png = os.path.join(out_dir, "gamma.png")
        save_spectrum_figure(gamma_png, [("", gamma)],
                             "Transmittance (dB)",
                             f"Attack channel, {config.case.value}",
                             band=config.band)
        report["gamma"]["figure"] = os.path.basename(gamma_png)

    passed = True
    if config.case is AttackCase.ROUND_TRIP:
        mu_worst = trojan_mu_out(min(gamma_lin, 1.0), config.budget)
        report["attack_strength"] = {"mu_out": mu_worst}
        passed = _keyrate_section(config, report, mu_worst, out_dir, figures)
    elif config.case is AttackCase.INJECT:
        _, watts = power_at_target(spec, config.budget)
        report["attack_strength"] = {"power_w": watts,
                                     "power_wavelength_nm": wl}
    else:
        entry = {}
        emission_path = config.resolve_emission_path()
        if emission_path is not None:
            emission = read_spectrum(emission_path, Unit.DENSITY_PER_NM)
            entry["mu_leak"] = backflash_mu_leak(gamma, emission)
        report["attack_strength"] = entry

    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report, passed


def _keyrate_section(config: AuditConfig, report: dict, mu_worst: float,
                     out_dir: str, figures: bool) -> bool:
    params = config.protocol
    if config.optimizer.enabled:
        params = _optimized_params(config)
    sys = config.system

    baseline_leak = LeakageParams(0.0, config.leakage_model)
    d0 = protocol_max_distance(config.protocol_name, sys, params,
                               baseline_leak)
    step = config.audit.distance_step_km
    stop = max(d0, step)
    distances = [i * step for i in range(int(stop / step) + 2)]

    entries = []
    mu_values = [("baseline", 0.0), ("worst_case", mu_worst)]
    mu_values += [(f"extra_{i}", m)
                  for i, m in enumerate(config.audit.extra_mu_out)]
    figure_curves = []
    for label, mu_out in mu_values:
        leak = LeakageParams(mu_out, config.leakage_model)
        dist = (d0 if mu_out == 0.0
                else protocol_max_distance(config.protocol_name, sys, params,
                                           leak))
        rates = compute_curve(config.protocol_name, sys, params, leak,
                              distances)
        csv_name = f"keyrate_{label}.csv"
        _write_curve_csv(os.path.join(out_dir, csv_name), distances, rates)
        reduction = min(dist / d0, 1.0) if d0 > 0 else 0.0
        entries.append({
            "label": label,
            "mu_out": mu_out,
            "csv": csv_name,
            "max_distance_km": dist,
            "reduction": reduction,
        })
        figure_curves.append((f"{label} (mu_out={mu_out:.3g})",
                              distances, rates))

    section = {
        "protocol": config.protocol_name,
        "parameters": _params_dict(params),
        "optimized": config.optimizer.enabled,
        "entries": entries,
    }
    if figures:
        png = os.path.join(out_dir, "keyrate.png")
        save_keyrate_figure(png, figure_curves,
                            f"{config.protocol_name} under Trojan leak")
        section["figure"] = os.path.basename(png)
    report["keyrate"] = section

    achieved = entries[1]["reduction"]
    threshold = config.audit.reduction_threshold
    report["threshold"] = {
        "reduction_threshold": threshold,
        "achieved_reduction": achieved,
        "passed": bool(achieved >= threshold),
    }
    return bool(achieved >= threshold)
