"""Command-line interface.

Subcommands::

    widespec transmittance   ingest a scan pair into the component library
    widespec envelope        noise-ceiling extraction from a dark scan
    widespec compose         attack-channel transmittance for a configuration
    widespec keyrate         key-rate curves for a list of leak strengths
    widespec audit           full audit with pass/fail exit code
    widespec make-fixtures   write the synthetic demo library and configs

Exit codes: 0 pass, 1 threshold fail, 2 configuration error, 3 I/O error.
All state flows through flags and files; no environment variables.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from .bb84 import Bb84Params
from .channel import (
    AttackCase,
    backflash_mu_leak,
    compose,
    margin_orders,
    power_at_target,
    trojan_mu_out,
    worst_case,
)
from .config import load_config
from .errors import (
    AuditError,
    BandCoverageError,
    ComponentResolutionError,
    ConfigError,
    DegenerateEnvelopeError,
    DegenerateYieldError,
    DomainError,
    InfeasibleStartError,
    ParseError,
    SchemaError,
    SpectrumRangeError,
    UnitError,
)
from .fixtures import (
    backflash_emission,
    demo_library,
    isolator,
    noise_scan,
    source_scan,
)
from .ingestion import ScanPair, build_record, save_component
from .leakage import LeakageParams
from .mdi import MdiParams
from .optimize import OptimizerSettings, bb84_problem, mdi_problem, optimize_along_distance
from .plots import save_keyrate_figure, save_spectrum_figure
from .report import (
    build_channel_spec,
    compute_curve,
    protocol_max_distance,
    run_audit,
)
from .spectral import (
    Band,
    Spectrum,
    Unit,
    read_spectrum,
    upper_envelope,
    write_spectrum,
)

_CONFIG_ERRORS = (ConfigError, SchemaError, DomainError, UnitError,
                  BandCoverageError, ComponentResolutionError,
                  SpectrumRangeError, DegenerateEnvelopeError,
                  DegenerateYieldError, InfeasibleStartError)
_IO_ERRORS = (ParseError, FileNotFoundError, IsADirectoryError,
              PermissionError, OSError)


def handled(fn):
    """Map package errors onto the stable exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _CONFIG_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except _IO_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except AuditError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _parse_band(text: str | None) -> Band | None:
    if text is None:
        return None
    try:
        lo, _, hi = text.partition(":")
        return Band(float(lo), float(hi))
    except ValueError as exc:
        raise ConfigError(f"--band expects LO:HI in nm, got {text!r}") from exc


def _parse_distances(text: str):
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--distances expects LO:HI:STEP, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ConfigError("--distances requires STEP > 0 and HI >= LO")
    n = int(round((hi - lo) / step)) + 1
    return [lo + i * step for i in range(n)]


def _parse_float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated number list, got {text!r}") from exc


@click.group()
@click.version_option(version="0.1.0", prog_name="widespec")
def main():
    """Wide-spectrum attack audit toolkit for QKD optical schemes."""


@main.command()
@click.argument("source_scan", type=click.Path(exists=True, dir_okay=False))
@click.argument("dut_scan", type=click.Path(exists=True, dir_okay=False))
@click.argument("noise_scan", type=click.Path(exists=True, dir_okay=False))
@click.option("--name", required=True, help="Component name in the library.")
@click.option("--library", required=True, type=click.Path(file_okay=False),
              help="Component library directory.")
@click.option("--dut-outward", type=click.Path(exists=True, dir_okay=False),
              default=None, help="DUT scan for the outward direction "
                                 "(default: part is reciprocal).")
@click.option("--window", default=10.0, show_default=True,
              help="Envelope window (nm).")
@handled
def transmittance(source_scan, dut_scan, noise_scan, name, library,
                  dut_outward, window):
    """Turn SOURCE/DUT/NOISE scans into a clamped library component."""
    src = read_spectrum(source_scan, Unit.DBM_FLUX)
    noise = read_spectrum(noise_scan, Unit.DBM_FLUX)
    inward = ScanPair(src, read_spectrum(dut_scan, Unit.DBM_FLUX), noise)
    outward = None
    if dut_outward is not None:
        outward = ScanPair(src, read_spectrum(dut_outward, Unit.DBM_FLUX), noise)
    record = build_record(name, inward, outward, envelope_window_nm=window)
    directory = os.path.join(library, name)
    save_component(record, directory)
    fraction = record.clamped_fraction
    click.echo(f"{name}: wrote {directory} (clamped fraction {fraction:.4f})")
    if fraction >= 1.0:
        click.echo("warning: device is below the noise floor at every "
                   "wavelength; the record is entirely instrument-limited",
                   err=True)


@main.command()
@click.argument("noise_scan", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Output CSV path.")
@click.option("--window", default=10.0, show_default=True,
              help="Envelope window (nm).")
@click.option("--figures/--no-figures", default=True, show_default=True)
@handled
def envelope(noise_scan, out, window, figures):
    """Smoothed upper envelope of an analyser dark-noise scan."""
    noise = read_spectrum(noise_scan, Unit.DBM_FLUX)
    env = upper_envelope(noise, window)
    write_spectrum(out, env)
    click.echo(f"wrote {out}")
    if figures:
        png = os.path.splitext(out)[0] + ".png"
        save_spectrum_figure(png, [("dark noise", noise), ("envelope", env)],
                             "Flux (dBm)", "Noise envelope")
        click.echo(f"wrote {png}")


@main.command(name="compose")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--library", required=True, type=click.Path(exists=True,
              file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--band", default=None, help="Override band as LO:HI (nm).")
@click.option("--threshold-w", default=None, type=float, multiple=True,
              help="Damage/effect threshold(s) in watts: prints the margin "
                   "in orders of magnitude (inject case).")
@click.option("--figures/--no-figures", default=True, show_default=True)
@handled
def compose_cmd(config_path, library, out, band, threshold_w, figures):
    """Compose the attack-channel transmittance for a configuration."""
    config = load_config(config_path)
    band_override = _parse_band(band)
    if band_override is not None:
        config = _with_band(config, band_override)
    os.makedirs(out, exist_ok=True)
    spec = build_channel_spec(library, config)
    gamma = compose(spec)
    path = os.path.join(out, "gamma.csv")
    write_spectrum(path, gamma)
    wl, db = worst_case(gamma, config.band)
    click.echo(f"wrote {path}")
    click.echo(f"worst wavelength: {wl:g} nm at {db:.2f} dB")
    gamma_lin = 10.0 ** (db / 10.0)
    if config.case is AttackCase.ROUND_TRIP:
        mu = trojan_mu_out(min(gamma_lin, 1.0), config.budget)
        click.echo(f"mu_out at worst wavelength: {mu:.6g}")
    elif config.case is AttackCase.INJECT:
        _, watts = power_at_target(spec, config.budget)
        click.echo(f"power at target: {watts:.6g} W")
        for thr in threshold_w:
            click.echo(f"margin vs {thr:g} W threshold: "
                       f"{margin_orders(watts, thr):.2f} orders")
    else:
        emission_path = config.resolve_emission_path()
        if emission_path is not None:
            emission = read_spectrum(emission_path, Unit.DENSITY_PER_NM)
            click.echo(f"mu_leak: {backflash_mu_leak(gamma, emission):.6g}")
    if figures:
        png = os.path.join(out, "gamma.png")
        save_spectrum_figure(png, [("", gamma)], "Transmittance (dB)",
                             f"Attack channel, {config.case.value}",
                             band=config.band)
        click.echo(f"wrote {png}")


def _with_band(config, band: Band):
    import dataclasses

    return dataclasses.replace(config, band=band)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", type=click.Choice(["bb84", "mdi"]), default=None,
              help="Override the configured protocol name.")
@click.option("--mu-out", "mu_out_list", default=None,
              help="Comma-separated mean reflected photon numbers.")
@click.option("--attenuation-db", "attenuation_list", default=None,
              help="Comma-separated Trojan attenuations (positive dB); "
                   "converted through the configured budget.")
@click.option("--distances", default="0:250:1", show_default=True,
              help="Distance grid LO:HI:STEP (km).")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--optimize", "optimize_flag", is_flag=True,
              help="Re-optimize protocol parameters at every distance "
                   "(slow; default uses the configured parameters).")
@click.option("--seed", default=None, type=int, help="Optimizer seed override.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@handled
def keyrate(config_path, protocol, mu_out_list, attenuation_list, distances,
            out, optimize_flag, seed, figures):
    """Key-rate curves for a list of leak strengths (baseline included)."""
    config = load_config(config_path)
    name = protocol or config.protocol_name
    if name != config.protocol_name:
        raise ConfigError(
            f"--protocol {name} does not match the configured protocol "
            f"parameters ({config.protocol_name}); edit the configuration")
    grid = _parse_distances(distances)
    mu_values = []
    if mu_out_list:
        mu_values += _parse_float_list(mu_out_list)
    if attenuation_list:
        for atten in _parse_float_list(attenuation_list):
            gamma_lin = 10.0 ** (-abs(atten) / 10.0)
            mu_values.append(trojan_mu_out(gamma_lin, config.budget))
    mu_values = [0.0] + [m for m in mu_values if m > 0.0]

    os.makedirs(out, exist_ok=True)
    sys_params = config.system
    params = config.protocol
    curves = []
    summary = ["label,mu_out,max_distance_km,reduction_percent"]
    baseline_dist = None
    for i, mu_out in enumerate(mu_values):
        label = "baseline" if i == 0 else f"mu_{i}"
        leak = LeakageParams(mu_out, config.leakage_model)
        if optimize_flag:
            rates, dist = _optimized_curve(config, name, leak, grid, seed)
        else:
            rates = compute_curve(name, sys_params, params, leak, grid)
            dist = protocol_max_distance(name, sys_params, params, leak)
        if baseline_dist is None:
            baseline_dist = dist
        reduction = 100.0 * min(dist / baseline_dist, 1.0) if baseline_dist else 0.0
        csv_path = os.path.join(out, f"keyrate_{label}.csv")
        _write_curve(csv_path, grid, rates)
        summary.append(f"{label},{repr(mu_out)},{repr(dist)},{repr(reduction)}")
        curves.append((f"{label} (mu_out={mu_out:.3g})", grid, rates))
        click.echo(f"{label}: mu_out={mu_out:.3g} max_distance={dist:.2f} km "
                   f"reduction={reduction:.2f}%")
    summary_path = os.path.join(out, "summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(summary) + "\n")
    click.echo(f"wrote {summary_path}")
    if figures:
        png = os.path.join(out, "keyrate.png")
        save_keyrate_figure(png, curves, f"{name} key rate")
        click.echo(f"wrote {png}")


def _optimized_curve(config, name, leak, grid, seed):
    settings = OptimizerSettings(starts=config.optimizer.starts,
                                 margin=config.optimizer.margin,
                                 max_iterations=config.optimizer.max_iterations,
                                 tolerance=config.optimizer.tolerance,
                                 seed=config.optimizer.seed if seed is None else seed)
    omega = config.protocol.omega
    if name == "bb84":
        def factory(d):
            return bb84_problem(d, config.system, leak, omega=omega,
                                margin=config.optimizer.margin)
    else:
        def factory(d):
            return mdi_problem(d, config.system, leak, omega=omega,
                               margin=config.optimizer.margin)
    points = optimize_along_distance(factory, grid, settings=settings)
    rates = [value for _, _, value in points]
    # Max distance from the best parameters at the last positive grid point.
    best_params = None
    for _, params, value in points:
        if value > 0:
            best_params = params
    if best_params is None:
        return rates, 0.0
    if name == "bb84":
        proto = Bb84Params(mu=best_params[0], nu=best_params[1], omega=omega,
                           p_mu=best_params[2], p_nu=best_params[3],
                           p_z=best_params[4])
    else:
        proto = MdiParams(s=best_params[0], mu=best_params[1],
                          nu=best_params[2], omega=omega,
                          p_s=best_params[3], p_mu=best_params[4],
                          p_nu=best_params[5])
    dist = protocol_max_distance(name, config.system, proto, leak)
    return rates, dist


def _write_curve(path, distances, rates):
    lines = ["distance_km,rate_bits_per_pulse"]
    lines.extend(f"{repr(float(d))},{repr(float(r))}"
                 for d, r in zip(distances, rates))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--library", required=True, type=click.Path(exists=True,
              file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=None, type=int, help="Optimizer seed override.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@handled
def audit(config_path, library, out, seed, figures):
    """Full audit; exit 0 iff the reduction threshold is met."""
    config = load_config(config_path)
    if seed is not None:
        import dataclasses

        config = dataclasses.replace(
            config, optimizer=dataclasses.replace(config.optimizer, seed=seed))
    report, passed = run_audit(config, library, out, figures=figures)
    click.echo(f"wrote {os.path.join(out, 'report.json')}")
    gamma = report["gamma"]
    click.echo(f"worst wavelength: {gamma['worst_wavelength_nm']:g} nm at "
               f"{gamma['worst_transmittance_db']:.2f} dB")
    if "threshold" in report:
        thr = report["threshold"]
        click.echo(f"reduction {100 * thr['achieved_reduction']:.2f}% vs "
                   f"threshold {100 * thr['reduction_threshold']:.2f}% -> "
                   f"{'PASS' if thr['passed'] else 'FAIL'}")
    if not passed:
        sys.exit(1)


@main.command(name="make-fixtures")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@handled
def make_fixtures(out):
    """Write the synthetic demo library, scans, and audit configurations."""
    library = os.path.join(out, "library")
    for record in demo_library().values():
        save_component(record, os.path.join(library, record.name))
    write_spectrum(os.path.join(out, "emission.csv"), backflash_emission())
    src = source_scan()
    write_spectrum(os.path.join(out, "scan_source.csv"), src)
    write_spectrum(os.path.join(out, "scan_noise.csv"), noise_scan())
    dut = Spectrum(src.grid, src.values + isolator().inward.values,
                   Unit.DBM_FLUX)
    write_spectrum(os.path.join(out, "scan_dut.csv"), dut)

    base = {
        "band": [400.0, 2300.0],
        "case": "round-trip",
        "filter": "fiber_coil",
        "budget": {"photon_rate": 1.9e20, "max_cw_power_w": 15.6},
        "system": {"alpha_db_km": 0.2, "clock_hz": 1.25e9,
                   "background_rate": 8e-8, "misalignment": 0.02,
                   "detector_eff": 0.38, "ec_inefficiency": 1.16},
        "leakage_model": "randomized-coherent",
        "audit": {"reduction_threshold": 0.93, "distance_step_km": 5.0},
    }
    bb84 = {"name": "bb84", "mu": 0.6, "nu": 0.1, "omega": 0.0,
            "p_mu": 0.5, "p_nu": 0.25, "p_z": 0.9}
    mdi = {"name": "mdi", "s": 0.4, "mu": 0.3, "nu": 0.05, "omega": 0.0,
           "p_s": 0.5, "p_mu": 0.25, "p_nu": 0.125}
    chain_bare = ["voa_9v", "voa_10v", "isolator", "isolator", "isolator"]
    configs = {
        "config_a.json": dict(base, chain=chain_bare, protocol=bb84),
        "config_b.json": dict(base, chain=chain_bare + ["dwdm"], protocol=bb84),
        "config_c.json": dict(base, chain=chain_bare + ["fbg_filter"],
                              protocol=bb84),
        "config_c_mdi.json": dict(base,
                                  chain=chain_bare + ["isolator", "fbg_filter"],
                                  protocol=mdi),
        "config_inject.json": dict(base, case="inject", chain=chain_bare,
                                   protocol=bb84),
        "config_emit.json": dict(base, case="emit", chain=chain_bare,
                                 protocol=bb84, emission_file="emission.csv"),
    }
    for name, cfg in configs.items():
        with open(os.path.join(out, name), "w", encoding="utf-8",
                  newline="\n") as fh:
            json.dump(cfg, fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(f"wrote demo library and configurations under {out}")


if __name__ == "__main__":
    main()
