"""Turn raw testbench scans into calibrated component transmittance records.

A component is characterised by scanning the light source through a patchcord
(the reference), then through the device under test.  In logarithmic flux
units the transmittance is the difference of the two scans.  Wherever the
device attenuates more than the instrument can resolve, the record is clamped
to the measurement floor, which deliberately overstates the transmittance:
the audit must assume the eavesdropper sees more light than we could measure.

Records persist as one directory per component holding a ``manifest.txt``
(UTF-8 ``key=value`` lines) plus plain CSV spectrum files, so a library is
diff-able and carries no binary dependencies.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import BandCoverageError, ParseError, SchemaError, UnitError
from .spectral import (
    Spectrum,
    Unit,
    read_spectrum,
    read_xy,
    resample,
    upper_envelope,
    write_spectrum,
    write_xy,
    _finest_grid_within,
    _intersection_band,
)

__all__ = [
    "ScanPair",
    "ComponentRecord",
    "transmittance_from_scans",
    "dynamic_range",
    "clamp_to_floor",
    "save_component",
    "load_component",
    "build_record",
]

MANIFEST_NAME = "manifest.txt"
MASK_HEADER = "wavelength_nm,clamped"


@dataclass(frozen=True)
class ScanPair:
    """One transmittance measurement: reference scan, DUT scan, dark noise."""

    source_scan: Spectrum
    dut_scan: Spectrum
    noise: Spectrum

    def __post_init__(self):
        for name in ("source_scan", "dut_scan", "noise"):
            s = getattr(self, name)
            if s.unit is not Unit.DBM_FLUX:
                raise UnitError(f"{name} must be a dBm flux scan, got {s.unit.value}")
        _intersection_band([self.source_scan, self.dut_scan, self.noise])


@dataclass(frozen=True)
class ComponentRecord:
    """Direction-resolved transmittance of one optical component.

    ``inward`` is the transmittance seen by light travelling from the quantum
    channel towards the target, ``outward`` the reverse.  ``clamped_mask``
    marks samples where the noise-floor substitution fired in either
    direction.  Values above 0 dB are preserved as measured (useful when
    debugging a scan) and only treated as 0 dB during channel composition.
    """

    name: str
    inward: Spectrum
    outward: Spectrum
    clamped_mask: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        mask = np.array(self.clamped_mask, dtype=bool)
        object.__setattr__(self, "clamped_mask", mask)
        if self.inward.unit is not Unit.DB or self.outward.unit is not Unit.DB:
            raise UnitError("component spectra must be dB transmittance")
        if not np.array_equal(self.inward.grid, self.outward.grid):
            raise SchemaError(f"component {self.name!r}: inward and outward "
                              f"spectra must share one grid")
        if mask.size != self.inward.grid.size:
            raise SchemaError(f"component {self.name!r}: clamped_mask length "
                              f"{mask.size} != grid length {self.inward.grid.size}")
        mask.flags.writeable = False

    @property
    def clamped_fraction(self) -> float:
        return float(np.mean(self.clamped_mask))

    def swapped(self) -> "ComponentRecord":
        """The same part traversed the other way round (circulator port pairs)."""
        return ComponentRecord(self.name, self.outward, self.inward,
                               self.clamped_mask, self.metadata)


def transmittance_from_scans(pair: ScanPair) -> Spectrum:
    """DUT flux minus source flux, pointwise in dB, on the common grid."""
    band = _intersection_band([pair.source_scan, pair.dut_scan])
    grid = _finest_grid_within([pair.source_scan, pair.dut_scan], band)
    dut = resample(pair.dut_scan, grid)
    src = resample(pair.source_scan, grid)
    return Spectrum(grid, dut.values - src.values, Unit.DB, _skip_checks=True)


def dynamic_range(source_scan: Spectrum, noise_env: Spectrum) -> Spectrum:
    """Maximum measurable attenuation: source flux minus noise envelope (dB)."""
    for s in (source_scan, noise_env):
        if s.unit is not Unit.DBM_FLUX:
            raise UnitError(f"dynamic_range expects dBm flux scans, got {s.unit.value}")
    band = _intersection_band([source_scan, noise_env])
    grid = _finest_grid_within([source_scan, noise_env], band)
    src = resample(source_scan, grid)
    env = resample(noise_env, grid)
    return Spectrum(grid, src.values - env.values, Unit.DB, _skip_checks=True)


def clamp_to_floor(measured: Spectrum, dyn_range: Spectrum):
    """Replace unmeasurably low transmittance by the instrument floor.

    Wherever the measured attenuation exceeds the dynamic range the sample is
    raised to ``-range`` and flagged.  The output is >= the input everywhere,
    so downstream security numbers can only get worse, never better.

    Returns ``(clamped: Spectrum, mask: ndarray[bool])``.
    """
    if measured.unit is not Unit.DB or dyn_range.unit is not Unit.DB:
        raise UnitError("clamp_to_floor operates on dB spectra")
    band = _intersection_band([measured, dyn_range])
    grid = _finest_grid_within([measured, dyn_range], band)
    meas = resample(measured, grid)
    rng = resample(dyn_range, grid)
    floor = -rng.values
    mask = meas.values <= floor
    values = np.where(mask, floor, meas.values)
    return Spectrum(grid, values, Unit.DB, _skip_checks=True), mask


def build_record(name: str,
                 inward_pair: ScanPair,
                 outward_pair: ScanPair | None = None,
                 envelope_window_nm: float = 10.0,
                 metadata: dict | None = None) -> ComponentRecord:
    """Full ingestion pipeline for one component.

    Computes the noise envelope and dynamic range from the inward pair's
    source scan, derives clamped transmittance per direction, and marks a
    sample clamped when the substitution fired in either direction.  With no
    outward pair the part is taken as reciprocal (outward = inward).
    """
    env = upper_envelope(inward_pair.noise, envelope_window_nm)
    rng = dynamic_range(inward_pair.source_scan, env)
    inward, mask_in = clamp_to_floor(transmittance_from_scans(inward_pair), rng)
    if outward_pair is None:
        outward, mask_out = inward, mask_in
    else:
        env_out = upper_envelope(outward_pair.noise, envelope_window_nm)
        rng_out = dynamic_range(outward_pair.source_scan, env_out)
        raw_out, _ = clamp_to_floor(transmittance_from_scans(outward_pair), rng_out)
        outward_s = resample(raw_out, inward.grid)
        rng_on_grid = resample(rng_out, inward.grid)
        outward, mask_out = clamp_to_floor(outward_s, rng_on_grid)
    mask = mask_in | mask_out
    return ComponentRecord(name, inward, outward, mask, dict(metadata or {}))


# -- persistence -----------------------------------------------------------


def _write_manifest(path, entries: dict) -> None:
    lines = [f"{key}={entries[key]}" for key in entries]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_manifest(path) -> dict:
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(path, line_no, f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


_RESERVED_KEYS = ("name", "inward_file", "outward_file", "mask_file", "unit")


def save_component(record: ComponentRecord, directory) -> str:
    """Persist a record as ``directory/<manifest + spectrum files>``.

    Round trip is lossless for grids, values, masks and metadata.  A
    reciprocal part (outward is the same object as inward) writes a single
    spectrum file referenced twice.
    """
    os.makedirs(directory, exist_ok=True)
    reciprocal = record.outward is record.inward or record.outward == record.inward
    write_spectrum(os.path.join(directory, "inward.csv"), record.inward)
    outward_file = "inward.csv"
    if not reciprocal:
        write_spectrum(os.path.join(directory, "outward.csv"), record.outward)
        outward_file = "outward.csv"
    write_xy(os.path.join(directory, "clamped.csv"), record.inward.grid,
             record.clamped_mask.astype(float), MASK_HEADER)
    entries = {
        "name": record.name,
        "inward_file": "inward.csv",
        "outward_file": outward_file,
        "mask_file": "clamped.csv",
        "unit": Unit.DB.value,
    }
    for key in sorted(record.metadata):
        if key in _RESERVED_KEYS:
            raise SchemaError(f"metadata key {key!r} collides with a manifest field")
        entries[key] = record.metadata[key]
    _write_manifest(os.path.join(directory, MANIFEST_NAME), entries)
    return os.path.join(directory, MANIFEST_NAME)


def load_component(directory) -> ComponentRecord:
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise SchemaError(f"no {MANIFEST_NAME} in {directory}")
    entries = _read_manifest(manifest_path)
    for required in ("name", "inward_file", "outward_file"):
        if required not in entries:
            raise SchemaError(f"{manifest_path}: manifest missing {required!r}")
    unit = Unit.parse(entries.get("unit", Unit.DB.value))
    inward = read_spectrum(os.path.join(directory, entries["inward_file"]), unit)
    if entries["outward_file"] == entries["inward_file"]:
        outward = inward
    else:
        outward = read_spectrum(os.path.join(directory, entries["outward_file"]), unit)
    if "mask_file" in entries:
        grid, flags = read_xy(os.path.join(directory, entries["mask_file"]),
                              expected_header=MASK_HEADER)
        if not np.array_equal(grid, inward.grid):
            raise SchemaError(f"{directory}: clamp mask grid differs from spectrum grid")
        mask = flags != 0.0
    else:
        mask = np.zeros(inward.grid.size, dtype=bool)
    metadata = {k: v for k, v in entries.items() if k not in _RESERVED_KEYS}
    return ComponentRecord(entries["name"], inward, outward, mask, metadata)
