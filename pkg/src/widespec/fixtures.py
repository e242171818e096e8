"""Synthetic component spectra for demos and end-to-end tests.

No measured component data ships with this package; these generators mimic
the qualitative wide-spectrum behaviour of the usual source-protection
parts instead:

* isolators isolate well near 1550 nm but lose tens of dB of isolation in
  the 1050-1300 nm window and towards the band edges;
* MEMS attenuators hold their set attenuation near 1550 nm and fade towards
  long wavelengths;
* a DWDM behaves as designed only inside 1400-1650 nm and turns into a
  leaky, erratic filter outside it;
* a grating-based filter attenuates heavily across 750-2270 nm in both
  directions apart from one narrow forward pass peak at 1550 nm;
* a tightly coiled fiber passes the telecom band and cuts long wavelengths.

Chain orientation: ``inward`` is the direction from the quantum channel
towards the protected modulators, which for an isolator is its blocking
(reverse) direction.

Everything is deterministic; the only randomness (the DWDM's out-of-band
chaos, scan noise) comes from seeded generators.
"""

from __future__ import annotations

import numpy as np

from .ingestion import ComponentRecord
from .spectral import Band, DEFAULT_BAND, Spectrum, Unit

__all__ = [
    "default_grid",
    "isolator",
    "mems_voa",
    "dwdm",
    "fbg_filter",
    "fiber_coil",
    "source_scan",
    "noise_scan",
    "backflash_emission",
    "demo_library",
]


def default_grid(band: Band = DEFAULT_BAND, step_nm: float = 1.0) -> np.ndarray:
    n = int(round((band.hi - band.lo) / step_nm)) + 1
    return band.lo + step_nm * np.arange(n)


def _bump(grid, center, width, height):
    return height * np.exp(-((grid - center) / width) ** 2)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _record(name, grid, inward_db, outward_db=None, **metadata) -> ComponentRecord:
    inward = Spectrum(grid, inward_db, Unit.DB)
    outward = inward if outward_db is None else Spectrum(grid, outward_db, Unit.DB)
    mask = np.zeros(grid.size, dtype=bool)
    meta = {"origin": "synthetic-fixture"}
    meta.update({k: str(v) for k, v in metadata.items()})
    return ComponentRecord(name, inward, outward, mask, meta)


def isolator(name: str = "isolator", grid: np.ndarray | None = None,
             working_isolation_db: float = 60.0,
             dip_isolation_db: float = 14.0) -> ComponentRecord:
    """Polarisation-insensitive isolator oriented to block inward light.

    Reverse (inward) isolation peaks near 1550 nm and collapses inside the
    1050-1300 nm window, centred at 1200 nm; forward (outward) insertion
    loss is small near 1550 nm and grows away from it.
    """
    grid = default_grid() if grid is None else grid
    reverse = np.full(grid.size, -working_isolation_db)
    reverse += _bump(grid, 1200.0, 80.0, working_isolation_db - dip_isolation_db)
    reverse += _bump(grid, 2250.0, 160.0, 30.0)
    reverse += _bump(grid, 430.0, 120.0, 25.0)
    reverse = np.minimum(reverse, -1.0)
    forward = -0.5 - 6.0 * ((grid - 1550.0) / 950.0) ** 2
    return _record(name, grid, reverse, forward,
                   kind="isolator", resolution_nm="1")


def mems_voa(name: str = "voa", set_attenuation_db: float = 13.0,
             grid: np.ndarray | None = None) -> ComponentRecord:
    """MEMS variable attenuator: holds its setting near 1550 nm, fades to a
    few dB of residual attenuation at long wavelengths."""
    grid = default_grid() if grid is None else grid
    residual = 2.5
    atten = set_attenuation_db + (residual - set_attenuation_db) * _sigmoid(
        (grid - 1850.0) / 140.0)
    values = -np.maximum(atten, residual)
    return _record(name, grid, values, None,
                   kind="mems-voa", setting_db=set_attenuation_db,
                   resolution_nm="1")


def dwdm(name: str = "dwdm", grid: np.ndarray | None = None,
         seed: int = 71) -> ComponentRecord:
    """Thin-film add/drop multiplexer, pass port.

    Designed behaviour inside 1400-1650 nm (one low-loss channel at
    1550 nm, strong rejection elsewhere); erratic and generally high
    transmission outside the working range.
    """
    grid = default_grid() if grid is None else grid
    rng = np.random.default_rng(seed)
    in_band = (grid >= 1400.0) & (grid <= 1650.0)
    values = np.where(np.abs(grid - 1550.0) <= 1.0, -0.8, -35.0)
    chaos = -7.0 + 4.0 * np.sin(grid / 37.0) + rng.normal(0.0, 2.0, grid.size)
    values = np.where(in_band, values, np.minimum(chaos, -1.0))
    return _record(name, grid, values, None, kind="dwdm", resolution_nm="1")


def fbg_filter(name: str = "fbg_filter", grid: np.ndarray | None = None,
               stopband_db: float = 45.0) -> ComponentRecord:
    """Grating-plus-circulator bandpass filter.

    Attenuation beyond ``stopband_db`` across 750-2270 nm in both
    directions, with a single narrow forward transmission peak at 1550 nm;
    the suppression relaxes outside the grating's working window.
    """
    grid = default_grid() if grid is None else grid
    deep = (grid >= 750.0) & (grid <= 2270.0)
    base = np.where(deep, -stopband_db, -15.0)
    edge = _bump(grid, 700.0, 60.0, 10.0) + _bump(grid, 2290.0, 60.0, 10.0)
    reverse = np.minimum(base + edge, -8.0)
    forward = np.maximum(reverse, -stopband_db)
    peak = (stopband_db - 1.0) * np.exp(-((grid - 1550.0) / 1.2) ** 2)
    forward = np.minimum(forward + peak, -1.0)
    return _record(name, grid, reverse, forward,
                   kind="fbg-filter", resolution_nm="1")


def fiber_coil(name: str = "fiber_coil", grid: np.ndarray | None = None,
               cutoff_nm: float = 2000.0) -> ComponentRecord:
    """Small-radius fiber coil: transparent through the telecom band, steep
    bend loss past the cutoff wavelength.  Used as the broadband physical
    filter in the demo configurations."""
    grid = default_grid() if grid is None else grid
    loss = 0.05 + 42.0 * _sigmoid((grid - cutoff_nm) / 70.0)
    return _record(name, grid, -loss, None, kind="fiber-coil",
                   resolution_nm="1")


def source_scan(grid: np.ndarray | None = None) -> Spectrum:
    """Supercontinuum-style reference scan in dBm per resolution bandwidth."""
    grid = default_grid() if grid is None else grid
    flux = -10.0 - 16.0 * ((grid - 1350.0) / 950.0) ** 2
    return Spectrum(grid, flux, Unit.DBM_FLUX)


def noise_scan(grid: np.ndarray | None = None, level_dbm: float = -88.0,
               jitter_db: float = 1.5, seed: int = 13) -> Spectrum:
    """Analyser dark-noise scan with seeded jitter."""
    grid = default_grid() if grid is None else grid
    rng = np.random.default_rng(seed)
    values = level_dbm + rng.normal(0.0, jitter_db, grid.size)
    return Spectrum(grid, values, Unit.DBM_FLUX)


def backflash_emission(total_mass: float = 0.1,
                       grid: np.ndarray | None = None) -> Spectrum:
    """Broad avalanche-emission probability density, normalised to
    ``total_mass`` photons per detection event over the grid."""
    grid = default_grid() if grid is None else grid
    shape = np.exp(-((grid - 1150.0) / 260.0) ** 2)
    mass = np.trapezoid(shape, grid)
    return Spectrum(grid, shape * (total_mass / mass), Unit.DENSITY_PER_NM)


def demo_library() -> dict:
    """The component set used by the demo configurations and tests."""
    parts = [
        isolator(),
        mems_voa("voa_9v", 13.0),
        mems_voa("voa_10v", 18.0),
        dwdm(),
        fbg_filter(),
        fiber_coil(),
    ]
    return {p.name: p for p in parts}
