"""Immutable sampled spectra and the algebra the rest of the toolkit builds on.

A :class:`Spectrum` is a function of wavelength sampled on a strictly
ascending grid (nm).  The same carrier holds channel transmittance (dB or
linear), instrument flux (dBm) and photon-emission densities (1/nm), with
the unit tracked explicitly so that operations can refuse nonsensical
combinations.

Interpolation is linear in the spectrum's native unit.  For transmittance
that means linear-in-dB, which is how log-scale instrument data is read off
a plot; every numeric oracle in the test suite assumes the same convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    BandCoverageError,
    DegenerateEnvelopeError,
    ParseError,
    SpectrumRangeError,
    UnitError,
)

__all__ = [
    "Unit",
    "Band",
    "Spectrum",
    "DEFAULT_BAND",
    "resample",
    "sum_db",
    "upper_envelope",
    "stitch",
    "read_spectrum",
    "write_spectrum",
    "read_xy",
    "write_xy",
]


class Unit(enum.Enum):
    """Physical unit of the sampled values."""

    DB = "dB"
    LINEAR = "linear"
    DBM_FLUX = "dBm"
    DENSITY_PER_NM = "per-nm"

    @classmethod
    def parse(cls, text: str) -> "Unit":
        for u in cls:
            if u.value == text or u.name.lower() == text.lower():
                return u
        raise UnitError(f"unknown unit {text!r}; expected one of "
                        f"{[u.value for u in cls]}")


#: Units whose values live on a logarithmic scale.
_LOG_UNITS = (Unit.DB, Unit.DBM_FLUX)


@dataclass(frozen=True)
class Band:
    """A wavelength interval [lo, hi] in nm."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise ValueError(f"band requires lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, wavelength_nm: float) -> bool:
        return self.lo <= wavelength_nm <= self.hi

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}] nm"


#: Characterisation band used throughout: instruments cover 400-2300 nm.
DEFAULT_BAND = Band(400.0, 2300.0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """A sampled function of wavelength.

    Grids are strictly ascending, at least two points, finite and positive.
    Values are finite; linear and density units additionally require
    non-negative values.  Instances are immutable: the backing arrays are
    copied on construction and marked read-only, so spectra can be shared
    freely between threads.
    """

    grid: np.ndarray
    values: np.ndarray
    unit: Unit = Unit.DB
    _skip_checks: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if not self._skip_checks:
            self._validate()
        grid.flags.writeable = False
        values.flags.writeable = False

    def _validate(self):
        if self.grid.ndim != 1 or self.values.ndim != 1:
            raise ValueError("grid and values must be one-dimensional")
        if self.grid.size < 2:
            raise ValueError("a spectrum needs at least two samples")
        if self.grid.size != self.values.size:
            raise ValueError(
                f"grid has {self.grid.size} points but values has {self.values.size}")
        if not np.all(np.isfinite(self.grid)) or not np.all(self.grid > 0):
            raise ValueError("wavelengths must be finite and positive")
        if not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be strictly ascending")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.unit in (Unit.LINEAR, Unit.DENSITY_PER_NM) and np.any(self.values < 0):
            raise ValueError(f"{self.unit.value} values must be non-negative")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value: float, band: Band = DEFAULT_BAND,
                 unit: Unit = Unit.DB, points: int = 2) -> "Spectrum":
        grid = np.linspace(band.lo, band.hi, points)
        return cls(grid, np.full(points, float(value)), unit)

    def with_values(self, values: np.ndarray, unit: Unit | None = None) -> "Spectrum":
        return Spectrum(self.grid, values, self.unit if unit is None else unit)

    # -- unit conversion ------------------------------------------------------

    def to_linear(self) -> "Spectrum":
        """dB transmittance -> linear transmittance (10^(v/10))."""
        if self.unit is Unit.LINEAR:
            return self
        if self.unit is not Unit.DB:
            raise UnitError(f"cannot convert {self.unit.value} to linear transmittance")
        return Spectrum(self.grid, np.power(10.0, self.values / 10.0), Unit.LINEAR)

    def to_db(self) -> "Spectrum":
        """Linear transmittance -> dB (10*log10 v).  Requires values > 0."""
        if self.unit is Unit.DB:
            return self
        if self.unit is not Unit.LINEAR:
            raise UnitError(f"cannot convert {self.unit.value} to dB transmittance")
        if np.any(self.values <= 0):
            raise UnitError("linear values must be strictly positive to convert to dB")
        return Spectrum(self.grid, 10.0 * np.log10(self.values), Unit.DB)

    # -- geometry -------------------------------------------------------------

    @property
    def band(self) -> Band:
        return Band(float(self.grid[0]), float(self.grid[-1]))

    def covers(self, band: Band) -> bool:
        return self.grid[0] <= band.lo and self.grid[-1] >= band.hi

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (self.unit is other.unit
                and np.array_equal(self.grid, other.grid)
                and np.array_equal(self.values, other.values))


def resample(s: Spectrum, grid) -> Spectrum:
    """Interpolate ``s`` onto ``grid``, linearly in its native unit.

    The requested grid must lie within the sampled range; an out-of-range
    wavelength raises :class:`SpectrumRangeError` naming the offender.
    Exact at original grid points.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("requested grid must be a non-empty 1-d sequence")
    if not np.all(np.diff(grid) > 0):
        raise ValueError("requested grid must be strictly ascending")
    lo, hi = s.grid[0], s.grid[-1]
    if grid[0] < lo or grid[-1] > hi:
        bad = grid[0] if grid[0] < lo else grid[-1]
        raise SpectrumRangeError(
            f"wavelength {bad:g} nm outside sampled range [{lo:g}, {hi:g}] nm")
    if grid.size == s.grid.size and np.array_equal(grid, s.grid):
        return s
    values = np.interp(grid, s.grid, s.values)
    return Spectrum(grid, values, s.unit, _skip_checks=True)


def _intersection_band(spectra) -> Band:
    lo = max(float(s.grid[0]) for s in spectra)
    hi = min(float(s.grid[-1]) for s in spectra)
    if not lo < hi:
        raise BandCoverageError(
            f"spectra have empty band intersection (lo {lo:g} >= hi {hi:g})")
    return Band(lo, hi)


def _finest_grid_within(spectra, band: Band) -> np.ndarray:
    """Pick the input grid with the most samples inside ``band``.

    Ties break on lexicographically smallest grid so the choice does not
    depend on argument order (sum_db commutativity relies on this).
    """
    best = None
    best_count = -1
    for s in spectra:
        mask = (s.grid >= band.lo) & (s.grid <= band.hi)
        sub = s.grid[mask]
        count = sub.size
        if count > best_count:
            best, best_count = sub, count
        elif count == best_count and tuple(sub) < tuple(best):
            best = sub
    if best is None or best.size < 2:
        raise BandCoverageError(
            f"no input grid has two or more samples inside {band}")
    return best


def sum_db(spectra) -> Spectrum:
    """Pointwise sum of dB spectra on their common band.

    Adding transmittances in dB is the product of the linear transmittances,
    which is how a chain of components composes.  All inputs are resampled
    onto the finest input grid restricted to the intersection band.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("sum_db requires at least one spectrum")
    for s in spectra:
        if s.unit is not Unit.DB:
            raise UnitError(f"sum_db requires dB inputs, got {s.unit.value}")
    if len(spectra) == 1:
        return spectra[0]
    band = _intersection_band(spectra)
    grid = _finest_grid_within(spectra, band)
    total = resample(spectra[0], grid).values
    for s in spectra[1:]:
        total = total + resample(s, grid).values
    return Spectrum(grid, total, Unit.DB, _skip_checks=True)


def _window_maxima(grid: np.ndarray, values: np.ndarray, window_nm: float):
    """Indices of the maximum sample in consecutive windows of width window_nm."""
    knots = []
    start = grid[0]
    i = 0
    n = grid.size
    while i < n:
        j = i
        while j < n and grid[j] < start + window_nm:
            j += 1
        if j > i:
            k = i + int(np.argmax(values[i:j]))
            knots.append(k)
        start += window_nm
        i = j
    return np.asarray(knots, dtype=int)


def upper_envelope(noise: Spectrum, window_nm: float = 10.0) -> Spectrum:
    """Smoothed ceiling of a noise scan: windowed maxima + cubic spline.

    Local maxima are selected over consecutive windows of ``window_nm`` and a
    natural cubic spline through them is evaluated on the input grid.  The
    result is the conservative noise ceiling used for dynamic range and for
    substituting unmeasurably low transmittances.
    """
    if window_nm <= 0:
        raise ValueError("window_nm must be positive")
    if noise.unit is not Unit.DBM_FLUX:
        raise UnitError(f"envelope expects a dBm flux scan, got {noise.unit.value}")
    knots = _window_maxima(noise.grid, noise.values, window_nm)
    if knots.size < 4:
        raise DegenerateEnvelopeError(
            f"only {knots.size} local maxima found; at least 4 needed for the "
            f"envelope spline (widen the scan or shrink the window)")
    spline = CubicSpline(noise.grid[knots], noise.values[knots], bc_type="natural")
    return Spectrum(noise.grid, spline(noise.grid), Unit.DBM_FLUX, _skip_checks=True)


def stitch(segments) -> Spectrum:
    """Concatenate instrument-range segments into one spectrum.

    ``segments`` is a list of ``(Spectrum, Band)`` pairs whose bands must be
    ordered and exactly adjacent.  Each wavelength takes its value from the
    unique owning segment; a boundary wavelength belongs to the lower band,
    matching the scan-then-switch-instrument procedure.
    """
    segments = list(segments)
    if not segments:
        raise ValueError("stitch requires at least one segment")
    unit = segments[0][0].unit
    parts_grid = []
    parts_vals = []
    prev_hi = None
    for spec, band in segments:
        if spec.unit is not unit:
            raise UnitError("all segments must share one unit")
        if prev_hi is not None and band.lo != prev_hi:
            kind = "gap" if band.lo > prev_hi else "overlap"
            raise BandCoverageError(
                f"declared bands have a {kind} at {prev_hi:g}/{band.lo:g} nm")
        if not spec.covers(band):
            raise BandCoverageError(
                f"segment sampled on {spec.band} does not cover its band {band}")
        mask = (spec.grid >= band.lo) & (spec.grid <= band.hi)
        if prev_hi is not None:
            mask &= spec.grid > prev_hi
        parts_grid.append(spec.grid[mask])
        parts_vals.append(spec.values[mask])
        prev_hi = band.hi
    grid = np.concatenate(parts_grid)
    values = np.concatenate(parts_vals)
    if grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise BandCoverageError("stitched grid is not strictly ascending")
    return Spectrum(grid, values, unit, _skip_checks=True)


# -- file format ---------------------------------------------------------------
#
# Spectrum files are plain text CSV: a header line, one `wavelength,value`
# pair per line, ascending wavelengths, decimal point, no thousands
# separators.  Floats are written with repr so a round trip is bit exact.

SPECTRUM_HEADER = "wavelength_nm,value"


def write_xy(path, x: np.ndarray, y: np.ndarray, header: str) -> None:
    lines = [header]
    lines.extend(f"{repr(float(a))},{repr(float(b))}" for a, b in zip(x, y))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_xy(path, expected_header: str | None = None):
    xs = []
    ys = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if expected_header is not None and header != expected_header:
            raise ParseError(path, 1, f"expected header {expected_header!r}, "
                                      f"got {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(path, line_no, f"expected two fields, got {line!r}")
            try:
                xs.append(float(parts[0]))
                ys.append(float(parts[1]))
            except ValueError:
                raise ParseError(path, line_no, f"malformed number in {line!r}") from None
    return np.asarray(xs), np.asarray(ys)


def write_spectrum(path, s: Spectrum) -> None:
    write_xy(path, s.grid, s.values, SPECTRUM_HEADER)


def read_spectrum(path, unit: Unit) -> Spectrum:
    grid, values = read_xy(path, expected_header=SPECTRUM_HEADER)
    if grid.size < 2:
        raise ParseError(path, 1, "spectrum file holds fewer than two samples")
    return Spectrum(grid, values, unit)
