"""Attack-channel transmittance composition and attack-strength quantities.

The channel between the eavesdropper's access point and the target component
is a cascade: a mandatory broadband filter plus an ordered chain of passive
parts.  Its total transmittance in dB is the sum of the per-component dB
spectra, taken in the inward direction for injection attacks, outward for
emission attacks, and both (with the filter counted twice) for a round trip.
The round-trip case hard-codes unity backreflection behind the target: no API
accepts a backreflection spectrum, so an audit cannot accidentally take
credit for attenuation nobody measured.

Component samples above 0 dB are clipped to 0 dB before summation; a passive
part cannot amplify, and raw records keep the measured values for debugging.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BandCoverageError, DomainError
from .ingestion import ComponentRecord
from .spectral import Band, Spectrum, Unit, resample

__all__ = [
    "AttackCase",
    "ChainLink",
    "AttackChannelSpec",
    "EveBudget",
    "compose",
    "worst_case",
    "trojan_mu_out",
    "power_at_target",
    "margin_orders",
    "backflash_mu_leak",
]


class AttackCase(enum.Enum):
    """Direction of light flow during the attack."""

    INJECT = "inject"        # unidirectional, eavesdropper -> target
    EMIT = "emit"            # unidirectional, target -> eavesdropper
    ROUND_TRIP = "round-trip"  # inject and read back the reflection

    @classmethod
    def parse(cls, text: str) -> "AttackCase":
        for case in cls:
            if case.value == text or case.name.lower() == text.lower():
                return case
        raise DomainError(f"unknown attack case {text!r}; expected one of "
                          f"{[c.value for c in cls]}")


@dataclass(frozen=True)
class ChainLink:
    """One chain position: a component, optionally traversed port-swapped."""

    record: ComponentRecord
    swap_directions: bool = False

    def inward(self) -> Spectrum:
        return self.record.outward if self.swap_directions else self.record.inward

    def outward(self) -> Spectrum:
        return self.record.inward if self.swap_directions else self.record.outward


def _as_link(entry) -> ChainLink:
    if isinstance(entry, ChainLink):
        return entry
    if isinstance(entry, ComponentRecord):
        return ChainLink(entry)
    raise TypeError(f"chain entries must be ComponentRecord or ChainLink, "
                    f"got {type(entry).__name__}")


@dataclass(frozen=True)
class AttackChannelSpec:
    """Filter + ordered component chain + attack case over a band.

    The chain is ordered quantum-channel side first and may be empty; the
    filter is mandatory because it is what bounds the spectrum outside the
    characterisation range.  The target component itself is never part of the
    chain: its transmittance is excluded by the unity-backreflection
    assumption.
    """

    filter: ComponentRecord
    chain: tuple
    case: AttackCase
    band: Band

    def __init__(self, filter: ComponentRecord, chain, case: AttackCase,
                 band: Band):
        object.__setattr__(self, "filter", filter)
        object.__setattr__(self, "chain", tuple(_as_link(c) for c in chain))
        object.__setattr__(self, "case", case)
        object.__setattr__(self, "band", band)


@dataclass(frozen=True)
class EveBudget:
    """The eavesdropper's physical resources.

    ``photon_rate`` is the number of photons per second she may push into the
    channel, ``max_cw_power`` the continuous power in watts she may inject
    without destroying the fiber, and ``clock_rate`` the system clock in Hz.
    All three are audit inputs, not constants: they are order-of-magnitude
    damage-threshold estimates that a certification lab will want to adjust.
    """

    photon_rate: float
    max_cw_power: float
    clock_rate: float

    def __post_init__(self):
        for name in ("photon_rate", "max_cw_power", "clock_rate"):
            if not getattr(self, name) > 0:
                raise DomainError(f"EveBudget.{name} must be positive")


def _clip_gain(values: np.ndarray) -> np.ndarray:
    return np.minimum(values, 0.0)


def _composition_grid(spec: AttackChannelSpec) -> np.ndarray:
    """Finest participating grid restricted to the band, endpoints included."""
    spectra = [spec.filter.inward]
    for link in spec.chain:
        spectra.append(link.record.inward)
    band = spec.band
    for record in [spec.filter] + [link.record for link in spec.chain]:
        if not record.inward.covers(band):
            raise BandCoverageError(
                f"component {record.name!r} sampled on {record.inward.band} "
                f"does not cover the audit band {band}")
    best = None
    best_count = -1
    for s in spectra:
        mask = (s.grid >= band.lo) & (s.grid <= band.hi)
        count = int(mask.sum())
        if count > best_count:
            best, best_count = s.grid[mask], count
    grid = np.unique(np.concatenate([[band.lo], best, [band.hi]]))
    return grid


def _directional_terms(spec: AttackChannelSpec, grid: np.ndarray, direction: str):
    """Clipped dB contributions of filter + chain for one direction.

    The filter is direction-symmetric by assumption, so its inward spectrum
    is the single filter transmittance used for both directions.
    """
    terms = [resample(spec.filter.inward, grid).values]
    if direction == "in":
        terms += [resample(link.inward(), grid).values for link in spec.chain]
    else:
        terms += [resample(link.outward(), grid).values for link in spec.chain]
    return [_clip_gain(t) for t in terms]


def compose(spec: AttackChannelSpec) -> Spectrum:
    """Total attack-channel transmittance (dB) over the audit band.

    Inject sums the filter and inward chain transmittances; Emit uses the
    outward chain direction; RoundTrip is exactly the dB sum of the Inject
    and Emit compositions, which counts the filter twice.
    """
    grid = _composition_grid(spec)
    if spec.case is AttackCase.INJECT:
        total = _sum_terms(_directional_terms(spec, grid, "in"))
    elif spec.case is AttackCase.EMIT:
        total = _sum_terms(_directional_terms(spec, grid, "out"))
    else:
        total = (_sum_terms(_directional_terms(spec, grid, "in"))
                 + _sum_terms(_directional_terms(spec, grid, "out")))
    return Spectrum(grid, total, Unit.DB, _skip_checks=True)


def _sum_terms(terms) -> np.ndarray:
    total = terms[0].copy()
    for t in terms[1:]:
        total += t
    return total


def worst_case(gamma: Spectrum, band: Band):
    """Wavelength of maximum transmittance within ``band`` and its dB value.

    The eavesdropper's best single-wavelength strategy sits at the channel's
    transparency maximum.  Ties resolve to the lowest wavelength so reports
    are deterministic.
    """
    if not gamma.covers(band):
        raise BandCoverageError(
            f"gamma sampled on {gamma.band} does not cover {band}")
    mask = (gamma.grid >= band.lo) & (gamma.grid <= band.hi)
    if not mask.any():
        raise BandCoverageError(f"gamma has no samples inside {band}")
    grid = gamma.grid[mask]
    values = gamma.values[mask]
    idx = int(np.argmax(values))
    return float(grid[idx]), float(values[idx])


def trojan_mu_out(gamma_linear: float, budget: EveBudget) -> float:
    """Mean photon number returned to the eavesdropper per clock cycle.

    With ``N`` injectable photons per second, channel transmittance ``g`` and
    clock ``f``, each cycle hands back ``N * g / f`` photons on average.
    """
    if not 0.0 <= gamma_linear <= 1.0:
        raise DomainError(f"gamma_linear must be in [0, 1], got {gamma_linear}")
    return budget.photon_rate * gamma_linear / budget.clock_rate


def power_at_target(spec: AttackChannelSpec, budget: EveBudget,
                    wavelength_nm: float | None = None):
    """Upper bound on injected optical power reaching the target component.

    Composes the inject-direction channel and multiplies the linear
    transmittance by the eavesdropper's continuous power budget.  Returns
    ``(wavelength, watts)`` for the worst wavelength in the band, or for a
    specific requested wavelength.
    """
    if spec.case is not AttackCase.INJECT:
        raise DomainError("power_at_target requires an inject-case channel spec")
    gamma = compose(spec)
    if wavelength_nm is None:
        wl, db = worst_case(gamma, spec.band)
    else:
        if not spec.band.contains(wavelength_nm):
            raise BandCoverageError(
                f"wavelength {wavelength_nm:g} nm outside audit band {spec.band}")
        wl = float(wavelength_nm)
        db = float(resample(gamma, [wl]).values[0])
    return wl, budget.max_cw_power * 10.0 ** (db / 10.0)


def margin_orders(power_w: float, threshold_w: float) -> float:
    """Orders of magnitude separating delivered power from the effect threshold."""
    if power_w <= 0 or threshold_w <= 0:
        raise DomainError("margin_orders requires positive power and threshold")
    return math.log10(threshold_w / power_w)


def backflash_mu_leak(gamma: Spectrum, emission: Spectrum) -> float:
    """Photons leaked into the channel per detection event.

    Integrates linear channel transmittance against the emission probability
    density over their common band with the trapezoid rule on the union of
    the native grids; 1 nm scan data carries no smoothness worth inventing.
    """
    if emission.unit is not Unit.DENSITY_PER_NM:
        raise DomainError("emission spectrum must be a probability density per nm")
    if np.any(emission.values < 0):
        raise DomainError("emission density must be non-negative")
    gamma_db = gamma if gamma.unit is Unit.DB else gamma.to_db()
    lo = max(gamma_db.grid[0], emission.grid[0])
    hi = min(gamma_db.grid[-1], emission.grid[-1])
    if not lo < hi:
        raise BandCoverageError("gamma and emission have empty band intersection")
    grid = np.unique(np.concatenate([
        gamma_db.grid[(gamma_db.grid >= lo) & (gamma_db.grid <= hi)],
        emission.grid[(emission.grid >= lo) & (emission.grid <= hi)],
        [lo, hi],
    ]))
    g_lin = np.power(10.0, resample(gamma_db, grid).values / 10.0)
    dens = resample(emission, grid).values
    return float(np.trapezoid(g_lin * dens, grid))
