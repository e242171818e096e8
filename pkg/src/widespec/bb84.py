"""Asymptotic secure key rate of three-intensity decoy-state BB84 under a
Trojan-horse leak.

The channel model is the conventional asymptotic one: total detection
efficiency ``eta = eta_det * 10^(-alpha L / 10)``, n-photon yield
``Y_n = Y0 + 1 - (1-eta)^n``, gain ``Q = Y0 + 1 - exp(-eta mu)`` and error
gain ``E Q = Y0/2 + e_d (1 - exp(-eta mu))`` (background errors are random).

Single-photon bounds follow the standard analytical three-intensity decoy
estimate built from the two weaker intensities:

    Y0_L  = max(0, (nu G_w - w G_n) / (nu - w))
    Y1_L  = mu/((nu-w)(mu-nu-w)) [G_n - G_w - (nu^2-w^2)/mu^2 (G_u - Y0_L)]
    e1_U  = (H_n - H_w) / ((nu - w) Y1_L)

with G_j = Q_j e^j and H_j = E_j Q_j e^j.  Under a leak the yields become
setting-dependent; the pairwise form of the distinguishability constraint
(the mixed-setting bound specialised to one partner) gives
|Y_n^j - Y_n^mu| <= D_n, so each non-signal G_j and H_j carries an additive
uncertainty W(j) = sum_n (j^n/n!) D_n folded through the Poisson weights.
The bounds take the adversarial end of each interval, so they can only
widen as the leak grows and collapse to the standard estimate at D = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError
from .leakage import (
    DecoyDeviation,
    LeakageParams,
    binary_entropy,
    decoy_deviation,
    delta_prime,
    phase_error_with_coin,
)

__all__ = [
    "SystemParams",
    "Bb84Params",
    "RatePoint",
    "DecoyBounds",
    "simulate_channel",
    "decoy_bounds",
    "key_rate",
    "max_distance",
    "search_max_distance",
    "leakage_widening",
    "TABLE_PARAMS",
]

#: Rates below this are floating-point phantoms, not key.
RATE_EPS = 1e-15

#: Photon-number cutoff when folding deviations through Poisson weights.
_WIDENING_CUTOFF = 30


@dataclass(frozen=True)
class SystemParams:
    """Channel and receiver constants of the audited system."""

    alpha_db_km: float = 0.2
    clock_hz: float = 1.25e9
    background_rate: float = 8e-8
    misalignment: float = 0.02
    detector_eff: float = 0.38
    ec_inefficiency: float = 1.16

    def __post_init__(self):
        if self.alpha_db_km <= 0 or self.clock_hz <= 0 or self.background_rate <= 0:
            raise DomainError("alpha, clock rate and background rate must be positive")
        if not 0.0 < self.misalignment < 1.0:
            raise DomainError("misalignment must be in (0, 1)")
        if not 0.0 < self.detector_eff < 1.0:
            raise DomainError("detector efficiency must be in (0, 1)")
        if self.ec_inefficiency < 1.0:
            raise DomainError("error-correction inefficiency must be >= 1")


#: Reference parameter set used throughout the tests: a gigahertz-clocked
#: fiber system with 38% total receiver efficiency.
TABLE_PARAMS = SystemParams()


@dataclass(frozen=True)
class Bb84Params:
    """Three-intensity protocol settings: mu signal, nu decoy, omega weak."""

    mu: float
    nu: float
    omega: float = 0.0
    p_mu: float = 0.5
    p_nu: float = 0.25
    p_z: float = 0.5

    def __post_init__(self):
        if not (self.mu > self.nu + self.omega and self.mu > self.nu > self.omega >= 0):
            raise DomainError(
                f"intensities must satisfy mu > nu + omega and mu > nu > omega >= 0, "
                f"got mu={self.mu}, nu={self.nu}, omega={self.omega}")
        for name in ("p_mu", "p_nu", "p_z"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DomainError(f"{name} must be in (0, 1)")
        if self.p_mu + self.p_nu >= 1.0:
            raise DomainError("p_mu + p_nu must be < 1")

    def intensities(self):
        return (self.mu, self.nu, self.omega)


@dataclass(frozen=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    infeasible: bool = False


@dataclass(frozen=True)
class RatePoint:
    distance_km: float
    rate: float
    diagnostics: dict = field(default_factory=dict)


def channel_efficiency(distance_km: float, sys: SystemParams) -> float:
    return sys.detector_eff * 10.0 ** (-sys.alpha_db_km * distance_km / 10.0)


def simulate_channel(distance_km: float, sys: SystemParams, intensity: float):
    """Expected gain and QBER for one intensity at one distance."""
    if distance_km < 0:
        raise DomainError("distance must be >= 0")
    if intensity < 0:
        raise DomainError("intensity must be >= 0")
    eta = channel_efficiency(distance_km, sys)
    signal = -math.expm1(-eta * intensity)
    gain = sys.background_rate + signal
    err_gain = 0.5 * sys.background_rate + sys.misalignment * signal
    return gain, err_gain / gain


def leakage_widening(dev: DecoyDeviation, intensity: float, reference: float,
                     cutoff: int = _WIDENING_CUTOFF) -> float:
    """Uncertainty of Q_j e^j relative to reference-setting yields.

    Folds the per-photon-number deviation bound through the Poisson weights
    of intensity ``j``; the truncated tail is charged at the trivial bound
    D <= 1.  Zero when the intensity is the reference itself or the leak is
    off.
    """
    if dev.is_zero() or intensity == reference:
        return 0.0
    total = 0.0
    weight_sum = 0.0
    weight = 1.0  # j^n / n!
    for n in range(cutoff + 1):
        total += weight * dev.d(n, intensity, reference, reference)
        weight_sum += weight
        weight *= intensity / (n + 1)
    tail = math.exp(intensity) - weight_sum
    return total + max(tail, 0.0)


def decoy_bounds(observations: dict, params: Bb84Params,
                 dev: DecoyDeviation) -> DecoyBounds:
    """Analytical single-photon bounds widened by leak-induced deviations.

    ``observations`` maps each of the three intensities to its measured
    ``(gain, qber)``.  Bounds are clipped to [0, 1]; statistics that push the
    yield bound negative beyond numeric tolerance raise the infeasible flag
    (the caller reports zero rate).
    """
    mu, nu, om = params.intensities()
    for j in (mu, nu, om):
        if j not in observations:
            raise DomainError(f"missing observation for intensity {j}")

    def g_and_h(j):
        gain, qber = observations[j]
        scale = math.exp(j)
        return gain * scale, gain * qber * scale

    g_mu, h_mu = g_and_h(mu)
    g_nu, h_nu = g_and_h(nu)
    g_om, h_om = g_and_h(om)
    w_nu = leakage_widening(dev, nu, mu)
    w_om = leakage_widening(dev, om, mu)

    denom = (nu - om) * (mu - nu - om)
    y0_lower = max(0.0, (nu * (g_om - w_om) - om * (g_nu + w_nu)) / (nu - om))
    y1_raw = (mu / denom) * (
        (g_nu - w_nu) - (g_om + w_om)
        - ((nu ** 2 - om ** 2) / mu ** 2) * (g_mu - y0_lower))
    infeasible = y1_raw < -1e-12
    y1_lower = min(max(y1_raw, 0.0), 1.0)

    if y1_lower <= 0.0:
        return DecoyBounds(0.0, 1.0, infeasible=True)
    e1_num = (h_nu + w_nu) - (h_om - w_om)
    e1_upper = min(max(e1_num / ((nu - om) * y1_lower), 0.0), 1.0)
    return DecoyBounds(y1_lower, e1_upper, infeasible=infeasible)


def key_rate(distance_km: float, sys: SystemParams, params: Bb84Params,
             leak: LeakageParams) -> RatePoint:
    """Secret bits per pulse at one distance, zero-clipped.

    The rate is the single-photon term less the error-correction cost::

        R = mu e^-mu Y1_L [1 - h2(e_ph)] - f_e Q_mu h2(E_mu)

    where the phase error ``e_ph`` is the decoy bit-error bound passed
    through the quantum-coin inflation.
    """
    observations = {j: simulate_channel(distance_km, sys, j)
                    for j in params.intensities()}
    dev = decoy_deviation(leak)
    bounds = decoy_bounds(observations, params, dev)
    q_mu, e_mu = observations[params.mu]
    diag = {
        "y1_lower": bounds.y1_lower,
        "e1_upper": bounds.e1_upper,
        "q_z_mu": q_mu,
        "e_z_mu": e_mu,
        "infeasible": bounds.infeasible,
        "delta_prime": 0.0,
        "phase_error": min(bounds.e1_upper, 0.5),
    }
    if bounds.infeasible or bounds.y1_lower <= 0.0:
        return RatePoint(distance_km, 0.0, diag)
    dp = delta_prime(leak, bounds.y1_lower) if leak.mu_out > 0 else 0.0
    e_ph = phase_error_with_coin(min(bounds.e1_upper, 0.5), dp)
    diag["delta_prime"] = dp
    diag["phase_error"] = e_ph
    rate = (params.mu * math.exp(-params.mu) * bounds.y1_lower
            * (1.0 - binary_entropy(e_ph))
            - sys.ec_inefficiency * q_mu * binary_entropy(e_mu))
    return RatePoint(distance_km, max(rate, 0.0), diag)


def search_max_distance(rate_fn, resolution_km: float = 0.01,
                        rate_threshold: float = RATE_EPS,
                        max_km: float = 16384.0) -> float:
    """Largest distance with positive rate, by bracketing plus bisection."""
    if rate_fn(0.0) <= rate_threshold:
        return 0.0
    lo, hi = 0.0, 1.0
    while rate_fn(hi) > rate_threshold:
        lo = hi
        hi *= 2.0
        if hi > max_km:
            return max_km
    while hi - lo > resolution_km:
        mid = 0.5 * (lo + hi)
        if rate_fn(mid) > rate_threshold:
            lo = mid
        else:
            hi = mid
    return lo


def max_distance(sys: SystemParams, params, leak: LeakageParams,
                 resolution_km: float = 0.01) -> float:
    """Maximum key-generation distance in km.

    ``params`` is either a :class:`Bb84Params` or a callable
    ``distance_km -> rate`` (for example a per-distance optimizing closure).
    """
    if callable(params):
        rate_fn = params
    else:
        def rate_fn(d, _p=params):
            return key_rate(d, sys, _p, leak).rate
    return search_max_distance(rate_fn, resolution_km=resolution_km)
