"""Asymptotic four-intensity decoy-state MDI key rate under a two-sided
Trojan-horse leak.

Channel model
-------------

Both transmitters send phase-randomised weak coherent pulses to an untrusted
relay at the midpoint; each arm has transmittance
``eta = eta_det * 10^(-alpha (L/2) / 10)`` folded into the detected mean
photon numbers ``A = a eta`` and ``B = b eta``.  The relay interferes the
pulses on a balanced beamsplitter, splits each output port by polarisation
onto four threshold detectors with dark-count probability ``pd`` per
detector per pulse, and announces the two click patterns consistent with a
singlet outcome.  Averaging the per-pattern click products over the unknown
relative phase gives, with ``g = 1 - pd``:

Z basis (``I0`` the modified Bessel function)::

    Q_ok  = 2 g^2 e^-(A+B)/2 (1 - g e^-A/2)(1 - g e^-B/2)        bits differ
    Q_bad = 2 pd g^2 e^-(A+B)/2 (I0(sqrt(AB)) - g e^-(A+B)/2)    bits equal

X basis, with ``T = (A+B)/4`` and ``C = sqrt(AB)/2``::

    Q_ok  = 2 g^2 e^-2T (I0(2C) - 2 g e^-T I0(C) + g^2 e^-2T)    bits differ
    Q_bad = 2 g^2 e^-2T (1      - 2 g e^-T I0(C) + g^2 e^-2T)    bits equal

Random bit choices weight each pair by 1/2, and misalignment flips the
classification: ``Q = (Q_ok + Q_bad)/2`` and
``E Q = (e_d Q_ok + (1-e_d) Q_bad)/2``.  In the vacuum limit both components
degenerate to the dark-count floor and the error fraction is exactly 1/2.
The test suite validates these expressions against an independent
photon-number expansion of the same relay (Fock inputs truncated at six
photons per arm).

Decoy bounds
------------

Write ``G_ab = Q_ab e^(a+b) = sum_nm (a^n/n!)(b^m/m!) Y_nm``.  The
one-variable two-point decoy combination

    T[f] = [mu^2 (f(nu) - f(0)) - nu^2 (f(mu) - f(0))] / (mu nu (mu - nu))

has Poisson-weight coefficients ``w_n`` with ``w_0 = w_2 = 0``, ``w_1 = 1``
and ``w_n < 0`` for n >= 3.  Applying it along both axes of the gain table
gives ``T2 = sum w_n w_m Y_nm``; every mixed term with exactly one index
>= 3 is negative and every term with both indices >= 3 is positive but
bounded by ``S^2`` with ``S = sum_{n>=3} |w_n|`` (yields never exceed one).
Hence ``Y_11 >= T2 - S^2``, a standard iterated two-decoy estimate with an
explicit fourth-order correction.  The error bound keeps only the (1,1)
term of the doubly corner-subtracted error-gain table:
``(eY)_11 <= HE_nn / nu^2``.

Under attack the yields become setting-dependent; the pairwise form of the
distinguishability constraint bounds each arm's drift from the reference
setting, so every measured gain enters as an interval widened by the
per-arm deviation folded through Poisson weights.  Both arms widen
independently, the adversarial end is taken everywhere, and the
key-generating signal setting pays one more pairwise deviation per arm.
The bounds collapse to the leak-free estimate at zero deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import i0 as _bessel_i0

from .bb84 import SystemParams, leakage_widening, search_max_distance
from .errors import ConfigError, DomainError
from .leakage import (
    DecoyDeviation,
    LeakageParams,
    binary_entropy,
    decoy_deviation,
    delta_prime,
    phase_error_with_coin,
)

__all__ = [
    "MdiParams",
    "MdiObservation",
    "MdiRatePoint",
    "MdiBounds",
    "simulate_mdi_channel",
    "observe_decoy_grid",
    "mdi_decoy_bounds",
    "mdi_key_rate",
    "mdi_max_distance",
]


@dataclass(frozen=True)
class MdiParams:
    """Symmetric four-intensity settings: signal s plus X-basis decoys."""

    s: float
    mu: float
    nu: float
    omega: float = 0.0
    p_s: float = 0.5
    p_mu: float = 0.25
    p_nu: float = 0.125

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("signal intensity s must be positive")
        if not (self.mu > self.nu > self.omega >= 0):
            raise DomainError(
                f"decoy intensities must satisfy mu > nu > omega >= 0, got "
                f"mu={self.mu}, nu={self.nu}, omega={self.omega}")
        for name in ("p_s", "p_mu", "p_nu"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DomainError(f"{name} must be in (0, 1)")
        if self.p_s + self.p_mu + self.p_nu > 1.0:
            raise DomainError("p_s + p_mu + p_nu must be <= 1")

    def decoy_intensities(self):
        return (self.mu, self.nu, self.omega)


@dataclass(frozen=True)
class MdiObservation:
    """Gains and error gains for one intensity pair, both bases."""

    q_z: float
    eq_z: float
    q_x: float
    eq_x: float


@dataclass(frozen=True)
class MdiBounds:
    y11_lower: float
    e11_upper: float
    infeasible: bool = False


@dataclass(frozen=True)
class MdiRatePoint:
    distance_km: float
    rate: float
    diagnostics: dict = field(default_factory=dict)


def arm_efficiency(distance_km: float, sys: SystemParams) -> float:
    """Transmittance of one arm (relay at the midpoint), detectors folded in."""
    return sys.detector_eff * 10.0 ** (-sys.alpha_db_km * (distance_km / 2.0) / 10.0)


def _pair_components(A: float, B: float, pd: float):
    """Per-basis (correct, wrong) singlet probabilities for detected means."""
    g = 1.0 - pd
    # Z basis
    e_half = math.exp(-(A + B) / 2.0)
    z_ok = 2.0 * g * g * e_half * (1.0 - g * math.exp(-A / 2.0)) \
        * (1.0 - g * math.exp(-B / 2.0))
    z_bad = 2.0 * pd * g * g * e_half * (float(_bessel_i0(math.sqrt(A * B))) - g * e_half)
    # X basis
    t = (A + B) / 4.0
    c = math.sqrt(A * B) / 2.0
    e_t = math.exp(-t)
    common = -2.0 * g * e_t * float(_bessel_i0(c)) + g * g * e_t * e_t
    x_ok = 2.0 * g * g * e_t * e_t * (float(_bessel_i0(2.0 * c)) + common)
    x_bad = 2.0 * g * g * e_t * e_t * (1.0 + common)
    return max(z_ok, 0.0), max(z_bad, 0.0), max(x_ok, 0.0), max(x_bad, 0.0)


def simulate_mdi_channel(distance_km: float, sys: SystemParams,
                         intensity_a: float, intensity_b: float) -> MdiObservation:
    """Expected gains and error gains for one intensity pair."""
    if distance_km < 0:
        raise DomainError("distance must be >= 0")
    if intensity_a < 0 or intensity_b < 0:
        raise DomainError("intensities must be >= 0")
    eta = arm_efficiency(distance_km, sys)
    A = intensity_a * eta
    B = intensity_b * eta
    pd = sys.background_rate
    ed = sys.misalignment
    z_ok, z_bad, x_ok, x_bad = _pair_components(A, B, pd)
    q_z = 0.5 * (z_ok + z_bad)
    eq_z = 0.5 * (ed * z_ok + (1.0 - ed) * z_bad)
    q_x = 0.5 * (x_ok + x_bad)
    eq_x = 0.5 * (ed * x_ok + (1.0 - ed) * x_bad)
    return MdiObservation(q_z, eq_z, q_x, eq_x)


def observe_decoy_grid(distance_km: float, sys: SystemParams,
                       params: MdiParams) -> dict:
    """Observations for the full decoy grid plus the signal pair.

    Keys are intensity pairs ``(a, b)``; the signal observation sits at
    ``(s, s)``.
    """
    grid = {}
    decoys = params.decoy_intensities()
    for a in decoys:
        for b in decoys:
            grid[(a, b)] = simulate_mdi_channel(distance_km, sys, a, b)
    grid[(params.s, params.s)] = simulate_mdi_channel(distance_km, sys,
                                                      params.s, params.s)
    return grid


# -- interval arithmetic (closed, conservative) ---------------------------------


def _isub(a, b):
    return (a[0] - b[1], a[1] - b[0])


def _iadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _iscale(a, c):
    return (a[0] * c, a[1] * c) if c >= 0 else (a[1] * c, a[0] * c)


def _tail_r(x: float) -> float:
    """e^x minus its Taylor terms through x^2/2."""
    return math.exp(x) - 1.0 - x - 0.5 * x * x


def mdi_decoy_bounds(observations: dict, params: MdiParams,
                     dev: DecoyDeviation) -> MdiBounds:
    """Two-single-photon yield and error bounds from the X-basis decoy grid.

    Requires a vacuum weakest setting (omega = 0): the vacuum rows make the
    corner subtraction exact, which the iterated estimate relies on.  See
    the module docstring for the construction.
    """
    mu, nu, om = params.decoy_intensities()
    if om != 0.0:
        raise ConfigError(
            "the analytical MDI decoy estimate requires a vacuum weakest "
            "intensity (omega = 0)")
    for a in (mu, nu, om):
        for b in (mu, nu, om):
            if (a, b) not in observations:
                raise DomainError(f"missing observation for intensity pair {(a, b)}")

    def widened(a, b, attr):
        obs = observations[(a, b)]
        scale = math.exp(a + b)
        center = getattr(obs, attr) * scale
        u = (leakage_widening(dev, a, mu) * math.exp(b)
             + math.exp(a) * leakage_widening(dev, b, mu))
        return (center - u, center + u)

    den = mu * nu * (mu - nu)
    # One-variable combination coefficients per intensity column/row.
    sigma = {nu: mu * mu, mu: -nu * nu, om: nu * nu - mu * mu}

    def iterated_lower(table) -> float:
        """Lower end of sum_ab sigma_a sigma_b G_ab / den^2 over the intervals."""
        total = 0.0
        for a in (mu, nu, om):
            for b in (mu, nu, om):
                coeff = sigma[a] * sigma[b]
                lo, hi = table[(a, b)]
                total += coeff * (lo if coeff >= 0 else hi)
        return total / (den * den)

    G = {(a, b): widened(a, b, "q_x") for a in (mu, nu, om) for b in (mu, nu, om)}
    # Positive cross terms with both photon numbers >= 3 are bounded by S^2.
    s_tail = (nu * nu * _tail_r(mu) - mu * mu * _tail_r(nu)) / den
    y11_raw = iterated_lower(G) - s_tail * s_tail

    # Pairwise deviation between the signal setting and the decoy reference,
    # once per transmitter.
    signal_dev = 0.0
    if not dev.is_zero() and params.s != mu:
        signal_dev = 2.0 * dev.d(1, params.s, mu, mu)
    y11_key = y11_raw - signal_dev
    infeasible = y11_key < -1e-12
    y11_lower = min(max(y11_key, 0.0), 1.0)
    if y11_lower <= 0.0:
        return MdiBounds(0.0, 1.0, infeasible=True)

    GE = {(a, b): widened(a, b, "eq_x")
          for a in (mu, nu, om) for b in (mu, nu, om)}
    he = _iadd(_isub(_isub(GE[(nu, nu)], GE[(nu, om)]), GE[(om, nu)]),
               GE[(om, om)])
    e11_num = he[1] / (nu * nu) + signal_dev
    e11_upper = min(max(e11_num / y11_lower, 0.0), 1.0)
    return MdiBounds(y11_lower, e11_upper, infeasible=infeasible)


def mdi_key_rate(distance_km: float, sys: SystemParams, params: MdiParams,
                 leak: LeakageParams) -> MdiRatePoint:
    """Secret bits per pulse, both transmitters leaking, zero-clipped.

    The rate is::

        R = p_s^2 { s^2 e^-2s Y11_L [1 - h2(e_ph)] - f_e Q_Z h2(E_Z) }

    with the phase error inflated by the composed quantum coin: each
    transmitter contributes an imbalance normalised by the single-pair
    yield, and the two add (capped at 1/2) because the leaks are
    independent worst cases.
    """
    observations = observe_decoy_grid(distance_km, sys, params)
    dev = decoy_deviation(leak)
    bounds = mdi_decoy_bounds(observations, params, dev)
    sig = observations[(params.s, params.s)]
    e_z = sig.eq_z / sig.q_z if sig.q_z > 0 else 0.5
    diag = {
        "y11_lower": bounds.y11_lower,
        "e11_upper": bounds.e11_upper,
        "q_z_ss": sig.q_z,
        "e_z_ss": e_z,
        "infeasible": bounds.infeasible,
        "delta_prime": 0.0,
        "phase_error": min(bounds.e11_upper, 0.5),
    }
    if bounds.infeasible or bounds.y11_lower <= 0.0:
        return MdiRatePoint(distance_km, 0.0, diag)
    if leak.mu_out > 0:
        dp = min(0.5, 2.0 * delta_prime(leak, bounds.y11_lower))
    else:
        dp = 0.0
    e_ph = phase_error_with_coin(min(bounds.e11_upper, 0.5), dp)
    diag["delta_prime"] = dp
    diag["phase_error"] = e_ph
    s = params.s
    rate = params.p_s ** 2 * (
        s * math.exp(-s) * s * math.exp(-s) * bounds.y11_lower
        * (1.0 - binary_entropy(e_ph))
        - sys.ec_inefficiency * sig.q_z * binary_entropy(e_z))
    return MdiRatePoint(distance_km, max(rate, 0.0), diag)


def mdi_max_distance(sys: SystemParams, params, leak: LeakageParams,
                     resolution_km: float = 0.01) -> float:
    """Maximum total Alice-Bob distance with positive rate.

    ``params`` is an :class:`MdiParams` or a callable ``distance -> rate``.
    """
    if callable(params):
        rate_fn = params
    else:
        def rate_fn(d, _p=params):
            return mdi_key_rate(d, sys, _p, leak).rate
    return search_max_distance(rate_fn, resolution_km=resolution_km)
