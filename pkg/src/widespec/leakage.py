"""Map reflected Trojan light onto security-proof penalty quantities.

Light leaking out of an encoding module is modelled as a weak coherent state
whose amplitude depends on the modulator setting.  Two penalties follow:

* a quantum-coin imbalance that inflates the single-photon phase error
  (``phase_error_with_coin``), and
* trace-distance deviations that widen the decoy-state yield constraints
  (``decoy_deviation``).

The closed forms for both are modelling choices, not forced algebra, so the
mapping is pluggable: a model id in the audit configuration selects it.  The
shipped default, ``randomized-coherent``, models the leak as a weak coherent
state of mean photon number ``mu_out`` that inherits the source's active
phase randomisation:

* coin imbalance  ``delta = (1 - exp(-mu_out)) / 2``  -- one minus the
  worst-case overlap of the basis-dependent leaked states, halved; it is
  later normalised by the single-photon yield because the eavesdropper may
  bias which coin tosses survive detection;
* trace distance  ``D = 1 - exp(-mu_out)``  -- phase randomisation leaves
  the per-setting ancillas diagonal in photon number, and the total
  variation distance between the most distinguishable pair (vacuum setting
  against full leak) is the probability that the leak carries any photon at
  all.  Applied uniformly over photon numbers and setting triples.

Both choices vanish at ``mu_out = 0`` (recovering the leak-free key rate),
grow monotonically, and saturate at their caps; the regression fixtures in
the test suite freeze their values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DegenerateYieldError, DomainError

__all__ = [
    "LeakageParams",
    "DecoyDeviation",
    "binary_entropy",
    "phase_error_with_coin",
    "coin_imbalance",
    "delta_prime",
    "decoy_deviation",
    "q_weight",
    "available_models",
    "DEFAULT_MODEL",
]

DEFAULT_MODEL = "randomized-coherent"


@dataclass(frozen=True)
class LeakageParams:
    """Strength of the leak at the worst-case wavelength."""

    mu_out: float
    model_id: str = DEFAULT_MODEL

    def __post_init__(self):
        if self.mu_out < 0:
            raise DomainError(f"mu_out must be >= 0, got {self.mu_out}")
        if self.model_id not in _MODELS:
            raise ConfigError(
                f"unknown leakage model {self.model_id!r}; available: "
                f"{sorted(_MODELS)}")


@dataclass(frozen=True)
class DecoyDeviation:
    """Bound on yield deviations between intensity settings under leakage.

    ``d(n, j, k, l)`` bounds how far the n-photon yield observed at intensity
    ``j`` may sit from the q-weighted mix of the yields at ``k`` and ``l``.
    Zero everywhere means indistinguishable settings, i.e. no leak.
    """

    mu_out: float
    model_id: str = DEFAULT_MODEL

    def d(self, n: int, j: float, k: float, l: float) -> float:
        return _MODELS[self.model_id].trace_distance(self.mu_out, n, j, k, l)

    def is_zero(self) -> bool:
        return self.mu_out == 0.0


def binary_entropy(x: float) -> float:
    """h2(x) = -x log2 x - (1-x) log2 (1-x), with the limits at 0 and 1."""
    if x < 0.0 or x > 1.0:
        raise DomainError(f"binary_entropy argument must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def phase_error_with_coin(e_bit: float, delta_prime: float) -> float:
    """Single-photon phase error inflated by basis dependence.

    For bit error ``e`` and coin imbalance ``d`` the phase error bound is::

        e + 4 d (1-d) (1-2e) + 4 (1-2d) sqrt(d (1-d) e (1-e))

    capped at 0.5: beyond the cap no key is extractable and the entropy term
    is evaluated at the cap.
    """
    if not 0.0 <= e_bit <= 0.5:
        raise DomainError(f"e_bit must be in [0, 0.5], got {e_bit}")
    if not 0.0 <= delta_prime <= 0.5:
        raise DomainError(f"delta_prime must be in [0, 0.5], got {delta_prime}")
    e = e_bit
    d = delta_prime
    value = (e
             + 4.0 * d * (1.0 - d) * (1.0 - 2.0 * e)
             + 4.0 * (1.0 - 2.0 * d) * math.sqrt(d * (1.0 - d) * e * (1.0 - e)))
    return min(value, 0.5)


def coin_imbalance(mu_out: float) -> float:
    """Unnormalised quantum-coin imbalance of the default model."""
    return 0.5 * -math.expm1(-mu_out)


class _RandomizedCoherent:
    """Phase-randomised coherent leaked states; see the module docstring."""

    name = DEFAULT_MODEL

    @staticmethod
    def delta_prime(mu_out: float, y1_lower: float) -> float:
        return min(0.5, coin_imbalance(mu_out) / y1_lower)

    @staticmethod
    def trace_distance(mu_out: float, n: int, j: float, k: float, l: float) -> float:
        # Uniform over (n, j, k, l): the vacuum-against-full-leak pair
        # dominates every setting triple in this model.
        return -math.expm1(-mu_out)


_MODELS = {_RandomizedCoherent.name: _RandomizedCoherent}


def available_models():
    return sorted(_MODELS)


def delta_prime(leak: LeakageParams, y1_lower: float) -> float:
    """Detection-conditioned coin imbalance, capped at 0.5.

    Dividing by a lower bound on the single-photon yield is conservative:
    the eavesdropper may correlate her leak with which pulses get detected,
    so the imbalance per *detected* pulse can exceed the raw imbalance by up
    to that factor.
    """
    if not 0.0 < y1_lower <= 1.0:
        if y1_lower == 0.0:
            raise DegenerateYieldError(
                "single-photon yield bound is zero: no events to normalise "
                "the quantum coin against")
        raise DomainError(f"y1_lower must be in (0, 1], got {y1_lower}")
    if leak.mu_out == 0.0:
        return 0.0
    return _MODELS[leak.model_id].delta_prime(leak.mu_out, y1_lower)


def decoy_deviation(leak: LeakageParams) -> DecoyDeviation:
    """Deviation bound generator for the configured leakage model."""
    return DecoyDeviation(leak.mu_out, leak.model_id)


def q_weight(n: int, k: float, l: float, p_k: float, p_l: float) -> float:
    """Probability the setting was ``k`` given an n-photon pulse.

    Poissonian sources force ``q = p_k e^-k k^n / (p_k e^-k k^n +
    p_l e^-l l^n)``; the complement pair sums to one.
    """
    if n < 0:
        raise DomainError("photon number must be non-negative")
    if k < 0 or l < 0:
        raise DomainError("intensities must be non-negative")
    if not (p_k > 0 and p_l > 0):
        raise DomainError("selection probabilities must be positive")
    wk = p_k * math.exp(-k) * k ** n if (k > 0 or n == 0) else 0.0
    wl = p_l * math.exp(-l) * l ** n if (l > 0 or n == 0) else 0.0
    if wk + wl == 0.0:
        raise DegenerateYieldError(
            f"no n={n} photon pulses exist for intensities k={k}, l={l}")
    return wk / (wk + wl)
