"""Leak-strength sweeps: find the leak level producing a target distance
reduction.

The maximum key-generation distance is non-increasing in the leak strength
and continuous down to zero, so a bisection on ``log10(mu_out)`` pins the
leak level whose distance reduction hits any requested fraction of the
leak-free baseline.
"""

from __future__ import annotations

import math

from .errors import DomainError

__all__ = ["find_mu_out_for_reduction"]


def find_mu_out_for_reduction(max_distance_fn, baseline_km: float,
                              target_fraction: float,
                              lo: float = 1e-16, hi: float = 1.0,
                              tolerance: float = 0.002,
                              max_iterations: int = 80) -> float:
    """Leak strength whose max distance is ``target_fraction`` of baseline.

    ``max_distance_fn(mu_out)`` must be non-increasing.  Bisection runs on
    the exponent until the achieved fraction is within ``tolerance`` of the
    target (or the bracket is exhausted, returning the closest endpoint).
    """
    if baseline_km <= 0:
        raise DomainError("baseline distance must be positive")
    if not 0.0 < target_fraction < 1.0:
        raise DomainError("target fraction must be in (0, 1)")

    def fraction(mu_out: float) -> float:
        return max_distance_fn(mu_out) / baseline_km

    f_lo = fraction(lo)
    f_hi = fraction(hi)
    if f_lo < target_fraction:
        return lo
    if f_hi > target_fraction:
        return hi
    e_lo, e_hi = math.log10(lo), math.log10(hi)
    best = lo
    best_err = abs(f_lo - target_fraction)
    for _ in range(max_iterations):
        e_mid = 0.5 * (e_lo + e_hi)
        mu_mid = 10.0 ** e_mid
        f_mid = fraction(mu_mid)
        err = abs(f_mid - target_fraction)
        if err < best_err:
            best, best_err = mu_mid, err
        if err <= tolerance:
            return mu_mid
        if f_mid > target_fraction:
            e_lo = e_mid
        else:
            e_hi = e_mid
    return best
