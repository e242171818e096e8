"""Constrained maximisation of protocol parameters at each distance.

The key-rate objectives contain clips, interval selections and bound
switches, so derivative-free simplex search is used: a deterministic set of
seeded starts, each refined by Nelder-Mead, with constraints handled by
projecting every candidate into the feasible region before evaluation.
Strict inequalities carry a fixed margin so the decoy denominators stay
well conditioned.  Identical seed and problem give identical output bits;
ties between starts break on lexicographic parameter order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .bb84 import Bb84Params, SystemParams, key_rate
from .errors import InfeasibleStartError
from .leakage import LeakageParams
from .mdi import MdiParams, mdi_key_rate

__all__ = [
    "OptProblem",
    "OptimizerSettings",
    "optimize",
    "optimize_along_distance",
    "bb84_problem",
    "mdi_problem",
    "BB84_BOUNDS",
    "MDI_BOUNDS",
]


@dataclass(frozen=True)
class OptimizerSettings:
    starts: int = 16
    margin: float = 1e-6
    max_iterations: int = 400
    tolerance: float = 1e-10
    seed: int = 20230401

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("at least one start is required")
        if not 0 < self.margin < 1e-2:
            raise ValueError("margin must be a small positive number")


@dataclass(frozen=True)
class OptProblem:
    """Objective to maximise over a box, with a feasibility projection.

    ``project`` maps an arbitrary point in the box onto the constraint set
    (strict inequalities enforced with the margin baked into it) and
    ``feasible`` double-checks membership; the search never evaluates the
    objective outside the projected set.
    """

    objective: object
    bounds: tuple
    project: object
    feasible: object
    names: tuple = ()


def _box_clip(x: np.ndarray, bounds) -> np.ndarray:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return np.minimum(np.maximum(x, lo), hi)


def optimize(problem: OptProblem, seed: int | None = None,
             settings: OptimizerSettings = OptimizerSettings()):
    """Multi-start Nelder-Mead over the projected feasible region.

    Returns ``(best_parameters, best_value)``.  Deterministic for a fixed
    seed and problem.
    """
    if seed is None:
        seed = settings.seed
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in problem.bounds])
    hi = np.array([b[1] for b in problem.bounds])
    dim = lo.size

    starts = [0.5 * (lo + hi)]
    while len(starts) < settings.starts:
        starts.append(lo + rng.random(dim) * (hi - lo))

    feasible_starts = []
    for raw in starts:
        x = problem.project(_box_clip(np.asarray(raw, dtype=float),
                                      problem.bounds))
        if x is not None and problem.feasible(x):
            feasible_starts.append(x)
    if not feasible_starts:
        raise InfeasibleStartError(
            "no feasible starting point inside the given bounds")

    def negated(x):
        y = problem.project(_box_clip(x, problem.bounds))
        if y is None or not problem.feasible(y):
            return 1e30
        return -problem.objective(y)

    candidates = []
    for x0 in feasible_starts:
        res = minimize(negated, x0, method="Nelder-Mead",
                       options={"maxiter": settings.max_iterations,
                                "xatol": 1e-7,
                                "fatol": settings.tolerance,
                                "adaptive": True})
        best = problem.project(_box_clip(np.asarray(res.x), problem.bounds))
        if best is None or not problem.feasible(best):
            continue
        candidates.append((float(problem.objective(best)), tuple(best)))
    for x0 in feasible_starts:
        candidates.append((float(problem.objective(x0)), tuple(x0)))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    value, params = candidates[0]
    return np.asarray(params), value


def optimize_along_distance(problem_factory, distances, seed: int | None = None,
                            settings: OptimizerSettings = OptimizerSettings()):
    """Per-distance optimization warm-started from the previous optimum.

    ``problem_factory(distance_km)`` builds the :class:`OptProblem` at each
    grid point.  The previous best point is prepended to the seeded start
    set, so the sweep tracks the slowly moving optimum without cold-start
    cost.  Returns a list of ``(distance, parameters, value)``.
    """
    results = []
    previous = None
    base_seed = settings.seed if seed is None else seed
    for index, d in enumerate(distances):
        problem = problem_factory(float(d))
        point_seed = base_seed + index
        if previous is None:
            params, value = optimize(problem, point_seed, settings)
        else:
            params, value = _optimize_with_extra_start(
                problem, previous, point_seed, settings)
        results.append((float(d), params, value))
        previous = params
    return results


def _optimize_with_extra_start(problem: OptProblem, extra_start, seed,
                               settings: OptimizerSettings):
    base_params, base_value = optimize(problem, seed, settings)
    candidates = [(base_value, tuple(base_params))]
    x0 = problem.project(_box_clip(np.asarray(extra_start, dtype=float),
                                   problem.bounds))
    if x0 is not None and problem.feasible(x0):
        res = minimize(lambda x: -_safe_objective(problem, x), x0,
                       method="Nelder-Mead",
                       options={"maxiter": settings.max_iterations,
                                "xatol": 1e-7, "fatol": settings.tolerance,
                                "adaptive": True})
        warm = problem.project(_box_clip(np.asarray(res.x), problem.bounds))
        if warm is not None and problem.feasible(warm):
            candidates.append((float(problem.objective(warm)), tuple(warm)))
        candidates.append((float(problem.objective(x0)), tuple(x0)))
    candidates.sort(key=lambda item: (-item[0], item[1]))
    value, params = candidates[0]
    return np.asarray(params), value


def _safe_objective(problem: OptProblem, x):
    y = problem.project(_box_clip(np.asarray(x, dtype=float), problem.bounds))
    if y is None or not problem.feasible(y):
        return -1e30
    return problem.objective(y)


# -- protocol-specific problems --------------------------------------------------

#: Search boxes: intensity ranges matching weak-coherent decoy practice,
#: probabilities kept off the simplex boundary.
BB84_BOUNDS = ((0.05, 1.0), (0.005, 0.5), (0.05, 0.95), (0.05, 0.9), (0.05, 0.95))
MDI_BOUNDS = ((0.05, 1.0), (0.05, 1.0), (0.005, 0.5),
              (0.05, 0.9), (0.05, 0.9), (0.05, 0.9))


def bb84_problem(distance_km: float, sys: SystemParams, leak: LeakageParams,
                 omega: float = 0.0, margin: float = 1e-6,
                 bounds=BB84_BOUNDS) -> OptProblem:
    """Rate maximisation over (mu, nu, p_mu, p_nu, p_z) at fixed omega."""

    def project(x):
        mu, nu, p_mu, p_nu, p_z = x
        nu_lo = max(bounds[1][0], omega + margin)
        nu_hi = min(bounds[1][1], bounds[0][1] - omega - margin,
                    bounds[0][1] - margin)
        if nu_lo > nu_hi:
            return None
        nu = min(max(nu, nu_lo), nu_hi)
        mu_lo = max(bounds[0][0], nu + omega + margin, nu + margin)
        if mu_lo > bounds[0][1]:
            return None
        mu = min(max(mu, mu_lo), bounds[0][1])
        total = p_mu + p_nu
        if total > 1.0 - margin:
            scale = (1.0 - margin) / total
            p_mu *= scale
            p_nu *= scale
        p_mu = min(max(p_mu, margin), 1.0 - 2 * margin)
        p_nu = min(max(p_nu, margin), 1.0 - p_mu - margin)
        p_z = min(max(p_z, margin), 1.0 - margin)
        return np.array([mu, nu, p_mu, p_nu, p_z])

    def feasible(x):
        mu, nu, p_mu, p_nu, p_z = x
        return (mu > nu + omega and mu > nu > omega >= 0.0
                and 0 < p_mu < 1 and 0 < p_nu < 1 and p_mu + p_nu < 1
                and 0 < p_z < 1)

    def objective(x):
        params = Bb84Params(mu=x[0], nu=x[1], omega=omega,
                            p_mu=x[2], p_nu=x[3], p_z=x[4])
        return key_rate(distance_km, sys, params, leak).rate

    return OptProblem(objective, tuple(bounds), project, feasible,
                      ("mu", "nu", "p_mu", "p_nu", "p_z"))


def mdi_problem(distance_km: float, sys: SystemParams, leak: LeakageParams,
                omega: float = 0.0, margin: float = 1e-6,
                bounds=MDI_BOUNDS) -> OptProblem:
    """Rate maximisation over (s, mu, nu, p_s, p_mu, p_nu) at fixed omega."""

    def project(x):
        s, mu, nu, p_s, p_mu, p_nu = x
        s = min(max(s, bounds[0][0]), bounds[0][1])
        nu_lo = max(bounds[2][0], omega + margin)
        nu_hi = min(bounds[2][1], bounds[1][1] - margin)
        if nu_lo > nu_hi:
            return None
        nu = min(max(nu, nu_lo), nu_hi)
        mu_lo = max(bounds[1][0], nu + margin)
        if mu_lo > bounds[1][1]:
            return None
        mu = min(max(mu, mu_lo), bounds[1][1])
        total = p_s + p_mu + p_nu
        if total > 1.0:
            scale = 1.0 / total
            p_s *= scale
            p_mu *= scale
            p_nu *= scale
        p_s = min(max(p_s, margin), 1.0 - 2 * margin)
        p_mu = min(max(p_mu, margin), 1.0 - p_s - margin)
        p_nu = min(max(p_nu, margin), max(1.0 - p_s - p_mu, margin))
        return np.array([s, mu, nu, p_s, p_mu, p_nu])

    def feasible(x):
        s, mu, nu, p_s, p_mu, p_nu = x
        return (s > 0 and mu > nu > omega >= 0.0
                and 0 < p_s < 1 and 0 < p_mu < 1 and 0 < p_nu < 1
                and p_s + p_mu + p_nu <= 1.0)

    def objective(x):
        params = MdiParams(s=x[0], mu=x[1], nu=x[2], omega=omega,
                           p_s=x[3], p_mu=x[4], p_nu=x[5])
        return mdi_key_rate(distance_km, sys, params, leak).rate

    return OptProblem(objective, tuple(bounds), project, feasible,
                      ("s", "mu", "nu", "p_s", "p_mu", "p_nu"))
