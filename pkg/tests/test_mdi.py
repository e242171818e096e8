import math

import numpy as np
import pytest

from oracles import (
    fock_mdi_gains,
    fock_true_pair_yields,
    mdi_gains_quadrature,
    mdi_rate_oracle,
)
from widespec.bb84 import SystemParams, TABLE_PARAMS
from widespec.errors import ConfigError, DomainError
from widespec.leakage import LeakageParams, decoy_deviation
from widespec.mdi import (
    MdiParams,
    arm_efficiency,
    mdi_decoy_bounds,
    mdi_key_rate,
    mdi_max_distance,
    observe_decoy_grid,
    simulate_mdi_channel,
)

PARAMS = MdiParams(s=0.4, mu=0.3, nu=0.05, omega=0.0,
                   p_s=0.5, p_mu=0.25, p_nu=0.125)
NO_LEAK = LeakageParams(0.0)


class TestChannelModel:
    def test_vacuum_limit_is_dark_count_driven(self):
        obs = simulate_mdi_channel(0.0, TABLE_PARAMS, 0.0, 0.0)
        pd = TABLE_PARAMS.background_rate
        floor = 2.0 * pd * pd * (1.0 - pd) ** 2
        assert obs.q_z == pytest.approx(floor, rel=1e-9)
        assert obs.q_x == pytest.approx(floor, rel=1e-9)
        assert obs.eq_z / obs.q_z == pytest.approx(0.5, rel=1e-9)
        assert obs.eq_x / obs.q_x == pytest.approx(0.5, rel=1e-9)

    def test_gain_monotone_in_distance(self):
        gains = [simulate_mdi_channel(d, TABLE_PARAMS, 0.4, 0.4).q_z
                 for d in (0.0, 20.0, 50.0, 100.0, 150.0)]
        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_matches_fock_expansion_oracle(self):
        distance, s = 20.0, 0.4
        eta = arm_efficiency(distance, TABLE_PARAMS)
        obs = simulate_mdi_channel(distance, TABLE_PARAMS, s, s)
        oracle = fock_mdi_gains(s * eta, s * eta,
                                TABLE_PARAMS.background_rate,
                                TABLE_PARAMS.misalignment, n_cap=6)
        for mine, theirs in zip((obs.q_z, obs.eq_z, obs.q_x, obs.eq_x),
                                oracle):
            assert mine == pytest.approx(theirs, rel=1e-6)

    def test_matches_phase_quadrature_oracle(self):
        eta = arm_efficiency(35.0, TABLE_PARAMS)
        obs = simulate_mdi_channel(35.0, TABLE_PARAMS, 0.3, 0.05)
        oracle = mdi_gains_quadrature(0.3 * eta, 0.05 * eta,
                                      TABLE_PARAMS.background_rate,
                                      TABLE_PARAMS.misalignment)
        for mine, theirs in zip((obs.q_z, obs.eq_z, obs.q_x, obs.eq_x),
                                oracle):
            assert mine == pytest.approx(theirs, rel=1e-11)

    def test_symmetric_in_arms_bit_for_bit(self):
        a = simulate_mdi_channel(40.0, TABLE_PARAMS, 0.3, 0.05)
        b = simulate_mdi_channel(40.0, TABLE_PARAMS, 0.05, 0.3)
        assert a == b

    def test_gains_are_probabilities(self):
        rng = np.random.default_rng(83)
        for _ in range(50):
            d = rng.uniform(0.0, 200.0)
            ia, ib = rng.uniform(0.0, 1.0, 2)
            obs = simulate_mdi_channel(d, TABLE_PARAMS, ia, ib)
            for gain, err in ((obs.q_z, obs.eq_z), (obs.q_x, obs.eq_x)):
                assert 0.0 <= gain <= 1.0
                assert 0.0 <= err <= gain

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            simulate_mdi_channel(-1.0, TABLE_PARAMS, 0.1, 0.1)
        with pytest.raises(DomainError):
            simulate_mdi_channel(1.0, TABLE_PARAMS, -0.1, 0.1)


class TestDecoyBounds:
    def test_sound_against_fock_truth(self):
        for distance in (0.0, 25.0, 60.0, 110.0):
            grid = observe_decoy_grid(distance, TABLE_PARAMS, PARAMS)
            bounds = mdi_decoy_bounds(grid, PARAMS, decoy_deviation(NO_LEAK))
            eta = arm_efficiency(distance, TABLE_PARAMS)
            y11_true, e11_true = fock_true_pair_yields(
                eta, TABLE_PARAMS.background_rate, TABLE_PARAMS.misalignment)
            assert bounds.y11_lower <= y11_true + 1e-12
            assert bounds.e11_upper >= e11_true - 1e-12

    def test_sound_over_randomized_draws(self):
        rng = np.random.default_rng(89)
        for _ in range(30):
            sys = SystemParams(
                alpha_db_km=rng.uniform(0.16, 0.28),
                background_rate=10.0 ** rng.uniform(-8.0, -6.0),
                misalignment=rng.uniform(0.005, 0.04),
                detector_eff=rng.uniform(0.15, 0.6),
            )
            mu = rng.uniform(0.2, 0.5)
            nu = rng.uniform(0.03, 0.12)
            params = MdiParams(s=rng.uniform(0.2, 0.6), mu=mu, nu=nu,
                               omega=0.0)
            distance = rng.uniform(0.0, 100.0)
            grid = observe_decoy_grid(distance, sys, params)
            bounds = mdi_decoy_bounds(grid, params, decoy_deviation(NO_LEAK))
            y11_true, e11_true = fock_true_pair_yields(
                arm_efficiency(distance, sys), sys.background_rate,
                sys.misalignment)
            assert bounds.y11_lower <= y11_true + 1e-12
            if bounds.y11_lower > 0:
                assert bounds.e11_upper >= e11_true - 1e-12

    def test_noiseless_error_bound_tracks_misalignment(self):
        # With darks negligible and a weak decoy, the error bound sits just
        # above the misalignment floor.
        sys = SystemParams(background_rate=1e-12)
        params = MdiParams(s=0.4, mu=0.2, nu=0.01, omega=0.0)
        grid = observe_decoy_grid(10.0, sys, params)
        bounds = mdi_decoy_bounds(grid, params, decoy_deviation(NO_LEAK))
        _, e11_true = fock_true_pair_yields(arm_efficiency(10.0, sys),
                                            sys.background_rate,
                                            sys.misalignment)
        assert e11_true == pytest.approx(sys.misalignment, rel=1e-3)
        assert bounds.e11_upper >= e11_true
        assert bounds.e11_upper <= sys.misalignment + 0.02

    def test_widening_monotone_and_both_arms(self):
        grid = observe_decoy_grid(30.0, TABLE_PARAMS, PARAMS)
        previous = None
        for mu_out in (0.0, 1e-10, 1e-9, 1e-8):
            bounds = mdi_decoy_bounds(grid, PARAMS,
                                      decoy_deviation(LeakageParams(mu_out)))
            if previous is not None:
                assert bounds.y11_lower <= previous.y11_lower + 1e-15
                assert bounds.e11_upper >= previous.e11_upper - 1e-15
            previous = bounds

    def test_both_arm_widening_no_tighter_than_single(self):
        # Reimplement the iterated estimate with the deviation applied to
        # one arm only; the production two-arm bound must not beat it.
        from widespec.bb84 import leakage_widening

        grid = observe_decoy_grid(30.0, TABLE_PARAMS, PARAMS)
        dev = decoy_deviation(LeakageParams(1e-9))
        mu, nu, om = PARAMS.decoy_intensities()
        den = mu * nu * (mu - nu)
        sigma = {nu: mu * mu, mu: -nu * nu, om: nu * nu - mu * mu}

        def iterated(widen_arm_b):
            total = 0.0
            for a in (mu, nu, om):
                for b in (mu, nu, om):
                    coeff = sigma[a] * sigma[b]
                    center = grid[(a, b)].q_x * math.exp(a + b)
                    u = leakage_widening(dev, a, mu) * math.exp(b)
                    if widen_arm_b:
                        u += math.exp(a) * leakage_widening(dev, b, mu)
                    total += coeff * (center - u if coeff >= 0 else center + u)
            return total / (den * den)

        assert iterated(widen_arm_b=True) <= iterated(widen_arm_b=False) + 1e-18

    def test_requires_vacuum_weakest_setting(self):
        params = MdiParams(s=0.4, mu=0.3, nu=0.1, omega=0.01)
        grid = {(a, b): simulate_mdi_channel(10.0, TABLE_PARAMS, a, b)
                for a in params.decoy_intensities()
                for b in params.decoy_intensities()}
        with pytest.raises(ConfigError, match="vacuum"):
            mdi_decoy_bounds(grid, params, decoy_deviation(NO_LEAK))


class TestKeyRate:
    def test_matches_independent_reimplementation(self):
        for distance in np.linspace(0.0, 135.0, 10):
            mine = mdi_key_rate(float(distance), TABLE_PARAMS, PARAMS, NO_LEAK)
            oracle = mdi_rate_oracle(
                float(distance), TABLE_PARAMS.alpha_db_km,
                TABLE_PARAMS.background_rate, TABLE_PARAMS.misalignment,
                TABLE_PARAMS.detector_eff, TABLE_PARAMS.ec_inefficiency,
                PARAMS.s, PARAMS.mu, PARAMS.nu, PARAMS.p_s)
            if oracle == 0.0:
                assert mine.rate == 0.0
            else:
                assert mine.rate == pytest.approx(oracle, rel=1e-10)

    def test_zero_yield_zero_rate(self):
        point = mdi_key_rate(50.0, TABLE_PARAMS, PARAMS, LeakageParams(1e-3))
        assert point.rate == 0.0

    def test_rate_non_increasing_in_leak(self):
        rates = [mdi_key_rate(40.0, TABLE_PARAMS, PARAMS,
                              LeakageParams(m)).rate
                 for m in (0.0, 1e-11, 1e-10, 1e-9, 1e-8)]
        assert all(a >= b - 1e-18 for a, b in zip(rates, rates[1:]))

    def test_diagnostics(self):
        point = mdi_key_rate(30.0, TABLE_PARAMS, PARAMS, LeakageParams(1e-10))
        for key in ("y11_lower", "e11_upper", "q_z_ss", "e_z_ss",
                    "delta_prime", "phase_error"):
            assert key in point.diagnostics
        assert point.diagnostics["delta_prime"] > 0


class TestMaxDistance:
    def test_bisection_brackets_the_cliff(self):
        d0 = mdi_max_distance(TABLE_PARAMS, PARAMS, NO_LEAK)
        assert d0 > 50.0
        before = mdi_key_rate(d0 - 0.02, TABLE_PARAMS, PARAMS, NO_LEAK).rate
        after = mdi_key_rate(d0 + 0.02, TABLE_PARAMS, PARAMS, NO_LEAK).rate
        assert before > 1e-15
        assert after <= 1e-15

    def test_extreme_leak(self):
        assert mdi_max_distance(TABLE_PARAMS, PARAMS,
                                LeakageParams(1e-2)) == 0.0

    def test_non_increasing_in_leak(self):
        values = [mdi_max_distance(TABLE_PARAMS, PARAMS, LeakageParams(m))
                  for m in (0.0, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7)]
        assert all(a >= b for a, b in zip(values, values[1:]))
