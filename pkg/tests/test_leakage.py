import math

import numpy as np
import pytest

from oracles import phase_error_highprec
from widespec.errors import ConfigError, DegenerateYieldError, DomainError
from widespec.leakage import (
    DEFAULT_MODEL,
    LeakageParams,
    available_models,
    binary_entropy,
    decoy_deviation,
    delta_prime,
    phase_error_with_coin,
    q_weight,
)


class TestPhaseErrorWithCoin:
    def test_zero_imbalance_is_identity(self):
        assert phase_error_with_coin(0.02, 0.0) == 0.02
        for e in np.linspace(0.0, 0.5, 101):
            assert phase_error_with_coin(float(e), 0.0) == float(e)

    def test_zero_bit_error_keeps_middle_term(self):
        assert phase_error_with_coin(0.0, 0.01) == pytest.approx(
            4 * 0.01 * 0.99, abs=1e-15)

    def test_reference_point_against_high_precision(self):
        value = phase_error_with_coin(0.02, 0.001)
        assert value == pytest.approx(0.04150065850818302, abs=1e-15)
        assert value == pytest.approx(phase_error_highprec(0.02, 0.001),
                                      abs=1e-14)

    def test_caps_at_half(self):
        assert phase_error_with_coin(0.45, 0.4) == 0.5

    def test_monotone_in_imbalance(self):
        for e in (0.0, 0.01, 0.1, 0.3, 0.49):
            previous = -1.0
            for d in np.linspace(0.0, 0.5, 201):
                value = phase_error_with_coin(e, float(d))
                assert value >= previous - 1e-12
                previous = value

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            phase_error_with_coin(0.6, 0.0)
        with pytest.raises(DomainError):
            phase_error_with_coin(0.1, 0.6)
        with pytest.raises(DomainError):
            phase_error_with_coin(-0.1, 0.0)


class TestDeltaPrime:
    def test_no_leak_balanced_coin(self):
        assert delta_prime(LeakageParams(0.0), 0.5) == 0.0
        assert delta_prime(LeakageParams(0.0), 1e-6) == 0.0

    def test_decreasing_in_yield(self):
        leak = LeakageParams(1e-5)
        assert delta_prime(leak, 0.1) >= delta_prime(leak, 1.0)

    def test_strictly_increasing_triple(self):
        values = [delta_prime(LeakageParams(m), 1.0)
                  for m in (1e-9, 1e-6, 1e-3)]
        assert values[0] < values[1] < values[2]
        assert values == pytest.approx(
            [4.9999999975e-10, 4.999997500000834e-07, 0.0004997500833125042],
            rel=1e-12)

    def test_cap_at_half(self):
        assert delta_prime(LeakageParams(10.0), 1e-9) == 0.5

    def test_zero_yield_degenerate(self):
        with pytest.raises(DegenerateYieldError):
            delta_prime(LeakageParams(1e-6), 0.0)


class TestDecoyDeviation:
    def test_zero_leak_zero_everywhere(self):
        dev = decoy_deviation(LeakageParams(0.0))
        assert dev.is_zero()
        for n in range(4):
            assert dev.d(n, 0.6, 0.1, 0.0) == 0.0

    def test_monotone_in_leak(self):
        previous = -1.0
        for mu_out in (0.0, 1e-6, 1e-3):
            value = decoy_deviation(LeakageParams(mu_out)).d(1, 0.6, 0.1, 0.0)
            assert value >= previous
            previous = value

    def test_regression_table(self):
        # Default model at mu_out = 1e-6, frozen: the deviation is uniform
        # over photon number and settings and equals 1 - exp(-mu_out).
        dev = decoy_deviation(LeakageParams(1e-6))
        expected = 9.999995000001667e-07
        for n in range(4):
            for (j, k, l) in ((0.6, 0.1, 0.0), (0.1, 0.6, 0.6), (0.0, 0.6, 0.1)):
                assert dev.d(n, j, k, l) == pytest.approx(expected, rel=1e-12)

    def test_bounded_by_one(self):
        dev = decoy_deviation(LeakageParams(50.0))
        assert dev.d(0, 0.6, 0.1, 0.0) <= 1.0

    def test_unknown_model_rejected(self):
        with pytest.raises(ConfigError, match="available"):
            LeakageParams(1e-6, "no-such-model")

    def test_default_model_registered(self):
        assert DEFAULT_MODEL in available_models()


class TestQWeight:
    def test_symmetric_settings(self):
        for n in range(5):
            assert q_weight(n, 0.2, 0.2, 0.3, 0.3) == pytest.approx(0.5)

    def test_reference_value(self):
        assert q_weight(0, 0.1, 0.2, 0.5, 0.5) == pytest.approx(
            math.exp(-0.1) / (math.exp(-0.1) + math.exp(-0.2)), rel=1e-12)
        assert q_weight(0, 0.1, 0.2, 0.5, 0.5) == pytest.approx(0.525, abs=5e-4)

    def test_complement_sums_to_one(self):
        rng = np.random.default_rng(79)
        for _ in range(200):
            n = int(rng.integers(0, 8))
            k, l = rng.uniform(0.01, 1.0, 2)
            p_k, p_l = rng.uniform(0.05, 0.9, 2)
            q1 = q_weight(n, k, l, p_k, p_l)
            q2 = q_weight(n, l, k, p_l, p_k)
            assert 0.0 < q1 < 1.0
            assert q1 + q2 == pytest.approx(1.0, abs=1e-12)

    def test_vacuum_degenerate(self):
        with pytest.raises(DegenerateYieldError):
            q_weight(2, 0.0, 0.0, 0.5, 0.5)

    def test_vacuum_setting_zero_weight(self):
        assert q_weight(3, 0.0, 0.2, 0.5, 0.5) == 0.0


class TestBinaryEntropy:
    def test_limits(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            binary_entropy(-0.01)
