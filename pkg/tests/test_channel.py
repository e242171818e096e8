import math

import numpy as np
import pytest

from widespec.channel import (
    AttackCase,
    AttackChannelSpec,
    ChainLink,
    EveBudget,
    backflash_mu_leak,
    compose,
    margin_orders,
    power_at_target,
    trojan_mu_out,
    worst_case,
)
from widespec.errors import BandCoverageError, DomainError
from widespec.ingestion import ComponentRecord
from widespec.spectral import Band, Spectrum, Unit

GRID = np.arange(400.0, 2301.0)
BAND = Band(400.0, 2300.0)
BUDGET = EveBudget(photon_rate=1.9e20, max_cw_power=15.6, clock_rate=1.25e9)


def record(name, inward, outward=None, grid=GRID):
    inw = Spectrum(grid, np.broadcast_to(np.asarray(inward, float),
                                         grid.shape).copy(), Unit.DB)
    if outward is None:
        out = inw
    else:
        out = Spectrum(grid, np.broadcast_to(np.asarray(outward, float),
                                             grid.shape).copy(), Unit.DB)
    return ComponentRecord(name, inw, out, np.zeros(grid.size, bool), {})


def spec_for(case, chain, filter_record=None, band=BAND):
    filt = filter_record if filter_record is not None else record("filt", 0.0)
    return AttackChannelSpec(filt, chain, case, band)


class TestCompose:
    def test_empty_chain_round_trip_doubles_filter(self):
        spec = spec_for(AttackCase.ROUND_TRIP, [], record("f", -10.0))
        gamma = compose(spec)
        assert np.allclose(gamma.values, -20.0)

    def test_single_component_each_case(self):
        comp = record("c", -5.0, -7.0)
        for case, expected in ((AttackCase.INJECT, -5.0),
                               (AttackCase.EMIT, -7.0),
                               (AttackCase.ROUND_TRIP, -12.0)):
            gamma = compose(spec_for(case, [comp]))
            assert np.allclose(gamma.values, expected)

    def test_round_trip_equals_inject_plus_emit_exactly(self):
        rng = np.random.default_rng(61)
        chain = [record(f"c{i}", rng.uniform(-40.0, 0.0, GRID.size),
                        rng.uniform(-40.0, 0.0, GRID.size)) for i in range(4)]
        filt = record("f", rng.uniform(-20.0, 0.0, GRID.size))
        rt = compose(spec_for(AttackCase.ROUND_TRIP, chain, filt))
        inj = compose(spec_for(AttackCase.INJECT, chain, filt))
        emi = compose(spec_for(AttackCase.EMIT, chain, filt))
        assert np.array_equal(rt.values, inj.values + emi.values)

    def test_matches_linear_product_oracle(self):
        rng = np.random.default_rng(67)
        chain = [record(f"c{i}", rng.uniform(-40.0, 2.0, GRID.size),
                        rng.uniform(-40.0, 2.0, GRID.size)) for i in range(3)]
        filt = record("f", rng.uniform(-30.0, 0.0, GRID.size))
        gamma = compose(spec_for(AttackCase.ROUND_TRIP, chain, filt))
        product = 10.0 ** (2.0 * np.interp(gamma.grid, GRID,
                                           filt.inward.values) / 10.0)
        for c in chain:
            for direction in (c.inward, c.outward):
                clipped = np.minimum(np.interp(gamma.grid, GRID,
                                               direction.values), 0.0)
                product *= 10.0 ** (clipped / 10.0)
        assert np.allclose(10.0 ** (gamma.values / 10.0), product, rtol=1e-9)

    def test_gain_clipped_to_zero_db(self):
        comp = record("amp", 3.0)
        gamma = compose(spec_for(AttackCase.INJECT, [comp]))
        assert np.all(gamma.values == 0.0)

    def test_added_component_never_increases_gamma(self):
        rng = np.random.default_rng(71)
        chain = [record("a", rng.uniform(-30.0, 0.0, GRID.size))]
        extra = record("b", rng.uniform(-20.0, 0.0, GRID.size))
        base = compose(spec_for(AttackCase.INJECT, chain))
        more = compose(spec_for(AttackCase.INJECT, chain + [extra]))
        assert np.all(more.values <= base.values + 1e-12)

    def test_swapped_link_uses_other_direction(self):
        comp = record("cir", -5.0, -50.0)
        direct = compose(spec_for(AttackCase.INJECT, [ChainLink(comp)]))
        swapped = compose(spec_for(AttackCase.INJECT,
                                   [ChainLink(comp, swap_directions=True)]))
        assert np.allclose(direct.values, -5.0)
        assert np.allclose(swapped.values, -50.0)

    def test_missing_coverage_rejected(self):
        short_grid = np.arange(500.0, 2001.0)
        comp = record("short", np.full(short_grid.size, -3.0), grid=short_grid)
        with pytest.raises(BandCoverageError, match="short"):
            compose(spec_for(AttackCase.INJECT, [comp]))


class TestWorstCase:
    def test_monotone_ramp_peaks_at_top(self):
        gamma = Spectrum(GRID, -50.0 + (GRID - 400.0) / 100.0, Unit.DB)
        wl, value = worst_case(gamma, BAND)
        assert wl == 2300.0
        assert value == pytest.approx(-31.0)

    def test_tie_prefers_lowest_wavelength(self):
        values = np.full(GRID.size, -60.0)
        values[GRID == 1200.0] = -20.0
        values[GRID == 1900.0] = -20.0
        wl, value = worst_case(Spectrum(GRID, values, Unit.DB), BAND)
        assert wl == 1200.0 and value == -20.0

    def test_two_bump_fixture_matches_scan_oracle(self):
        values = (-80.0 + 35.0 * np.exp(-((GRID - 1200.0) / 60.0) ** 2)
                  + 30.0 * np.exp(-((GRID - 1900.0) / 40.0) ** 2))
        gamma = Spectrum(GRID, values, Unit.DB)
        wl, value = worst_case(gamma, BAND)
        best = None
        for lam, v in zip(gamma.grid, gamma.values):
            if best is None or v > best[1]:
                best = (lam, v)
        assert (wl, value) == best

    def test_band_restriction(self):
        values = np.full(GRID.size, -60.0)
        values[GRID == 450.0] = -1.0
        values[GRID == 1500.0] = -30.0
        gamma = Spectrum(GRID, values, Unit.DB)
        wl, _ = worst_case(gamma, Band(1000.0, 2300.0))
        assert wl == 1500.0

    def test_permutation_invariance_of_chain(self):
        rng = np.random.default_rng(73)
        comps = [record(f"c{i}", rng.uniform(-30.0, 0.0, GRID.size),
                        rng.uniform(-30.0, 0.0, GRID.size)) for i in range(3)]
        wl1, v1 = worst_case(compose(spec_for(AttackCase.ROUND_TRIP, comps)),
                             BAND)
        wl2, v2 = worst_case(compose(spec_for(AttackCase.ROUND_TRIP,
                                              comps[::-1])), BAND)
        assert wl1 == wl2 and v1 == pytest.approx(v2, abs=1e-12)


class TestTrojanMuOut:
    def test_zero_transmittance(self):
        assert trojan_mu_out(0.0, BUDGET) == 0.0

    def test_reference_values(self):
        assert trojan_mu_out(1e-20, BUDGET) == pytest.approx(1.52e-9)
        assert trojan_mu_out(1e-13, BUDGET) == pytest.approx(1.52e-2)

    def test_linear_in_gamma_and_rate(self):
        base = trojan_mu_out(1e-15, BUDGET)
        assert trojan_mu_out(2e-15, BUDGET) == pytest.approx(2 * base)
        double_rate = EveBudget(2 * BUDGET.photon_rate, BUDGET.max_cw_power,
                                BUDGET.clock_rate)
        assert trojan_mu_out(1e-15, double_rate) == pytest.approx(2 * base)
        double_clock = EveBudget(BUDGET.photon_rate, BUDGET.max_cw_power,
                                 2 * BUDGET.clock_rate)
        assert trojan_mu_out(1e-15, double_clock) == pytest.approx(base / 2)

    def test_domain_check(self):
        with pytest.raises(DomainError):
            trojan_mu_out(1.5, BUDGET)


class TestPowerBudget:
    def gamma_fixture(self):
        # Injection channel whose transmittance at 405 nm and 532 nm matches
        # the published worst-case estimates for a bare source chain.
        values = np.full(GRID.size, -200.0)
        values[GRID == 405.0] = 10.0 * math.log10(2.12e-11)
        values[GRID == 532.0] = 10.0 * math.log10(4.6e-16)
        comp = record("chain", values)
        return spec_for(AttackCase.INJECT, [comp])

    def test_published_power_levels(self):
        spec = self.gamma_fixture()
        _, p405 = power_at_target(spec, BUDGET, 405.0)
        _, p532 = power_at_target(spec, BUDGET, 532.0)
        assert p405 == pytest.approx(3.3e-10, rel=0.01)
        assert p532 == pytest.approx(7.2e-15, rel=0.01)

    def test_worst_wavelength_is_405(self):
        wl, watts = power_at_target(self.gamma_fixture(), BUDGET)
        assert wl == 405.0
        assert watts == pytest.approx(15.6 * 2.12e-11, rel=1e-9)

    def test_unity_channel_returns_full_budget(self):
        spec = spec_for(AttackCase.INJECT, [record("open", 0.0)])
        _, watts = power_at_target(spec, BUDGET)
        assert watts == pytest.approx(BUDGET.max_cw_power)

    def test_requires_inject_case(self):
        spec = spec_for(AttackCase.ROUND_TRIP, [])
        with pytest.raises(DomainError):
            power_at_target(spec, BUDGET)


class TestMarginOrders:
    def test_published_margins(self):
        assert margin_orders(3.3e-10, 3e-9) == pytest.approx(0.9586, abs=1e-3)
        assert margin_orders(7.2e-15, 4e-4) == pytest.approx(10.7447, abs=1e-3)

    def test_equal_power_is_zero_margin(self):
        assert margin_orders(1e-9, 1e-9) == 0.0

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            margin_orders(0.0, 1e-9)


class TestBackflash:
    def emission(self, mass=0.1):
        shape = np.exp(-((GRID - 1150.0) / 200.0) ** 2)
        shape *= mass / np.trapezoid(shape, GRID)
        return Spectrum(GRID, shape, Unit.DENSITY_PER_NM)

    def test_unity_channel_integrates_to_mass(self):
        gamma = Spectrum(GRID, np.zeros(GRID.size), Unit.DB)
        emission = self.emission(0.1)
        mass = np.trapezoid(emission.values, GRID)
        assert backflash_mu_leak(gamma, emission) == pytest.approx(mass,
                                                                   rel=1e-12)

    def test_constant_attenuation_scales(self):
        gamma = Spectrum(GRID, np.full(GRID.size, -30.0), Unit.DB)
        emission = self.emission(0.1)
        mass = np.trapezoid(emission.values, GRID)
        assert backflash_mu_leak(gamma, emission) == pytest.approx(
            1e-3 * mass, rel=1e-12)

    def test_triangular_against_refined_oracle(self):
        tri = np.clip(1.0 - np.abs(GRID - 1400.0) / 300.0, 0.0, None)
        tri *= 0.1 / np.trapezoid(tri, GRID)
        emission = Spectrum(GRID, tri, Unit.DENSITY_PER_NM)
        gamma = Spectrum(GRID, -40.0 + (GRID - 400.0) / 190.0, Unit.DB)
        coarse = backflash_mu_leak(gamma, emission)
        fine_grid = np.linspace(400.0, 2300.0, GRID.size * 100)
        g = 10.0 ** (np.interp(fine_grid, GRID, gamma.values) / 10.0)
        s = np.interp(fine_grid, GRID, tri)
        oracle = np.trapezoid(g * s, fine_grid)
        assert coarse == pytest.approx(oracle, rel=1e-6)

    def test_linear_in_emission(self):
        gamma = Spectrum(GRID, -30.0 + (GRID - 400.0) / 200.0, Unit.DB)
        one = backflash_mu_leak(gamma, self.emission(0.1))
        two = backflash_mu_leak(gamma, self.emission(0.2))
        assert two == pytest.approx(2 * one, rel=1e-12)

    def test_monotone_in_gamma(self):
        emission = self.emission(0.1)
        low = Spectrum(GRID, np.full(GRID.size, -40.0), Unit.DB)
        high = Spectrum(GRID, np.full(GRID.size, -20.0), Unit.DB)
        assert backflash_mu_leak(high, emission) > backflash_mu_leak(low,
                                                                     emission)

    def test_negative_density_rejected(self):
        values = np.full(GRID.size, 1e-4)
        values[5] = -1e-6
        with pytest.raises((DomainError, ValueError)):
            backflash_mu_leak(
                Spectrum(GRID, np.zeros(GRID.size), Unit.DB),
                Spectrum(GRID, values, Unit.DENSITY_PER_NM))