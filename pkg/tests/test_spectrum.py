import math

import numpy as np
import pytest

from qpmdesign import (
    GaussianPmf,
    JointSpectrum,
    PumpEnvelope,
    QpmError,
    build_jsa,
    design_domain_by_domain,
    design_periodic,
    gaussian_erf_target,
    optimize_pump_bandwidth,
    pmf_width,
    purity_from_singular_values,
    schmidt,
)
from conftest import make_linear_spec, make_symmetric_linear

LC = 23e-6


@pytest.fixture(scope="module")
def model():
    return make_symmetric_linear()


@pytest.fixture(scope="module")
def spec():
    return make_linear_spec()


def tau_a(model):
    return model.tau_p - model.tau_s


class TestPmfWidth:
    def test_periodic_matches_sinc_half_power_width(self, model, spec):
        n = 100
        g = design_periodic(n, LC)
        L = g.length
        width_sig = pmf_width(g, model, spec)
        slope = abs(model.tau_i - model.tau_s)  # antidiagonal d(dk)/dt
        width_dk = width_sig * slope
        assert width_dk == pytest.approx(2.0 * 2.783115 / L, rel=2e-3)

    def test_doubling_length_halves_width(self, model, spec):
        w1 = pmf_width(design_periodic(100, LC), model, spec)
        w2 = pmf_width(design_periodic(200, LC), model, spec)
        assert w2 == pytest.approx(0.5 * w1, rel=2e-3)

    def test_engineered_width_same_order_as_periodic(self, model, spec):
        # the engineered half-power width settles ~1.33x the sinc width
        # (ideal Gaussian would be 1.20x; design ripple shifts the crossings)
        n = 88
        periodic = design_periodic(n, LC)
        engineered = design_domain_by_domain(
            gaussian_erf_target(n * LC), n, LC).grating
        wp = pmf_width(periodic, model, spec)
        we = pmf_width(engineered, model, spec)
        assert abs(we - wp) < 0.4 * wp

    def test_flat_pmf_in_window_is_an_error(self, model, spec):
        wide = GaussianPmf(delta_k0=model.k0, sigma_z=1e-6)  # ~flat locally
        with pytest.raises(QpmError, match="half-power"):
            pmf_width(wide, model, spec, scan_half_width=10.0)


class TestBuildJsa:
    def test_flat_pump_limit_constant_along_pump_direction(self, model, spec):
        g = design_periodic(60, LC)
        pump = PumpEnvelope(spec.omega_pump, math.inf)
        js = build_jsa(g, model, spec, pump, grid_n=48)
        f = js.amplitude
        # symmetric affine model: delta_k depends on w_s - w_i only, so the
        # JSA is constant along diagonal steps (the pump direction)
        np.testing.assert_allclose(f[1:, 1:], f[:-1, :-1], rtol=1e-10)

    def test_normalisation_integrates_to_one(self, model, spec):
        g = design_periodic(40, LC)
        pump = PumpEnvelope(spec.omega_pump, 1e13)
        js = build_jsa(g, model, spec, pump, grid_n=64)
        total = (np.sum(np.abs(js.amplitude) ** 2)
                 * js.d_omega_signal * js.d_omega_idler)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_matched_gaussian_is_separable(self, model, spec):
        sigma_z = 5e-4
        surrogate = GaussianPmf(delta_k0=model.k0, sigma_z=sigma_z)
        matched = 1.0 / (sigma_z * abs(tau_a(model)))
        pump = PumpEnvelope(spec.omega_pump, matched)
        js = build_jsa(surrogate, model, spec, pump)
        purity = schmidt(js).purity
        assert purity >= 1.0 - 1e-4

    def test_small_grid_rejected(self, model, spec):
        g = design_periodic(40, LC)
        pump = PumpEnvelope(spec.omega_pump, 1e13)
        with pytest.raises(QpmError, match="32"):
            build_jsa(g, model, spec, pump, grid_n=16)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(QpmError, match="shape"):
            JointSpectrum(np.linspace(0, 1, 4), np.linspace(0, 1, 4),
                          np.zeros((3, 4), dtype=complex))


class TestSchmidt:
    def test_rank_one_is_pure(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=32) + 1j * rng.normal(size=32)
        v = rng.normal(size=32) + 1j * rng.normal(size=32)
        js = JointSpectrum(np.linspace(1, 2, 32), np.linspace(1, 2, 32),
                           np.outer(u, v))
        assert schmidt(js).purity == pytest.approx(1.0, abs=1e-12)

    def test_two_equal_modes_give_half(self):
        f = np.zeros((16, 16), dtype=complex)
        f[0, 0] = 1.0
        f[1, 1] = 1.0
        js = JointSpectrum(np.linspace(1, 2, 16), np.linspace(1, 2, 16), f)
        result = schmidt(js)
        assert result.purity == pytest.approx(0.5, abs=1e-14)
        assert result.schmidt_number == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(result.coefficients[:2], 1 / math.sqrt(2))

    def test_svd_purity_matches_gram_trace(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            m = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
            js = JointSpectrum(np.linspace(1, 2, 50), np.linspace(1, 2, 50), m)
            p_svd = schmidt(js).purity
            gram = m.conj().T @ m
            p_gram = float(np.sum(np.abs(gram) ** 2) / np.trace(gram).real ** 2)
            assert abs(p_svd - p_gram) < 1e-10

    def test_purity_invariant_under_rescaling(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(24, 24)) + 1j * rng.normal(size=(24, 24))
        axes = np.linspace(1, 2, 24)
        base = schmidt(JointSpectrum(axes, axes, m)).purity
        for factor in (0.25, 3.0 + 4.0j, 1e6j):
            scaled = schmidt(JointSpectrum(axes, axes, factor * m)).purity
            assert scaled == pytest.approx(base, rel=1e-12)

    def test_purity_invariant_under_transpose(self):
        rng = np.random.default_rng(13)
        m = rng.normal(size=(20, 30)) + 1j * rng.normal(size=(20, 30))
        js = JointSpectrum(np.linspace(1, 2, 20), np.linspace(1, 2, 30), m)
        assert schmidt(js.transposed()).purity == pytest.approx(
            schmidt(js).purity, rel=1e-12)

    def test_zero_matrix_rejected(self):
        js = JointSpectrum(np.linspace(1, 2, 8), np.linspace(1, 2, 8),
                           np.zeros((8, 8), dtype=complex))
        with pytest.raises(QpmError):
            schmidt(js)
        with pytest.raises(QpmError):
            purity_from_singular_values(np.zeros(4))

    def test_coefficients_descend_and_normalise(self, model, spec):
        g = design_periodic(60, LC)
        pump = PumpEnvelope(spec.omega_pump, 1e13)
        js = build_jsa(g, model, spec, pump, grid_n=64)
        result = schmidt(js)
        b = result.coefficients
        assert np.all(np.diff(b) <= 1e-15)
        assert np.sum(b ** 2) == pytest.approx(1.0, abs=1e-12)
        assert 1.0 / result.purity == pytest.approx(result.schmidt_number)


class TestPumpOptimisation:
    def test_recovers_matched_bandwidth_for_gaussian(self, model, spec):
        sigma_z = 5e-4
        surrogate = GaussianPmf(delta_k0=model.k0, sigma_z=sigma_z)
        matched = 1.0 / (sigma_z * abs(tau_a(model)))
        bw, purity = optimize_pump_bandwidth(surrogate, model, spec)
        assert bw == pytest.approx(matched, rel=0.01)
        assert purity >= 1.0 - 1e-4

    def test_optimum_beats_detuned_bandwidths(self, model, spec):
        g = design_periodic(88, LC)
        bw, p_opt = optimize_pump_bandwidth(g, model, spec, grid_n=64)
        for factor in (0.5, 2.0):
            pump = PumpEnvelope(spec.omega_pump, factor * bw)
            p = schmidt(build_jsa(g, model, spec, pump, grid_n=64)).purity
            assert p_opt >= p - 1e-9

    def test_pump_envelope_validation(self):
        with pytest.raises(QpmError):
            PumpEnvelope(2e15, 0.0)
        with pytest.raises(QpmError):
            PumpEnvelope(2e15, -1e12)


class TestPurityVsLength:
    def test_periodic_baseline_is_flat_near_sinc_limit(self, model, spec):
        from qpmdesign import purity_vs_length
        rows = purity_vs_length("periodic", [40, 80], model, spec, LC,
                                grid_n=64)
        purities = [row["purity"] for row in rows]
        for p in purities:
            assert abs(p - 0.85) < 0.02
        assert abs(purities[0] - purities[1]) < 0.01
        assert [row["length_lc"] for row in rows] == [40, 80]
        assert all(row["final_energy"] is None for row in rows)

    def test_fixed_bandwidth_skips_optimisation(self, model, spec):
        from qpmdesign import purity_vs_length
        rows = purity_vs_length("periodic", [40], model, spec, LC,
                                grid_n=64, pump_bandwidth=1.2e13)
        assert rows[0]["bandwidth_rad_s"] == 1.2e13

    def test_short_lengths_rejected(self, model, spec):
        from qpmdesign import purity_vs_length
        with pytest.raises(QpmError, match="20"):
            purity_vs_length("periodic", [10], model, spec, LC)
