import math

import numpy as np
import pytest

from qpmdesign import (
    PhaseMatchedProcessError,
    ProcessSpec,
    QpmError,
    ValidityWindowError,
    coherence_length,
    delta_k,
    delta_k0,
    gvm_report,
    inverse_group_velocity,
    wavenumber,
)
from conftest import C, make_linear_spec, make_symmetric_linear

# Hand evaluations of the published coefficient tables, done with a scalar
# calculator script independent of the package (25 C, lambda in um).
N_Y_791 = 1.7572323188877277
N_Z_791 = 1.84594996521708
N_Y_1582 = 1.7334688445357207
N_Z_1582 = 1.8152784481348474
K_PUMP_Y_791 = 13958301.248213
K_SIGNAL_Y_1582 = 6884769.895347923
K_IDLER_Z_1582 = 7209690.817800653
DK0_DEGENERATE = -136159.4649355756


def omega_of(lam):
    return 2.0 * math.pi * C / lam


class TestLinearSynthetic:
    def test_reference_wavenumber_with_zero_slope(self):
        model = make_symmetric_linear(tau_s=0.0)
        k = wavenumber(model, "signal", model.omega0_s)
        assert k == pytest.approx(model.k0_s, rel=1e-15)

    def test_delta_k_at_reference_is_k0(self, linear_model, linear_spec):
        dk = delta_k(linear_model, linear_spec,
                     linear_model.omega0_s, linear_model.omega0_i)
        assert dk == pytest.approx(linear_model.k0, rel=1e-12)

    def test_delta_k_matches_affine_expansion(self, linear_model, linear_spec):
        rng = np.random.default_rng(7)
        w0s, w0i = linear_model.omega0_s, linear_model.omega0_i
        for _ in range(25):
            ws = w0s * (1.0 + rng.uniform(-0.02, 0.02))
            wi = w0i * (1.0 + rng.uniform(-0.02, 0.02))
            expected = (linear_model.k0
                        + (linear_model.tau_p - linear_model.tau_s) * (ws - w0s)
                        + (linear_model.tau_p - linear_model.tau_i) * (wi - w0i))
            assert delta_k(linear_model, linear_spec, ws, wi) == pytest.approx(
                expected, rel=1e-12)

    def test_mixed_second_differences_vanish(self, linear_model, linear_spec):
        # exact affinity: dk(a,b) + dk(a',b') == dk(a,b') + dk(a',b)
        rng = np.random.default_rng(11)
        w0s, w0i = linear_model.omega0_s, linear_model.omega0_i
        scale = abs(linear_model.k0)
        for _ in range(50):
            a, ap = w0s * (1.0 + rng.uniform(-0.03, 0.03, size=2))
            b, bp = w0i * (1.0 + rng.uniform(-0.03, 0.03, size=2))
            lhs = (delta_k(linear_model, linear_spec, a, b)
                   + delta_k(linear_model, linear_spec, ap, bp))
            rhs = (delta_k(linear_model, linear_spec, a, bp)
                   + delta_k(linear_model, linear_spec, ap, b))
            assert abs(lhs - rhs) < 1e-9 * scale

    def test_unknown_axis_rejected(self, linear_model):
        with pytest.raises(QpmError, match="axis"):
            wavenumber(linear_model, "x", linear_model.omega0_s)

    def test_wavenumbers_positive_over_window(self, linear_model):
        lo, hi = linear_model.window
        omegas = np.linspace(2 * math.pi * C / hi, 2 * math.pi * C / lo, 100)
        for axis in ("pump", "signal", "idler"):
            assert np.all(wavenumber(linear_model, axis, omegas) > 0.0)

    def test_out_of_window_rejected(self, linear_model):
        with pytest.raises(ValidityWindowError):
            wavenumber(linear_model, "signal", omega_of(50e-9))

    def test_inconsistent_reference_frequencies_rejected(self):
        from qpmdesign import LinearSyntheticModel
        with pytest.raises(QpmError, match="omega0_p"):
            LinearSyntheticModel(k0=1e5, tau_p=6e-9, tau_s=6e-9, tau_i=6e-9,
                                 omega0_p=2e15, omega0_s=0.9e15, omega0_i=0.9e15)


class TestKtpSellmeier:
    def test_wavenumbers_match_hand_evaluation(self, ktp_model):
        assert wavenumber(ktp_model, "y", omega_of(791e-9)) == pytest.approx(
            K_PUMP_Y_791, rel=1e-12)
        assert wavenumber(ktp_model, "y", omega_of(1582e-9)) == pytest.approx(
            K_SIGNAL_Y_1582, rel=1e-12)
        assert wavenumber(ktp_model, "z", omega_of(1582e-9)) == pytest.approx(
            K_IDLER_Z_1582, rel=1e-12)

    def test_refractive_indices_match_hand_evaluation(self, ktp_model):
        def n(axis, lam):
            return wavenumber(ktp_model, axis, omega_of(lam)) * lam / (2 * math.pi)

        assert n("y", 791e-9) == pytest.approx(N_Y_791, rel=1e-12)
        assert n("z", 791e-9) == pytest.approx(N_Z_791, rel=1e-12)
        assert n("y", 1582e-9) == pytest.approx(N_Y_1582, rel=1e-12)
        assert n("z", 1582e-9) == pytest.approx(N_Z_1582, rel=1e-12)

    def test_temperature_correction_shifts_index(self, ktp_model):
        k25 = wavenumber(ktp_model, "y", omega_of(1582e-9))
        k60 = wavenumber(ktp_model, "y", omega_of(1582e-9), temperature=60.0)
        dn = (k60 - k25) * 1582e-9 / (2 * math.pi)
        assert 1e-5 < dn < 1e-3  # thermo-optic coefficient is ~1e-5/K scale

    def test_out_of_window_is_an_error(self, ktp_model):
        with pytest.raises(ValidityWindowError, match="nm"):
            wavenumber(ktp_model, "y", omega_of(200e-9))
        with pytest.raises(ValidityWindowError, match="nm"):
            wavenumber(ktp_model, "z", omega_of(5e-6))

    def test_missing_axis_names_available_ones(self, ktp_model):
        with pytest.raises(QpmError, match="'y', 'z'"):
            wavenumber(ktp_model, "x", omega_of(791e-9))

    def test_delta_k_degenerate_matches_hand_evaluation(self, ktp_model, ktp_spec):
        assert delta_k0(ktp_model, ktp_spec) == pytest.approx(
            DK0_DEGENERATE, rel=1e-12)

    def test_delta_k_changes_under_signal_idler_swap(self, ktp_model, ktp_spec):
        ws = omega_of(1540e-9)
        wi = omega_of(1/(1/791e-9 - 1/1540e-9))
        direct = delta_k(ktp_model, ktp_spec, ws, wi)
        swapped = delta_k(ktp_model, ktp_spec, wi, ws)
        assert direct != pytest.approx(swapped, rel=1e-6)

    def test_wavenumber_monotone_over_window(self, ktp_model):
        lo = omega_of(1790e-9)
        hi = omega_of(455e-9)
        omegas = np.linspace(lo, hi, 100)
        for axis in ("y", "z"):
            k = wavenumber(ktp_model, axis, omegas)
            assert np.all(np.diff(k) > 0.0)

    def test_vectorised_evaluation_matches_scalars(self, ktp_model):
        omegas = omega_of(np.array([700e-9, 791e-9, 1582e-9]))
        vec = wavenumber(ktp_model, "y", omegas)
        scal = [wavenumber(ktp_model, "y", float(w)) for w in omegas]
        np.testing.assert_allclose(vec, scal, rtol=1e-15)


class TestCoherenceLength:
    def test_inverts_reference_mismatch(self):
        model = make_symmetric_linear(k0=math.pi / 23e-6)
        lc = coherence_length(model, make_linear_spec())
        assert lc == pytest.approx(23e-6, rel=1e-12)

    def test_product_with_mismatch_is_pi(self, ktp_model, ktp_spec, ktp_lc):
        assert ktp_lc * abs(delta_k0(ktp_model, ktp_spec)) == pytest.approx(
            math.pi, rel=1e-15)

    def test_ktp_scale_is_tens_of_micrometres(self, ktp_lc):
        assert 10e-6 < ktp_lc < 60e-6

    def test_zero_mismatch_is_an_error(self):
        model = make_symmetric_linear(k0=0.0)
        with pytest.raises(PhaseMatchedProcessError, match="phase-matched"):
            coherence_length(model, make_linear_spec())

    def test_negative_mismatch_uses_magnitude(self):
        model = make_symmetric_linear(k0=-math.pi / 23e-6)
        lc = coherence_length(model, make_linear_spec())
        assert lc == pytest.approx(23e-6, rel=1e-12)


class TestGroupVelocity:
    def test_linear_slope_recovered_exactly(self, linear_model):
        igv = inverse_group_velocity(linear_model, "signal", linear_model.omega0_s)
        assert igv == pytest.approx(linear_model.tau_s, rel=1e-9)

    def test_halving_the_step_is_stable(self, ktp_model):
        w = omega_of(791e-9)
        h = 1e-6 * w
        full = inverse_group_velocity(ktp_model, "y", w)
        k_hi = wavenumber(ktp_model, "y", w + 0.5 * h)
        k_lo = wavenumber(ktp_model, "y", w - 0.5 * h)
        halved = (k_hi - k_lo) / h
        assert abs(full - halved) < 1e-6 * abs(full)

    def test_symmetric_matching_gives_45_degrees(self, linear_model, linear_spec):
        rep = gvm_report(linear_model, linear_spec)
        scale = abs(rep.k_prime_signal - rep.k_prime_idler)
        assert abs(rep.residual) < 1e-9 * scale
        assert rep.theta_deg == pytest.approx(45.0, abs=1e-6)

    def test_pump_matching_signal_gives_zero_angle(self):
        model = make_symmetric_linear(tau_s=6.0e-9, tau_i=6.0e-9)
        model = type(model)(
            k0=model.k0, tau_p=6.0e-9, tau_s=6.0e-9, tau_i=5.5e-9,
            omega0_p=model.omega0_p, omega0_s=model.omega0_s,
            omega0_i=model.omega0_i)
        rep = gvm_report(model, make_linear_spec())
        assert rep.theta_deg == pytest.approx(0.0, abs=1e-6)

    def test_ktp_process_is_group_velocity_matched(self, ktp_model, ktp_spec):
        rep = gvm_report(ktp_model, ktp_spec)
        assert abs(rep.residual) < 0.01 * abs(rep.k_prime_signal - rep.k_prime_idler)
        assert rep.theta_deg == pytest.approx(45.0, abs=0.5)


class TestDataFileLoading:
    def test_environment_variable_overrides_data_dir(self, tmp_path, monkeypatch,
                                                     ktp_model):
        import shutil

        from qpmdesign import load_ktp_model
        src = __import__("qpmdesign.dispersion", fromlist=["x"]).__file__
        packaged = src.replace("dispersion.py", "data/ktp_sellmeier.toml")
        shutil.copy(packaged, tmp_path / "ktp_sellmeier.toml")
        monkeypatch.setenv("QPMDESIGN_DATA_DIR", str(tmp_path))
        model = load_ktp_model()
        assert wavenumber(model, "y", omega_of(791e-9)) == pytest.approx(
            wavenumber(ktp_model, "y", omega_of(791e-9)), rel=1e-15)

    def test_wrong_model_id_rejected(self, tmp_path):
        from qpmdesign import load_ktp_model
        bad = tmp_path / "bad.toml"
        bad.write_text('model = "something-else"\n')
        with pytest.raises(QpmError, match="model id"):
            load_ktp_model(bad)


class TestProcessSpec:
    def test_energy_conservation_enforced(self):
        with pytest.raises(QpmError, match="energy conservation"):
            ProcessSpec(791e-9, 1500e-9, 1582e-9)

    def test_degenerate_constructor(self):
        spec = ProcessSpec.degenerate(775e-9)
        assert spec.signal_wavelength == pytest.approx(1550e-9)
        assert spec.omega_pump == pytest.approx(
            spec.omega_signal + spec.omega_idler, rel=1e-12)

    def test_nondegenerate_type_two_accepted(self):
        idler = 1 / (1 / 791e-9 - 1 / 1540e-9)
        spec = ProcessSpec(791e-9, 1540e-9, idler)
        assert spec.idler_wavelength == pytest.approx(idler)
