import math

import numpy as np
import pytest

from qpmdesign import (
    LinearSyntheticModel,
    ProcessSpec,
    coherence_length,
    load_ktp_model,
)

C = 299792458.0


@pytest.fixture(scope="session")
def ktp_model():
    return load_ktp_model()


@pytest.fixture(scope="session")
def ktp_spec():
    return ProcessSpec.degenerate(791e-9)


@pytest.fixture(scope="session")
def ktp_lc(ktp_model, ktp_spec):
    return coherence_length(ktp_model, ktp_spec)


def make_symmetric_linear(k0=math.pi / 23e-6, tau_s=5.88e-9, tau_i=6.18e-9,
                          pump_wavelength=791e-9):
    """Affine model with exactly symmetric group-velocity matching."""
    omega_p = 2.0 * math.pi * C / pump_wavelength
    return LinearSyntheticModel(
        k0=k0,
        tau_p=0.5 * (tau_s + tau_i),
        tau_s=tau_s,
        tau_i=tau_i,
        omega0_p=omega_p,
        omega0_s=omega_p / 2.0,
        omega0_i=omega_p / 2.0,
    )


def make_linear_spec(pump_wavelength=791e-9):
    return ProcessSpec.degenerate(
        pump_wavelength, pump_axis="pump", signal_axis="signal", idler_axis="idler")


@pytest.fixture(scope="session")
def linear_model():
    return make_symmetric_linear()


@pytest.fixture(scope="session")
def linear_spec():
    return make_linear_spec()


def random_grating(rng, n_max=40, scale=20e-6):
    """Random widths and orientations for property tests."""
    from qpmdesign import Grating
    n = int(rng.integers(1, n_max + 1))
    widths = scale * rng.uniform(0.2, 2.0, size=n)
    signs = rng.choice([-1.0, 1.0], size=n)
    return Grating(widths, signs)
