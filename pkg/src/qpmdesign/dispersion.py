"""Material dispersion for the down-conversion process.

Two model variants are provided.  ``ktp-sellmeier`` evaluates published
Sellmeier fits (with thermo-optic corrections) for the y and z axes of
flux-grown KTP, loaded from a data file.  ``linear-synthetic`` is an
exactly affine model used by the test suite so that every algorithmic
result can be checked independently of the coefficient transcription.

All frequencies are angular (rad/s), wavelengths are in metres and
wavenumbers in rad/m.  The phase mismatch is

    delta_k(w_s, w_i) = k_p(w_s + w_i) - k_s(w_s) - k_i(w_i)

and the coherence length is pi/|delta_k| at the central frequencies.
For the KTP type-II process modelled here delta_k is negative; poling
compensates the mismatch magnitude, and every downstream quantity is
invariant under a global sign flip of delta_k, so only an exactly
phase-matched process is an error.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import PhaseMatchedProcessError, QpmError, ValidityWindowError

__all__ = [
    "C",
    "SellmeierAxis",
    "KtpSellmeierModel",
    "LinearSyntheticModel",
    "ProcessSpec",
    "GvmReport",
    "load_ktp_model",
    "wavenumber",
    "delta_k",
    "delta_k0",
    "coherence_length",
    "inverse_group_velocity",
    "gvm_report",
]

C = 299792458.0  # speed of light in vacuum, m/s

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SellmeierAxis:
    """Sellmeier and thermo-optic coefficients for one crystal axis.

    ``sellmeier`` is ``[a0, b1, c1, (b2, c2, ...), d]`` for
    n^2 = a0 + sum b_j/(1 - c_j/lam^2) - d*lam^2, lam in micrometres.
    ``dn_dt1``/``dn_dt2`` are cubic polynomials in lam (low order first)
    scaled by 1e-6 per (T - 25) and (T - 25)^2 respectively.
    """

    sellmeier: tuple[float, ...]
    dn_dt1: tuple[float, ...]
    dn_dt2: tuple[float, ...]

    def refractive_index(self, lam_um: ArrayLike, temperature_c: float) -> ArrayLike:
        a0, *pairs, d = self.sellmeier
        if len(pairs) % 2:
            raise QpmError("sellmeier coefficient list must be [a0, (b, c)..., d]")
        l2 = np.square(lam_um)
        n2 = a0 - d * l2
        for b, c in zip(pairs[0::2], pairs[1::2]):
            n2 = n2 + b / (1.0 - c / l2)
        n = np.sqrt(n2)
        dT = temperature_c - 25.0
        if dT != 0.0:
            n1 = np.polynomial.polynomial.polyval(lam_um, self.dn_dt1)
            n2c = np.polynomial.polynomial.polyval(lam_um, self.dn_dt2)
            n = n + 1e-6 * (n1 * dT + n2c * dT * dT)
        return n


@dataclass(frozen=True)
class KtpSellmeierModel:
    """KTP dispersion from transcribed Sellmeier fits; variant ``ktp-sellmeier``."""

    axes: dict[str, SellmeierAxis]
    window: tuple[float, float]  # wavelength validity window (m)
    temperature: float = 25.0  # degrees C
    citation: str = ""

    variant = "ktp-sellmeier"

    @property
    def axis_labels(self) -> tuple[str, ...]:
        return tuple(self.axes)

    def _axis(self, pol: str) -> SellmeierAxis:
        try:
            return self.axes[pol]
        except KeyError:
            raise QpmError(
                f"unknown polarization axis {pol!r}; model provides {sorted(self.axes)}"
            ) from None

    def _check_window(self, omega: ArrayLike) -> None:
        lam_lo, lam_hi = self.window
        omega_lo = 2.0 * math.pi * C / lam_hi
        omega_hi = 2.0 * math.pi * C / lam_lo
        w = np.asarray(omega, dtype=float)
        if w.size and (float(w.min()) < omega_lo or float(w.max()) > omega_hi):
            raise ValidityWindowError(
                "frequency outside validity window "
                f"[{lam_lo * 1e9:.0f} nm, {lam_hi * 1e9:.0f} nm]"
            )

    def wavenumber(self, pol: str, omega: ArrayLike, temperature: float | None = None) -> ArrayLike:
        self._check_window(omega)
        T = self.temperature if temperature is None else temperature
        lam_um = 2.0 * math.pi * C / np.asarray(omega, dtype=float) * 1e6
        n = self._axis(pol).refractive_index(lam_um, T)
        return n * np.asarray(omega, dtype=float) / C


@dataclass(frozen=True)
class LinearSyntheticModel:
    """Exactly affine dispersion; variant ``linear-synthetic``.

    Each field's wavenumber is k0_j + tau_j * (omega - omega0_j), so
    delta_k is exactly affine in (w_s, w_i):

        delta_k = k0 + (tau_p - tau_s)(w_s - w0_s) + (tau_p - tau_i)(w_i - w0_i)

    Axis labels are the field roles ``pump``/``signal``/``idler``.
    """

    k0: float  # reference phase mismatch (rad/m)
    tau_p: float  # inverse group velocities (s/m)
    tau_s: float
    tau_i: float
    omega0_p: float  # reference angular frequencies (rad/s)
    omega0_s: float
    omega0_i: float
    k0_s: float = 7.0e6  # reference signal/idler wavenumbers (rad/m)
    k0_i: float = 7.0e6
    # wavelength window (m) inside which the affine wavenumbers stay positive
    window: tuple[float, float] = (100e-9, 10e-6)
    temperature: float = 25.0

    variant = "linear-synthetic"

    def __post_init__(self):
        if not math.isclose(self.omega0_p, self.omega0_s + self.omega0_i, rel_tol=1e-12):
            raise QpmError("linear-synthetic requires omega0_p = omega0_s + omega0_i")

    @property
    def axis_labels(self) -> tuple[str, ...]:
        return ("pump", "signal", "idler")

    @property
    def k0_p(self) -> float:
        return self.k0 + self.k0_s + self.k0_i

    def _check_window(self, omega: ArrayLike) -> None:
        lam_lo, lam_hi = self.window
        omega_lo = 2.0 * math.pi * C / lam_hi
        omega_hi = 2.0 * math.pi * C / lam_lo
        w = np.asarray(omega, dtype=float)
        if w.size and (float(w.min()) < omega_lo or float(w.max()) > omega_hi):
            raise ValidityWindowError(
                "frequency outside validity window "
                f"[{lam_lo * 1e9:.3g} nm, {lam_hi * 1e9:.3g} nm]"
            )

    def wavenumber(self, pol: str, omega: ArrayLike, temperature: float | None = None) -> ArrayLike:
        self._check_window(omega)
        w = np.asarray(omega, dtype=float)
        if pol == "pump":
            k = self.k0_p + self.tau_p * (w - self.omega0_p)
        elif pol == "signal":
            k = self.k0_s + self.tau_s * (w - self.omega0_s)
        elif pol == "idler":
            k = self.k0_i + self.tau_i * (w - self.omega0_i)
        else:
            raise QpmError(f"unknown polarization axis {pol!r}; model provides "
                           "['pump', 'signal', 'idler']")
        return k if isinstance(omega, np.ndarray) else float(k)


DispersionModel = Union[KtpSellmeierModel, LinearSyntheticModel]


@dataclass(frozen=True)
class ProcessSpec:
    """Central wavelengths and polarization assignment of the PDC process."""

    pump_wavelength: float  # m
    signal_wavelength: float
    idler_wavelength: float
    pump_axis: str = "y"
    signal_axis: str = "y"
    idler_axis: str = "z"
    temperature: float = 25.0  # degrees C

    def __post_init__(self):
        lhs = 1.0 / self.pump_wavelength
        rhs = 1.0 / self.signal_wavelength + 1.0 / self.idler_wavelength
        if abs(lhs - rhs) > 1e-9 * lhs:
            raise QpmError(
                "energy conservation violated: 1/pump != 1/signal + 1/idler "
                f"(relative error {abs(lhs - rhs) / lhs:.3e})"
            )

    @classmethod
    def degenerate(cls, pump_wavelength: float, **kwargs) -> "ProcessSpec":
        """Type-II process with signal and idler at twice the pump wavelength."""
        return cls(pump_wavelength, 2.0 * pump_wavelength, 2.0 * pump_wavelength, **kwargs)

    @property
    def omega_pump(self) -> float:
        return 2.0 * math.pi * C / self.pump_wavelength

    @property
    def omega_signal(self) -> float:
        return 2.0 * math.pi * C / self.signal_wavelength

    @property
    def omega_idler(self) -> float:
        return 2.0 * math.pi * C / self.idler_wavelength


@dataclass(frozen=True)
class GvmReport:
    """Inverse group velocities and PMF orientation for a process."""

    k_prime_pump: float  # s/m
    k_prime_signal: float
    k_prime_idler: float
    residual: float  # k'_p - (k'_s + k'_i)/2
    theta_deg: float  # PMF angle in the (w_s, w_i) plane


def load_ktp_model(path: str | os.PathLike | None = None,
                   temperature: float = 25.0) -> KtpSellmeierModel:
    """Load the KTP coefficient table.

    Resolution order: explicit ``path``, then ``$QPMDESIGN_DATA_DIR``,
    then the packaged data file.
    """
    if path is None:
        data_dir = os.environ.get("QPMDESIGN_DATA_DIR")
        if data_dir:
            path = os.path.join(data_dir, "ktp_sellmeier.toml")
        else:
            path = os.path.join(os.path.dirname(__file__), "data", "ktp_sellmeier.toml")
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    if raw.get("model") != "ktp-sellmeier":
        raise QpmError(f"unexpected model id {raw.get('model')!r} in {path}")
    axes = {
        label: SellmeierAxis(
            sellmeier=tuple(entry["sellmeier"]),
            dn_dt1=tuple(entry["dn_dt1"]),
            dn_dt2=tuple(entry["dn_dt2"]),
        )
        for label, entry in raw["axes"].items()
    }
    lo, hi = raw["validity_window_nm"]
    return KtpSellmeierModel(
        axes=axes,
        window=(lo * 1e-9, hi * 1e-9),
        temperature=temperature,
        citation=raw.get("citation", ""),
    )


def wavenumber(model: DispersionModel, pol: str, omega: ArrayLike,
               temperature: float | None = None) -> ArrayLike:
    """k_j(omega) for one polarization axis, in rad/m."""
    return model.wavenumber(pol, omega, temperature)


def delta_k(model: DispersionModel, spec: ProcessSpec,
            omega_s: ArrayLike, omega_i: ArrayLike) -> ArrayLike:
    """Phase mismatch k_p(w_s + w_i) - k_s(w_s) - k_i(w_i)."""
    ws = np.asarray(omega_s, dtype=float)
    wi = np.asarray(omega_i, dtype=float)
    k_p = model.wavenumber(spec.pump_axis, ws + wi, spec.temperature)
    k_s = model.wavenumber(spec.signal_axis, ws, spec.temperature)
    k_i = model.wavenumber(spec.idler_axis, wi, spec.temperature)
    out = k_p - k_s - k_i
    if np.isscalar(omega_s) and np.isscalar(omega_i):
        return float(out)
    return out


def delta_k0(model: DispersionModel, spec: ProcessSpec) -> float:
    """Phase mismatch at the central frequencies (signed)."""
    return float(delta_k(model, spec, spec.omega_signal, spec.omega_idler))


def coherence_length(model: DispersionModel, spec: ProcessSpec) -> float:
    """Coherence length pi/|delta_k0|.

    The transcribed KTP coefficients give a negative mismatch for the
    type-II process; the poling compensates the magnitude either way, so
    only delta_k0 = 0 (nothing to pole) is rejected.
    """
    dk0 = delta_k0(model, spec)
    if dk0 == 0.0 or not math.isfinite(dk0):
        raise PhaseMatchedProcessError(
            "process is phase-matched; poling undefined (delta_k0 = 0)"
        )
    return math.pi / abs(dk0)


def inverse_group_velocity(model: DispersionModel, pol: str, omega: float,
                           temperature: float | None = None) -> float:
    """dk/domega by central finite difference with step 1e-6 * omega."""
    h = 1e-6 * omega
    k_hi = model.wavenumber(pol, omega + h, temperature)
    k_lo = model.wavenumber(pol, omega - h, temperature)
    return float((k_hi - k_lo) / (2.0 * h))


def gvm_report(model: DispersionModel, spec: ProcessSpec) -> GvmReport:
    """Group-velocity diagnostics and the PMF orientation angle.

    theta = arctan(-(k'_p - k'_s)/(k'_p - k'_i)); symmetric group-velocity
    matching (k'_p equal to the mean of k'_s and k'_i) gives +45 degrees.
    """
    kp = inverse_group_velocity(model, spec.pump_axis, spec.omega_pump, spec.temperature)
    ks = inverse_group_velocity(model, spec.signal_axis, spec.omega_signal, spec.temperature)
    ki = inverse_group_velocity(model, spec.idler_axis, spec.omega_idler, spec.temperature)
    residual = kp - 0.5 * (ks + ki)
    theta = math.degrees(math.atan2(-(kp - ks), kp - ki))
    if theta > 90.0:
        theta -= 180.0
    elif theta <= -90.0:
        theta += 180.0
    return GvmReport(kp, ks, ki, residual, theta)
