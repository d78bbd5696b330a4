"""Poling patterns, their phase-matching function and field amplitude.

A grating is an ordered sequence of domains, each a (width, orientation)
pair with orientation +1 or -1.  Its phase-matching function (PMF) is the
Fourier transform of the orientation profile g(z),

    phi(dk) = integral g(z) exp(i dk z) dz ,

which for piecewise-constant g has the exact per-domain closed form

    phi(dk) = sum_n s_n w_n sinc(dk w_n / 2) exp(i dk (z_{n-1} + z_n) / 2).

The sinc form is numerically stable for all dk and degenerates to
sum s_n w_n at dk = 0 without special-casing.  The PMF defined this way
carries units of length and is additive over domains.

The normalised field amplitude inside the crystal is
A(z, dk) = -i integral_0^z g(z') exp(i dk z') dz', so A(L) = -i phi.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import erf

from .errors import QpmError

__all__ = [
    "Grating",
    "TargetAmplitude",
    "PmfGrid",
    "GaussianPmf",
    "pmf",
    "field_amplitude",
    "amplitude_at_domain_ends",
    "target_eval",
    "gaussian_erf_target",
    "tabulated_target",
    "gaussian_target_pmf",
    "symmetrize",
    "export_poling",
    "import_poling",
    "poling_content_hash",
    "periodic_reference_peak",
]

ArrayLike = Union[float, np.ndarray]

_CHUNK_ELEMENTS = 4_000_000  # cap on dk x domain work matrices (~64 MB complex)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grating:
    """Ordered domain sequence: widths (m) and orientations (+1/-1)."""

    widths: np.ndarray
    orientations: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float)
        s = np.asarray(self.orientations, dtype=float)
        if w.ndim != 1 or s.ndim != 1 or w.size != s.size:
            raise QpmError("widths and orientations must be 1-d and equal length")
        if w.size == 0:
            raise QpmError("grating must contain at least one domain")
        if not np.all(w > 0.0):
            raise QpmError("all domain widths must be positive")
        if not np.all(np.abs(s) == 1.0):
            raise QpmError("orientations must be +1 or -1")
        object.__setattr__(self, "widths", _readonly(w))
        object.__setattr__(self, "orientations", _readonly(s))

    @classmethod
    def from_domains(cls, domains: Iterable[tuple[float, int]]) -> "Grating":
        pairs = list(domains)
        return cls(np.array([p[0] for p in pairs], dtype=float),
                   np.array([p[1] for p in pairs], dtype=float))

    @property
    def domain_count(self) -> int:
        return int(self.widths.size)

    @property
    def length(self) -> float:
        # recomputed on every access; never cached
        return float(np.sum(self.widths))

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.widths)])

    def pmf(self, delta_k: ArrayLike) -> ArrayLike:
        return pmf(self, delta_k)

    def merged_blocks(self) -> "Grating":
        """Adjacent same-orientation domains merged into single blocks."""
        s = self.orientations
        starts = np.concatenate([[0], np.flatnonzero(np.diff(s)) + 1])
        ends = np.concatenate([starts[1:], [s.size]])
        widths = np.add.reduceat(self.widths, starts)
        return Grating(widths, s[starts.astype(int)])

    def flipped(self) -> "Grating":
        return Grating(self.widths.copy(), -self.orientations)


def pmf(grating: Grating, delta_k: ArrayLike) -> ArrayLike:
    """Phase-matching function of the grating, units of length.

    Vectorised over delta_k; evaluation is chunked so a dense JSA grid
    against a many-domain grating stays within memory.
    """
    scalar = np.isscalar(delta_k)
    dk = np.atleast_1d(np.asarray(delta_k, dtype=float)).ravel()
    w = grating.widths
    s = grating.orientations
    z = grating.boundaries
    mid = 0.5 * (z[:-1] + z[1:])
    coef = s * w
    out = np.empty(dk.size, dtype=complex)
    step = max(1, _CHUNK_ELEMENTS // w.size)
    for a in range(0, dk.size, step):
        d = dk[a:a + step, None]
        out[a:a + step] = np.sum(
            coef * np.sinc(d * w / (2.0 * math.pi)) * np.exp(1j * d * mid),
            axis=1,
        )
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(delta_k))


def field_amplitude(grating: Grating, z: ArrayLike, delta_k: float) -> ArrayLike:
    """Normalised field amplitude A(z, dk) = -i * integral_0^z g e^{i dk z'} dz'.

    Vectorised over z; delta_k is a single value.  A(L) equals -i * pmf.
    """
    scalar = np.isscalar(z)
    zq = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    L = grating.length
    tol = 1e-12 * max(L, 1e-300)
    if np.any(zq < -tol) or np.any(zq > L + tol):
        raise QpmError(f"z outside the crystal [0, {L:.6g} m]")
    zq = np.clip(zq, 0.0, L)

    bounds = grating.boundaries
    w = grating.widths
    s = grating.orientations
    dk = float(delta_k)
    mid = 0.5 * (bounds[:-1] + bounds[1:])
    contrib = s * w * np.sinc(dk * w / (2.0 * math.pi)) * np.exp(1j * dk * mid)
    prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(contrib)])

    idx = np.searchsorted(bounds, zq, side="right") - 1
    idx = np.clip(idx, 0, w.size - 1)
    z0 = bounds[idx]
    dw = zq - z0  # partial width inside the containing domain, 0 at boundaries
    partial = (s[idx] * dw * np.sinc(dk * dw / (2.0 * math.pi))
               * np.exp(1j * dk * 0.5 * (z0 + zq)))
    out = -1j * (prefix[idx] + partial)
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(z))


def amplitude_at_domain_ends(orientations: Sequence[float] | np.ndarray,
                             w: float, lc: float) -> np.ndarray:
    """A at the end of every domain of a uniform-width grating at dk = pi/lc.

    Closed form via a running prefix sum,

        A_m = (lc/pi) (e^{-i pi w / lc} - 1) sum_{n<=m} s_n e^{i pi n w / lc},

    O(N) total and equal to field_amplitude at z = m w.
    """
    if w <= 0.0 or lc <= 0.0:
        raise QpmError("domain width and coherence length must be positive")
    s = np.asarray(orientations, dtype=float)
    n = np.arange(1, s.size + 1)
    prefactor = (lc / math.pi) * (np.exp(-1j * math.pi * w / lc) - 1.0)
    return prefactor * np.cumsum(s * np.exp(1j * math.pi * n * w / lc))


@dataclass(frozen=True)
class TargetAmplitude:
    """Target field amplitude A_target(z) on [0, length].

    Families: ``gaussian-erf-real`` rises from 0 to 2 c erf(L/(2 sqrt(2) sigma))
    (the Gaussian-nonlinearity target up to a global phase), ``gaussian-erf-imag``
    is i times that (the literal complex form), ``custom-tabulated``
    interpolates sampled complex values linearly.
    """

    family: str
    length: float
    sigma: float = 0.0
    scale: float = 0.0
    z_grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.length <= 0.0:
            raise QpmError("target length must be positive")
        if self.family in ("gaussian-erf-real", "gaussian-erf-imag"):
            if self.sigma <= 0.0:
                raise QpmError("target sigma must be positive")
            if self.scale <= 0.0:
                raise QpmError("target scale c must be positive")
        elif self.family == "custom-tabulated":
            if self.z_grid is None or self.values is None:
                raise QpmError("custom-tabulated target needs z_grid and values")
            z = np.asarray(self.z_grid, dtype=float)
            v = np.asarray(self.values, dtype=complex)
            if z.size != v.size or z.size < 2:
                raise QpmError("tabulated target needs matching z/value arrays")
            if z[0] > 0.0 or z[-1] < self.length:
                raise QpmError("tabulated target grid must cover [0, length]")
            object.__setattr__(self, "z_grid", _readonly(z))
            object.__setattr__(self, "values", _readonly(v))
        else:
            raise QpmError(f"unknown target family {self.family!r}")

    def __call__(self, z: ArrayLike) -> ArrayLike:
        return target_eval(self, z)


def gaussian_erf_target(length: float, sigma: float | None = None,
                        scale: float | None = None,
                        family: str = "gaussian-erf-real") -> TargetAmplitude:
    """Gaussian-nonlinearity target; defaults sigma = L/4, c = sqrt(2/pi) sigma."""
    if sigma is None:
        sigma = length / 4.0
    if scale is None:
        scale = math.sqrt(2.0 / math.pi) * sigma
    return TargetAmplitude(family=family, length=length, sigma=sigma, scale=scale)


def tabulated_target(z_grid: np.ndarray, values: np.ndarray) -> TargetAmplitude:
    z = np.asarray(z_grid, dtype=float)
    return TargetAmplitude(family="custom-tabulated", length=float(z[-1]),
                           z_grid=z, values=np.asarray(values, dtype=complex))


def target_eval(target: TargetAmplitude, z: ArrayLike) -> ArrayLike:
    """Evaluate the target amplitude at position(s) z in [0, L]."""
    scalar = np.isscalar(z)
    zq = np.atleast_1d(np.asarray(z, dtype=float))
    tol = 1e-12 * target.length
    if np.any(zq < -tol) or np.any(zq > target.length + tol):
        raise QpmError(f"z outside the target range [0, {target.length:.6g} m]")
    zq = np.clip(zq, 0.0, target.length)
    if target.family == "custom-tabulated":
        out = (np.interp(zq, target.z_grid, target.values.real)
               + 1j * np.interp(zq, target.z_grid, target.values.imag))
    else:
        L, sig, c = target.length, target.sigma, target.scale
        edge = erf(L / (2.0 * math.sqrt(2.0) * sig))
        ramp = c * (edge - erf((L - 2.0 * zq) / (2.0 * math.sqrt(2.0) * sig)))
        out = 1j * ramp if target.family == "gaussian-erf-imag" else ramp + 0.0j
    if scalar:
        return complex(out[0])
    return out.reshape(np.shape(z))


@dataclass(frozen=True)
class PmfGrid:
    """PMF samples on a strictly increasing dk grid (phi in metres)."""

    delta_k: np.ndarray
    phi: np.ndarray
    grating_id: str = ""
    delta_k0: float = 0.0

    def __post_init__(self):
        dk = np.asarray(self.delta_k, dtype=float)
        ph = np.asarray(self.phi, dtype=complex)
        if dk.size < 2 or dk.size != ph.size:
            raise QpmError("PmfGrid needs >= 2 matching samples")
        if not np.all(np.diff(dk) > 0.0):
            raise QpmError("PmfGrid delta_k samples must be strictly increasing")
        object.__setattr__(self, "delta_k", _readonly(dk))
        object.__setattr__(self, "phi", _readonly(ph))


@dataclass(frozen=True)
class GaussianPmf:
    """Analytic Gaussian PMF surrogate: amplitude * exp(-sigma_z^2 (dk-dk0)^2 / 2)."""

    delta_k0: float
    sigma_z: float
    amplitude: float = 1.0

    def pmf(self, delta_k: ArrayLike) -> ArrayLike:
        d = np.asarray(delta_k, dtype=float) - self.delta_k0
        out = self.amplitude * np.exp(-0.5 * (self.sigma_z * d) ** 2) + 0.0j
        return complex(out) if np.isscalar(delta_k) else out


def gaussian_target_pmf(lc: float, length: float, sigma: float, scale: float,
                        n: int = 257, half_width: float | None = None) -> PmfGrid:
    """Gaussian |phi| target for the width annealer.

    Centred on the carrier pi/lc with peak 2 c erf(L/(2 sqrt(2) sigma)) --
    the amplitude the erf target reaches at the crystal end -- and spanning
    +- 8 pi/L by default.
    """
    if half_width is None:
        half_width = 8.0 * math.pi / length
    dkc = math.pi / lc
    dk = np.linspace(dkc - half_width, dkc + half_width, n)
    peak = 2.0 * scale * math.erf(length / (2.0 * math.sqrt(2.0) * sigma))
    mag = peak * np.exp(-0.5 * (sigma * (dk - dkc)) ** 2)
    return PmfGrid(delta_k=dk, phi=mag.astype(complex),
                   grating_id="gaussian-target", delta_k0=dkc)


def symmetrize(grating: Grating) -> Grating:
    """Concatenate the grating with its mirror image (palindromic output).

    Designed for gratings built for half the final crystal; the result has
    twice the length and a PMF with linear phase about its midpoint.
    """
    return Grating(
        np.concatenate([grating.widths, grating.widths[::-1]]),
        np.concatenate([grating.orientations, grating.orientations[::-1]]),
    )


def periodic_reference_peak(length: float) -> float:
    """|phi| and |A| peak of the equal-length periodic grating, 2L/pi.

    Used to normalise plots against the standard periodically poled case.
    """
    return 2.0 * length / math.pi


_WIDTHS_HEADER = "width_m,orientation"
_BOUNDS_HEADER = "z_start_m,z_end_m,orientation"


def export_poling(grating: Grating, fmt: str = "csv-widths") -> bytes:
    """Serialise the poling pattern; positions at 12 significant digits."""
    s = grating.orientations.astype(int)
    if fmt == "csv-widths":
        lines = [_WIDTHS_HEADER]
        lines += [f"{w:.12g},{o:d}" for w, o in zip(grating.widths, s)]
    elif fmt == "csv-boundaries":
        z = grating.boundaries
        lines = [_BOUNDS_HEADER]
        lines += [f"{z0:.12g},{z1:.12g},{o:d}"
                  for z0, z1, o in zip(z[:-1], z[1:], s)]
    else:
        raise QpmError(f"unknown poling format {fmt!r}")
    return ("\n".join(lines) + "\n").encode("ascii")


def import_poling(data: bytes) -> Grating:
    """Parse either poling CSV format (auto-detected from the header).

    Leading ``#`` comment lines (provenance headers) are skipped.
    """
    lines = data.decode("ascii").strip().splitlines()
    text = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not text:
        raise QpmError("empty poling file")
    header, rows = text[0].strip(), text[1:]
    if header == _WIDTHS_HEADER:
        columns, derive_widths = 2, False
    elif header == _BOUNDS_HEADER:
        columns, derive_widths = 3, True
    else:
        raise QpmError(f"unrecognised poling header {header!r}")
    try:
        parsed = np.array([[float(tok) for tok in row.split(",")]
                           for row in rows], dtype=float).reshape(len(rows), columns)
    except ValueError as exc:
        raise QpmError(f"malformed poling row: {exc}") from None
    if derive_widths:
        return Grating(parsed[:, 1] - parsed[:, 0], parsed[:, 2])
    return Grating(parsed[:, 0], parsed[:, 1])


def poling_content_hash(grating: Grating) -> str:
    """sha256 of the canonical csv-widths serialisation."""
    return hashlib.sha256(export_poling(grating, "csv-widths")).hexdigest()
