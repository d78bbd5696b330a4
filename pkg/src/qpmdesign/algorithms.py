"""Poling-design algorithms.

Four designers are provided, all tracking a target field amplitude at the
carrier mismatch dk = pi/lc where one domain of width w changes the real
part of the amplitude by dA = 2 w / pi:

* ``design_periodic``        -- the standard alternating baseline;
* ``design_tambasco_blocks`` -- greedy choice of two-domain blocks among
  UP-UP (no change), UP-DOWN (+2 dA) and DOWN-UP (-2 dA);
* ``design_domain_by_domain`` -- the four-condition single-domain rule;
* ``design_sub_coherence``   -- greedy UP/DOWN per domain of width w <= lc,
  minimising |A_target(m w) - A_m| with the complex running-sum amplitude.

``anneal_widths`` refines a seed by simulated annealing of the widths of
its merged same-orientation blocks against a target |PMF|, never flipping
an orientation.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import QpmError
from .grating import (
    Grating,
    PmfGrid,
    TargetAmplitude,
    gaussian_erf_target,
    gaussian_target_pmf,
    target_eval,
)

__all__ = [
    "AnnealConfig",
    "DesignReport",
    "design_periodic",
    "design_tambasco_blocks",
    "design_domain_by_domain",
    "design_sub_coherence",
    "anneal_widths",
    "pmf_on_grid",
    "design",
    "design_for_length_sweep",
    "ALGORITHM_IDS",
]

ALGORITHM_IDS = ("periodic", "blocks", "domain-by-domain", "annealed", "sub-coherence")

MIN_PRACTICAL_WIDTH = 1e-6  # poled domains below ~1 um are not manufacturable


@dataclass(frozen=True)
class AnnealConfig:
    """Parameters of the width annealer (temperatures are dimensionless)."""

    temperature: float = 0.1
    temperature_step: float | None = None  # default T / 100000
    energy_threshold: float = 0.0
    perturbation: float = 0.01  # max relative width kick per iteration
    grid_count: int = 257
    grid_half_width: float | None = None  # rad/m; default 8 pi / L
    seed: int = 2016
    max_iterations: int = 150_000
    restarts: int = 5
    cooling: str = "on-rejection"  # or "every-iteration"
    acceptance: str = "absolute"  # exp(-E/T), or "metropolis" for exp(-dE/T)
    min_width: float = MIN_PRACTICAL_WIDTH
    trace: bool = False

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise QpmError("anneal temperature must be positive")
        step = self.step
        if not 0.0 < step < self.temperature:
            raise QpmError("temperature step must satisfy 0 < dT < T")
        if not 0.0 < self.perturbation <= 0.05:
            raise QpmError("perturbation fraction must lie in (0, 0.05]")
        if self.grid_count < 16:
            raise QpmError("energy grid needs at least 16 samples")
        if self.cooling not in ("on-rejection", "every-iteration"):
            raise QpmError(f"unknown cooling schedule {self.cooling!r}")
        if self.acceptance not in ("absolute", "metropolis"):
            raise QpmError(f"unknown acceptance rule {self.acceptance!r}")
        if self.restarts < 1 or self.max_iterations < 1:
            raise QpmError("restarts and max_iterations must be >= 1")

    @property
    def step(self) -> float:
        return (self.temperature / 100_000.0
                if self.temperature_step is None else self.temperature_step)


@dataclass(frozen=True)
class DesignReport:
    """A designed grating plus how it was obtained."""

    grating: Grating
    algorithm: str
    iterations: int
    final_energy: float | None = None
    residuals: np.ndarray | None = None
    wall_time: float = 0.0
    restart_energies: tuple[float, ...] | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)
    trace: list | None = None


def _require_real_target(target: TargetAmplitude, algorithm: str) -> None:
    if target.family == "gaussian-erf-imag":
        raise QpmError(f"{algorithm} tracks the real amplitude; use the "
                       "gaussian-erf-real family")
    if target.family == "custom-tabulated" and np.any(np.abs(target.values.imag) > 0.0):
        raise QpmError(f"{algorithm} tracks the real amplitude; target values "
                       "must be real")


def _warn_small_domains(w: float, min_width: float = MIN_PRACTICAL_WIDTH) -> None:
    if w < min_width:
        warnings.warn(
            f"domain width {w * 1e6:.3g} um is below the practical poling "
            f"limit ({min_width * 1e6:.3g} um); treat as simulation only",
            stacklevel=3,
        )


def design_periodic(n_domains: int, lc: float) -> Grating:
    """Standard periodic poling: n domains of width lc, alternating from UP."""
    if n_domains < 1:
        raise QpmError("need at least one domain")
    signs = np.where(np.arange(n_domains) % 2 == 0, 1.0, -1.0)
    return Grating(np.full(n_domains, lc), signs)


def design_tambasco_blocks(target: TargetAmplitude, n_blocks: int, lc: float) -> DesignReport:
    """Two-domain block greedy tracking of a real target amplitude.

    Block m is chosen among UP-UP (0), UP-DOWN (+2 dA) and DOWN-UP (-2 dA)
    to minimise |A_target(2 m lc) - A(2 m lc)|; ties prefer the fewest
    domain walls (UP-UP, then UP-DOWN).
    """
    if n_blocks < 1:
        raise QpmError("need at least one block")
    _require_real_target(target, "design_tambasco_blocks")
    t0 = time.perf_counter()
    dA = 2.0 * lc / math.pi
    targets = np.real(target_eval(target, np.arange(1, n_blocks + 1) * 2.0 * lc))
    amp = 0.0
    signs = np.empty(2 * n_blocks)
    residuals = np.empty(n_blocks)
    for m in range(n_blocks):
        tgt = targets[m]
        options = (
            (abs(tgt - amp), 0, 0.0, (1.0, 1.0)),
            (abs(tgt - (amp + 2.0 * dA)), 1, 2.0 * dA, (1.0, -1.0)),
            (abs(tgt - (amp - 2.0 * dA)), 2, -2.0 * dA, (-1.0, 1.0)),
        )
        err, _, step, pair = min(options)
        signs[2 * m: 2 * m + 2] = pair
        amp += step
        residuals[m] = err
    grating = Grating(np.full(2 * n_blocks, lc), signs)
    return DesignReport(
        grating=grating, algorithm="blocks", iterations=n_blocks,
        residuals=residuals, wall_time=time.perf_counter() - t0,
        params={"lc": lc, "w": lc, "n_blocks": n_blocks, "target": _target_params(target)},
    )


def design_domain_by_domain(target: TargetAmplitude, n_domains: int, lc: float) -> DesignReport:
    """Single-domain variant of the block method (four-condition rule).

    The first domain is UP.  For each subsequent domain the decision is
    keyed on the sign of e = A_target(z + w) - A(z) and on whether A was
    increasing over the previous domain, with the weak inequalities read
    as printed: e >= 0 selects the increasing pair of rules.
    """
    if n_domains < 2:
        raise QpmError("need at least two domains")
    _require_real_target(target, "design_domain_by_domain")
    t0 = time.perf_counter()
    dA = 2.0 * lc / math.pi
    targets = np.real(target_eval(target, np.arange(1, n_domains + 1) * lc))
    signs = np.empty(n_domains)
    residuals = np.empty(n_domains)
    signs[0] = 1.0
    amp_prev, amp = 0.0, dA  # A(0), A(lc) after the first UP domain
    residuals[0] = abs(targets[0] - amp)
    for m in range(2, n_domains + 1):
        e = targets[m - 1] - amp
        increasing = amp >= amp_prev
        if e >= 0.0:
            flip = increasing  # keep increasing, or turn around upward
        else:
            flip = not increasing  # keep decreasing, or turn around downward
        s = -signs[m - 2] if flip else signs[m - 2]
        signs[m - 1] = s
        step = s * dA * (1.0 if m % 2 == 1 else -1.0)
        amp_prev, amp = amp, amp + step
        residuals[m - 1] = abs(targets[m - 1] - amp)
    grating = Grating(np.full(n_domains, lc), signs)
    return DesignReport(
        grating=grating, algorithm="domain-by-domain", iterations=n_domains,
        residuals=residuals, wall_time=time.perf_counter() - t0,
        params={"lc": lc, "w": lc, "n_domains": n_domains, "target": _target_params(target)},
    )


def design_sub_coherence(target: TargetAmplitude, w: float, n_domains: int,
                         lc: float, min_width: float = MIN_PRACTICAL_WIDTH) -> DesignReport:
    """Greedy UP/DOWN choice per domain of width w <= lc.

    Uses the running-sum closed form for the complex amplitude at domain
    ends, so the cost |A_target(m w) - A_m| accounts for both quadratures;
    the target may be complex.  Ties repeat the previous orientation (the
    first domain defaults to UP).
    """
    if n_domains < 1:
        raise QpmError("need at least one domain")
    if w <= 0.0:
        raise QpmError("domain width must be positive")
    if w > lc * (1.0 + 1e-12):
        raise QpmError("sub-coherence method needs w <= lc; "
                       "use design_domain_by_domain for w = lc")
    _warn_small_domains(w, min_width)
    t0 = time.perf_counter()
    targets = target_eval(target, np.arange(1, n_domains + 1) * w)
    prefactor = (lc / math.pi) * (np.exp(-1j * math.pi * w / lc) - 1.0)
    phases = np.exp(1j * math.pi * np.arange(1, n_domains + 1) * w / lc)
    signs = np.empty(n_domains)
    residuals = np.empty(n_domains)
    running = 0.0 + 0.0j
    prev = 1.0
    for m in range(n_domains):
        up = prefactor * (running + phases[m])
        down = prefactor * (running - phases[m])
        e_up = abs(targets[m] - up)
        e_down = abs(targets[m] - down)
        if e_up < e_down:
            s = 1.0
        elif e_down < e_up:
            s = -1.0
        else:
            s = prev
        signs[m] = s
        running += s * phases[m]
        prev = s
        residuals[m] = min(e_up, e_down)
    grating = Grating(np.full(n_domains, w), signs)
    return DesignReport(
        grating=grating, algorithm="sub-coherence", iterations=n_domains,
        residuals=residuals, wall_time=time.perf_counter() - t0,
        params={"lc": lc, "w": w, "n_domains": n_domains, "target": _target_params(target)},
    )


# --- width annealing ---------------------------------------------------------

def _pmf_mag_numpy(widths: np.ndarray, signs: np.ndarray, dk_start: float,
                   dk_step: float, count: int) -> np.ndarray:
    dks = dk_start + dk_step * np.arange(count)
    z = np.concatenate([[0.0], np.cumsum(widths)])
    mid = 0.5 * (z[:-1] + z[1:])
    phi = np.sum(signs * widths * np.sinc(dks[:, None] * widths / (2.0 * math.pi))
                 * np.exp(1j * dks[:, None] * mid), axis=1)
    return np.abs(phi)


try:
    from numba import njit

    # The annealer evaluates the PMF magnitude tens of thousands of times,
    # so the grid phase factors are advanced by complex recurrences along
    # the uniform dk axis instead of per-sample trig calls.
    @njit(cache=True)
    def _pmf_mag_jit(widths, signs, dk_start, dk_step, count):  # pragma: no cover
        re = np.zeros(count)
        im = np.zeros(count)
        z0 = 0.0
        for b in range(widths.size):
            wb = widths[b]
            half_w = 0.5 * wb
            mid = z0 + half_w
            z0 += wb
            coef = signs[b] * wb
            # phasors at dk_start and their per-step ratios
            pm_re = math.cos(dk_start * mid)
            pm_im = math.sin(dk_start * mid)
            rm_re = math.cos(dk_step * mid)
            rm_im = math.sin(dk_step * mid)
            pw_re = math.cos(dk_start * half_w)
            pw_im = math.sin(dk_start * half_w)
            rw_re = math.cos(dk_step * half_w)
            rw_im = math.sin(dk_step * half_w)
            dk = dk_start
            for j in range(count):
                x = dk * half_w
                sc = pw_im / x if x != 0.0 else 1.0  # sin(x)/x via phasor
                amp = coef * sc
                re[j] += amp * pm_re
                im[j] += amp * pm_im
                t = pm_re * rm_re - pm_im * rm_im
                pm_im = pm_re * rm_im + pm_im * rm_re
                pm_re = t
                t = pw_re * rw_re - pw_im * rw_im
                pw_im = pw_re * rw_im + pw_im * rw_re
                pw_re = t
                dk += dk_step
        return np.sqrt(re * re + im * im)

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False


def _pmf_mag(widths, signs, dk_start, dk_step, count):
    if _HAVE_NUMBA:
        return _pmf_mag_jit(widths, signs, dk_start, dk_step, count)
    return _pmf_mag_numpy(widths, signs, dk_start, dk_step, count)


def _uniform_grid_params(dks: np.ndarray) -> tuple[float, float, int]:
    steps = np.diff(dks)
    step = float(steps[0])
    if step <= 0.0 or not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise QpmError("annealer energy grid must be uniformly spaced")
    return float(dks[0]), step, int(dks.size)


def pmf_on_grid(grating: Grating, delta_k: np.ndarray) -> PmfGrid:
    """|PMF| on a uniform dk grid via the annealer's own evaluation path.

    The grating is reduced to merged same-orientation blocks first, exactly
    as ``anneal_widths`` does internally, so a target built from a seed's
    own grid gives identically zero energy (the annealer fixed point).
    """
    dks = np.asarray(delta_k, dtype=float)
    start, step, count = _uniform_grid_params(dks)
    blocks = grating.merged_blocks()
    mag = _pmf_mag(blocks.widths, blocks.orientations, start, step, count)
    return PmfGrid(delta_k=dks, phi=mag.astype(complex),
                   grating_id="grating-pmf", delta_k0=float(dks[count // 2]))


def _block_energy(widths, signs, dk_start, dk_step, count, target_mag, inv_peak):
    mag = _pmf_mag(widths, signs, dk_start, dk_step, count)
    diff = target_mag - mag
    return math.sqrt(float(np.sum(diff * diff))) * inv_peak


def _anneal_once(block_w: np.ndarray, block_s: np.ndarray, grid: tuple[float, float, int],
                 target_mag: np.ndarray, inv_peak: float, cfg: AnnealConfig,
                 seed: int, collect_trace: bool):
    dk_start, dk_step, count = grid
    rng = np.random.default_rng(seed)
    best = block_w.copy()
    e_min = _block_energy(best, block_s, dk_start, dk_step, count, target_mag, inv_peak)
    cur = best.copy()
    e_cur = e_min
    temp = cfg.temperature
    step = cfg.step
    frac = cfg.perturbation
    iterations = 0
    trace = [] if collect_trace else None
    warned = False
    while e_min > cfg.energy_threshold and temp > 0.0 and iterations < cfg.max_iterations:
        iterations += 1
        kick = rng.uniform(-frac, frac, size=cur.size)
        trial = cur * (1.0 + kick)
        bad = trial <= 0.0
        while np.any(bad):  # unreachable for frac <= 0.05; kept as a guard
            trial[bad] = cur[bad] * (1.0 + rng.uniform(-frac, frac, size=int(bad.sum())))
            bad = trial <= 0.0
        if not warned and np.any(trial < cfg.min_width):
            warnings.warn(
                "annealer produced block widths below the practical poling "
                f"limit ({cfg.min_width * 1e6:.3g} um)", stacklevel=4)
            warned = True
        energy = _block_energy(trial, block_s, dk_start, dk_step, count,
                               target_mag, inv_peak)
        accepted = True
        if energy < e_min:
            best = trial.copy()
            e_min = energy
            cur = trial
            e_cur = energy
        else:
            barrier = energy - e_cur if cfg.acceptance == "metropolis" else energy
            if rng.random() < math.exp(-barrier / temp):
                cur = trial
                e_cur = energy
            else:
                cur = best.copy()
                e_cur = e_min
                accepted = False
                if cfg.cooling == "on-rejection":
                    temp -= step
        if cfg.cooling == "every-iteration":
            temp -= step
        if collect_trace:
            trace.append((iterations, temp, energy, accepted))
    return best, e_min, iterations, trace


def anneal_widths(seed: Grating, target_pmf: PmfGrid, cfg: AnnealConfig) -> DesignReport:
    """Simulated annealing of block widths against a target |PMF|.

    The seed's adjacent same-orientation domains are first merged into
    blocks; every block width is then perturbed by an independent uniform
    draw of up to +-1% per iteration.  A trial is kept as the best
    configuration when its energy

        E = sqrt( sum_dk (|phi_target| - |phi|)^2 ) / max|phi_target|

    improves on the best so far, otherwise it is accepted with probability
    exp(-E/T); on rejection the best configuration is restored and T is
    decreased by dT.  Orientations and the merged block count are never
    modified.  ``cfg.restarts`` independent runs are made with seeds
    ``cfg.seed + r`` and the lowest-energy result is returned.
    """
    blocks = seed.merged_blocks()
    block_s = blocks.orientations.copy()
    dks = np.asarray(target_pmf.delta_k, dtype=float)
    grid = _uniform_grid_params(dks)
    target_mag = np.abs(np.asarray(target_pmf.phi))
    peak = float(target_mag.max())
    if peak <= 0.0:
        raise QpmError("target PMF magnitude is identically zero")
    inv_peak = 1.0 / peak

    t0 = time.perf_counter()
    results = []
    for r in range(cfg.restarts):
        results.append(_anneal_once(
            blocks.widths.copy(), block_s, grid, target_mag, inv_peak,
            cfg, cfg.seed + r, cfg.trace,
        ))
    energies = tuple(res[1] for res in results)
    best_w, e_min, iterations, trace = min(results, key=lambda res: res[1])
    grating = Grating(best_w, block_s)
    return DesignReport(
        grating=grating, algorithm="annealed", iterations=iterations,
        final_energy=e_min, wall_time=time.perf_counter() - t0,
        restart_energies=energies, seed=cfg.seed, trace=trace,
        params={"blocks": int(block_s.size), "temperature": cfg.temperature,
                "temperature_step": cfg.step, "restarts": cfg.restarts,
                "grid_count": int(dks.size)},
    )


def _target_params(target: TargetAmplitude) -> dict:
    if target.family == "custom-tabulated":
        return {"family": target.family, "length": target.length,
                "samples": int(target.z_grid.size)}
    return {"family": target.family, "length": target.length,
            "sigma": target.sigma, "scale": target.scale}


def design(algorithm: str, lc: float, n_domains: int,
           sigma_ratio: float = 0.25, scale: float | None = None,
           w_ratio: float = 1.0, anneal: AnnealConfig | None = None,
           min_width: float = MIN_PRACTICAL_WIDTH) -> DesignReport:
    """Run one designer for a crystal of n_domains coherence lengths.

    ``sigma_ratio`` is sigma/L for the Gaussian target; ``w_ratio`` is
    w/lc for the sub-coherence method.
    """
    if algorithm not in ALGORITHM_IDS:
        raise QpmError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHM_IDS}")
    length = n_domains * lc
    if algorithm == "periodic":
        t0 = time.perf_counter()
        grating = design_periodic(n_domains, lc)
        return DesignReport(grating=grating, algorithm="periodic",
                            iterations=n_domains, wall_time=time.perf_counter() - t0,
                            params={"lc": lc, "w": lc, "n_domains": n_domains})
    sigma = sigma_ratio * length
    target = gaussian_erf_target(length, sigma=sigma, scale=scale)
    if algorithm == "blocks":
        if n_domains % 2:
            raise QpmError("block method needs an even number of domains")
        return design_tambasco_blocks(target, n_domains // 2, lc)
    if algorithm == "domain-by-domain":
        return design_domain_by_domain(target, n_domains, lc)
    if algorithm == "sub-coherence":
        w = w_ratio * lc
        count = int(round(length / w))
        return design_sub_coherence(target, w, count, lc, min_width=min_width)
    # annealed: domain-by-domain seed, Gaussian target PMF
    cfg = anneal if anneal is not None else AnnealConfig()
    seed_report = design_domain_by_domain(target, n_domains, lc)
    target_grid = gaussian_target_pmf(
        lc, length, target.sigma, target.scale,
        n=cfg.grid_count,
        half_width=cfg.grid_half_width,
    )
    report = anneal_widths(seed_report.grating, target_grid, cfg)
    report.params.update({"lc": lc, "n_domains": n_domains,
                          "target": _target_params(target)})
    return report


def _sweep_one(args) -> DesignReport:
    algorithm, lc, n, kwargs = args
    return design(algorithm, lc, n, **kwargs)


def design_for_length_sweep(algorithm: str, lengths_lc: Sequence[int], lc: float,
                            parallel: int = 1, **kwargs) -> list[DesignReport]:
    """Run one designer across crystal lengths given in coherence lengths."""
    lengths = [int(n) for n in lengths_lc]
    if any(n < 20 for n in lengths):
        raise QpmError("sweep lengths must be at least 20 coherence lengths")
    jobs = [(algorithm, lc, n, kwargs) for n in lengths]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(parallel, len(jobs))) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(job) for job in jobs]
