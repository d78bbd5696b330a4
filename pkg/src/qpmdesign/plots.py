"""Figure rendering for the CLI report path.

Each function renders one PNG next to the corresponding CSV artifact.
matplotlib is imported lazily with the Agg backend so headless runs and
``--no-plot`` invocations never touch a display.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "render_amplitude_trace",
    "render_pmf_scan",
    "render_jsa",
    "render_schmidt",
    "render_sweep",
    "render_energy_trace",
]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def render_amplitude_trace(path, z, amplitude, target, reference_peak):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    norm = reference_peak if reference_peak else 1.0
    zmm = np.asarray(z) * 1e3
    ax.plot(zmm, np.real(amplitude) / norm, lw=1.0, label="Re A / A0")
    ax.plot(zmm, np.imag(amplitude) / norm, lw=1.0, label="Im A / A0")
    if target is not None:
        ax.plot(zmm, np.real(target) / norm, "r--", lw=1.0, label="target / A0")
    ax.set_xlabel("z (mm)")
    ax.set_ylabel("field amplitude (periodic reference = 1)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_pmf_scan(path, delta_k, phi, reference_peak, delta_k0=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    norm = reference_peak if reference_peak else 1.0
    ax.plot(np.asarray(delta_k) / 1e3, np.abs(phi) / norm, lw=1.0)
    if delta_k0 is not None:
        ax.axvline(delta_k0 / 1e3, color="k", ls=":", lw=0.8)
    ax.set_xlabel(r"$\Delta k$ (rad/mm)")
    ax.set_ylabel(r"$|\phi| / \phi_0$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_jsa(path, signal_omegas, idler_omegas, amplitude):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    mag = np.abs(amplitude)
    extent = [idler_omegas[0] / 1e12, idler_omegas[-1] / 1e12,
              signal_omegas[0] / 1e12, signal_omegas[-1] / 1e12]
    im = ax.imshow(mag, origin="lower", extent=extent, aspect="auto",
                   cmap="viridis")
    ax.set_xlabel(r"$\omega_i$ (Trad/s)")
    ax.set_ylabel(r"$\omega_s$ (Trad/s)")
    fig.colorbar(im, ax=ax, label="|f| (normalised)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_schmidt(path, coefficients, purity, n_show=20):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    b = np.asarray(coefficients)[:n_show]
    ax.bar(np.arange(1, b.size + 1), b, color="tab:blue")
    ax.set_xlabel("Schmidt mode k")
    ax.set_ylabel(r"$b_k$")
    ax.set_title(f"purity = {purity:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep(path, rows):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ok = [r for r in rows if r.get("status", "ok") == "ok" and r.get("purity")]
    if ok:
        x = [r["length_lc"] for r in ok]
        y = [r["purity"] for r in ok]
        ax.plot(x, y, "o-", ms=4)
    ax.set_xlabel("crystal length (coherence lengths)")
    ax.set_ylabel("heralded-photon purity")
    ax.set_ylim(top=1.0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_energy_trace(path, trace):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    its = [t[0] for t in trace]
    energies = [t[2] for t in trace]
    ax.plot(its, energies, lw=0.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
