"""File artifacts: provenance-stamped CSVs and the metadata sidecar.

Every artifact embeds the resolved configuration and the tool version in
``#`` comment lines so a run can be reproduced from any one of its
outputs.  Nothing time-dependent is written; re-running a config with the
same seed reproduces every artifact byte for byte.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .algorithms import DesignReport
from .grating import Grating, export_poling, poling_content_hash

__all__ = [
    "provenance_lines",
    "write_csv",
    "write_poling",
    "write_sidecar",
    "write_amplitude_trace",
    "write_pmf_scan",
    "write_jsa_grid",
    "write_schmidt_coefficients",
    "write_sweep_table",
    "write_energy_trace",
]


def _json_compact(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def provenance_lines(config: dict, extra: dict | None = None) -> list[str]:
    lines = [
        f"# tool = qpmdesign {__version__}",
        f"# config = {_json_compact(config)}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"# {key} = {value}")
    return lines


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence],
              config: dict, extra: dict | None = None) -> None:
    out = provenance_lines(config, extra)
    out.append(",".join(header))
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


def write_poling(path: str, grating: Grating, fmt: str, config: dict) -> None:
    head = "\n".join(provenance_lines(config, {"format": fmt})) + "\n"
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(export_poling(grating, fmt))


def write_sidecar(path: str, report: DesignReport, lc: float, config: dict) -> None:
    """JSON sidecar: algorithm, parameters and a hash of the domain list."""
    grating = report.grating
    payload = {
        "tool": f"qpmdesign {__version__}",
        "algorithm": report.algorithm,
        "coherence_length_m": lc,
        "domain_count": grating.domain_count,
        "length_m": grating.length,
        "iterations": report.iterations,
        "final_energy": report.final_energy,
        "restart_energies": (list(report.restart_energies)
                             if report.restart_energies else None),
        "seed": report.seed,
        "params": report.params,
        "content_hash_sha256": poling_content_hash(grating),
        "config": config,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_amplitude_trace(path: str, z: np.ndarray, amplitude: np.ndarray,
                          target: np.ndarray | None, config: dict) -> None:
    rows = []
    for i in range(z.size):
        row = [z[i], amplitude[i].real, amplitude[i].imag]
        if target is None:
            row += [None, None]
        else:
            row += [target[i].real, target[i].imag]
        rows.append(row)
    write_csv(path, ["z_m", "amplitude_re_m", "amplitude_im_m",
                     "target_re_m", "target_im_m"], rows, config)


def write_pmf_scan(path: str, delta_k: np.ndarray, phi: np.ndarray,
                   config: dict) -> None:
    rows = [[delta_k[i], phi[i].real, phi[i].imag, abs(phi[i])]
            for i in range(delta_k.size)]
    write_csv(path, ["delta_k_rad_m", "phi_re_m", "phi_im_m", "phi_abs_m"],
              rows, config)


def write_jsa_grid(path: str, signal_omegas: np.ndarray, idler_omegas: np.ndarray,
                   amplitude: np.ndarray, config: dict) -> None:
    """|f| on the grid, row-major: first column signal frequency, header idler."""
    header = ["omega_signal_rad_s"] + [f"{w:.12g}" for w in idler_omegas]
    rows = []
    mag = np.abs(amplitude)
    for i, ws in enumerate(signal_omegas):
        rows.append([ws] + [mag[i, j] for j in range(idler_omegas.size)])
    write_csv(path, header, rows, config)


def write_schmidt_coefficients(path: str, coefficients: np.ndarray,
                               config: dict, extra: dict | None = None) -> None:
    rows = [[k + 1, c] for k, c in enumerate(coefficients)]
    write_csv(path, ["k", "b_k"], rows, config, extra)


def write_sweep_table(path: str, rows: list[dict], config: dict) -> None:
    table = []
    for row in rows:
        table.append([
            row.get("length_lc"), row.get("length_m"), row.get("purity"),
            row.get("bandwidth_rad_s"), row.get("final_energy"),
            row.get("status", "ok"),
        ])
    write_csv(path, ["length_lc", "length_m", "purity", "bandwidth_rad_s",
                     "final_energy", "status"], table, config)


def write_energy_trace(path: str, trace: list[tuple], config: dict) -> None:
    rows = [[it, T, E, int(acc)] for (it, T, E, acc) in trace]
    write_csv(path, ["iteration", "temperature", "energy", "accepted"],
              rows, config)


def ensure_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
