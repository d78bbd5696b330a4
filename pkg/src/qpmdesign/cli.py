"""Command-line interface.

Subcommands: ``design``, ``purity``, ``sweep``, ``export``, ``gvm-report``.
Configuration comes from a TOML file (``--config``) with flag overrides;
flags win.  Exit codes: 0 success, 1 runtime failure, 2 configuration or
validation failure.  Each run writes provenance-stamped CSV artifacts and,
unless ``--no-plot`` is given, matching PNG figures.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__, plots
from .algorithms import design
from .artifacts import (
    ensure_dir,
    write_amplitude_trace,
    write_csv,
    write_energy_trace,
    write_jsa_grid,
    write_pmf_scan,
    write_poling,
    write_schmidt_coefficients,
    write_sidecar,
    write_sweep_table,
)
from .config import RunConfig, load_config
from .dispersion import delta_k0, gvm_report
from .errors import ConfigError, QpmError
from .grating import (
    field_amplitude,
    gaussian_erf_target,
    import_poling,
    periodic_reference_peak,
    target_eval,
)
from .spectrum import PumpEnvelope, build_jsa, optimize_pump_bandwidth, schmidt

__all__ = ["main"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed (annealer, restarts)")
    p.add_argument("--plot", dest="plot", action="store_true", default=None,
                   help="render PNG figures next to the CSV output (default)")
    p.add_argument("--no-plot", dest="plot", action="store_false",
                   help="suppress figure rendering")


def _add_design_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", help="periodic | blocks | domain-by-domain | "
                                       "annealed | sub-coherence")
    p.add_argument("--length", help="crystal length with unit suffix, e.g. 2mm")
    p.add_argument("--domains", type=int, help="crystal length in coherence lengths")
    p.add_argument("--sigma-ratio", type=float, help="target sigma / L (default 0.25)")
    p.add_argument("--w-ratio", type=float,
                   help="sub-coherence domain width / lc (default 0.1)")
    p.add_argument("--poling-format", help="csv-widths | csv-boundaries")


def _add_spectrum_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, help="JSA grid points per axis (default 100)")
    p.add_argument("--window-factor", type=float,
                   help="JSA span in PMF widths (default 8)")
    p.add_argument("--pump-bandwidth", type=float,
                   help="fixed pump bandwidth in rad/s (default: optimize)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpmdesign",
        description="Design quasi-phase-matched poling patterns and evaluate "
                    "heralded-photon spectral purity.",
    )
    parser.add_argument("--version", action="version",
                        version=f"qpmdesign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="run a poling designer and export artifacts")
    _add_common(p)
    _add_design_opts(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("purity", help="evaluate the purity of a design")
    _add_common(p)
    _add_design_opts(p)
    _add_spectrum_opts(p)
    p.add_argument("--poling", help="poling CSV to evaluate instead of designing")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("sweep", help="purity versus crystal length")
    _add_common(p)
    _add_design_opts(p)
    _add_spectrum_opts(p)
    p.add_argument("--lengths", help="comma-separated lengths in coherence "
                                     "lengths, e.g. 100,200,400")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="convert a poling file between formats")
    _add_common(p)
    p.add_argument("--poling", required=True, help="input poling CSV")
    p.add_argument("--format", required=True, dest="fmt",
                   help="csv-widths | csv-boundaries")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("gvm-report", help="group-velocity diagnostics")
    _add_common(p)
    p.set_defaults(func=cmd_gvm_report)

    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    over: dict = {}

    def put(section: str, key: str, value) -> None:
        if value is not None:
            over.setdefault(section, {})[key] = value

    put("output", "directory", getattr(args, "out", None))
    put("output", "seed", getattr(args, "seed", None))
    put("output", "plots", getattr(args, "plot", None))
    put("output", "poling_format", getattr(args, "poling_format", None))
    put("design", "algorithm", getattr(args, "algorithm", None))
    if getattr(args, "length", None) is not None:
        put("design", "length", args.length)
        put("design", "domains", 0)
    if getattr(args, "domains", None) is not None:
        put("design", "domains", args.domains)
        put("design", "length", "")
    put("design", "sigma_ratio", getattr(args, "sigma_ratio", None))
    put("design", "w_ratio", getattr(args, "w_ratio", None))
    put("spectrum", "grid", getattr(args, "grid", None))
    put("spectrum", "window_factor", getattr(args, "window_factor", None))
    put("spectrum", "pump_bandwidth_rad_s", getattr(args, "pump_bandwidth", None))
    if getattr(args, "lengths", None) is not None:
        try:
            lengths = [int(tok) for tok in args.lengths.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError("sweep.lengths_lc",
                              f"cannot parse lengths {args.lengths!r}") from None
        over.setdefault("sweep", {})["lengths_lc"] = lengths
    return over


def _config(args: argparse.Namespace) -> RunConfig:
    return load_config(getattr(args, "config", None), _overrides_from_args(args))


def _require_domains(cfg: RunConfig) -> int:
    if cfg.n_domains < 1:
        raise ConfigError("design.length",
                          "a crystal length (--length or --domains) is required")
    return cfg.n_domains


def _design_report(cfg: RunConfig):
    n = _require_domains(cfg)
    return design(cfg.algorithm, cfg.lc, n, sigma_ratio=cfg.sigma_ratio,
                  w_ratio=cfg.w_ratio, anneal=cfg.anneal)


def _design_target(cfg: RunConfig):
    if cfg.algorithm == "periodic":
        return None
    return gaussian_erf_target(cfg.n_domains * cfg.lc,
                               sigma=cfg.sigma_ratio * cfg.n_domains * cfg.lc)


def cmd_design(args: argparse.Namespace) -> int:
    cfg = _config(args)
    report = _design_report(cfg)
    grating = report.grating
    ensure_dir(cfg.out_dir)

    write_poling(os.path.join(cfg.out_dir, "poling.csv"), grating,
                 cfg.poling_format, cfg.raw)
    write_sidecar(os.path.join(cfg.out_dir, "design.json"), report, cfg.lc, cfg.raw)

    dk_carrier = math.pi / cfg.lc
    z = grating.boundaries
    amp = field_amplitude(grating, z, dk_carrier)
    target = _design_target(cfg)
    tgt = None
    if target is not None:
        tgt = target_eval(target, np.minimum(z, target.length))
    write_amplitude_trace(os.path.join(cfg.out_dir, "amplitude_trace.csv"),
                          z, np.atleast_1d(amp), tgt, cfg.raw)

    length = grating.length
    dks = np.linspace(dk_carrier - 16.0 * math.pi / length,
                      dk_carrier + 16.0 * math.pi / length, 2001)
    phi = grating.pmf(dks)
    write_pmf_scan(os.path.join(cfg.out_dir, "pmf_scan.csv"), dks, phi, cfg.raw)

    if report.trace:
        write_energy_trace(os.path.join(cfg.out_dir, "energy_trace.csv"),
                           report.trace, cfg.raw)

    if cfg.plots:
        ref = periodic_reference_peak(length)
        plots.render_amplitude_trace(
            os.path.join(cfg.out_dir, "amplitude_trace.png"), z, amp, tgt, ref)
        plots.render_pmf_scan(os.path.join(cfg.out_dir, "pmf_scan.png"),
                              dks, phi, ref, delta_k0=dk_carrier)
        if report.trace:
            plots.render_energy_trace(
                os.path.join(cfg.out_dir, "energy_trace.png"), report.trace)
    return 0


def _grating_for_purity(args: argparse.Namespace, cfg: RunConfig):
    poling = getattr(args, "poling", None)
    if poling:
        if not os.path.exists(poling):
            raise ConfigError("purity.poling", f"no such poling file: {poling}")
        with open(poling, "rb") as fh:
            return import_poling(fh.read()), None
    report = _design_report(cfg)
    return report.grating, report


def cmd_purity(args: argparse.Namespace) -> int:
    cfg = _config(args)
    grating, report = _grating_for_purity(args, cfg)
    ensure_dir(cfg.out_dir)

    if cfg.pump_bandwidth is None:
        bandwidth, purity = optimize_pump_bandwidth(
            grating, cfg.model, cfg.spec, grid_n=cfg.grid_n,
            window_factor=cfg.window_factor)
    else:
        bandwidth = cfg.pump_bandwidth
        purity = None
    pump = PumpEnvelope(cfg.spec.omega_signal + cfg.spec.omega_idler, bandwidth)
    js = build_jsa(grating, cfg.model, cfg.spec, pump, grid_n=cfg.grid_n,
                   window_factor=cfg.window_factor)
    result = schmidt(js)
    purity = result.purity

    write_jsa_grid(os.path.join(cfg.out_dir, "jsa_grid.csv"),
                   js.signal_omegas, js.idler_omegas, js.amplitude, cfg.raw)
    write_schmidt_coefficients(
        os.path.join(cfg.out_dir, "schmidt_coefficients.csv"),
        result.coefficients, cfg.raw,
        {"purity": f"{purity:.12g}", "bandwidth_rad_s": f"{bandwidth:.12g}"})

    if cfg.plots:
        plots.render_jsa(os.path.join(cfg.out_dir, "jsa.png"),
                         js.signal_omegas, js.idler_omegas, js.amplitude)
        plots.render_schmidt(os.path.join(cfg.out_dir, "schmidt.png"),
                             result.coefficients, purity)

    print(f"purity={purity:.6f} bandwidth_rad_s={bandwidth:.9g}")
    return 0


def _sweep_row_safe(job) -> dict:
    cfg, n, index = job
    try:
        anneal = replace(cfg.anneal, seed=cfg.seed + index)
        report = design(cfg.algorithm, cfg.lc, n, sigma_ratio=cfg.sigma_ratio,
                        w_ratio=cfg.w_ratio, anneal=anneal)
        grating = report.grating
        if cfg.pump_bandwidth is None:
            bandwidth, _ = optimize_pump_bandwidth(
                grating, cfg.model, cfg.spec, grid_n=cfg.grid_n,
                window_factor=cfg.window_factor)
        else:
            bandwidth = cfg.pump_bandwidth
        pump = PumpEnvelope(cfg.spec.omega_signal + cfg.spec.omega_idler, bandwidth)
        js = build_jsa(grating, cfg.model, cfg.spec, pump, grid_n=cfg.grid_n,
                       window_factor=cfg.window_factor)
        purity = schmidt(js).purity
        return {"length_lc": n, "length_m": grating.length, "purity": purity,
                "bandwidth_rad_s": bandwidth, "final_energy": report.final_energy,
                "status": "ok"}
    except Exception as exc:  # per-row failures become table rows
        return {"length_lc": n, "length_m": None, "purity": None,
                "bandwidth_rad_s": None, "final_energy": None,
                "status": f"error: {exc}"}


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if not cfg.lengths_lc:
        raise ConfigError("sweep.lengths_lc", "no sweep lengths configured")
    if any(n < 20 for n in cfg.lengths_lc):
        raise ConfigError("sweep.lengths_lc",
                          "sweep lengths must be at least 20 coherence lengths")
    jobs = [(cfg, n, i) for i, n in enumerate(cfg.lengths_lc)]
    workers = max(1, int(getattr(args, "parallel", 1) or 1))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_sweep_row_safe, jobs))
    else:
        rows = [_sweep_row_safe(job) for job in jobs]

    ensure_dir(cfg.out_dir)
    write_sweep_table(os.path.join(cfg.out_dir, "sweep.csv"), rows, cfg.raw)
    if cfg.plots:
        plots.render_sweep(os.path.join(cfg.out_dir, "sweep.png"), rows)

    failures = [r for r in rows if r["status"] != "ok"]
    for row in failures:
        print(f"error: runtime: length {row['length_lc']} lc failed: "
              f"{row['status']}", file=sys.stderr)
    return 1 if failures else 0


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.fmt not in ("csv-widths", "csv-boundaries"):
        raise ConfigError("export.format",
                          f"unknown format {args.fmt!r}; use csv-widths or "
                          "csv-boundaries")
    if not os.path.exists(args.poling):
        raise ConfigError("export.poling", f"no such poling file: {args.poling}")
    with open(args.poling, "rb") as fh:
        grating = import_poling(fh.read())
    ensure_dir(cfg.out_dir)
    out_path = os.path.join(cfg.out_dir, f"poling_{args.fmt.replace('csv-', '')}.csv")
    write_poling(out_path, grating, args.fmt, cfg.raw)
    print(out_path)
    return 0


def cmd_gvm_report(args: argparse.Namespace) -> int:
    cfg = _config(args)
    rep = gvm_report(cfg.model, cfg.spec)
    dk0 = delta_k0(cfg.model, cfg.spec)
    lines = [
        ("k_prime_pump_s_m", rep.k_prime_pump),
        ("k_prime_signal_s_m", rep.k_prime_signal),
        ("k_prime_idler_s_m", rep.k_prime_idler),
        ("gvm_residual_s_m", rep.residual),
        ("pmf_angle_deg", rep.theta_deg),
        ("delta_k0_rad_m", dk0),
        ("coherence_length_m", cfg.lc),
    ]
    ensure_dir(cfg.out_dir)
    write_csv(os.path.join(cfg.out_dir, "gvm_report.csv"),
              ["quantity", "value"], [[k, v] for k, v in lines], cfg.raw)
    for key, value in lines:
        print(f"{key}={value:.9g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except QpmError as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:  # numerical failures (e.g. SVD non-convergence)
        print(f"error: runtime: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
