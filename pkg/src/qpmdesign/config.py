"""Run configuration: TOML file plus command-line overrides.

All lengths in config files and flags carry explicit unit suffixes
(``791nm``, ``23um``, ``2mm``); bare numbers are rejected.  Temperatures
use a ``C`` suffix.  Flags win over file values, which win over the
defaults below.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .algorithms import ALGORITHM_IDS, AnnealConfig
from .dispersion import (
    DispersionModel,
    LinearSyntheticModel,
    ProcessSpec,
    coherence_length,
    load_ktp_model,
)
from .errors import ConfigError, QpmError

__all__ = ["RunConfig", "parse_length", "parse_temperature", "load_config"]

_LENGTH_UNITS = {
    "nm": 1e-9,
    "um": 1e-6,
    "µm": 1e-6,
    "mm": 1e-3,
    "cm": 1e-2,
    "m": 1.0,
}

_LENGTH_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(nm|um|µm|mm|cm|m)\s*$")
_TEMP_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*C\s*$")


def parse_length(text: str, fieldname: str = "length") -> float:
    """Parse a suffixed length like ``791nm`` or ``2mm`` to metres."""
    if not isinstance(text, str):
        raise ConfigError(fieldname, f"lengths need a unit suffix, got {text!r}")
    m = _LENGTH_RE.match(text)
    if not m:
        raise ConfigError(
            fieldname,
            f"cannot parse length {text!r}; use a number with one of "
            f"{sorted(set(_LENGTH_UNITS))}",
        )
    try:
        value = float(m.group(1))
    except ValueError:
        raise ConfigError(fieldname, f"bad number in length {text!r}") from None
    return value * _LENGTH_UNITS[m.group(2)]


def parse_temperature(text: str, fieldname: str = "temperature") -> float:
    """Parse ``25C`` to degrees Celsius."""
    if isinstance(text, (int, float)):
        raise ConfigError(fieldname, f"temperatures need a C suffix, got {text!r}")
    m = _TEMP_RE.match(text)
    if not m:
        raise ConfigError(fieldname, f"cannot parse temperature {text!r}; use e.g. 25C")
    return float(m.group(1))


_DEFAULTS: dict[str, dict[str, Any]] = {
    "dispersion": {
        "model": "ktp-sellmeier",
        "data_file": "",
        "temperature": "25C",
    },
    "process": {
        "pump_wavelength": "791nm",
        "signal_wavelength": "",
        "idler_wavelength": "",
        "pump_axis": "y",
        "signal_axis": "y",
        "idler_axis": "z",
    },
    "design": {
        "algorithm": "domain-by-domain",
        "length": "",
        "domains": 0,
        "sigma_ratio": 0.25,
        "w_ratio": 0.1,
    },
    "anneal": {
        "temperature": 0.1,
        "temperature_step": 0.0,  # 0 -> T/100000
        "energy_threshold": 0.0,
        "perturbation": 0.01,
        "grid_count": 257,
        "max_iterations": 150000,
        "restarts": 5,
        "cooling": "on-rejection",
        "acceptance": "absolute",
        "trace": False,
    },
    "spectrum": {
        "grid": 100,
        "window_factor": 8.0,
        "pump_bandwidth_rad_s": 0.0,  # 0 -> optimize
    },
    "sweep": {
        "lengths_lc": [],
    },
    "synthetic": {  # linear-synthetic model parameters, used when selected
        "k0_rad_m": 136159.46493557468,
        "tau_p_s_m": 6.0308651e-09,
        "tau_s_s_m": 5.8833403e-09,
        "tau_i_s_m": 6.1782901e-09,
        "pump_wavelength": "791nm",
    },
    "output": {
        "directory": "qpmdesign-out",
        "seed": 2016,
        "plots": True,
        "poling_format": "csv-widths",
    },
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in out:
            raise ConfigError(where, "unknown configuration key")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(where, "expected a table")
            out[key] = _merge(out[key], value, where + ".")
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    """Fully resolved configuration for one command invocation."""

    raw: dict
    model: DispersionModel
    spec: ProcessSpec
    lc: float
    algorithm: str
    n_domains: int
    sigma_ratio: float
    w_ratio: float
    anneal: AnnealConfig
    grid_n: int
    window_factor: float
    pump_bandwidth: float | None
    lengths_lc: list[int]
    out_dir: str
    seed: int
    plots: bool
    poling_format: str


def _resolve_model(cfg: dict) -> tuple[DispersionModel, ProcessSpec]:
    disp = cfg["dispersion"]
    proc = cfg["process"]
    temperature = parse_temperature(disp["temperature"], "dispersion.temperature")
    pump = parse_length(proc["pump_wavelength"], "process.pump_wavelength")
    signal = (parse_length(proc["signal_wavelength"], "process.signal_wavelength")
              if proc["signal_wavelength"] else 2.0 * pump)
    idler = (parse_length(proc["idler_wavelength"], "process.idler_wavelength")
             if proc["idler_wavelength"] else 2.0 * pump)

    if disp["model"] == "ktp-sellmeier":
        model = load_ktp_model(disp["data_file"] or None, temperature=temperature)
        axes = (proc["pump_axis"], proc["signal_axis"], proc["idler_axis"])
    elif disp["model"] == "linear-synthetic":
        syn = cfg["synthetic"]
        pump_syn = parse_length(syn["pump_wavelength"], "synthetic.pump_wavelength")
        omega_p = 2.0 * math.pi * 299792458.0 / pump_syn
        model = LinearSyntheticModel(
            k0=float(syn["k0_rad_m"]),
            tau_p=float(syn["tau_p_s_m"]),
            tau_s=float(syn["tau_s_s_m"]),
            tau_i=float(syn["tau_i_s_m"]),
            omega0_p=omega_p, omega0_s=omega_p / 2.0, omega0_i=omega_p / 2.0,
            temperature=temperature,
        )
        axes = ("pump", "signal", "idler")
        pump, signal, idler = pump_syn, 2.0 * pump_syn, 2.0 * pump_syn
    else:
        raise ConfigError("dispersion.model",
                          f"unknown model {disp['model']!r}; use ktp-sellmeier "
                          "or linear-synthetic")
    try:
        spec = ProcessSpec(pump, signal, idler, pump_axis=axes[0],
                           signal_axis=axes[1], idler_axis=axes[2],
                           temperature=temperature)
    except QpmError as exc:
        raise ConfigError("process", str(exc)) from None
    return model, spec


def resolve(cfg: dict) -> RunConfig:
    """Validate a merged config dict and construct the working objects."""
    design = cfg["design"]
    if design["algorithm"] not in ALGORITHM_IDS:
        raise ConfigError("design.algorithm",
                          f"unknown algorithm {design['algorithm']!r}; "
                          f"choose from {list(ALGORITHM_IDS)}")
    if not design["sigma_ratio"] > 0.0:
        raise ConfigError("design.sigma_ratio", "must be positive")
    if not 0.0 < design["w_ratio"] <= 1.0:
        raise ConfigError("design.w_ratio", "must lie in (0, 1]")

    model, spec = _resolve_model(cfg)
    try:
        lc = coherence_length(model, spec)
    except QpmError as exc:
        raise ConfigError("process", str(exc)) from None

    if design["length"] and design["domains"]:
        raise ConfigError("design.length", "give either length or domains, not both")
    if design["length"]:
        length = parse_length(design["length"], "design.length")
        n_domains = int(round(length / lc))
    elif design["domains"]:
        n_domains = int(design["domains"])
    else:
        n_domains = 0  # commands that need it will reject
    if n_domains < 0:
        raise ConfigError("design.domains", "must be positive")

    ann = cfg["anneal"]
    try:
        anneal = AnnealConfig(
            temperature=float(ann["temperature"]),
            temperature_step=(float(ann["temperature_step"]) or None),
            energy_threshold=float(ann["energy_threshold"]),
            perturbation=float(ann["perturbation"]),
            grid_count=int(ann["grid_count"]),
            seed=int(cfg["output"]["seed"]),
            max_iterations=int(ann["max_iterations"]),
            restarts=int(ann["restarts"]),
            cooling=str(ann["cooling"]),
            acceptance=str(ann["acceptance"]),
            trace=bool(ann["trace"]),
        )
    except QpmError as exc:
        raise ConfigError("anneal", str(exc)) from None

    spect = cfg["spectrum"]
    grid_n = int(spect["grid"])
    if grid_n < 32:
        raise ConfigError("spectrum.grid", "must be at least 32")
    window_factor = float(spect["window_factor"])
    if window_factor <= 0.0:
        raise ConfigError("spectrum.window_factor", "must be positive")
    bw = float(spect["pump_bandwidth_rad_s"])
    if bw < 0.0:
        raise ConfigError("spectrum.pump_bandwidth_rad_s", "must be >= 0")

    fmt = cfg["output"]["poling_format"]
    if fmt not in ("csv-widths", "csv-boundaries"):
        raise ConfigError("output.poling_format",
                          f"unknown format {fmt!r}; use csv-widths or csv-boundaries")

    lengths = [int(n) for n in cfg["sweep"]["lengths_lc"]]

    return RunConfig(
        raw=cfg,
        model=model,
        spec=spec,
        lc=lc,
        algorithm=design["algorithm"],
        n_domains=n_domains,
        sigma_ratio=float(design["sigma_ratio"]),
        w_ratio=float(design["w_ratio"]),
        anneal=anneal,
        grid_n=grid_n,
        window_factor=window_factor,
        pump_bandwidth=bw or None,
        lengths_lc=lengths,
        out_dir=str(cfg["output"]["directory"]),
        seed=int(cfg["output"]["seed"]),
        plots=bool(cfg["output"]["plots"]),
        poling_format=fmt,
    )


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read the TOML file (if any), apply overrides, validate."""
    merged = _DEFAULTS
    if path:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"no such config file: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"invalid TOML: {exc}") from None
        merged = _merge(merged, user)
    else:
        merged = _merge(merged, {})
    if overrides:
        merged = _merge(merged, overrides)
    return resolve(merged)
