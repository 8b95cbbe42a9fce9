"""Configuration loading and JSON/CSV serialization helpers."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import circuit
from .circuit import DeviceSpec, ZZModel, from_j_over_pi
from .errors import InvalidInputError
from .readout import MeasurementModel

FF = 1e-15

DEFAULT_CONFIG = {
    "seed": 20240607,
    "device": {"ej_ghz": 8.7, "alpha_a_mhz": -111.0, "alpha_b_mhz": -116.0, "alpha_c_mhz": -138.6, "flux": 0.0},
    "cavity": {"omega_bare_ghz": 7.23, "chi_a_mhz": -0.332, "kappa_mhz": 3.9},
    "measured": {
        "upper_ghz": {"a": 5.5585, "b": 6.1470, "c": 7.0180},
        "j_over_pi_mhz": {"ab": 201.2, "bc": 253.0, "ca": 232.0},
    },
    "pulses": {"dt_ps": 10.0, "rise_ns": 10.0, "coupling_source": "measured"},
    "readout": {"beta0": 0.0, "beta1": 1.7, "beta2": 1.3, "beta12": 0.0, "sigma": 1.0,
                "vth_plus": 1.5, "vth_minus": -1.5, "herald": True, "p_therm": 0.0,
                "shots": 10000, "bootstrap": 100},
    "circuit": "bell",
    "crossing": {"synthetic": {"j_over_pi_mhz": 77.6, "omega_q_ghz": 5.5585, "omega_max_ghz": 6.2,
                               "scale": 1.0, "flux_min": 0.1, "flux_max": 0.3, "n_flux": 41,
                               "noise_mhz": 0.0}},
}


class ConfigError(Exception):
    """Malformed, missing or inconsistent configuration."""


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None) -> dict:
    """Read a JSON config and fill unspecified sections from the defaults.

    A ``device`` section given in the file replaces the default one wholesale
    so that capacitance and anharmonicity inputs never mix.
    """
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    merged = _merge(DEFAULT_CONFIG, user)
    if "device" in user:
        merged["device"] = copy.deepcopy(user["device"])
    return merged


def _number(section: dict, key: str, name: str) -> float:
    try:
        value = float(section[key])
    except KeyError:
        raise ConfigError(f"{name}.{key} is required") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key} must be a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{name}.{key} must be finite")
    return value


def device_from_config(cfg: dict) -> DeviceSpec:
    """Device from capacitances (``ca_ff`` ...) or from anharmonicities (``alpha_a_mhz`` ...)."""
    dev = cfg.get("device")
    if not isinstance(dev, dict):
        raise ConfigError("config needs a device section")
    ej = _number(dev, "ej_ghz", "device") * 1e9
    flux = float(dev.get("flux", 0.0))
    try:
        if "ca_ff" in dev:
            return DeviceSpec(ej, _number(dev, "ca_ff", "device") * FF, _number(dev, "cb_ff", "device") * FF,
                              _number(dev, "ccp_ff", "device") * FF, flux)
        if "alpha_a_mhz" in dev:
            ec = circuit.charging_from_anharmonicities(*(_number(dev, f"alpha_{q}_mhz", "device") * 1e6
                                                         for q in "abc"))
            return DeviceSpec(ej, *circuit.capacitances_from_charging(ec), flux)
    except InvalidInputError as exc:
        raise ConfigError(f"invalid device: {exc}") from None
    raise ConfigError("device needs either ca_ff/cb_ff/ccp_ff or alpha_a_mhz/alpha_b_mhz/alpha_c_mhz")


def measured_zz(cfg: dict) -> ZZModel:
    m = cfg.get("measured", {})
    try:
        up, j = m["upper_ghz"], m["j_over_pi_mhz"]
        return ZZModel.from_upper_bands(up["a"] * 1e9, up["b"] * 1e9, up["c"] * 1e9,
                                        from_j_over_pi(j["ab"] * 1e6), from_j_over_pi(j["bc"] * 1e6),
                                        from_j_over_pi(j["ca"] * 1e6))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"measured section incomplete: {exc}") from None


def pulse_zz(cfg: dict) -> ZZModel:
    """Spin model driving the pulse engine: measured bands or circuit-derived ones."""
    source = cfg.get("pulses", {}).get("coupling_source", "measured")
    if source == "measured":
        return measured_zz(cfg)
    if source == "derived":
        return circuit.derive(device_from_config(cfg)).zz
    raise ConfigError(f"pulses.coupling_source must be 'measured' or 'derived', got {source!r}")


def measurement_model(cfg: dict) -> MeasurementModel:
    r = cfg.get("readout", {})
    keys = ("beta0", "beta1", "beta2", "beta12", "sigma", "vth_plus", "vth_minus", "herald", "p_therm")
    try:
        return MeasurementModel(**{k: r[k] for k in keys if k in r})
    except (InvalidInputError, TypeError) as exc:
        raise ConfigError(f"invalid readout section: {exc}") from None


# --- serialization ----------------------------------------------------------------


def complex_to_json(a) -> list:
    """Nested lists with every complex entry as an [re, im] pair (row-major)."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(data) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return complex_to_json(obj)
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=False)


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    """Dotted-key rows of a nested dict, for CSV tables."""
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(flatten(v, f"{prefix}.{k}" if prefix else str(k)))
    else:
        rows.append((prefix, obj))
    return rows


def to_csv(obj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["key", "value"])
    for key, value in flatten(to_jsonable(obj)):
        writer.writerow([key, json.dumps(value) if isinstance(value, list) else value])
    return buf.getvalue()


def read_crossing_csv(path: str | Path):
    """Columns: flux, freq_hz, branch (branch optional, +1/-1/0)."""
    from .crossing import CrossingDataset

    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read crossing data {path}: {exc.strerror}") from None
    try:
        flux = [float(r["flux"]) for r in rows]
        freq = [float(r["freq_hz"]) for r in rows]
        branch = [int(r.get("branch") or 0) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"crossing data needs flux, freq_hz[, branch] columns: {exc}") from None
    return CrossingDataset(np.array(flux), np.array(freq), np.array(branch))
