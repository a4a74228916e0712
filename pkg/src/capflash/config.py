"""Run configuration: TOML loading, validation, resolution, hashing.

A config file has sections mirroring the model types (topology,
mismatch, latch, stimulus) plus run/sweep/montecarlo/fom sections for
the drivers. Unknown keys anywhere are rejected, listing the offending
key; missing required keys are reported by name. The resolved dictionary
(defaults merged with the file, overrides applied) is what gets hashed
and embedded in every output file, so a report reproduces its run.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backend import LatchModel
from .mismatch import MismatchModel
from .simulate import StimulusSpec
from .topology import AdcTopology, build_topology

SCHEMA = "capflash.config/1"

_REQUIRED_SENTINEL = object()

_DEFAULTS: dict = {
    "schema": SCHEMA,
    "topology": {
        "resolution_bits": 6,
        "interp_factors": [8, 2, 2, 2, 1],
        "stage_gains": 2.5,
        "sampling_cap_per_amp": 44.4e-15,
        "wiring_parasitic": 0.0,
        "v_refn": 0.25,
        "v_refp": 1.25,
        "clip_swing": 0.75,
    },
    "mismatch": {
        "sigma_cap_ratio": 0.0,
        "sigma_amp_offset": 0.0,
        "ios_residual_factor": 0.0,
        "sigma_comp_offset": 0.0,
        "sigma_jitter": 0.0,
        "tracking_bandwidth": math.inf,
    },
    "latch": {
        "regen_tau": 15e-12,
        "decide_time": 0.0,
        "relatch_stages": 2,
        "v_swing": 0.75,
    },
    "stimulus": {
        "waveform": _REQUIRED_SENTINEL,
        "fs": _REQUIRED_SENTINEL,
        "n_samples": _REQUIRED_SENTINEL,
        "frequency": 0.0,
        "amplitude": 0.5,
        "offset": 0.75,
        "phase": 0.0,
        "n_fft": 4096,
        "coherent": True,
    },
    "run": {
        "seed": 1,
    },
    "sweep": {
        "axis": "fsignal",
        "points": [],
        "f_min": 0.0,
        "f_max": 0.0,
        "n_points": 0,
        "n_fft": 4096,
    },
    "montecarlo": {
        "n_trials": 1000,
        "dnl_limit": 0.4,
        "inl_limit": 0.6,
    },
    "fom": {
        "power": 0.0,
        "enob_dc": 0.0,
        "erbw": 0.0,
    },
}


class ConfigError(ValueError):
    """Configuration is unreadable, unknown-keyed, or inconsistent."""


def _check_unknown(user: dict, schema: dict, prefix: str = "") -> None:
    for key, value in user.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"unknown key: {path}")
        if isinstance(schema[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"section expected for key: {path}")
            _check_unknown(value, schema[key], prefix=f"{path}.")


def _merge(defaults: dict, user: dict) -> dict:
    out = {}
    for key, dval in defaults.items():
        if isinstance(dval, dict):
            out[key] = _merge(dval, user.get(key, {}))
        elif key in user:
            out[key] = user[key]
        elif dval is _REQUIRED_SENTINEL:
            # Required keys have no default; commands that need them
            # report the missing key when they try to read it.
            continue
        else:
            out[key] = dval
    return out


def _jsonable(obj):
    """Rewrite non-finite floats as strings so embedded configs stay
    strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _unjsonable(obj):
    if isinstance(obj, dict):
        return {k: _unjsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_unjsonable(v) for v in obj]
    if obj in ("inf", "-inf", "nan"):
        return float(obj)
    return obj


def config_hash(resolved: dict) -> str:
    """Stable 16-hex-digit digest of a resolved config dictionary."""
    canon = json.dumps(_jsonable(resolved), sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration with lazily built model objects."""

    raw: dict
    source: str = "<dict>"

    @property
    def seed(self) -> int:
        return int(self.raw["run"]["seed"])

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def topology(self) -> AdcTopology:
        t = self.raw["topology"]
        try:
            return build_topology(
                resolution_bits=int(t["resolution_bits"]),
                interp_factors=tuple(t["interp_factors"]),
                stage_gains=t["stage_gains"],
                sampling_cap_per_amp=float(t["sampling_cap_per_amp"]),
                wiring_parasitic=float(t["wiring_parasitic"]),
                v_refn=float(t["v_refn"]),
                v_refp=float(t["v_refp"]),
                clip_swing=float(t["clip_swing"]),
            )
        except ValueError as exc:
            raise ConfigError(f"topology: {exc}") from None

    def mismatch(self) -> MismatchModel:
        m = self.raw["mismatch"]
        try:
            return MismatchModel(
                sigma_cap_ratio=float(m["sigma_cap_ratio"]),
                sigma_amp_offset=float(m["sigma_amp_offset"]),
                ios_residual_factor=float(m["ios_residual_factor"]),
                sigma_comp_offset=float(m["sigma_comp_offset"]),
                sigma_jitter=float(m["sigma_jitter"]),
                tracking_bandwidth=float(m["tracking_bandwidth"]),
            )
        except ValueError as exc:
            raise ConfigError(f"mismatch: {exc}") from None

    def latch(self, fs: float | None = None) -> LatchModel:
        lt = self.raw["latch"]
        decide = float(lt["decide_time"])
        if decide == 0.0:
            if fs is None or fs <= 0:
                raise ConfigError(
                    "latch.decide_time is 0 (half sample period) but no "
                    "sample rate is available to resolve it"
                )
            decide = 0.5 / fs
        try:
            return LatchModel(
                regen_tau=float(lt["regen_tau"]),
                decide_time=decide,
                relatch_stages=int(lt["relatch_stages"]),
                v_swing=float(lt["v_swing"]),
            )
        except ValueError as exc:
            raise ConfigError(f"latch: {exc}") from None

    def stimulus(self, fs: float | None = None,
                 frequency: float | None = None,
                 n_samples: int | None = None,
                 n_fft: int | None = None) -> StimulusSpec:
        s = self.raw["stimulus"]

        def req(name):
            if name not in s:
                raise ConfigError(f"missing required key: stimulus.{name}")
            return s[name]

        try:
            return StimulusSpec(
                waveform=str(req("waveform")),
                fs=float(fs if fs is not None else req("fs")),
                n_samples=int(n_samples if n_samples is not None
                              else req("n_samples")),
                frequency=float(frequency if frequency is not None
                                else s["frequency"]),
                amplitude=float(s["amplitude"]),
                offset=float(s["offset"]),
                phase=float(s["phase"]),
                n_fft=int(n_fft if n_fft is not None else s["n_fft"]),
                coherent=bool(s["coherent"]),
            )
        except ValueError as exc:
            raise ConfigError(f"stimulus: {exc}") from None

    def embedded(self) -> dict:
        """JSON-safe copy of the resolved config for file embedding."""
        return _jsonable(self.raw)


def resolve_config(user: dict, source: str = "<dict>",
                   seed_override: int | None = None) -> RunConfig:
    """Validate a raw mapping against the schema and fill defaults."""
    if not isinstance(user, dict):
        raise ConfigError("config root must be a table")
    user = _unjsonable(user)
    schema_value = user.get("schema", SCHEMA)
    if schema_value != SCHEMA:
        raise ConfigError(
            f"unsupported config schema {schema_value!r} (expected {SCHEMA})"
        )
    _check_unknown(user, _DEFAULTS)
    resolved = _merge(_DEFAULTS, user)
    if seed_override is not None:
        resolved["run"]["seed"] = int(seed_override)
    return RunConfig(raw=resolved, source=source)


def load_config(path: str | Path, seed_override: int | None = None) -> RunConfig:
    """Load and resolve a config file.

    TOML is the native format; .json is accepted too so the resolved
    config embedded in any report or stream can be re-run as-is.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with open(path, "r") as fh:
                user = json.load(fh)
        else:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from None
    return resolve_config(user, source=str(path), seed_override=seed_override)
