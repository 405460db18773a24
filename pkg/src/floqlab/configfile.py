"""Flat key = value configuration files for the CLI.

Sections and keys (all optional; physical defaults are embedded):

    [chain]      length, epsilon, interaction (xx|ising|off), initial_state
    [stages]     t1_flip, t2_disorder, t3_int            (ns)
    [couplings]  j1_mhz, j2_mhz       (scalar or per-bond comma list, MHz)
    [qutrit]     anharmonicity_mhz
    [noise]      t1_us, t2star_us     (scalar or per-site comma list)
    [readout]    f00, f11             (fractions in (0.5, 1])
    [run]        half_periods, realizations, shots, seed, workers,
                 epsilon_grid (comma list)

Frequencies given in MHz are converted to rad/ns internally.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .hamiltonians import FloquetConfig, InteractionKind, ResourceLimitError, mhz_to_rad_per_ns
from .measurement import ReadoutCalibration
from .open_system import NoiseModel


class ConfigError(Exception):
    """Unusable configuration input (missing file, bad key, bad value)."""


@dataclass
class RunSettings:
    """Non-physical run parameters bundled next to the FloquetConfig.

    ``half_periods`` stays None when neither file nor flags set it, so each
    CLI command can apply its own default.
    """

    half_periods: int | None = None
    realizations: int = 20
    shots: int = 2000
    seed: int = 0
    workers: int | None = None
    epsilon_grid: tuple[float, ...] | None = None
    initial_state: str | None = None


@dataclass
class RunSpec:
    config: FloquetConfig
    settings: RunSettings
    noise: NoiseModel | None = None
    calibration: ReadoutCalibration | None = None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list from {text!r}") from exc


def _per_bond(values: list[float], count: int, key: str) -> tuple[float, ...]:
    if len(values) == 1:
        return (values[0],) * count
    if len(values) != count:
        raise ConfigError(f"{key} needs 1 or {count} entries, got {len(values)}")
    return tuple(values)


def load_config(path: Path | str | None, overrides: dict | None = None) -> RunSpec:
    """Build a RunSpec from an optional config file plus CLI overrides.

    ``overrides`` may carry: chain_length, epsilon, interaction,
    half_periods, realizations, shots, seed, workers, initial_state.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc

    overrides = overrides or {}

    def get(section: str, key: str, cast, default):
        if section in parser and key in parser[section]:
            raw = parser[section][key]
            try:
                return cast(raw)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
        return default

    length = overrides.get("chain_length") or get("chain", "length", int, 10)
    epsilon = overrides.get("epsilon")
    if epsilon is None:
        epsilon = get("chain", "epsilon", float, 0.0)
    interaction = overrides.get("interaction") or get("chain", "interaction", str, "xx")
    try:
        kind = InteractionKind(interaction.lower())
    except ValueError:
        raise ConfigError(f"interaction must be one of xx, ising, off, got {interaction!r}")

    t1 = get("stages", "t1_flip", float, 40.0)
    t2 = get("stages", "t2_disorder", float, 0.0)
    t3 = get("stages", "t3_int", float, 10.0)

    j1_mhz = get("couplings", "j1_mhz", _parse_floats, None)
    j2_mhz = get("couplings", "j2_mhz", _parse_floats, None)
    j1 = None
    j2 = None
    if j1_mhz is not None:
        j1 = tuple(mhz_to_rad_per_ns(v) for v in _per_bond(j1_mhz, max(length - 1, 0), "j1_mhz"))
    if j2_mhz is not None:
        j2 = tuple(mhz_to_rad_per_ns(v) for v in _per_bond(j2_mhz, max(length - 2, 0), "j2_mhz"))
    eta_mhz = get("qutrit", "anharmonicity_mhz", float, None)

    config_kwargs = dict(chain_length=length, epsilon=epsilon, t1_flip=t1,
                         t2_disorder=t2, t3_int=t3, j1=j1, j2=j2, interaction_kind=kind)
    if eta_mhz is not None:
        config_kwargs["qutrit_anharmonicity"] = mhz_to_rad_per_ns(eta_mhz)
    try:
        config = FloquetConfig(**config_kwargs)
    except ResourceLimitError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    t1_us = get("noise", "t1_us", _parse_floats, None)
    t2s_us = get("noise", "t2star_us", _parse_floats, None)
    noise = None
    if t1_us is not None or t2s_us is not None:
        if t1_us is None or t2s_us is None:
            raise ConfigError("[noise] needs both t1_us and t2star_us")
        noise = NoiseModel(_per_bond(t1_us, length, "t1_us"),
                           _per_bond(t2s_us, length, "t2star_us"))

    f00 = get("readout", "f00", _parse_floats, None)
    f11 = get("readout", "f11", _parse_floats, None)
    calibration = None
    if f00 is not None or f11 is not None:
        if f00 is None or f11 is None:
            raise ConfigError("[readout] needs both f00 and f11")
        try:
            calibration = ReadoutCalibration(_per_bond(f00, length, "f00"),
                                             _per_bond(f11, length, "f11"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    grid = get("run", "epsilon_grid", _parse_floats, None)
    settings = RunSettings(
        half_periods=overrides.get("half_periods") or get("run", "half_periods", int, None),
        realizations=overrides.get("realizations") or get("run", "realizations", int, 20),
        shots=overrides.get("shots") or get("run", "shots", int, 2000),
        seed=overrides.get("seed") if overrides.get("seed") is not None
        else get("run", "seed", int, 0),
        workers=overrides.get("workers") or get("run", "workers", int, None),
        epsilon_grid=tuple(grid) if grid is not None else None,
        initial_state=overrides.get("initial_state") or get("chain", "initial_state", str, None),
    )
    if settings.initial_state is not None:
        wanted = set("012") if length <= 5 else set("01")
        if len(settings.initial_state) != length or not set(settings.initial_state) <= wanted:
            raise ConfigError(
                f"initial_state must be a length-{length} digit string, got {settings.initial_state!r}")
    return RunSpec(config=config, settings=settings, noise=noise, calibration=calibration)
