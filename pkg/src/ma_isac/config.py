"""Experiment configuration: INI parsing, unit conversion at the boundary
(dBm to linear milliwatts, wavelength-relative geometry to meters), and
the desk/paper scale profiles.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .comm import CommScenario, UserZone
from .errors import ConfigError
from .geometry import RectRegion
from .optimizer import OptimizerConfig
from .sensing import GridSpec, SensingSpec

ALL_SCHEMES = ("ma-statistical", "ma-instantaneous", "upa-dense", "upa-sparse")

# Scale profiles: overrides applied after the file is parsed.
PROFILES = {
    "desk": {"n": 8, "realizations": 200, "snapshots": 8, "mse_trials": 200},
    "paper": {"n": 16, "realizations": 5000, "snapshots": 16, "mse_trials": 1000},
}


def dbm_to_mw(dbm: float) -> float:
    """10^(dBm/10) milliwatts."""
    return 10.0 ** (dbm / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (all linear units)."""

    n: int
    region: RectRegion
    min_spacing: float
    wavelength: float
    scenario: CommScenario
    sensing: SensingSpec
    optimizer: OptimizerConfig
    grid: GridSpec
    truth_u: float
    truth_v: float
    mse_trials: int
    baselines: tuple[str, ...]
    sweep_eta: tuple[float, ...]
    sweep_k: tuple[int, ...]
    sweep_ps_mw: tuple[float, ...]
    output_path: str
    map_resolution: int

    def __post_init__(self):
        for values in (self.sweep_eta, self.sweep_k, self.sweep_ps_mw):
            if any(v <= 0 for v in values):
                raise ConfigError("sweep values must be positive")
        for scheme in self.baselines:
            if scheme not in ALL_SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}")

    def with_eta(self, eta: float) -> "ExperimentConfig":
        return replace(self, sensing=replace(self.sensing, eta=eta))

    def with_probe_power(self, probe_power_mw: float) -> "ExperimentConfig":
        return replace(
            self, sensing=replace(self.sensing, probe_power_mw=probe_power_mw)
        )

    def with_users(self, k: int) -> "ExperimentConfig":
        if k > len(self.scenario.zones):
            raise ConfigError(f"config defines only {len(self.scenario.zones)} zones")
        return replace(
            self, scenario=replace(self.scenario, zones=self.scenario.zones[:k])
        )


def _get(section, key, cast, where):
    try:
        return cast(section[key])
    except KeyError as exc:
        raise ConfigError(f"missing key {key!r} in section [{where}]") from exc
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r} in section [{where}]: {exc}") from exc


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def load_config(
    path: str | Path,
    profile: str | None = None,
    seed: int | None = None,
    output_path: str | None = None,
) -> ExperimentConfig:
    """Read an INI experiment file; optional profile/seed/output overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    overrides = {}
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        overrides = PROFILES[profile]

    try:
        array = parser["array"]
        comm = parser["comm"]
        zones_sec = parser["zones"]
        sensing_sec = parser["sensing"]
        sweep_sec = parser["sweep"]
        output_sec = parser["output"]
    except KeyError as exc:
        raise ConfigError(f"missing section {exc}") from exc

    wavelength = _get(array, "wavelength_m", float, "array")
    n = int(overrides.get("n", _get(array, "n", int, "array")))
    size = _get(array, "size_wavelengths", float, "array") * wavelength
    min_spacing = _get(array, "min_spacing_wavelengths", float, "array") * wavelength
    region = RectRegion.square(size)

    zones = []
    for key in sorted(zones_sec, key=lambda s: (len(s), s)):
        vals = _parse_floats(zones_sec[key])
        if len(vals) != 4:
            raise ConfigError(f"zone {key!r} needs 4 numbers: x y z radius")
        zones.append(UserZone(center=(vals[0], vals[1], vals[2]), radius=vals[3]))
    if not zones:
        raise ConfigError("no zones defined")

    realizations = int(overrides.get("realizations", _get(comm, "realizations", int, "comm")))
    cfg_seed = _get(comm, "seed", int, "comm") if seed is None else seed
    scenario = CommScenario(
        zones=tuple(zones),
        power_mw=dbm_to_mw(_get(comm, "power_dbm", float, "comm")),
        noise_mw=dbm_to_mw(_get(comm, "noise_dbm", float, "comm")),
        wavelength=wavelength,
        realizations=realizations,
        seed=cfg_seed,
    )

    snapshots = int(overrides.get("snapshots", _get(sensing_sec, "snapshots", int, "sensing")))
    sensing = SensingSpec(
        probe_power_mw=dbm_to_mw(_get(sensing_sec, "probe_power_dbm", float, "sensing")),
        snapshots=snapshots,
        beta_tilde=_get(sensing_sec, "beta_tilde", float, "sensing"),
        noise_mw=dbm_to_mw(_get(sensing_sec, "noise_dbm", float, "sensing")),
        wavelength=wavelength,
        eta=_get(sensing_sec, "eta", float, "sensing"),
    )

    opt_sec = parser["optimizer"] if parser.has_section("optimizer") else {}
    optimizer = OptimizerConfig(
        eps1=float(opt_sec.get("eps1", 1e-3)),
        eps2=float(opt_sec.get("eps2", 1e-3)),
        line_search_points=int(opt_sec.get("line_search_points", 51)),
        max_inner_y=int(opt_sec.get("max_inner", 20)),
        max_inner_z=int(opt_sec.get("max_inner", 20)),
        max_outer=int(opt_sec.get("max_outer", 10)),
    )

    mle_sec = parser["mle"] if parser.has_section("mle") else {}
    grid = GridSpec(
        coarse_points=int(mle_sec.get("coarse_grid", 201)),
        refine_stages=int(mle_sec.get("refine_stages", 2)),
        refine_points=int(mle_sec.get("refine_points", 21)),
    )

    baselines = tuple(
        (parser["baselines"]["schemes"].split() if parser.has_section("baselines") else ALL_SCHEMES)
    )

    sweep_eta = _parse_floats(_get(sweep_sec, "eta", str, "sweep"))
    sweep_k = tuple(int(v) for v in _parse_floats(_get(sweep_sec, "k", str, "sweep")))
    sweep_ps_mw = tuple(
        dbm_to_mw(v) for v in _parse_floats(_get(sweep_sec, "ps_dbm", str, "sweep"))
    )

    return ExperimentConfig(
        n=n,
        region=region,
        min_spacing=min_spacing,
        wavelength=wavelength,
        scenario=scenario,
        sensing=sensing,
        optimizer=optimizer,
        grid=grid,
        truth_u=float(sensing_sec.get("truth_u", 0.35)),
        truth_v=float(sensing_sec.get("truth_v", 0.71)),
        mse_trials=int(overrides.get("mse_trials", sensing_sec.get("mse_trials", 200))),
        baselines=baselines,
        sweep_eta=sweep_eta,
        sweep_k=sweep_k,
        sweep_ps_mw=sweep_ps_mw,
        output_path=output_path if output_path is not None else output_sec.get("path", "results.csv"),
        map_resolution=int(output_sec.get("map_resolution", 201)),
    )
