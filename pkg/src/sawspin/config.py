"""Run configuration: defaults, flat key-value parsing, and unit conversion.

Configuration files are flat `key = value` text with '#' comments. All
frequencies are ordinary frequencies in MHz and all times in microseconds;
conversion to the internal angular units (rad/us) happens only here. Every
omitted key falls back to the default table below, and the fully resolved
configuration is echoed into output metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import LambdaDriveParams, RatesParams
from .spectra import DiffusionModel, NVLevelStructure

TWO_PI = 2.0 * np.pi

EXPERIMENTS = ("cpt", "sideband-spectrum", "sideband-transient",
               "decoherence-budget", "device", "validate")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_optional_float(text: str):
    t = text.strip().lower()
    if t in ("none", ""):
        return None
    return float(text)


# key -> (default, parser, description)
DEFAULTS: dict[str, tuple] = {
    # physics (ordinary frequencies, MHz)
    "omega_m_mhz": (818.0, float, "SAW / phonon mode frequency"),
    "omega_b_mhz": (24.0, float, "Zeeman splitting between the m_s = +-1 branches"),
    "hyperfine_mhz": (2.2, float, "hyperfine splitting of the m_s = +-1 levels"),
    "omega_r_mhz": (8.0, float, "effective Rabi frequency of the phonon-assisted leg"),
    "omega_pm_mhz": (8.0, float, "Rabi frequency of the direct optical leg"),
    "delta_mhz": (0.0, float, "common dipole detuning of both optical fields"),
    "gamma_s_mhz": (0.35, float, "spin coherence decay rate"),
    "gamma_total_mhz": (14.0, float, "total excited-state population decay rate"),
    "gamma_orb_mhz": (12.0, float, "orbital dephasing rate (angular convention, x 2 pi)"),
    "gamma_flip_mhz": (1.8, float, "excited-state decay rate into the m_s = +-1 manifold"),
    "n_bar": (None, _parse_optional_float, "mean phonon number (optional)"),
    "lamb_dicke": (None, _parse_optional_float, "coupling ratio g / omega_m (optional)"),
    "omega_0_mhz": (None, _parse_optional_float,
                    "bare Rabi frequency of the sideband leg; with n_bar and "
                    "lamb_dicke set, omega_r is derived as lamb_dicke*sqrt(n_bar)*omega_0"),
    # diffusion
    "diffusion_fwhm_mhz": (140.0, float, "optical-frequency spread (FWHM by default)"),
    "diffusion_samples": (200, int, "number of diffusion samples"),
    "diffusion_width_kind": ("fwhm", str, "interpret width as 'fwhm' or 'sigma'"),
    "diffusion_stratified": (False, _parse_bool, "use quantile-stratified samples"),
    # sweep axes
    "axis_start_mhz": (-25.0, float, "two-photon detuning axis start"),
    "axis_stop_mhz": (25.0, float, "two-photon detuning axis stop"),
    "axis_step_mhz": (0.25, float, "two-photon detuning axis step"),
    "duration_start_us": (0.0, float, "drive-duration sweep start"),
    "duration_stop_us": (6.0, float, "drive-duration sweep stop"),
    "duration_step_us": (0.1, float, "drive-duration sweep step"),
    "delta_min_mhz": (200.0, float, "dipole-detuning sweep start (budget)"),
    "delta_max_mhz": (2000.0, float, "dipole-detuning sweep stop (budget)"),
    "delta_points": (7, int, "dipole-detuning sweep points (budget)"),
    # protocol
    "cpt_window_us": (10.0, float, "fluorescence averaging window"),
    "pulse_us": (2.0, float, "drive-pulse duration for the spectral experiment"),
    "probe_offset_mhz": (6.5, float, "two-photon offset of the off-resonant control"),
    # run control
    "seed": (0, int, "random seed"),
    "threads": (0, int, "worker threads (0 = machine parallelism)"),
    "figure": (True, _parse_bool, "render a figure next to the CSV"),
    "per_config_columns": (False, _parse_bool, "emit one CSV column per configuration"),
    # device
    "finger_width_um": (1.5, float, "IDT finger width"),
    "saw_velocity_m_s": (5600.0, float, "SAW velocity"),
    "n_finger_pairs": (40, int, "IDT finger pairs"),
    "deformation_potential_ev": (None, _parse_optional_float, "deformation potential"),
    "effective_mass_kg": (None, _parse_optional_float, "mechanical effective mass"),
    "wavenumber_per_m": (None, _parse_optional_float,
                         "phonon wavenumber (default omega_m / v_s)"),
}

# experiment-specific default overrides
EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "cpt": {"delta_mhz": 0.0},
    "sideband-spectrum": {"delta_mhz": 100.0, "axis_start_mhz": -17.0,
                          "axis_stop_mhz": 17.0, "axis_step_mhz": 0.1},
    "sideband-transient": {"delta_mhz": 100.0},
    "decoherence-budget": {"delta_mhz": 100.0},
}


def parse_config_text(text: str) -> dict:
    """Parse flat `key = value` lines; unknown keys are rejected by name."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "experiment":
            values[key] = value
            continue
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        _, parser, _ = DEFAULTS[key]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return values


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration in config units (MHz, us)."""

    experiment: str
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    # -- converters into internal angular units -----------------------------

    def rates(self) -> RatesParams:
        flip = TWO_PI * self.values["gamma_flip_mhz"]
        total = TWO_PI * self.values["gamma_total_mhz"]
        if flip >= total:
            raise ConfigError("gamma_flip_mhz must be smaller than gamma_total_mhz")
        return RatesParams(
            gamma_s=TWO_PI * self.values["gamma_s_mhz"],
            gamma_orb=TWO_PI * self.values["gamma_orb_mhz"],
            Gamma_1=total - flip,
            Gamma_2=flip,
        )

    def omega_r(self) -> float:
        lam = self.values["lamb_dicke"]
        n_bar = self.values["n_bar"]
        omega0 = self.values["omega_0_mhz"]
        if lam is not None and n_bar is not None and omega0 is not None:
            return TWO_PI * lam * np.sqrt(n_bar) * omega0
        return TWO_PI * self.values["omega_r_mhz"]

    def drive(self) -> LambdaDriveParams:
        delta = TWO_PI * self.values["delta_mhz"]
        return LambdaDriveParams(Omega_R=self.omega_r(),
                                 Omega_2=TWO_PI * self.values["omega_pm_mhz"],
                                 Delta_R=delta, Delta_2=delta)

    def levels(self) -> NVLevelStructure:
        return NVLevelStructure(omega_B=TWO_PI * self.values["omega_b_mhz"],
                                A_hf=TWO_PI * self.values["hyperfine_mhz"])

    def diffusion(self) -> DiffusionModel:
        return DiffusionModel(fwhm=TWO_PI * self.values["diffusion_fwhm_mhz"],
                              n_samples=self.values["diffusion_samples"],
                              seed=self.values["seed"],
                              width_kind=self.values["diffusion_width_kind"],
                              stratified=self.values["diffusion_stratified"])

    def axis(self) -> np.ndarray:
        start = self.values["axis_start_mhz"]
        stop = self.values["axis_stop_mhz"]
        step = self.values["axis_step_mhz"]
        if step <= 0 or stop <= start:
            raise ConfigError("axis_step_mhz must be positive and axis_stop_mhz > axis_start_mhz")
        n = int(round((stop - start) / step))
        return TWO_PI * (start + step * np.arange(n + 1))

    def durations(self) -> np.ndarray:
        start = self.values["duration_start_us"]
        stop = self.values["duration_stop_us"]
        step = self.values["duration_step_us"]
        if step <= 0 or stop <= start:
            raise ConfigError("duration_step_us must be positive and stop > start")
        n = int(round((stop - start) / step))
        return start + step * np.arange(n + 1)

    def delta_grid(self) -> np.ndarray:
        lo = self.values["delta_min_mhz"]
        hi = self.values["delta_max_mhz"]
        pts = self.values["delta_points"]
        if lo <= 0 or hi <= lo or pts < 2:
            raise ConfigError("delta_min_mhz/delta_max_mhz/delta_points are inconsistent")
        return TWO_PI * np.geomspace(lo, hi, pts)

    def threads(self) -> int | None:
        n = self.values["threads"]
        if n < 0:
            raise ConfigError("threads must be >= 0")
        if n == 0:
            import os
            return os.cpu_count()
        return n

    def serialize(self) -> str:
        lines = [f"experiment = {self.experiment}"]
        for key in DEFAULTS:
            value = self.values[key]
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif value is None:
                value = "none"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def resolve(experiment: str, file_text: str | None = None,
            overrides: list[str] | None = None) -> RunConfig:
    """Merge defaults, per-experiment defaults, config file, and CLI overrides.

    Precedence (lowest to highest): default table, experiment defaults, config
    file, --set overrides.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = {key: default for key, (default, _, _) in DEFAULTS.items()}
    values.update(EXPERIMENT_DEFAULTS.get(experiment, {}))
    if file_text is not None:
        parsed = parse_config_text(file_text)
        file_experiment = parsed.pop("experiment", None)
        if file_experiment is not None and file_experiment != experiment:
            raise ConfigError(
                f"config file names experiment {file_experiment!r}, "
                f"command line asked for {experiment!r}"
            )
        values.update(parsed)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} in --set")
        _, parser, _ = DEFAULTS[key]
        try:
            values[key] = parser(value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    return RunConfig(experiment=experiment, values=values)
