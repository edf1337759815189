"""Run configuration: TOML loading, validation, defaults, bundled reference
configs, and construction of all domain objects for a run.

Every field defaults to the reference values used throughout (bath
alpha = 0.027 ps^2, omega_c = 2.2 rad/ps, dt = 0.01 ps, t_f = 30 ps,
SVD tolerance 1e-10, penalty weight 100, overlap threshold 0.1, L-BFGS
memory 10).  Pulse areas are configured in units of pi (theta_pi) to match
the reference tables.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import tables
from .bath import BathConfig, SpectralDensity, influence_coefficients, polaron_shift
from .constants import (DEFAULT_DT, DEFAULT_MEMORY_TIME, DEFAULT_SVD_TOL,
                        DEFAULT_T_FINAL)
from .objective import CostSpec
from .optimize import Bounds, OptimizerConfig
from .process_tensor import PTBuildConfig, fnv1a64
from .system import Pulse, PulseSequence, SystemSpec, TimeGrid


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


# Appendix-style box constraints per species; theta in units of pi.
SPECIES_BOUNDS = {
    "exciton": {
        "theta_pi": (0.5, 12.0),
        "sigma0": (1.0, 20.0),
        "sigma0_chirped": (1.0, 10.0),
        "delta0": (-20.0, -1.0),
        "tau": (-1.0, 1.0),
        "chirp_lambda": (-0.70, 0.70),
    },
    "biexciton": {
        "theta_pi": (2.5, 15.0),
        "sigma0": (1.0, 20.0),
        "sigma0_chirped": (1.0, 10.0),
        "delta0_red": (-15.0, -3.0),
        "delta0_blue": (3.0, 15.0),
        "tau": (-2.0, 2.0),
        "chirp_lambda": (-0.70, 0.70),
    },
}


@dataclass
class RunConfig:
    raw: dict
    path: str = "<inline>"

    # -- section accessors with defaults --

    def _get(self, section: str, key: str, default):
        return self.raw.get(section, {}).get(key, default)

    @property
    def alpha(self) -> float:
        return float(self._get("bath", "alpha", 0.027))

    @property
    def omega_c(self) -> float:
        return float(self._get("bath", "omega_c", 2.2))

    @property
    def temperature(self) -> float:
        return float(self._get("bath", "temperature", 4.0))

    @property
    def dt(self) -> float:
        return float(self._get("grid", "dt", DEFAULT_DT))

    @property
    def t_final(self) -> float:
        return float(self._get("grid", "t_final", DEFAULT_T_FINAL))

    @property
    def t_center(self) -> float:
        return float(self._get("grid", "t_center", self.t_final / 2.0))

    @property
    def memory_time(self) -> float:
        return float(self._get("process_tensor", "memory_time", DEFAULT_MEMORY_TIME))

    @property
    def svd_tol(self) -> float:
        return float(self._get("process_tensor", "svd_tol", DEFAULT_SVD_TOL))

    @property
    def max_bond(self) -> int:
        return int(self._get("process_tensor", "max_bond", 512))

    @property
    def target_name(self) -> str:
        name = self._get("cost", "target", "exciton")
        if name not in ("exciton", "biexciton"):
            raise ConfigError(f"cost.target must be exciton or biexciton, got {name!r}")
        return name

    @property
    def dim(self) -> int:
        return int(self._get("system", "dim",
                             2 if self.target_name == "exciton" else 3))

    @property
    def binding_energy(self) -> float:
        return float(self._get("system", "binding_energy", 4.28))

    @property
    def chirp_enabled(self) -> bool:
        return bool(self.raw.get("chirp_enabled", False))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 2026))

    # -- domain objects --

    def spectral_density(self) -> SpectralDensity:
        return SpectralDensity(alpha=self.alpha, omega_c=self.omega_c)

    def bath_config(self) -> BathConfig:
        return BathConfig(temperature=self.temperature)

    def time_grid(self) -> TimeGrid:
        return TimeGrid.from_t_final(self.dt, self.t_final)

    def system_spec(self) -> SystemSpec:
        return SystemSpec(dim=self.dim,
                          polaron_shift_x=polaron_shift(self.spectral_density(), 1),
                          binding_energy=self.binding_energy,
                          pulse_center=self.t_center)

    def pulses_raw(self) -> list:
        pulses = self.raw.get("pulses")
        if not pulses:
            raise ConfigError("config must declare at least one [[pulses]] entry")
        return pulses

    def pulse_sequence(self) -> PulseSequence:
        out = []
        for i, p in enumerate(self.pulses_raw()):
            unknown = set(p) - {"theta_pi", "sigma0", "delta0", "tau",
                                "chirp_lambda", "phase_phi", "detuning_sign_tag"}
            if unknown:
                raise ConfigError(f"pulse {i + 1}: unknown fields {sorted(unknown)}")
            if "theta_pi" not in p or "sigma0" not in p or "delta0" not in p:
                raise ConfigError(f"pulse {i + 1}: needs theta_pi, sigma0, delta0")
            delta0 = float(p["delta0"])
            out.append(Pulse(
                theta=float(p["theta_pi"]) * np.pi,
                sigma0=float(p["sigma0"]),
                delta0=delta0,
                tau=float(p.get("tau", 0.0)),
                chirp_lambda=float(p.get("chirp_lambda", 0.0)),
                phase_phi=float(p.get("phase_phi", 0.0)),
                detuning_sign_tag=p.get("detuning_sign_tag",
                                        "red" if delta0 < 0 else "blue")))
        return PulseSequence(tuple(out), chirp_enabled=self.chirp_enabled)

    def cost_spec(self) -> CostSpec:
        d = self.dim
        target = np.zeros(d)
        target[1 if self.target_name == "exciton" else d - 1] = 1.0
        policy = self._get("cost", "overlap_policy",
                           "super_red_only" if self.target_name == "exciton"
                           else "ftpe_two_color")
        return CostSpec(
            target=target,
            penalty_weight=float(self._get("cost", "penalty_weight", 100.0)),
            overlap_threshold=float(self._get("cost", "overlap_threshold", 0.10)),
            overlap_policy=policy,
            aggregation=self._get("cost", "aggregation", "sum"))

    def optimizer_config(self) -> OptimizerConfig:
        o = self.raw.get("optimizer", {})
        return OptimizerConfig(
            lbfgs_memory=int(o.get("lbfgs_memory", 10)),
            initial_step=float(o.get("initial_step", 1.0)),
            outer_iterations=int(o.get("outer_iterations", 2)),
            inner_iterations=int(o.get("inner_iterations", 100)),
            ls_sufficient_decrease=float(o.get("ls_sufficient_decrease", 1e-4)),
            ls_curvature=float(o.get("ls_curvature", 0.9)),
            warmup_kind=o.get("warmup", "random"),
            warmup_random_budget=int(o.get("warmup_budget", 500)),
            de_population=int(o.get("de_population", 40)),
            de_generations=int(o.get("de_generations", 25)),
            de_f=float(o.get("de_f", 0.8)),
            de_cr=float(o.get("de_cr", 0.9)),
            rng_seed=self.seed)

    def bounds(self, seq: PulseSequence | None = None) -> Bounds:
        """Per-free-parameter box, from [bounds] overrides or species defaults.

        Biexciton detunings are two-color: each pulse's delta0 range follows
        its detuning_sign_tag.  theta bounds are configured in units of pi.
        """
        if seq is None:
            seq = self.pulse_sequence()
        species = self.target_name
        defaults = SPECIES_BOUNDS[species]
        overrides = self.raw.get("bounds", {})

        def rng_for(pulse, name):
            if name == "theta":
                lo, hi = overrides.get("theta_pi", defaults["theta_pi"])
                return lo * np.pi, hi * np.pi
            if name == "sigma0":
                key = "sigma0_chirped" if seq.chirp_enabled else "sigma0"
                return tuple(overrides.get("sigma0", defaults[key]))
            if name == "delta0":
                if species == "biexciton":
                    key = ("delta0_red" if pulse.detuning_sign_tag == "red"
                           else "delta0_blue")
                    return tuple(overrides.get(key, defaults[key]))
                return tuple(overrides.get("delta0", defaults["delta0"]))
            if name == "tau":
                return tuple(overrides.get("tau", defaults["tau"]))
            if name == "chirp_lambda":
                return tuple(overrides.get("chirp_lambda", defaults["chirp_lambda"]))
            raise ConfigError(f"no bounds rule for parameter {name!r}")

        lows, highs = [], []
        for j, name in seq.free_parameters():
            lo, hi = rng_for(seq.pulses[j], name)
            lows.append(lo)
            highs.append(hi)
        return Bounds(np.array(lows), np.array(highs))

    def pt_build_config(self) -> PTBuildConfig:
        grid = self.time_grid()
        n_c = max(1, min(round(self.memory_time / self.dt), grid.n_steps))
        eigs = tuple(float(n) for n in range(self.dim))
        return PTBuildConfig(dt=self.dt, n_steps=grid.n_steps, n_c=int(n_c),
                             coupling_eigs=eigs, svd_tol=self.svd_tol,
                             max_bond=self.max_bond)

    def influence_kernel(self):
        cfg = self.pt_build_config()
        return influence_coefficients(self.spectral_density(), self.bath_config(),
                                      cfg.dt, cfg.n_c)

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, default=float)
        return f"{fnv1a64(canon.encode()):016x}"

    def with_updates(self, updates: dict) -> "RunConfig":
        """New config with a nested-dict merge applied."""
        merged = _deep_merge(self.raw, updates)
        return RunConfig(raw=merged, path=self.path)


def _deep_merge(base: dict, updates: dict) -> dict:
    out = dict(base)
    for k, v in updates.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def bundled_config_names() -> list:
    files = resources.files("pulseforge").joinpath("configs")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".toml"))


def load_config(path_or_name: str) -> RunConfig:
    """Load a config from a file path or a bundled reference-config name."""
    p = Path(path_or_name)
    if p.exists():
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
        return RunConfig(raw=raw, path=str(p))
    ref = resources.files("pulseforge").joinpath(f"configs/{path_or_name}.toml")
    if ref.is_file():
        raw = tomllib.loads(ref.read_text())
        return RunConfig(raw=raw, path=f"bundled:{path_or_name}")
    raise ConfigError(
        f"config {path_or_name!r} is neither a file nor a bundled name "
        f"(available: {', '.join(bundled_config_names())})")
