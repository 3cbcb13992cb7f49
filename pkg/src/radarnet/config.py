"""Experiment configuration: YAML file, ``section.key=value`` overrides and
named presets.  Angles are full beamwidths in degrees and power figures are
in dB here; the core modules only see radians and linear units."""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import yaml

from .analytic import FieldResolution, Thresholds
from .cox import BLCP, BLCP_EXPONENTS, OWN_STREET_LOWER, PLCP, RadioParams
from .optimize import OBJECTIVES, PARAMETERS, Scenario
from .quadrature import QuadratureSpec


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field."""


@dataclass
class ModelSection:
    kind: str = "plcp"
    lambda_L: float = 0.01
    r_0: float = 0.0
    own_street_lower: str = "zero"
    exponent: str = "n_minus_1"


@dataclass
class RadioSection:
    P_dBm: float = 10.0
    sigma_bar_dBsm: float = 30.0
    alpha: float = 2.0
    G_t_dBi: float = 10.0
    G_r_dBi: float = 10.0
    f_c_Hz: float = 76.5e9
    p: float = 1.0


@dataclass
class ThresholdsSection:
    beta_dB: float = 1.0
    beta_sf: float = 0.5


@dataclass
class GeometrySection:
    omega_deg: float = 15.0
    R: float = 15.0
    R_k: float = 500.0
    R_g: float = 1500.0
    n_B: int = 300
    lam: float = 0.01


@dataclass
class RunSection:
    seed: int = 0
    n_realizations: int = 100000
    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    n_moments: int = 10
    out: str = "out"
    threads: int = 1


@dataclass
class SweepSection:
    """Optional one-parameter sweep for ``analytic`` (empty grid: single point)."""

    parameter: str = "Omega"
    grid: List[float] = field(default_factory=list)
    objective: str = "n_D"


@dataclass
class OptimizeSection:
    """``target`` is ``beamwidth``, ``transmit_probability`` or ``both``.  With a
    non-empty ``outer_grid`` the optimum is traced over ``outer_parameter``,
    once per entry of ``series`` (each a dict of ``section.key`` overrides)."""

    target: str = "both"
    omega_range: List[float] = field(default_factory=lambda: [1.0, 30.0])
    p_range: List[float] = field(default_factory=lambda: [0.01, 1.0])
    points: int = 31
    outer_parameter: str = "lam"
    outer_grid: List[float] = field(default_factory=list)
    series: List[dict] = field(default_factory=list)


@dataclass
class MetadistSection:
    t_points: int = 512
    gp: bool = False
    empirical: bool = True
    ks_orders: List[int] = field(default_factory=lambda: list(range(2, 22)))
    levels: List[float] = field(default_factory=lambda: [0.1, 0.5])
    beta_sweep_dB: List[float] = field(default_factory=list)


SECTIONS = {
    "model": ModelSection,
    "radio": RadioSection,
    "thresholds": ThresholdsSection,
    "geometry": GeometrySection,
    "run": RunSection,
    "sweep": SweepSection,
    "optimize": OptimizeSection,
    "metadist": MetadistSection,
}


@dataclass
class ExperimentConfig:
    model: ModelSection = field(default_factory=ModelSection)
    radio: RadioSection = field(default_factory=RadioSection)
    thresholds: ThresholdsSection = field(default_factory=ThresholdsSection)
    geometry: GeometrySection = field(default_factory=GeometrySection)
    run: RunSection = field(default_factory=RunSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    optimize: OptimizeSection = field(default_factory=OptimizeSection)
    metadist: MetadistSection = field(default_factory=MetadistSection)

    # -- serialization
    def to_dict(self) -> dict:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "ExperimentConfig":
        cfg = cls()
        for section, values in (data or {}).items():
            if section not in SECTIONS:
                raise ConfigError(f"{section}: unknown section (expected one of {', '.join(SECTIONS)})")
            if values is None:
                continue
            if not isinstance(values, dict):
                raise ConfigError(f"{section}: expected a mapping")
            for key, value in values.items():
                cfg.set(f"{section}.{key}", value)
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config: not valid YAML ({exc})") from None
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config: top level must be a mapping")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_yaml(fh.read())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from None

    # -- overrides
    def set(self, dotted: str, value):
        """Assign ``section.key``; strings are parsed as YAML scalars/lists."""
        if "." not in dotted:
            raise ConfigError(f"{dotted}: expected section.key")
        section, key = dotted.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"{dotted}: unknown section {section!r}")
        sec = getattr(self, section)
        names = {f.name: f for f in fields(sec)}
        if key not in names:
            raise ConfigError(f"{dotted}: unknown key (expected one of {', '.join(names)})")
        if isinstance(value, str):
            try:
                value = yaml.safe_load(value) if value.strip() else value
            except yaml.YAMLError:
                pass
        current = getattr(sec, key)
        setattr(sec, key, _coerce(dotted, current, value))

    def apply_overrides(self, pairs):
        for pair in pairs or ():
            if "=" not in pair:
                raise ConfigError(f"{pair}: override must look like section.key=value")
            k, v = pair.split("=", 1)
            self.set(k.strip(), v)

    def copy(self) -> "ExperimentConfig":
        return copy.deepcopy(self)

    # -- validation and conversion
    def validate(self):
        m, r, t, g, run = self.model, self.radio, self.thresholds, self.geometry, self.run
        _check(m.kind in ("plcp", "blcp"), "model.kind", "must be 'plcp' or 'blcp'")
        _check(m.lambda_L >= 0, "model.lambda_L", "must be >= 0")
        _check(math.isfinite(m.r_0), "model.r_0", "must be finite")
        _check(m.own_street_lower in OWN_STREET_LOWER, "model.own_street_lower",
               f"must be one of {OWN_STREET_LOWER}")
        _check(m.exponent in BLCP_EXPONENTS, "model.exponent", f"must be one of {BLCP_EXPONENTS}")
        _check(r.alpha > 0, "radio.alpha", "must be positive")
        _check(0 <= r.p <= 1, "radio.p", "must lie in [0, 1]")
        _check(r.f_c_Hz > 0, "radio.f_c_Hz", "must be positive")
        _check(0 < t.beta_sf < 1, "thresholds.beta_sf", "must lie in (0, 1)")
        _check(math.isfinite(t.beta_dB), "thresholds.beta_dB", "must be finite")
        _check(0 < g.omega_deg < 180, "geometry.omega_deg", "full beamwidth must lie in (0, 180)")
        _check(g.R > 0, "geometry.R", "must be positive")
        _check(g.R_k > 0, "geometry.R_k", "must be positive")
        _check(g.R_g > 0, "geometry.R_g", "must be positive")
        _check(g.n_B >= 1, "geometry.n_B", "must be >= 1")
        _check(g.lam >= 0, "geometry.lam", "must be >= 0")
        _check(run.n_realizations >= 1, "run.n_realizations", "must be >= 1")
        _check(run.rel_tol > 0 and run.abs_tol > 0, "run.rel_tol", "tolerances must be positive")
        _check(run.n_moments >= 1, "run.n_moments", "must be >= 1")
        _check(run.threads >= 1, "run.threads", "must be >= 1")
        _check(self.sweep.parameter in PARAMETERS, "sweep.parameter", f"must be one of {PARAMETERS}")
        _check(self.sweep.objective in OBJECTIVES, "sweep.objective", f"must be one of {OBJECTIVES}")
        _check(self.optimize.target in ("beamwidth", "transmit_probability", "both"), "optimize.target",
               "must be beamwidth, transmit_probability or both")
        _check(self.optimize.outer_parameter in PARAMETERS, "optimize.outer_parameter",
               f"must be one of {PARAMETERS}")
        _check(len(self.optimize.omega_range) == 2, "optimize.omega_range", "needs two values")
        _check(len(self.optimize.p_range) == 2, "optimize.p_range", "needs two values")
        _check(self.metadist.t_points >= 2, "metadist.t_points", "must be >= 2")
        _check(all(0 < x < 1 for x in self.metadist.levels), "metadist.levels", "must lie in (0, 1)")
        try:
            self.network_model()
            self.radio_params()
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from None
        return self

    def network_model(self):
        g, m = self.geometry, self.model
        if m.kind == "plcp":
            return PLCP(m.lambda_L, g.lam, g.R_k, m.own_street_lower)
        return BLCP(g.n_B, g.R_g, g.lam, m.r_0, g.R_k, m.own_street_lower, m.exponent)

    def radio_params(self) -> RadioParams:
        r = self.radio
        return RadioParams(r.P_dBm, r.sigma_bar_dBsm, r.alpha, r.G_t_dBi, r.G_r_dBi, r.f_c_Hz, r.p)

    def detection_thresholds(self) -> Thresholds:
        """Thresholds for ``P(SIR > beta)`` (the dB value)."""
        return Thresholds.from_beta_dB(self.thresholds.beta_dB, self.geometry.R)

    def md_thresholds(self) -> Thresholds:
        """Thresholds for the meta distribution (``beta_sf``)."""
        return Thresholds(self.thresholds.beta_sf, self.geometry.R)

    def quad_spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.run.rel_tol, self.run.abs_tol)

    def scenario(self, md: bool = False) -> Scenario:
        th = self.md_thresholds() if md else self.detection_thresholds()
        return Scenario(self.network_model(), th, self.radio_params(), self.geometry.omega_deg,
                        FieldResolution(), n_moments=self.run.n_moments)


def _check(ok, name, msg):
    if not ok:
        raise ConfigError(f"{name}: {msg}")


def _coerce(name, current, value):
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true/false, got {value!r}")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    if isinstance(current, list):
        if not isinstance(value, list):
            value = [value]
        return list(value)
    return value


# Each preset is a set of overrides on top of the defaults.
PRESETS = {
    "fig3a": {"model.kind": "plcp", "sweep.parameter": "Omega", "sweep.objective": "n_D",
              "sweep.grid": [float(x) for x in range(1, 31)]},
    "fig3d": {"model.kind": "blcp", "sweep.parameter": "Omega", "sweep.objective": "n_D",
              "sweep.grid": [float(x) for x in range(1, 46)]},
    "fig4b": {"model.kind": "plcp", "optimize.target": "beamwidth", "optimize.outer_parameter": "lam",
              "optimize.outer_grid": [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1],
              "optimize.series": [{"model.lambda_L": 0.01}, {"model.lambda_L": 0.05}, {"model.lambda_L": 0.1}]},
    "fig4c": {"model.kind": "plcp", "optimize.target": "beamwidth", "optimize.outer_parameter": "R",
              "optimize.outer_grid": [5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
              "optimize.series": [{"model.lambda_L": 0.05, "geometry.lam": 0.01},
                                  {"model.lambda_L": 0.1, "geometry.lam": 0.03}]},
    "fig4d": {"model.kind": "blcp", "optimize.target": "beamwidth", "optimize.omega_range": [1.0, 45.0],
              "optimize.outer_parameter": "R", "optimize.outer_grid": [5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0],
              "optimize.series": [{"model.r_0": 0.0}, {"model.r_0": 5000.0}]},
    "fig5": {"model.kind": "plcp", "model.lambda_L": 0.01, "geometry.lam": 0.01, "geometry.omega_deg": 15.0,
             "thresholds.beta_sf": 10.0 / 11.0, "metadist.gp": True, "metadist.ks_orders": list(range(1, 22))},
    "fig7a": {"model.kind": "plcp", "geometry.lam": 0.01, "geometry.omega_deg": 15.0,
              "metadist.beta_sweep_dB": [-30.0, -20.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 18.0],
              "metadist.empirical": False, "metadist.ks_orders": []},
    "fig7b": {"model.kind": "blcp", "geometry.omega_deg": 30.0, "model.r_0": 5000.0,
              "metadist.beta_sweep_dB": [-30.0, -20.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 18.0],
              "metadist.empirical": False, "metadist.ks_orders": []},
    "fig8a": {"model.kind": "plcp", "sweep.parameter": "p", "sweep.objective": "delay",
              "sweep.grid": [round(0.05 * k, 2) for k in range(1, 20)]},
    "fig8b": {"model.kind": "plcp", "optimize.target": "transmit_probability",
              "optimize.outer_parameter": "Omega", "optimize.outer_grid": [5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
              "optimize.series": [{"model.lambda_L": 0.01, "geometry.lam": 0.01},
                                  {"model.lambda_L": 0.01, "geometry.lam": 0.03},
                                  {"model.lambda_L": 0.05, "geometry.lam": 0.03}]},
    "fig8c": {"model.kind": "blcp", "sweep.parameter": "p", "sweep.objective": "delay",
              "sweep.grid": [round(0.05 * k, 2) for k in range(1, 20)], "geometry.omega_deg": 7.5},
    "fig8d": {"model.kind": "blcp", "optimize.target": "transmit_probability",
              "optimize.outer_parameter": "r_0", "optimize.outer_grid": [0.0, 1000.0, 2000.0, 3000.0, 5000.0, 7500.0],
              "optimize.series": [{"geometry.omega_deg": 7.5}, {"geometry.omega_deg": 15.0},
                                  {"geometry.omega_deg": 20.0}]},
}


def apply_preset(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r} (available: {', '.join(sorted(PRESETS))})")
    for k, v in PRESETS[name].items():
        cfg.set(k, copy.deepcopy(v))
    return cfg


def build_config(path=None, preset=None, overrides=None, seed=None, out=None, threads=None) -> ExperimentConfig:
    """Defaults, then file, then preset, then ``--set`` overrides, then flags."""
    cfg = ExperimentConfig.load(path) if path else ExperimentConfig()
    if preset:
        apply_preset(cfg, preset)
    cfg.apply_overrides(overrides)
    if seed is not None:
        cfg.run.seed = int(seed)
    if out is not None:
        cfg.run.out = str(out)
    if threads is not None:
        cfg.run.threads = int(threads)
    return cfg.validate()
