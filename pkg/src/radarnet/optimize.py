"""Beamwidth and transmit-probability optimization, and parameter sweeps.

Objectives are evaluated through a frozen :class:`Scenario`; every
evaluation is memoized on the full scenario so that sweeps and refinements
sharing a point never recompute it.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import analytic as an
from . import geometry as geo
from . import metadist as md
from .cox import BLCP, PLCP, RadioParams

OBJECTIVES = ("n_D", "p_D", "delay", "l_k", "n_k", "percentile_reliability")
PARAMETERS = ("Omega", "p", "lam", "lambda_L", "R", "r_0", "beta", "beta_sf", "n_B")
MAXIMIZE = {"n_D": True, "p_D": True, "delay": False, "l_k": True, "n_k": True,
            "percentile_reliability": True}


@dataclass(frozen=True)
class Scenario:
    """Everything an objective depends on.  ``omega_deg`` is the full
    beamwidth in degrees; the sector range is the model's interference reach."""

    model: object
    thresholds: an.Thresholds = an.Thresholds.from_beta_dB(1.0)
    radio: RadioParams = RadioParams()
    omega_deg: float = 15.0
    res: an.FieldResolution = an.FieldResolution()
    level: float = 0.5
    n_moments: int = 10

    @property
    def half_bw(self) -> float:
        return math.radians(self.omega_deg) / 2.0

    def sector(self) -> geo.SectorSpec:
        return geo.SectorSpec.ego(self.half_bw, self.model.reach)

    def with_param(self, name: str, value) -> "Scenario":
        """Copy with one parameter changed (see :data:`PARAMETERS`)."""
        if name not in PARAMETERS:
            raise ValueError(f"unknown parameter {name!r}; choose from {', '.join(PARAMETERS)}")
        th = self.thresholds
        if name == "Omega":
            return replace(self, omega_deg=float(value))
        if name == "p":
            return replace(self, radio=replace(self.radio, p=float(value)))
        if name == "R":
            return replace(self, thresholds=an.Thresholds(th.beta_sf, float(value), th.beta_dB))
        if name == "beta":
            return replace(self, thresholds=an.Thresholds.from_beta_dB(float(value), th.R))
        if name == "beta_sf":
            return replace(self, thresholds=an.Thresholds(float(value), th.R))
        if name == "lambda_L" and not isinstance(self.model, PLCP):
            raise ValueError("lambda_L applies to the Poisson model only")
        if name in ("r_0", "n_B") and not isinstance(self.model, BLCP):
            raise ValueError(f"{name} applies to the binomial model only")
        value = int(round(value)) if name == "n_B" else float(value)
        return replace(self, model=replace(self.model, **{name: value}))


@lru_cache(maxsize=4096)
def evaluate(objective: str, sc: Scenario) -> float:
    """Value of ``objective`` at scenario ``sc`` (``inf`` for a divergent delay)."""
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {', '.join(OBJECTIVES)}")
    sector = sc.sector()
    R = sc.thresholds.R
    if objective == "l_k":
        return float(an.avg_length(sc.model, sc.half_bw, R))
    if objective == "n_k":
        return float(an.expected_targets(sc.model, sc.half_bw, R))
    if objective == "p_D":
        return float(an.detection_probability(sc.model, sc.thresholds, sector, sc.radio, res=sc.res))
    if objective == "n_D":
        return float(an.expected_detections(sc.model, sc.thresholds, sector, sc.radio, res=sc.res))
    if objective == "delay":
        return float(an.mean_local_delay(sc.model, sc.thresholds, sector, sc.radio, res=sc.res))
    orders = np.arange(1, sc.n_moments + 1)
    ms = an.moments(orders, sc.thresholds, sc.model, sector, sc.radio, sc.res)
    curve = md.cm_reconstruct(md.MomentVector(sc.thresholds.beta_sf, orders, ms))
    return md.percentile_reliability(curve, sc.level)


@dataclass
class SweepResult:
    """Objective values over a grid of one parameter, plus the optimum.

    ``argopt``/``opt_value`` may come from a refinement between grid points;
    ``refined`` says so and ``multimodal`` flags a failed bracket check or
    more than one local optimum on the grid.
    """

    param: str
    grid: np.ndarray
    objective: np.ndarray
    argopt: float
    opt_value: float
    kind: str = "max"
    objective_name: str = ""
    multimodal: bool = False
    refined: bool = False
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.objective = np.asarray(self.objective, dtype=float)
        if self.grid.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")

    def rows(self):
        """``(param, value, objective, is_opt)``; a refined optimum is inserted
        at its sorted position."""
        pts = [(float(x), float(y), False) for x, y in zip(self.grid, self.objective)]
        if self.refined and not np.any(np.isclose(self.grid, self.argopt, rtol=0, atol=1e-12)):
            pts.append((float(self.argopt), float(self.opt_value), True))
            pts.sort(key=lambda r: r[0])
        else:
            k = int(np.argmin(np.abs(self.grid - self.argopt)))
            pts[k] = (pts[k][0], pts[k][1], True)
        for x, y, opt in pts:
            yield (self.param, repr(x), repr(y), int(opt))

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "value", "objective", "is_opt"])
            w.writerows(self.rows())


def _scan(objective: str, sc: Scenario, parameter: str, grid, threads: int = 1):
    points = [sc.with_param(parameter, float(x)) for x in grid]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = list(ex.map(lambda s: evaluate(objective, s), points))
    else:
        vals = [evaluate(objective, s) for s in points]
    return np.array(vals, dtype=float)


def count_local_optima(values, maximize=True) -> int:
    """Strict interior-or-boundary local optima of a finite sequence, ignoring
    flat runs and non-finite entries."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        return int(v.size)
    if not maximize:
        v = -v
    d = np.diff(v)
    s = np.sign(d[d != 0])
    if s.size == 0:
        return 1
    changes = int(np.count_nonzero(s[1:] < s[:-1]))
    return changes + int(s[0] < 0) + int(s[-1] > 0)


def sweep(objective: str, parameter: str, grid: Sequence[float], context: Scenario,
          threads: int = 1) -> SweepResult:
    """Evaluate ``objective`` on ``grid`` of ``parameter``; report the grid optimum."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("sweep needs a non-empty grid")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {', '.join(OBJECTIVES)}")
    vals = _scan(objective, context, parameter, grid, threads)
    maximize = MAXIMIZE[objective]
    finite = np.isfinite(vals)
    if not finite.any():
        i = 0
    else:
        masked = np.where(finite, vals, -np.inf if maximize else np.inf)
        i = int(np.argmax(masked) if maximize else np.argmin(masked))
    return SweepResult(parameter, grid, vals, float(grid[i]), float(vals[i]),
                       "max" if maximize else "min", objective,
                       multimodal=count_local_optima(vals, maximize) > 1)


def _refine(objective: str, sc: Scenario, parameter: str, coarse: SweepResult, xtol: float):
    """Golden-section search on the grid cell pair around the coarse optimum."""
    grid, vals = coarse.grid, coarse.objective
    maximize = coarse.kind == "max"
    sgn = -1.0 if maximize else 1.0
    i = int(np.argmin(np.abs(grid - coarse.argopt)))
    if i == 0 or i == grid.size - 1:
        return coarse
    a, b, c = grid[i - 1], grid[i], grid[i + 1]
    fa, fb, fc = sgn * vals[i - 1], sgn * vals[i], sgn * vals[i + 1]
    if not (np.isfinite(fa) and np.isfinite(fc) and fb <= fa and fb <= fc):
        coarse.multimodal = True
        return coarse

    def f(x):
        if not a <= x <= c:
            return math.inf
        return sgn * evaluate(objective, sc.with_param(parameter, x))

    res = minimize_scalar(f, bracket=(a, b, c), method="golden", tol=xtol / max(abs(b), 1.0))
    x, fx = float(res.x), float(res.fun)
    if not (a <= x <= c) or not np.isfinite(fx) or fx > fb:
        # bracket inconsistent with a unimodal objective: keep the grid optimum
        coarse.multimodal = True
        return coarse
    coarse.argopt, coarse.opt_value, coarse.refined = x, sgn * fx, True
    coarse.info["golden_evaluations"] = int(res.nfev)
    return coarse


def optimal_beamwidth(context: Scenario, omega_range=(1.0, 30.0), points: int = 31,
                      xtol: float = 1e-3, threads: int = 1) -> SweepResult:
    """Full beamwidth (degrees) maximizing the expected successful detections."""
    lo, hi = omega_range
    if not 0 < lo < hi < 180:
        raise ValueError("omega_range must satisfy 0 < lo < hi < 180 (full beamwidth, degrees)")
    coarse = sweep("n_D", "Omega", np.linspace(lo, hi, points), context, threads)
    return _refine("n_D", context, "Omega", coarse, xtol)


def optimal_transmit_probability(context: Scenario, p_range=(0.01, 1.0), points: int = 31,
                                 xtol: float = 1e-4, threads: int = 1) -> SweepResult:
    """ALOHA transmit probability minimizing the mean local delay."""
    lo, hi = p_range
    if not 0 < lo < hi <= 1:
        raise ValueError("p_range must satisfy 0 < lo < hi <= 1")
    coarse = sweep("delay", "p", np.linspace(lo, hi, points), context, threads)
    if not np.isfinite(coarse.objective).any():
        raise ArithmeticError("delay diverges; reduce λ or β")
    return _refine("delay", context, "p", coarse, xtol)


def default_scenario(kind: str = "plcp", **model_kw) -> Scenario:
    """Scenario at the standard radio/threshold defaults."""
    if kind == "plcp":
        model = PLCP(model_kw.pop("lambda_L", 0.01), model_kw.pop("lam", 0.01), **model_kw)
    elif kind == "blcp":
        model = BLCP(model_kw.pop("n_B", 300), model_kw.pop("R_g", 1500.0), model_kw.pop("lam", 0.01),
                     **model_kw)
    else:
        raise ValueError("kind must be 'plcp' or 'blcp'")
    return Scenario(model)


def clear_cache():
    evaluate.cache_clear()


__all__ = [
    "OBJECTIVES", "PARAMETERS", "Scenario", "SweepResult", "evaluate", "sweep",
    "optimal_beamwidth", "optimal_transmit_probability", "count_local_optima",
    "default_scenario", "clear_cache",
]
