"""Line Cox processes of radars and the Monte Carlo oracle.

The ego radar sits on street L0 (the y-axis) looking along +y: at the origin
for the Poisson model, at ``(0, r_0)`` for the binomial model.  Other streets
only matter through the stretch on which their radars and the ego radar see
each other, so vehicles are drawn on that stretch only (Poisson restriction).

Sampling runs in fixed-size blocks.  Block ``k`` draws from
``numpy.random.default_rng([seed, k])`` so results do not depend on how
blocks are spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from . import geometry as geo
from .metadist import DEFAULT_T_GRID, MetaDistCurve

BLOCK_SIZE = 1024

OWN_STREET_LOWER = ("zero", "R")
BLCP_EXPONENTS = ("n_minus_1", "n")


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive, got {value}")


def _nonneg(name, value):
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class PLCP:
    """Poisson lines with intensity ``lambda_L`` on [0, pi) x R; vehicles at
    ``lam`` per meter.  ``R_P`` is the own-street reach.  Zero intensities are
    allowed for limit studies."""

    lambda_L: float
    lam: float
    R_P: float = 500.0
    own_street_lower: str = "zero"

    def __post_init__(self):
        _nonneg("lambda_L", self.lambda_L)
        _nonneg("lambda", self.lam)
        _positive("R_P", self.R_P)
        if self.own_street_lower not in OWN_STREET_LOWER:
            raise ValueError(f"own_street_lower must be one of {OWN_STREET_LOWER}")

    kind = "plcp"

    @property
    def reach(self):
        return self.R_P

    @property
    def ego_y(self):
        return 0.0


@dataclass(frozen=True)
class BLCP:
    """``n_B`` lines with generating points uniform on [0, pi) x [-R_g, R_g].

    ``exponent`` selects how many lines besides L0 the ego sees: ``n_B - 1``
    (Palm view, default) or ``n_B``.  Analytic and simulated results use the
    same choice."""

    n_B: int
    R_g: float
    lam: float
    r_0: float = 0.0
    R_B: float = 500.0
    own_street_lower: str = "zero"
    exponent: str = "n_minus_1"

    def __post_init__(self):
        if int(self.n_B) != self.n_B or self.n_B < 1:
            raise ValueError("n_B must be an integer >= 1")
        _positive("R_g", self.R_g)
        _nonneg("lambda", self.lam)
        _positive("R_B", self.R_B)
        if not math.isfinite(self.r_0):
            raise ValueError("r_0 must be finite")
        if self.own_street_lower not in OWN_STREET_LOWER:
            raise ValueError(f"own_street_lower must be one of {OWN_STREET_LOWER}")
        if self.exponent not in BLCP_EXPONENTS:
            raise ValueError(f"exponent must be one of {BLCP_EXPONENTS}")

    kind = "blcp"

    @property
    def reach(self):
        return self.R_B

    @property
    def ego_y(self):
        return self.r_0

    @property
    def n_other(self) -> int:
        return int(self.n_B) - 1 if self.exponent == "n_minus_1" else int(self.n_B)


NetworkModel = Union[PLCP, BLCP]


def own_lower(model: NetworkModel, R: float) -> float:
    return 0.0 if model.own_street_lower == "zero" else float(R)


@dataclass(frozen=True)
class RadioParams:
    P_dBm: float = 10.0
    sigma_bar_dBsm: float = 30.0
    alpha: float = 2.0
    G_t_dBi: float = 10.0
    G_r_dBi: float = 10.0
    f_c_Hz: float = 76.5e9
    p: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if not self.f_c_Hz > 0:
            raise ValueError("f_c_Hz must be positive")

    @property
    def sigma_bar(self) -> float:
        return 10.0 ** (self.sigma_bar_dBsm / 10.0)

    @property
    def power_w(self) -> float:
        return 10.0 ** (self.P_dBm / 10.0) * 1e-3

    @property
    def gamma(self) -> float:
        """``G_t A_e / (4 pi)^2`` with ``A_e = G_r c^2 / (4 pi f_c^2)``; cancels
        in every ratio."""
        wavelength = 299792458.0 / self.f_c_Hz
        g_t = 10.0 ** (self.G_t_dBi / 10.0)
        g_r = 10.0 ** (self.G_r_dBi / 10.0)
        a_e = g_r * wavelength**2 / (4 * math.pi)
        return g_t * a_e / (4 * math.pi) ** 2


def beta_sf_prime(beta_sf: float, radio: RadioParams, R: float) -> float:
    if not 0 <= beta_sf < 1:
        raise ValueError("beta_sf must lie in [0, 1)")
    return 4 * math.pi * beta_sf / (radio.sigma_bar * R ** (-2 * radio.alpha) * (1 - beta_sf))


@dataclass
class Interferer:
    line_index: int
    v: float
    w: float
    active: bool


@dataclass
class Realization:
    """One draw: ``lines[0]`` is L0; interferers carry their line index."""

    lines: List[geo.LineParams]
    interferers: List[Interferer]
    ego: geo.SectorSpec

    @property
    def distances(self) -> np.ndarray:
        return np.array([i.w for i in self.interferers], dtype=float)

    @property
    def active(self) -> np.ndarray:
        return np.array([i.active for i in self.interferers], dtype=bool)


@dataclass
class Block:
    """Vectorized realizations; per-interferer arrays are grouped by
    realization through ``counts``."""

    n: int
    counts: np.ndarray
    w: np.ndarray
    active: np.ndarray
    h: np.ndarray
    sigma_c: np.ndarray
    target_len: np.ndarray
    target_count: np.ndarray
    line_counts: np.ndarray
    line_theta: np.ndarray = field(repr=False, default=None)
    line_r: np.ndarray = field(repr=False, default=None)
    line_of: np.ndarray = field(repr=False, default=None)
    t: np.ndarray = field(repr=False, default=None)

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.counts)])


def _group_sum(values, counts):
    """Sum of consecutive groups of sizes ``counts`` (empty groups give 0)."""
    csum = np.concatenate([[0.0], np.cumsum(values, dtype=float)])
    ends = np.cumsum(counts)
    return csum[ends] - csum[ends - counts]


def _sample_lines(model, rng, n, window):
    """Per-realization line counts and ego-frame (theta, r) of other lines."""
    if model.kind == "plcp":
        mean = model.lambda_L * math.pi * 2 * window
        counts = rng.poisson(mean, size=n)
        total = int(counts.sum())
        theta = rng.uniform(0.0, math.pi, size=total)
        r = rng.uniform(-window, window, size=total)
        return counts, theta, r, r
    counts = np.full(n, model.n_other, dtype=np.int64)
    total = int(counts.sum())
    theta = rng.uniform(0.0, math.pi, size=total)
    r = rng.uniform(-model.R_g, model.R_g, size=total)
    return counts, theta, r - model.r_0 * np.sin(theta), r


def sample_block(model, sector: geo.SectorSpec, radio: RadioParams, R: float, n: int, rng,
                 keep_geometry=False) -> Block:
    """Draw ``n`` independent realizations around the ego radar.

    ``sector`` gives the half-beamwidth and the interference reach R_k;
    ``R`` is the target distance (also the radius of the target sector).
    """
    half_bw, reach = sector.half_beamwidth, sector.range
    window = max(reach, R)
    lc, theta, r_loc, r_glob = _sample_lines(model, rng, n, window)
    owner = np.repeat(np.arange(n), lc)
    lo1, hi1, lo2, hi2 = geo.visible_pieces(theta, r_loc, half_bw, reach)
    len1 = np.clip(hi1 - lo1, 0.0, None)
    len2 = np.clip(hi2 - lo2, 0.0, None)
    k1 = rng.poisson(model.lam * len1)
    k2 = rng.poisson(model.lam * len2)
    # vehicles on other lines, piece 1 then piece 2 of every line
    kk = np.concatenate([k1, k2])
    lo = np.repeat(np.concatenate([lo1, lo2]), kk)
    span = np.repeat(np.concatenate([len1, len2]), kk)
    line_idx = np.repeat(np.concatenate([np.arange(len(theta))] * 2), kk)
    t = lo + span * rng.uniform(size=lo.size)
    w_other = np.hypot(r_loc[line_idx], t)
    # own street
    lower = own_lower(model, R)
    k0 = rng.poisson(model.lam * max(model.reach - lower, 0.0), size=n)
    v0 = rng.uniform(lower, model.reach, size=int(k0.sum()))
    # target sector N+(R): clipped lengths of other lines, L0 contributes R
    clip = geo.clipped_length(theta, r_loc, half_bw, R)
    target_len = _group_sum(clip, lc) + R
    own_in_target = _group_sum((v0 <= R).astype(float), k0) if lower == 0 else rng.poisson(model.lam * R, size=n)
    target_count = rng.poisson(model.lam * (target_len - R)) + own_in_target
    # group interferers by realization: own street first, then other lines
    real_other = owner[line_idx]
    order = np.argsort(real_other, kind="stable")
    k_other = np.bincount(real_other, minlength=n)
    counts = k0 + k_other
    starts0 = np.concatenate([[0], np.cumsum(counts)[:-1]])
    total = int(counts.sum())
    w = np.empty(total)
    line_of = np.empty(total, dtype=np.int64)
    tt = np.empty(total)
    own_pos = np.repeat(starts0, k0) + (np.arange(int(k0.sum())) - np.repeat(np.cumsum(k0) - k0, k0))
    w[own_pos] = v0
    line_of[own_pos] = -1
    tt[own_pos] = v0
    oth_start = np.repeat(starts0 + k0, k_other)
    oth_pos = oth_start + (np.arange(int(k_other.sum())) - np.repeat(np.cumsum(k_other) - k_other, k_other))
    w[oth_pos] = w_other[order]
    line_of[oth_pos] = line_idx[order]
    tt[oth_pos] = t[order]
    active = rng.uniform(size=total) < radio.p
    h = rng.exponential(1.0, size=total)
    sigma_c = rng.exponential(radio.sigma_bar, size=n)
    blk = Block(n, counts, w, active, h, sigma_c, target_len, target_count, lc)
    if keep_geometry:
        blk.line_theta, blk.line_r, blk.line_of, blk.t = theta, r_glob, line_of, tt
    return blk


@dataclass
class SimulationSample:
    """Concatenation of blocks in block order."""

    blocks: List[Block]

    @property
    def n(self):
        return sum(b.n for b in self.blocks)

    def cat(self, name):
        return np.concatenate([getattr(b, name) for b in self.blocks])


def simulate(model, sector, radio, R, n_realizations, seed, threads=1, block_size=BLOCK_SIZE):
    """Draw ``n_realizations`` realizations deterministically from ``seed``."""
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    sizes = [block_size] * (n_realizations // block_size)
    if n_realizations % block_size:
        sizes.append(n_realizations % block_size)

    def run(k):
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, k])
        return sample_block(model, sector, radio, R, sizes[k], rng)

    if threads and threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(k) for k in range(len(sizes))]
    return SimulationSample(blocks)


def sample_realization(model, sector, radio, seed, R: Optional[float] = None) -> Realization:
    """One realization with full bookkeeping (lines in the global frame)."""
    R = float(sector.range if R is None else R)
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    blk = sample_block(model, sector, radio, R, 1, rng, keep_geometry=True)
    lines = [geo.LineParams(0.0, 0.0)]
    lines += [geo.LineParams(float(th), float(r)) for th, r in zip(blk.line_theta, blk.line_r)]
    ego = geo.SectorSpec((0.0, model.ego_y), (0.0, 1.0), sector.half_beamwidth, sector.range)
    interferers = []
    for li, t, w, a in zip(blk.line_of, blk.t, blk.w, blk.active):
        if li < 0:
            interferers.append(Interferer(0, float(t), float(w), bool(a)))
            continue
        local = geo.to_ego_frame(lines[li + 1], ego)
        v = geo._t_to_v(local.theta, local.r, float(t))
        interferers.append(Interferer(int(li) + 1, v, float(w), bool(a)))
    return Realization(lines, interferers, ego)


def _log_factor(w, radio, bprime):
    g = radio.p / (1.0 + bprime * np.asarray(w, dtype=float) ** (-radio.alpha)) + (1.0 - radio.p)
    return np.log(g)


def conditional_sf_success(real, radio: RadioParams, beta_sf: float, R: float) -> float:
    """``prod_w [p / (1 + beta' w^-alpha) + 1 - p]`` over the interferers."""
    if not 0 < beta_sf < 1:
        raise ValueError("beta_sf must lie in (0, 1)")
    w = real.distances if isinstance(real, Realization) else np.asarray(real, dtype=float)
    if w.size == 0:
        return 1.0
    return float(np.exp(np.sum(_log_factor(w, radio, beta_sf_prime(beta_sf, radio, R)))))


def conditional_sf_values(sample: SimulationSample, radio, beta_sf, R) -> np.ndarray:
    """Per-realization conditional success probabilities."""
    if not 0 <= beta_sf < 1:
        raise ValueError("beta_sf must lie in [0, 1)")
    bp = beta_sf_prime(beta_sf, radio, R)
    out = []
    for b in sample.blocks:
        out.append(np.exp(_group_sum(_log_factor(b.w, radio, bp), b.counts)))
    return np.concatenate(out)


def interference_power(w, h, active, alpha):
    """``sum_active 4 pi h w^-alpha`` (normalized by gamma P)."""
    return np.sum(np.where(active, 4 * math.pi * h * np.asarray(w, float) ** (-alpha), 0.0))


def sample_sir(real: Realization, radio: RadioParams, R: float, seed) -> float:
    """Target echo over interference with fresh RCS and fading draws; ``inf``
    without active interferers."""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    sigma_c = rng.exponential(radio.sigma_bar)
    w = real.distances
    h = rng.exponential(1.0, size=w.size)
    scale = radio.gamma * radio.power_w
    interference = scale * interference_power(w, h, real.active, radio.alpha)
    signal = scale * sigma_c * R ** (-2 * radio.alpha)
    if interference == 0:
        return math.inf
    return float(signal / interference)


def sir_values(sample: SimulationSample, radio: RadioParams, R: float) -> np.ndarray:
    """Per-realization SIR using the fading and activity drawn with each block."""
    out = []
    for b in sample.blocks:
        terms = np.where(b.active, 4 * math.pi * b.h * b.w ** (-radio.alpha), 0.0)
        interference = _group_sum(terms, b.counts)
        with np.errstate(divide="ignore"):
            out.append(np.where(interference > 0, b.sigma_c * R ** (-2 * radio.alpha) / interference, np.inf))
    return np.concatenate(out)


def empirical_ccdf(samples, t_grid) -> np.ndarray:
    """``P(X >= t)`` on ``t_grid``."""
    s = np.sort(np.asarray(samples, dtype=float))
    return 1.0 - np.searchsorted(s, np.asarray(t_grid, dtype=float), side="left") / s.size


def empirical_md(model, sector, radio, beta_sf, R, n_realizations, seed, t_grid=None, threads=1,
                 sample: Optional[SimulationSample] = None) -> MetaDistCurve:
    """Empirical CCDF of the conditional success probability."""
    t_grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    if sample is None:
        sample = simulate(model, sector, radio, R, n_realizations, seed, threads)
    ps = conditional_sf_values(sample, radio, beta_sf, R)
    curve = MetaDistCurve(t_grid, empirical_ccdf(ps, t_grid), "empirical", beta_sf)
    curve.samples = ps
    return curve


def mc_sector_lengths(model, half_bw, R, n_realizations, seed):
    """Per-realization total length of non-ego streets inside the target
    sector N+(R) (the ego street is excluded)."""
    out = []
    n_blocks = -(-n_realizations // BLOCK_SIZE)
    for k in range(n_blocks):
        n = min(BLOCK_SIZE, n_realizations - k * BLOCK_SIZE)
        rng = np.random.default_rng([int(seed), k])
        lc, theta, r_loc, _ = _sample_lines(model, rng, n, R)
        out.append(_group_sum(geo.clipped_length(theta, r_loc, half_bw, R), lc))
    return np.concatenate(out)
