"""Closed-form and quadrature evaluation of street lengths, target counts,
success-probability moments, detection probability and local delay.

Moments are computed from an :class:`InterferenceField`: a fixed
positive-weight discretization of the own street and of the space of other
streets, each carrying a discretized stretch of mutual visibility.  Since the
weights are fixed, every moment order (real or complex) is an exact moment of
one and the same surrogate distribution, which keeps long moment sequences
consistent enough for bound-based reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry as geo
from .cox import BLCP, PLCP, RadioParams, beta_sf_prime, own_lower
from .quadrature import (DEFAULT_QUAD, QuadratureError, QuadratureSpec, dblquad_x_then_y,
                         gauss_legendre, graded_edges, panel_rule, quad)

DIVERGENCE_EXPONENT = 50.0


@dataclass(frozen=True)
class Thresholds:
    """SF threshold for a target at distance ``R``."""

    beta_sf: float
    R: float = 15.0
    beta_dB: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.beta_sf < 1:
            raise ValueError(f"beta_sf must lie in (0, 1), got {self.beta_sf}")
        if not self.R > 0:
            raise ValueError("R must be positive")

    @classmethod
    def from_beta_dB(cls, beta_dB: float, R: float = 15.0) -> "Thresholds":
        beta = 10.0 ** (beta_dB / 10.0)
        return cls(beta / (1.0 + beta), R, beta_dB)

    @property
    def beta(self) -> float:
        return self.beta_sf / (1.0 - self.beta_sf)

    def beta_sf_prime(self, radio: RadioParams) -> float:
        return beta_sf_prime(self.beta_sf, radio, self.R)


# ---------------------------------------------------------------------------
# street lengths inside the target sector


def blp_line_density(r, n_B, R_g):
    """Expected street length per unit area at distance ``r`` from the center
    of a binomial line process."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    inside = n_B / (2.0 * R_g)
    with np.errstate(divide="ignore"):
        outside = n_B / (math.pi * R_g) * np.arcsin(np.minimum(R_g / np.where(r > 0, r, 1.0), 1.0))
    out = np.where(r <= R_g, inside, outside)
    return float(out) if out.ndim == 0 else out


def _chord_breakpoints(theta, half_bw, R):
    """Offsets ``r`` where the case of the chord changes for direction ``theta``."""
    st, ct = math.sin(theta), math.cos(theta)
    pts = [0.0, R * st]  # apex, and crossing the boresight axis at distance R
    for sgn in (-1, 1):
        pts.append(R * (sgn * math.sin(half_bw) * ct + math.cos(half_bw) * st))
    lo, hi = min(pts), max(pts)
    # arc extremes: the normal direction inside the cone
    ang = math.atan2(st, ct)
    for a in (ang, ang + math.pi):
        if math.cos(a - math.pi / 2) > math.cos(half_bw):
            lo, hi = min(lo, R * math.cos(a - ang)), max(hi, R * math.cos(a - ang))
    return lo, hi, sorted(set(pts))


def _case_length(theta, r, half_bw, R):
    return geo.chord_length(theta, r, half_bw, R)


def mean_line_integral(half_bw, R, spec: QuadratureSpec = DEFAULT_QUAD):
    """``int_0^pi int_R l(theta, r) dr dtheta`` with ``l`` the piecewise closed
    form of the chord length."""

    def inner(theta):
        lo, hi, pts = _chord_breakpoints(theta, half_bw, R)
        return quad(lambda r: _case_length(theta, r, half_bw, R), lo, hi, spec, points=pts,
                    what="chord-length integral")

    return quad(inner, 0.0, math.pi, spec, points=[math.pi / 2], what="line-direction integral")


def avg_length_plcp(Omega, R, lambda_L, l0=None, spec: QuadratureSpec = DEFAULT_QUAD):
    """Mean street length inside the target sector of half-angle ``Omega`` and
    radius ``R``, the ego street contributing ``l0`` (default ``R``)."""
    if not 0 < Omega < math.pi / 2:
        raise ValueError("Omega must lie in (0, pi/2)")
    if not R > 0:
        raise ValueError("R must be positive")
    l0 = R if l0 is None else l0
    if lambda_L == 0:
        return float(l0)
    return float(lambda_L * mean_line_integral(Omega, R, spec) + l0)


def _blcp_case(Omega, R, R_g, r0):
    yb = R * math.sin(Omega)
    sq = math.sqrt(max(R_g**2 - yb**2, 0.0))
    rc = sq - R * math.cos(Omega)
    if -R_g <= r0 <= R_g - R:
        return 1
    if R_g - R < r0 <= rc:
        return 2
    if rc < r0 <= R_g:
        return 3
    if r0 > R_g or r0 < -(R_g + R):
        return 4
    if -(sq + R * math.cos(Omega)) <= r0 < -R_g:
        return 5
    return 6


def _blcp_case_edges(Omega, R, R_g):
    sq = math.sqrt(max(R_g**2 - (R * math.sin(Omega)) ** 2, 0.0))
    c = R * math.cos(Omega)
    return [-(R_g + R), -(sq + c), -R_g, R_g - R, sq - c, R_g]


def _seg(Rr, y):
    """``R^2 asin(y/R) + y sqrt(R^2 - y^2)`` = twice the area under the circle."""
    y = min(max(y, -Rr), Rr)
    return Rr**2 * math.asin(y / Rr) + y * math.sqrt(max(Rr**2 - y * y, 0.0))


def _blcp_branch(case, Omega, R, n_B, R_g, r0, spec):
    m = 1.0 / math.tan(Omega)
    yb = R * math.sin(Omega)
    c_in = n_B / (2.0 * R_g)
    c_out = 2.0 * n_B / (math.pi * R_g)

    def rho_out(y, x):
        return math.asin(min(R_g / math.hypot(x, y), 1.0))

    def arc(x):
        return r0 + math.sqrt(max(R * R - x * x, 0.0))

    def edge(x):
        return m * x + r0

    def disk_up(x):
        return math.sqrt(max(R_g**2 - x * x, 0.0))

    def disk_down(x):
        return -disk_up(x)

    def ya():
        num = 4 * R_g**2 * r0**2 - (R_g**2 + r0**2 - R**2) ** 2
        return abs(math.sqrt(max(num, 0.0)) / (2 * r0))

    def yc(sign):
        return (-m * r0 + sign * math.sqrt(max(R_g**2 * (1 + m * m) - r0**2, 0.0))) / (1 + m * m)

    dbl = lambda x0, x1, lo, hi: dblquad_x_then_y(rho_out, x0, x1, lo, hi, spec, what="BLP density integral")
    if case == 1:
        return c_in * Omega * R**2
    if case == 2:
        y_a = ya()
        inside = _seg(R, yb) - m * yb**2 - _seg(R, y_a) + _seg(R_g, y_a) - 2 * r0 * y_a
        return c_in * inside + c_out * dbl(0.0, y_a, disk_up, arc)
    if case == 3:
        y_c = yc(+1)
        inside = _seg(R_g, y_c) - m * y_c**2 - 2 * r0 * y_c
        return c_in * inside + c_out * (dbl(0.0, y_c, disk_up, arc) + dbl(y_c, yb, edge, arc))
    if case == 4:
        return c_out * dbl(0.0, yb, edge, arc)
    if case == 5:
        y_c = yc(-1)
        inside = _seg(R, yb) + _seg(R_g, y_c) + 2 * r0 * y_c - m * (yb**2 - y_c**2)
        return c_in * inside + c_out * dbl(0.0, y_c, edge, disk_down)
    y_a = ya()
    inside = _seg(R, y_a) + _seg(R_g, y_a) + 2 * r0 * y_a
    return c_in * inside + c_out * (dbl(0.0, y_a, edge, disk_down) + dbl(y_a, yb, edge, arc))


def blcp_length_polar(Omega, R, n_B, R_g, r0, spec: QuadratureSpec = DEFAULT_QUAD):
    """Same quantity as :func:`avg_length_blcp` by direct polar integration of
    the line-length density over the sector (reference implementation)."""

    def rho_at(s, phi):
        x, y = s * math.sin(phi), r0 + s * math.cos(phi)
        return blp_line_density(math.hypot(x, y), n_B, R_g) * s

    def inner(phi):
        # break the radial integral where the ray crosses the disk boundary
        c = r0 * math.cos(phi)
        disc = c * c - (r0 * r0 - R_g * R_g)
        pts = []
        if disc > 0:
            pts = [s for s in (-c - math.sqrt(disc), -c + math.sqrt(disc)) if 0 < s < R]
        return quad(lambda s: rho_at(s, phi), 0.0, R, spec, points=pts, what="radial density integral")

    return 2 * quad(inner, 0.0, Omega, spec, what="angular density integral")


def avg_length_blcp(Omega, R, n_B, R_g, r0, spec: QuadratureSpec = DEFAULT_QUAD):
    """Mean length of binomial-process streets inside the target sector of an
    ego radar at ``(0, r0)`` (the ego street itself is not included).

    The sector-versus-disk configuration picks one of six closed-form
    branches.  Exactly on a branch boundary both neighbours are evaluated and
    must agree to 1e-4.  Sectors larger than the disk fall back to polar
    integration.
    """
    if not 0 < Omega < math.pi / 2:
        raise ValueError("Omega must lie in (0, pi/2)")
    if not (R > 0 and R_g > 0 and n_B >= 1):
        raise ValueError("R, R_g and n_B must be positive")
    if R >= R_g or Omega >= math.pi / 4:
        return blcp_length_polar(Omega, R, n_B, R_g, r0, spec)
    case = _blcp_case(Omega, R, R_g, r0)
    val = _blcp_branch(case, Omega, R, n_B, R_g, r0, spec)
    for edge in _blcp_case_edges(Omega, R, R_g):
        if r0 == edge:
            others = {_blcp_case(Omega, R, R_g, math.nextafter(r0, s)) for s in (-math.inf, math.inf)}
            for other in others - {case}:
                alt = _blcp_branch(other, Omega, R, n_B, R_g, r0, spec)
                if abs(alt - val) > 1e-4 * max(abs(val), 1e-12):
                    raise QuadratureError(f"length branches {case} and {other} disagree at r0={r0}")
    return float(val)


def avg_length(model, Omega, R, spec: QuadratureSpec = DEFAULT_QUAD):
    """Mean street length in the target sector, including the ego street."""
    if isinstance(model, PLCP):
        return avg_length_plcp(Omega, R, model.lambda_L, spec=spec)
    # the other streets are the model's n_other lines (n_B - 1 under the Palm view)
    return avg_length_blcp(Omega, R, model.n_other, model.R_g, model.r_0, spec) + R


def expected_targets(model, Omega, R, spec: QuadratureSpec = DEFAULT_QUAD):
    """Mean number of vehicles inside the target sector."""
    if model.lam == 0:
        return 0.0
    return model.lam * avg_length(model, Omega, R, spec)


# ---------------------------------------------------------------------------
# interference field


@dataclass(frozen=True)
class FieldResolution:
    """Panel counts for :class:`InterferenceField` (Gauss-Legendre ``order``)."""

    order: int = 8
    theta_panels: int = 3
    r_panels: int = 2
    r_depth: int = 8
    t_panels: int = 5
    own_panels: int = 4
    own_depth: int = 12

    @classmethod
    def from_spec(cls, spec: QuadratureSpec):
        return cls(order=spec.order, r_depth=min(spec.max_depth, 16), own_depth=min(spec.max_depth, 24))

    def refined(self):
        return FieldResolution(self.order + 4, self.theta_panels * 2, self.r_panels * 2,
                               self.r_depth + 4, self.t_panels + 3, self.own_panels * 2, self.own_depth + 4)


def _visible_windows(theta, half_bw):
    """Polar-angle windows (radians) where a radar on a street of direction
    ``theta`` and the ego radar see each other."""
    out = []
    ego = (math.pi / 2 - half_bw, math.pi / 2 + half_bw)
    for c in (theta + math.pi / 2, theta - math.pi / 2, theta + 1.5 * math.pi):
        lo, hi = max(ego[0], c - half_bw), min(ego[1], c + half_bw)
        if hi > lo:
            out.append((lo, hi))
    return out


def _support_and_breaks(theta, half_bw, reach):
    wins = _visible_windows(theta, half_bw)
    if not wins:
        return None
    pts = [0.0]
    for lo, hi in wins:
        pts += [reach * math.cos(lo - theta), reach * math.cos(hi - theta)]
        for a in (theta, theta + math.pi, theta - math.pi):
            if lo < a < hi:
                pts.append(reach * math.cos(a - theta))
    return min(pts), max(pts), sorted(set(pts))


class InterferenceField:
    """Discretized interference geometry around the ego radar.

    Holds own-street nodes ``(v, c0)`` and, for other streets, outer nodes
    ``(theta, r)`` with measure weights ``W`` plus inner distance nodes
    ``w[k, j]`` with length weights ``c[k, j]`` along the visible stretch.
    """

    def __init__(self, model, half_bw, reach, R, res: FieldResolution = FieldResolution()):
        self.kind = model.kind
        self.half_bw = half_bw
        self.reach = reach
        self.res = res
        lower = own_lower(model, R)
        top = model.reach
        if lower == 0:
            edges = graded_edges(0.0, top, "a", res.own_depth, 0.25)
            edges = np.concatenate([edges[:-1], np.linspace(edges[-2], top, res.own_panels + 1)[1:]])
        else:
            edges = np.linspace(lower, top, res.own_panels + 1)
        self.v0, self.c0 = panel_rule(edges, res.order) if top > lower else (np.zeros(0), np.zeros(0))
        self.own_lower = lower
        if isinstance(model, BLCP):
            self.R_g, self.r0 = model.R_g, model.r_0
        else:
            self.R_g, self.r0 = None, 0.0
        self._build_lines(res)
        self._cache = {}

    # -- construction
    def _theta_intervals(self):
        w = self.half_bw
        if w < math.pi / 4:
            edges = [0.0, w, 2 * w]
            edges += self._blcp_kinks(0.0, 2 * w)
            return sorted(set(edges)), 2.0
        edges = [0.0, 2 * w - math.pi / 2 if 2 * w > math.pi / 2 else 0.0, math.pi - 2 * w, w, math.pi - w, math.pi]
        edges = [e for e in edges if 0 <= e <= math.pi]
        edges += self._blcp_kinks(0.0, math.pi)
        return sorted(set(edges)), 1.0

    def _blcp_kinks(self, a, b):
        """Directions where a disk-domain edge crosses a support breakpoint."""
        if self.R_g is None or self.r0 == 0:
            return []
        grid = np.linspace(a, b, 801)[1:-1]
        kinks = []
        for sign in (-1.0, 1.0):
            f_vals = []
            for th in grid:
                sb = _support_and_breaks(th, self.half_bw, self.reach)
                edge = sign * self.R_g - self.r0 * math.sin(th)
                f_vals.append([edge - p for p in sb[2]] if sb else None)
            for i in range(len(grid) - 1):
                f0, f1 = f_vals[i], f_vals[i + 1]
                if f0 is None or f1 is None or len(f0) != len(f1):
                    continue
                for k in range(len(f0)):
                    if f0[k] * f1[k] < 0:
                        kinks.append(grid[i] + (grid[i + 1] - grid[i]) * f0[k] / (f0[k] - f1[k]))
        return kinks

    def _build_lines(self, res):
        edges, mult = self._theta_intervals()
        th_edges = []
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a > 1e-12:
                th_edges.append(np.linspace(a, b, res.theta_panels + 1)[:-1])
        th_edges = np.concatenate(th_edges + [[edges[-1]]])
        th_nodes, th_w = panel_rule(th_edges, res.order)
        thetas, rs, Ws = [], [], []
        for th, wt in zip(th_nodes, th_w):
            sb = _support_and_breaks(th, self.half_bw, self.reach)
            if sb is None:
                continue
            lo, hi, pts = sb
            if self.R_g is not None:
                dlo = -self.R_g - self.r0 * math.sin(th)
                dhi = self.R_g - self.r0 * math.sin(th)
                lo, hi = max(lo, dlo), min(hi, dhi)
                pts = pts + [dlo, dhi]
                if not hi > lo:
                    continue
            pts = sorted(set([lo, hi] + [p for p in pts if lo < p < hi]))
            r_edges = [lo]
            for a, b in zip(pts[:-1], pts[1:]):
                if a == 0.0:
                    e = graded_edges(a, b, "a", res.r_depth)
                elif b == 0.0:
                    e = graded_edges(a, b, "b", res.r_depth)
                else:
                    e = np.linspace(a, b, res.r_panels + 1)
                r_edges.extend(e[1:])
            rn, rw = panel_rule(np.array(r_edges), res.order)
            thetas.append(np.full(rn.size, th))
            rs.append(rn)
            Ws.append(rw * wt * mult)
        if not thetas:
            self.theta = self.r = self.W = np.zeros(0)
            self.w = self.c = np.zeros((0, 0))
            self.seg_outer = np.zeros(0, dtype=int)
            return
        theta = np.concatenate(thetas)
        r = np.concatenate(rs)
        W = np.concatenate(Ws)
        lo1, hi1, lo2, hi2 = geo.visible_pieces(theta, r, self.half_bw, self.reach)
        seg_lo, seg_hi, seg_outer = [], [], []
        for lo, hi in ((lo1, hi1), (lo2, hi2)):
            ok = hi > lo
            # distances grow with |t|; store the piece as |t| bounds
            a = np.where(np.abs(lo) < np.abs(hi), np.abs(lo), np.abs(hi))
            b = np.where(np.abs(lo) < np.abs(hi), np.abs(hi), np.abs(lo))
            straddle = (lo < 0) & (hi > 0)
            a = np.where(straddle, 0.0, a)
            b = np.where(straddle, np.maximum(-lo, hi), b)
            seg_lo.append(a[ok])
            seg_hi.append(b[ok])
            seg_outer.append(np.nonzero(ok)[0])
        a = np.concatenate(seg_lo)
        b = np.concatenate(seg_hi)
        self.seg_outer = np.concatenate(seg_outer)
        # geometric panels in |t| from the end nearest the ego radar
        K = res.t_panels
        a_eff = np.maximum(a, 1e-9 * b)
        frac = np.arange(K + 1) / K
        tedges = a_eff[:, None] * (b / a_eff)[:, None] ** frac[None, :]
        tedges[:, 0] = a
        x, wg = gauss_legendre(res.order)
        left, right = tedges[:, :-1], tedges[:, 1:]
        half = 0.5 * (right - left)
        nodes = (0.5 * (left + right))[:, :, None] + half[:, :, None] * x
        weights = half[:, :, None] * wg
        tau = nodes.reshape(len(a), -1)
        self.c = weights.reshape(len(a), -1)
        self.w = np.hypot(r[self.seg_outer][:, None], tau)
        self.theta, self.r, self.W = theta, r, W

    # -- evaluation
    @property
    def n_outer(self):
        return self.W.size

    def _log_g(self, p, bprime, alpha):
        key = (p, bprime, alpha)
        if key not in self._cache:
            def lg(w):
                return np.log(p / (1.0 + bprime * w ** (-alpha)) + (1.0 - p))
            self._cache = {key: (lg(self.v0), lg(self.w))}
        return self._cache[key]

    def visible_length(self):
        """Per outer node, the total visible length (sanity checks)."""
        per_seg = self.c.sum(axis=1)
        return np.bincount(self.seg_outer, weights=per_seg, minlength=self.n_outer)

    def log_moment(self, b, model, radio: RadioParams, bprime: float):
        """``log M_b`` (complex for complex ``b``); ``+inf`` on divergence."""
        p = radio.p
        if p == 0 or model.lam == 0:
            return 0.0
        if b == 0:
            return 0.0
        lg0, lg = self._log_g(p, bprime, radio.alpha)
        breal = complex(b).real
        if p == 1 and breal < 0 and radio.alpha * abs(breal) >= 1 and self._touches_apex(model):
            return math.inf
        term0 = 1.0 - np.exp(b * lg0)
        own = model.lam * np.dot(self.c0, term0)
        if self.n_outer:
            term = 1.0 - np.exp(b * lg)
            A_seg = model.lam * np.einsum("ij,ij->i", self.c, term)
            A = np.zeros(self.n_outer, dtype=A_seg.dtype)
            np.add.at(A, self.seg_outer, A_seg)
            if breal < 0 and np.max(-A.real) > DIVERGENCE_EXPONENT:
                return math.inf
            S = np.dot(self.W, -np.expm1(-A))
        else:
            S = 0.0
        if isinstance(model, PLCP):
            out = -own - model.lambda_L * S
        else:
            out = -own + model.n_other * np.log(1.0 - S / (2 * math.pi * self.R_g))
        if breal < 0 and np.real(out) > DIVERGENCE_EXPONENT:
            return math.inf
        return complex(out) if np.iscomplexobj(out) or isinstance(b, complex) else float(np.real(out))

    def log_atom(self, model):
        """``log P(no interferer)`` -- the limit of ``log M_b`` as b grows."""
        if model.lam == 0:
            return 0.0
        own = model.lam * self.c0.sum()
        A = np.zeros(self.n_outer)
        if self.n_outer:
            np.add.at(A, self.seg_outer, model.lam * self.c.sum(axis=1))
        S = np.dot(self.W, -np.expm1(-A)) if self.n_outer else 0.0
        if isinstance(model, PLCP):
            return float(-own - model.lambda_L * S)
        return float(-own + model.n_other * math.log1p(-S / (2 * math.pi * self.R_g)))

    def _touches_apex(self, model):
        if self.own_lower == 0 and self.v0.size:
            return True
        if isinstance(model, PLCP):
            return model.lambda_L > 0
        return model.n_other > 0 and bool(np.any(np.abs(self.r) < 1e-3 * self.reach))


def _field_key(model, half_bw, reach, R, res):
    if isinstance(model, PLCP):
        geom = ("plcp", model.R_P)
    else:
        geom = ("blcp", model.R_B, model.R_g, model.r_0)
    return geom + (own_lower(model, R), float(half_bw), float(reach), res)


_FIELDS = {}


def interference_field(model, sector: geo.SectorSpec, R, res: Optional[FieldResolution] = None):
    """Cached :class:`InterferenceField` for the geometry of ``model``."""
    res = FieldResolution() if res is None else res
    key = _field_key(model, sector.half_beamwidth, sector.range, R, res)
    f = _FIELDS.get(key)
    if f is None:
        if len(_FIELDS) > 64:
            _FIELDS.clear()
        f = _FIELDS[key] = InterferenceField(model, sector.half_beamwidth, sector.range, R, res)
    return f


def _moment(b, thresholds, model, sector, radio, res=None):
    fld = interference_field(model, sector, thresholds.R, res)
    lm = fld.log_moment(b, model, radio, thresholds.beta_sf_prime(radio))
    if isinstance(lm, float) and math.isinf(lm):
        return math.inf
    return np.exp(lm)


def moment_plcp(b, thresholds: Thresholds, model: PLCP, sector: geo.SectorSpec, radio: RadioParams,
                res: Optional[FieldResolution] = None):
    """``E[p_SF^b]`` for the Poisson model (``inf`` if it diverges)."""
    if not isinstance(model, PLCP):
        raise TypeError("moment_plcp needs a PLCP model")
    out = _moment(b, thresholds, model, sector, radio, res)
    return out if isinstance(b, complex) else float(np.real(out))


def moment_blcp(b, thresholds: Thresholds, model: BLCP, sector: geo.SectorSpec, radio: RadioParams,
                res: Optional[FieldResolution] = None):
    """``E[p_SF^b]`` for the binomial model (``inf`` if it diverges)."""
    if not isinstance(model, BLCP):
        raise TypeError("moment_blcp needs a BLCP model")
    out = _moment(b, thresholds, model, sector, radio, res)
    return out if isinstance(b, complex) else float(np.real(out))


def moment(b, thresholds, model, sector, radio, res=None):
    fn = moment_plcp if isinstance(model, PLCP) else moment_blcp
    return fn(b, thresholds, model, sector, radio, res)


def moments(orders, thresholds, model, sector, radio, res=None):
    return np.array([moment(int(k), thresholds, model, sector, radio, res) for k in orders])


def imaginary_moment_fn(thresholds, model, sector, radio, res=None):
    """``u -> M_{ju}`` vectorized over ``u``, plus the atom ``P(p_SF = 1)``."""
    fld = interference_field(model, sector, thresholds.R, res)
    bp = thresholds.beta_sf_prime(radio)

    def fn(u):
        u = np.atleast_1d(u)
        return np.array([np.exp(fld.log_moment(complex(0.0, x), model, radio, bp)) for x in u])

    atom = math.exp(fld.log_atom(model)) if radio.p > 0 else 1.0
    return fn, atom


def detection_probability(model, thresholds: Thresholds, sector, radio, R=None, res=None):
    """``P(SIR > beta)``: the first moment at ``beta_SF = beta / (1 + beta)``."""
    if R is not None and R != thresholds.R:
        thresholds = Thresholds(thresholds.beta_sf, R, thresholds.beta_dB)
    return moment(1, thresholds, model, sector, radio, res)


def expected_detections(model, thresholds: Thresholds, sector, radio, R=None, res=None,
                        spec: QuadratureSpec = DEFAULT_QUAD):
    """Mean number of vehicles in the target sector times the detection
    probability."""
    R = thresholds.R if R is None else R
    if model.lam == 0:
        return 0.0
    n_k = expected_targets(model, sector.half_beamwidth, R, spec)
    return n_k * detection_probability(model, thresholds, sector, radio, R, res)


def mean_local_delay(model, thresholds: Thresholds, sector, radio, res=None):
    """Mean number of slots until a successful detection, ``M_{-1} / p``;
    ``inf`` when the negative moment diverges."""
    if not 0 < radio.p <= 1:
        raise ValueError("mean local delay needs p in (0, 1]")
    m = moment(-1, thresholds, model, sector, radio, res)
    return math.inf if math.isinf(m) else m / radio.p
