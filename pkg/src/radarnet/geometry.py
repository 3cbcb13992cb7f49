"""Plane geometry of streets and radar beams.

Streets are lines ``x cos(theta) + y sin(theta) = r``.  A radar beam is an
ideal cone of half-angle ``half_beamwidth`` about a boresight, cut off at a
range.  All sector computations happen in the *ego frame*: apex at the
origin, boresight along +y.  :func:`to_ego_frame` maps a global line into it.

Along a line in the ego frame two parameterizations are used:

* ``t`` -- signed arc length from the foot of the perpendicular from the apex,
  along ``e = (-sin(theta), cos(theta))``.  The vectorized helpers use it.
* ``v`` -- signed arc length from the intersection with the ego street (the
  local y-axis), along the line direction whose y-component is nonnegative.
  The public interval API reports ``v``, matching
  ``w = sqrt((d + v|cos(theta)|)^2 + (v sin(theta))^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

Point = Tuple[float, float]

GEOM_TOL = 1e-9

CASE_TAGS = ("P0", "P1", "P2", "P3", "P4", "P5", "EMPTY")


@dataclass(frozen=True)
class LineParams:
    """A street ``x cos(theta) + y sin(theta) = r``."""

    theta: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.r)):
            raise ValueError(f"non-finite line parameters ({self.theta}, {self.r})")

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    @property
    def direction(self) -> np.ndarray:
        """Unit vector ``a`` along the street (one of the two boresights)."""
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    def residual(self, point) -> float:
        return float(np.dot(self.normal, point) - self.r)

    def point_at(self, t: float) -> np.ndarray:
        """Point at signed distance ``t`` from the foot of the perpendicular."""
        return self.r * self.normal + t * self.direction

    def canonical(self) -> "LineParams":
        """Same line with theta folded into [0, pi)."""
        th = math.fmod(self.theta, 2 * math.pi)
        r = self.r
        if th < 0:
            th += 2 * math.pi
        if th >= math.pi:
            th -= math.pi
            r = -r
        if th >= math.pi:  # rounding at the upper edge
            th = 0.0
            r = -r
        return LineParams(th, r)


@dataclass(frozen=True)
class SectorSpec:
    """Cone of half-angle ``half_beamwidth`` about ``boresight``, cut at ``range``."""

    apex: Point
    boresight: Point
    half_beamwidth: float
    range: float

    def __post_init__(self):
        vals = (*self.apex, *self.boresight, self.half_beamwidth, self.range)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite sector parameters")
        if abs(math.hypot(*self.boresight) - 1.0) > 1e-12:
            raise ValueError("boresight must be a unit vector")
        if not 0.0 < self.half_beamwidth < math.pi / 2:
            raise ValueError("half_beamwidth must lie in (0, pi/2)")
        if self.range <= 0:
            raise ValueError("range must be positive")

    @classmethod
    def ego(cls, half_beamwidth: float, range: float, r0: float = 0.0) -> "SectorSpec":
        """The ego radar at ``(0, r0)`` looking along +y."""
        return cls((0.0, float(r0)), (0.0, 1.0), float(half_beamwidth), float(range))

    def with_range(self, range: float) -> "SectorSpec":
        return SectorSpec(self.apex, self.boresight, self.half_beamwidth, float(range))

    def contains(self, point) -> bool:
        d = np.asarray(point, dtype=float) - np.asarray(self.apex, dtype=float)
        dist = math.hypot(d[0], d[1])
        if dist == 0.0 or dist > self.range:
            return False
        return float(np.dot(d, self.boresight)) / dist > math.cos(self.half_beamwidth)


@dataclass(frozen=True)
class LineSectorIntersection:
    total_length: float
    case_tag: str


@dataclass(frozen=True)
class InterferingInterval:
    a: float
    b: float
    empty: bool

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.b - self.a

    @classmethod
    def none(cls) -> "InterferingInterval":
        return cls(math.nan, math.nan, True)


def to_ego_frame(line: LineParams, sector: SectorSpec) -> LineParams:
    """Express ``line`` in the frame where the sector apex is the origin and
    the boresight is +y.  The result has theta in [0, pi)."""
    bx, by = sector.boresight
    n = line.normal
    # local x axis is the boresight rotated by -90 degrees
    nx = n[0] * by - n[1] * bx
    ny = n[0] * bx + n[1] * by
    r = line.r - float(np.dot(n, sector.apex))
    return LineParams(math.atan2(ny, nx), r).canonical()


# ---------------------------------------------------------------------------
# vectorized kernels (ego frame)


def sector_chord(theta, r, half_bw, radius):
    """Chord of the line(s) ``(theta, r)`` inside the sector, as ``t`` bounds.

    Returns ``(lo, hi, lo_kind, hi_kind)``; kinds are 0 for the arc, 1 for the
    edge at polar angle ``pi/2 - half_bw``, 2 for the other edge.  Empty chords
    have ``hi <= lo``.
    """
    theta, r, half_bw, radius = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (theta, r, half_bw, radius))
    )
    st, ct = np.sin(theta), np.cos(theta)
    so, co = np.sin(half_bw), np.cos(half_bw)
    h2 = radius * radius - r * r
    s = np.sqrt(np.clip(h2, 0.0, None))
    lo = np.where(h2 > 0, -s, np.inf)
    hi = np.where(h2 > 0, s, -np.inf)
    lo_kind = np.zeros(lo.shape, dtype=np.int8)
    hi_kind = np.zeros(lo.shape, dtype=np.int8)
    # edges: y sin(w) - x cos(w) > 0 and y sin(w) + x cos(w) > 0, with
    # q(t) = r n + t e, n = (ct, st), e = (-st, ct)
    for kind, sign in ((1, -1.0), (2, 1.0)):
        a = r * (st * so + sign * ct * co)
        b = ct * so - sign * st * co
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = -a / b
        up = b > 0
        down = b < 0
        flat_out = (b == 0) & (a <= 0)
        new_lo = up & (t0 > lo)
        lo = np.where(new_lo, t0, lo)
        lo_kind = np.where(new_lo, kind, lo_kind)
        new_hi = down & (t0 < hi)
        hi = np.where(new_hi, t0, hi)
        hi_kind = np.where(new_hi, kind, hi_kind)
        hi = np.where(flat_out, -np.inf, hi)
    return lo, hi, lo_kind, hi_kind


def chord_length(theta: float, r: float, half_bw: float, radius: float) -> float:
    """Scalar :func:`clipped_length` in plain floats, for quadrature inner loops."""
    h2 = radius * radius - r * r
    if h2 <= 0:
        return 0.0
    st, ct = math.sin(theta), math.cos(theta)
    so, co = math.sin(half_bw), math.cos(half_bw)
    hi = math.sqrt(h2)
    lo = -hi
    for sign in (-1.0, 1.0):
        a = r * (st * so + sign * ct * co)
        b = ct * so - sign * st * co
        if b > 0:
            lo = max(lo, -a / b)
        elif b < 0:
            hi = min(hi, -a / b)
        elif a <= 0:
            return 0.0
    return hi - lo if hi > lo else 0.0


def clipped_length(theta, r, half_bw, radius):
    lo, hi, _, _ = sector_chord(theta, r, half_bw, radius)
    return np.clip(hi - lo, 0.0, None)


def visible_pieces(theta, r, half_bw, reach):
    """Stretches of the line(s) where a radar and the ego radar see each other.

    The ego radar sits at the origin looking along +y with range ``reach``;
    the other radar points along its street (either way) with the same
    half-beamwidth and range.  Mutual visibility along the line reduces to

    * ego cone: two linear inequalities in ``t``,
    * ``|t| <= sqrt(reach^2 - r^2)``,
    * ``|t| > |r| cot(half_bw)`` (ego inside the other radar's cone).

    Returns ``(lo1, hi1, lo2, hi2)`` in ``t``: the piece with ``t < 0`` and the
    piece with ``t > 0``.  Empty pieces have ``hi <= lo``.  At most one piece
    is nonempty when ``half_bw < pi/4``.
    """
    lo, hi, _, _ = sector_chord(theta, r, half_bw, reach)
    r = np.asarray(r, dtype=float)
    inner = np.abs(r) / np.tan(half_bw)
    lo1, hi1 = lo, np.minimum(hi, -inner)
    lo2, hi2 = np.maximum(lo, inner), hi
    return lo1, hi1, lo2, hi2


def visible_length(theta, r, half_bw, reach):
    lo1, hi1, lo2, hi2 = visible_pieces(theta, r, half_bw, reach)
    return np.clip(hi1 - lo1, 0.0, None) + np.clip(hi2 - lo2, 0.0, None)


# ---------------------------------------------------------------------------
# closed-form chord lengths, one per configuration of the chord


def _p1(theta, u, half_bw, radius):
    s, c, tw = abs(math.sin(theta)), abs(math.cos(theta)), math.tan(half_bw)
    return u * tw / (s + c * tw) + math.sqrt(max(radius**2 - (u * s) ** 2, 0.0)) - u * c


def _p2(theta, u, half_bw, radius):
    s, c, tw = abs(math.sin(theta)), abs(math.cos(theta)), math.tan(half_bw)
    return 2 * u * s * tw / (s * s - (c * tw) ** 2)


def _p3(theta, u, half_bw, radius):
    s = abs(math.sin(theta))
    return 2 * math.sqrt(max(radius**2 - (u * s) ** 2, 0.0))


def _cos_alpha_m(theta, u, radius):
    s, c = abs(math.sin(theta)), abs(math.cos(theta))
    q = u / radius
    return q * s * s + math.sqrt(max(q * q * (s**4 - s * s) + c * c, 0.0))


def _p4(theta, u, half_bw, radius):
    c, tt, tw = abs(math.cos(theta)), abs(math.tan(theta)), math.tan(half_bw)
    return (radius * _cos_alpha_m(theta, u, radius) - u * tt / (tt + tw)) / c


def _p5(theta, u, half_bw, radius):
    c, tt, tw = abs(math.cos(theta)), abs(math.tan(theta)), math.tan(half_bw)
    return (radius * _cos_alpha_m(theta, u, radius) - u * tt / (tt - tw)) / c


_CASE_FORMULAS = {"P1": _p1, "P2": _p2, "P3": _p3, "P4": _p4, "P5": _p5}


def classify_chord(theta: float, r: float, half_bw: float, radius: float) -> str:
    """Case tag of a line in the ego frame, from the boundaries its chord hits.

    P1/P4/P5 chords run from a cone edge to the arc and cross the boresight
    axis inside the sector, ahead of it, or behind the apex respectively;
    P2 chords join the two edges and P3 chords join two arc points.
    """
    lo, hi, klo, khi = (float(x) for x in sector_chord(theta, r, half_bw, radius))
    if not hi - lo > 0:
        return "EMPTY"
    if abs(r) <= GEOM_TOL and abs(math.sin(theta)) <= GEOM_TOL:
        return "P0"
    if klo and khi:
        return "P2"
    if not klo and not khi:
        return "P3"
    st = math.sin(theta)
    if abs(st) <= GEOM_TOL:
        return "P4"  # parallel to the boresight axis, which it meets "at infinity"
    u = r / st
    if u < 0:
        return "P5"
    return "P1" if u <= radius else "P4"


def line_sector_length(line: LineParams, sector: SectorSpec) -> LineSectorIntersection:
    """Length of ``line`` inside ``sector``.

    The chord configuration is identified geometrically and its length is
    evaluated with the matching closed form in ``(theta, u = r/sin(theta))``.
    The line through the apex along the boresight has the sector range as
    its length.
    """
    local = to_ego_frame(line, sector)
    w, radius = sector.half_beamwidth, sector.range
    tag = classify_chord(local.theta, local.r, w, radius)
    if tag == "EMPTY":
        return LineSectorIntersection(0.0, tag)
    if tag == "P0":
        return LineSectorIntersection(radius, tag)
    st = math.sin(local.theta)
    if abs(st) <= GEOM_TOL:
        # vertical line x = r: closed forms degenerate, use the chord directly
        length = float(clipped_length(local.theta, local.r, w, radius))
        return LineSectorIntersection(length, tag)
    u = local.r / st
    length = _CASE_FORMULAS[tag](local.theta, u, w, radius)
    return LineSectorIntersection(max(length, 0.0), tag)


# ---------------------------------------------------------------------------
# mutual visibility and interfering intervals


def mutual_visibility(
    ego: SectorSpec,
    other_position,
    other_line: LineParams,
    other_boresight_sign: Optional[int] = None,
) -> bool:
    """Whether a radar at ``other_position`` on ``other_line`` and the ego radar
    are inside each other's sectors.

    The other radar looks along ``sign * a`` with ``a = (-sin, cos)`` of its
    street, using the ego's half-beamwidth and range.  With ``sign=None`` both
    the front and the rear radar of the vehicle are considered.  Only the
    ego's forward sector counts: it is the radar doing the detection.
    """
    q = np.asarray(other_position, dtype=float)
    scale = max(1.0, float(np.max(np.abs(q))))
    if abs(other_line.residual(q)) > 1e-6 * scale:
        raise ValueError("other_position does not lie on other_line")
    if not ego.contains(q):
        return False
    signs = (1, -1) if other_boresight_sign is None else (int(other_boresight_sign),)
    a = other_line.direction
    for sgn in signs:
        if sgn not in (1, -1):
            raise ValueError("other_boresight_sign must be +1 or -1")
        theirs = SectorSpec(tuple(q), tuple(sgn * a), ego.half_beamwidth, ego.range)
        if theirs.contains(ego.apex):
            return True
    return False


def interferer_distance(d: float, theta: float, v: float, own_street: bool = False) -> float:
    """Distance from the ego radar to a radar at ``v`` along a street.

    ``d`` is the distance from the ego radar to the crossing with its own
    street.  On the ego street the distance is ``v`` itself.
    """
    if own_street:
        return float(v)
    return math.hypot(d + v * abs(math.cos(theta)), v * math.sin(theta))


def _t_to_v(theta: float, r: float, t: float) -> float:
    st, ct = math.sin(theta), math.cos(theta)
    if abs(st) <= GEOM_TOL:
        return t if ct >= 0 else -t  # parallel street: measured from the foot point
    t_cross = r * ct / st
    return t - t_cross if ct >= 0 else t_cross - t


def _v_to_t(theta: float, r: float, v: float) -> float:
    st, ct = math.sin(theta), math.cos(theta)
    if abs(st) <= GEOM_TOL:
        return v if ct >= 0 else -v
    t_cross = r * ct / st
    return v + t_cross if ct >= 0 else t_cross - v


def interfering_interval(
    ego: SectorSpec, line: LineParams, network_range: float
) -> InterferingInterval:
    """Stretch ``[a, b]`` of ``line`` whose radars mutually see the ego radar.

    Bounds are in ``v`` (see module docstring), measured along the line
    relative to its crossing with the ego street.  For the ego street itself
    this is just the distance ahead of the ego radar.
    """
    local = to_ego_frame(line, ego)
    lo1, hi1, lo2, hi2 = (
        float(x) for x in visible_pieces(local.theta, local.r, ego.half_beamwidth, network_range)
    )
    pieces = [(lo, hi) for lo, hi in ((lo1, hi1), (lo2, hi2)) if hi > lo]
    if not pieces:
        return InterferingInterval.none()
    if len(pieces) > 1:
        raise ValueError("visible set is disconnected (half-beamwidth >= pi/4)")
    lo, hi = pieces[0]
    va, vb = sorted((_t_to_v(local.theta, local.r, lo), _t_to_v(local.theta, local.r, hi)))
    return InterferingInterval(va, vb, False)


def crossing_distance(line: LineParams, ego: SectorSpec) -> float:
    """Signed distance ``d`` from the ego radar to where ``line`` crosses the
    ego street (``inf`` for parallel streets)."""
    local = to_ego_frame(line, ego)
    st = math.sin(local.theta)
    if abs(st) <= GEOM_TOL:
        return math.inf
    return local.r / st
