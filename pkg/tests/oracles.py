"""Independent reference computations used by the tests.

Nothing here calls the closed forms under test: chords come from bisection
on a plain point-in-sector predicate, lengths from sampling, and so on.
"""

import math

import numpy as np


def in_sector(px, py, apex, boresight, half_bw, radius):
    """Vectorized point-in-sector predicate (closed cone, closed disk)."""
    dx, dy = px - apex[0], py - apex[1]
    dist = np.hypot(dx, dy)
    cosang = (dx * boresight[0] + dy * boresight[1]) / np.where(dist > 0, dist, 1.0)
    return (dist <= radius) & ((dist == 0) | (cosang >= math.cos(half_bw)))


def _bisect(pred, inside, outside, iters=80):
    """Boundary of a convex set along a line: ``pred(inside)`` is True,
    ``pred(outside)`` False (arrays of parameters)."""
    a, b = inside.copy(), outside.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        ok = pred(m)
        a = np.where(ok, m, a)
        b = np.where(ok, b, m)
    return 0.5 * (a + b)


def chord_by_bisection(theta, r, half_bw, radius, samples=4001):
    """Length of the line ``x cos + y sin = r`` inside the ego sector (apex at
    the origin, boresight +y) from sampling plus bisection.

    Returns ``(length, resolution)``: when no sample lands inside, the chord
    is shorter than ``resolution`` and ``length`` is 0.
    """
    theta, r = np.atleast_1d(theta).astype(float), np.atleast_1d(r).astype(float)
    nx, ny = np.cos(theta), np.sin(theta)
    ex, ey = -ny, nx
    span = radius * 1.0001
    t = np.linspace(-span, span, samples)

    def pred_rows(tt):
        x = r[:, None] * nx[:, None] + tt * ex[:, None]
        y = r[:, None] * ny[:, None] + tt * ey[:, None]
        return in_sector(x, y, (0.0, 0.0), (0.0, 1.0), half_bw, radius)

    hits = pred_rows(np.broadcast_to(t, (theta.size, t.size)))
    any_hit = hits.any(axis=1)
    first = np.argmax(hits, axis=1)
    last = t.size - 1 - np.argmax(hits[:, ::-1], axis=1)

    def pred(tt):
        x = r * nx + tt * ex
        y = r * ny + tt * ey
        return in_sector(x, y, (0.0, 0.0), (0.0, 1.0), half_bw, radius)

    t_in_lo, t_in_hi = t[first], t[last]
    t_out_lo = np.where(first > 0, t[np.maximum(first - 1, 0)], -span)
    t_out_hi = np.where(last < t.size - 1, t[np.minimum(last + 1, t.size - 1)], span)
    lo = _bisect(pred, t_in_lo, t_out_lo)
    hi = _bisect(pred, t_in_hi, t_out_hi)
    length = np.where(any_hit, hi - lo, 0.0)
    return length, t[1] - t[0]


def visible_interval_by_bisection(apex, boresight, half_bw, reach, point, direction, span, samples=4001):
    """Parameter interval ``[lo, hi]`` of ``point + s * direction`` where a
    radar (looking either way along the street) and the ego radar see each
    other.  ``None`` when no sample is mutually visible."""
    p = np.asarray(point, float)
    d = np.asarray(direction, float)
    ca = math.cos(half_bw)

    def pred(s):
        s = np.asarray(s, dtype=float)
        x, y = p[0] + s * d[0], p[1] + s * d[1]
        ego_sees = in_sector(x, y, apex, boresight, half_bw, reach)
        vx, vy = apex[0] - x, apex[1] - y
        dist = np.hypot(vx, vy)
        c = (vx * d[0] + vy * d[1]) / np.where(dist > 0, dist, 1.0)
        other_sees = (dist <= reach) & ((c >= ca) | (-c >= ca))
        return ego_sees & other_sees

    s = np.linspace(-span, span, samples)
    ok = pred(s)
    if not ok.any():
        return None
    i, j = int(np.argmax(ok)), int(s.size - 1 - np.argmax(ok[::-1]))
    if not ok[i:j + 1].all():
        return "disconnected"
    lo_out = s[i - 1] if i > 0 else -span
    hi_out = s[j + 1] if j < s.size - 1 else span
    lo = _bisect(pred, np.array([s[i]]), np.array([lo_out]))[0]
    hi = _bisect(pred, np.array([s[j]]), np.array([hi_out]))[0]
    return lo, hi


def plp_length_campbell(lambda_L, half_bw, R):
    """Mean length of Poisson lines inside a sector: intensity times area,
    plus the ego street of length ``R``."""
    return lambda_L * math.pi * half_bw * R * R + R


def blp_density_exact(r, n_B, R_g):
    """Street length per unit area at distance ``r`` for ``n_B`` lines whose
    offsets are uniform on ``[-R_g, R_g]`` and directions uniform."""
    r = np.asarray(r, float)
    inside = n_B / (2 * R_g)
    with np.errstate(divide="ignore", invalid="ignore"):
        outside = n_B / (math.pi * R_g) * np.arcsin(np.minimum(1.0, R_g / r))
    return np.where(r <= R_g, inside, outside)


def uniform_ccdf(t):
    return 1.0 - np.asarray(t, float)


def v_frame(line, sector, crossing_distance):
    """Crossing point with the ego street and the unit street direction that
    points along the ego boresight, so that ``C + v * e`` is position ``v``."""
    d = crossing_distance(line, sector)
    apex, bore = np.asarray(sector.apex, float), np.asarray(sector.boresight, float)
    a = line.direction
    e = a if np.dot(a, bore) >= 0 else -a
    return apex + d * bore, e
