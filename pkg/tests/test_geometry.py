import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from radarnet import geometry as geo

from oracles import chord_by_bisection, in_sector, v_frame, visible_interval_by_bisection

DEG = math.pi / 180


def ego(half_deg=7.5, radius=500.0):
    return geo.SectorSpec.ego(half_deg * DEG, radius)


# --- types -----------------------------------------------------------------


def test_line_points_satisfy_equation():
    L = geo.LineParams(0.7, 12.0)
    for t in (-30.0, 0.0, 4.5):
        assert L.residual(L.point_at(t)) == pytest.approx(0.0, abs=1e-12)


def test_line_rejects_nan():
    with pytest.raises(ValueError):
        geo.LineParams(float("nan"), 0.0)


def test_canonical_folds_theta():
    L = geo.LineParams(1.5 * math.pi, 3.0).canonical()
    assert 0 <= L.theta < math.pi
    assert L.r == pytest.approx(-3.0)


@pytest.mark.parametrize("kw", [
    dict(boresight=(0.0, 2.0)), dict(half_beamwidth=0.0), dict(half_beamwidth=math.pi / 2), dict(range=0.0),
])
def test_sector_invariants(kw):
    base = dict(apex=(0.0, 0.0), boresight=(0.0, 1.0), half_beamwidth=0.2, range=10.0)
    base.update(kw)
    with pytest.raises(ValueError):
        geo.SectorSpec(**base)


def test_sector_membership_strict_cone_closed_range():
    s = ego(15, 100)
    assert s.contains((0.0, 100.0))
    assert not s.contains((0.0, 100.0001))
    edge = (100 * math.sin(15 * DEG) * 0.5, 100 * math.cos(15 * DEG) * 0.5)
    assert not s.contains(edge)
    assert not s.contains((0.0, 0.0))


# --- line_sector_length ------------------------------------------------------


def test_apex_boresight_line_is_p0():
    res = geo.line_sector_length(geo.LineParams(0.0, 0.0), ego(15, 100))
    assert res.case_tag == "P0"
    assert res.total_length == 100.0


def test_line_beyond_range_is_empty():
    res = geo.line_sector_length(geo.LineParams(math.pi / 2, 200.0), ego(15, 100))
    assert res.case_tag == "EMPTY"
    assert res.total_length == 0.0


def test_random_lines_match_sampling_oracle():
    rng = np.random.default_rng(1)
    n = 1000
    theta = rng.uniform(0, 2 * math.pi, n)
    half = rng.uniform(0.02, 1.5, n)
    R = rng.uniform(1.0, 1000.0, n)
    r = rng.uniform(-1.1, 1.1, n) * R
    for i in range(n):
        got = geo.line_sector_length(geo.LineParams(theta[i], r[i]), geo.SectorSpec.ego(half[i], R[i])).total_length
        ref, res = chord_by_bisection(theta[i], r[i], half[i], R[i])
        if ref[0] == 0.0:
            assert got <= res
        else:
            assert got == pytest.approx(ref[0], abs=1e-6 * R[i])


def test_all_clipping_cases_occur():
    rng = np.random.default_rng(2)
    tags = set()
    for _ in range(4000):
        th, r = rng.uniform(0, 2 * math.pi), rng.uniform(-1.1, 1.1) * 100
        tags.add(geo.classify_chord(th, r, 15 * DEG, 100.0))
    assert {"P1", "P2", "P3", "P4", "P5", "EMPTY"} <= tags


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(0.01, math.pi - 0.01), frac=st.floats(-1.2, 1.2),
       half=st.floats(0.05, 1.4), R=st.floats(1.0, 500.0))
def test_reflection_symmetry(theta, frac, half, R):
    # a line through the apex along a cone edge sits on the open boundary
    assume(abs(frac) > 1e-9 or abs(min(theta, math.pi - theta) - half) > 1e-9)
    s = geo.SectorSpec.ego(half, R)
    a = geo.line_sector_length(geo.LineParams(theta, frac * R), s).total_length
    b = geo.line_sector_length(geo.LineParams(math.pi - theta, frac * R), s).total_length
    assert a == pytest.approx(b, abs=1e-9 * R)


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(0.0, 2 * math.pi), frac=st.floats(-1.2, 1.2),
       half=st.floats(0.05, 1.3), R=st.floats(1.0, 500.0), grow=st.floats(1.0, 1.2))
def test_monotone_in_beamwidth_and_range(theta, frac, half, R, grow):
    L = geo.LineParams(theta, frac * R)
    base = geo.line_sector_length(L, geo.SectorSpec.ego(half, R)).total_length
    wider = geo.line_sector_length(L, geo.SectorSpec.ego(min(half * grow, 1.5), R)).total_length
    longer = geo.line_sector_length(L, geo.SectorSpec.ego(half, R * grow)).total_length
    assert wider >= base - 1e-9 * R
    assert longer >= base - 1e-9 * R
    assert base <= 2 * R + 1e-9


def test_half_disk_limit():
    half = math.pi / 2 - 1e-7
    R = 10.0
    for th, r in ((0.3, 2.0), (1.2, -4.0), (2.0, 7.0)):
        got = geo.line_sector_length(geo.LineParams(th, r), geo.SectorSpec.ego(half, R)).total_length
        # chord of the disk restricted to y >= 0
        t = np.linspace(-R, R, 2_000_001)
        x, y = r * math.cos(th) - t * math.sin(th), r * math.sin(th) + t * math.cos(th)
        ref = np.count_nonzero((x * x + y * y <= R * R) & (y > 0)) * (t[1] - t[0])
        assert got == pytest.approx(ref, abs=1e-4)


def test_to_ego_frame_translation_and_rotation():
    s = geo.SectorSpec((10.0, 5.0), (1.0, 0.0), 0.3, 50.0)
    L = geo.LineParams(math.pi / 2, 5.0)  # y = 5 passes through the apex along the boresight
    local = geo.to_ego_frame(L, s)
    assert local.r == pytest.approx(0.0, abs=1e-12)
    assert geo.line_sector_length(L, s).total_length == pytest.approx(50.0)


# --- mutual visibility -------------------------------------------------------


def test_head_on_same_street_visible():
    L0 = geo.LineParams(0.0, 0.0)
    assert geo.mutual_visibility(ego(7.5), (0.0, 50.0), L0, -1)


def test_behind_ego_not_visible():
    L0 = geo.LineParams(0.0, 0.0)
    assert not geo.mutual_visibility(ego(7.5), (0.0, -50.0), L0)


def test_position_off_line_rejected():
    with pytest.raises(ValueError):
        geo.mutual_visibility(ego(), (1.0, 50.0), geo.LineParams(0.0, 0.0))


def test_mutual_visibility_matches_predicate_and_is_symmetric():
    rng = np.random.default_rng(3)
    half, reach = 10 * DEG, 300.0
    e = geo.SectorSpec((0.0, 0.0), (0.0, 1.0), half, reach)
    for _ in range(500):
        q = rng.uniform(-50, 350, 2) * np.array([0.3, 1.0])
        th = rng.uniform(0, math.pi)
        L = geo.LineParams(th, q[0] * math.cos(th) + q[1] * math.sin(th))
        sign = int(rng.choice([-1, 1]))
        got = geo.mutual_visibility(e, q, L, sign)
        bore = sign * L.direction
        ref = bool(in_sector(q[0], q[1], (0, 0), (0, 1), half, reach)) and bool(
            in_sector(0.0, 0.0, q, bore, half, reach))
        assert got == ref
        # swap roles: the other radar as ego, the ego on the street x = 0
        other = geo.SectorSpec(tuple(q), tuple(bore), half, reach)
        back = geo.mutual_visibility(other, (0.0, 0.0), geo.LineParams(0.0, 0.0), 1)
        assert back == got


# --- interfering interval ----------------------------------------------------


def test_own_street_interval():
    iv = geo.interfering_interval(ego(7.5, 500), geo.LineParams(0.0, 0.0), 500.0)
    assert not iv.empty
    assert iv.a == pytest.approx(0.0, abs=1e-9)
    assert iv.b == pytest.approx(500.0)


def test_line_behind_ego_is_empty():
    iv = geo.interfering_interval(ego(7.5, 500), geo.LineParams(math.pi / 2, -20.0), 500.0)
    assert iv.empty
    assert iv.length == 0.0


def test_interval_matches_bisection_oracle():
    rng = np.random.default_rng(4)
    checked = 0
    for _ in range(300):
        half = rng.uniform(2, 40) * DEG
        reach = rng.uniform(50, 600)
        phi = rng.uniform(0, 2 * math.pi)
        s = geo.SectorSpec(tuple(rng.uniform(-100, 100, 2)), (math.cos(phi), math.sin(phi)), half, reach)
        # a street through a random point of the sector
        rho, ang = reach * math.sqrt(rng.uniform()), phi + rng.uniform(-half, half)
        q = np.asarray(s.apex) + rho * np.array([math.cos(ang), math.sin(ang)])
        th = rng.uniform(0, math.pi)
        L = geo.LineParams(th, float(q @ np.array([math.cos(th), math.sin(th)])))
        if abs(math.sin(geo.to_ego_frame(L, s).theta)) < 1e-3:
            continue
        iv = geo.interfering_interval(s, L, reach)
        C, e = v_frame(L, s, geo.crossing_distance)
        span = float(np.hypot(*(C - np.asarray(s.apex)))) + 2 * reach
        ref = visible_interval_by_bisection(s.apex, s.boresight, half, reach, C, e, span, samples=40001)
        if ref is None:
            assert iv.empty or iv.length < 2 * span / 40000
            continue
        assert not iv.empty
        assert iv.a == pytest.approx(ref[0], abs=1e-6)
        assert iv.b == pytest.approx(ref[1], abs=1e-6)
        for v in np.linspace(iv.a, iv.b, 7)[1:-1]:
            p = C + v * e
            assert math.hypot(*(p - np.asarray(s.apex))) <= reach + 1e-9
        checked += 1
    assert checked > 80


def test_interferer_distance_examples():
    assert geo.interferer_distance(0.0, 0.7, 10.0) == pytest.approx(10.0)
    assert geo.interferer_distance(123.0, 0.7, 37.2, own_street=True) == 37.2
    assert geo.interferer_distance(100.0, math.pi / 2, 50.0) == pytest.approx(math.hypot(100, 50))


@settings(max_examples=300, deadline=None)
@given(theta=st.floats(0.0, 2 * math.pi), frac=st.floats(-1.2, 1.2),
       half=st.floats(0.01, 1.5), R=st.floats(1.0, 1000.0))
def test_scalar_and_vector_chords_agree(theta, frac, half, R):
    scalar = geo.chord_length(theta, frac * R, half, R)
    vector = float(geo.clipped_length(theta, frac * R, half, R))
    full = geo.line_sector_length(geo.LineParams(theta, frac * R), geo.SectorSpec.ego(half, R)).total_length
    assert scalar == pytest.approx(vector, abs=1e-9 * R)
    assert scalar == pytest.approx(full, abs=1e-9 * R)
