import math

import numpy as np
import pytest

from radarnet import cox
from radarnet import geometry as geo

from oracles import in_sector, plp_length_campbell, v_frame

HALF = math.radians(7.5)


def sector(reach=500.0):
    return geo.SectorSpec.ego(HALF, reach)


@pytest.mark.parametrize("ctor", [
    lambda: cox.PLCP(-0.1, 0.01),
    lambda: cox.PLCP(0.01, math.nan),
    lambda: cox.PLCP(0.01, 0.01, own_street_lower="x"),
    lambda: cox.BLCP(0, 1500.0, 0.01),
    lambda: cox.BLCP(3.5, 1500.0, 0.01),
    lambda: cox.BLCP(10, 1500.0, 0.01, exponent="n_plus_1"),
    lambda: cox.RadioParams(p=1.5),
])
def test_invalid_parameters(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_blcp_exponent_choice():
    assert cox.BLCP(300, 1500.0, 0.01).n_other == 299
    assert cox.BLCP(300, 1500.0, 0.01, exponent="n").n_other == 300


def test_beta_prime_invariant_to_link_budget():
    base = cox.RadioParams()
    other = cox.RadioParams(P_dBm=33.0, G_t_dBi=3.0, G_r_dBi=21.0, f_c_Hz=24e9)
    assert cox.beta_sf_prime(0.5, base, 15.0) == cox.beta_sf_prime(0.5, other, 15.0)


def test_conditional_success_formula():
    radio = cox.RadioParams(p=0.4)
    w = np.array([12.0, 40.0, 300.0])
    bp = cox.beta_sf_prime(0.5, radio, 15.0)
    ref = np.prod([0.4 / (1 + bp * x**-2) + 0.6 for x in w])
    assert cox.conditional_sf_success(w, radio, 0.5, 15.0) == pytest.approx(ref, rel=1e-12)
    assert cox.conditional_sf_success(np.array([]), radio, 0.5, 15.0) == 1.0


def test_empirical_ccdf_is_greater_or_equal():
    s = np.array([0.1, 0.5, 0.5, 1.0])
    np.testing.assert_allclose(cox.empirical_ccdf(s, [0.0, 0.5, 0.6, 1.0]), [1.0, 0.75, 0.25, 0.25])


def test_simulation_deterministic_and_thread_invariant():
    m = cox.PLCP(0.01, 0.01)
    a = cox.simulate(m, sector(), cox.RadioParams(), 15.0, 3000, seed=5, block_size=512)
    b = cox.simulate(m, sector(), cox.RadioParams(), 15.0, 3000, seed=5, threads=3, block_size=512)
    c = cox.simulate(m, sector(), cox.RadioParams(), 15.0, 3000, seed=6, block_size=512)
    assert a.n == 3000
    for name in ("counts", "w", "h", "active", "sigma_c"):
        np.testing.assert_array_equal(a.cat(name), b.cat(name))
    assert not np.array_equal(a.cat("w"), c.cat("w"))


def test_realization_interferers_are_mutually_visible():
    radio = cox.RadioParams()
    for model in (cox.PLCP(0.02, 0.05), cox.BLCP(300, 1500.0, 0.05, r_0=700.0)):
        for seed in range(5):
            real = cox.sample_realization(model, sector(), radio, seed, R=15.0)
            apex = np.asarray(real.ego.apex)
            for it in real.interferers:
                L = real.lines[it.line_index]
                if it.line_index == 0:
                    pos = apex + np.array([0.0, it.v])
                else:
                    C, e = v_frame(L, real.ego, geo.crossing_distance)
                    if not np.all(np.isfinite(C)):
                        continue
                    pos = C + it.v * e
                assert abs(L.residual(pos)) < 1e-6
                assert math.hypot(*(pos - apex)) == pytest.approx(it.w, rel=1e-9)
                assert in_sector(pos[0], pos[1], apex, (0.0, 1.0), HALF, 500.0 + 1e-6)


def test_plcp_vehicle_count_on_visible_stretch():
    # own street: Poisson(lam * R_P) vehicles; with no other lines that is all
    m = cox.PLCP(0.0, 0.02)
    s = cox.simulate(m, sector(), cox.RadioParams(), 15.0, 20000, seed=1)
    counts = s.cat("counts")
    assert counts.mean() == pytest.approx(0.02 * 500.0, rel=0.01)
    assert counts.var() == pytest.approx(0.02 * 500.0, rel=0.05)


def test_sector_lengths_match_campbell():
    lengths = cox.mc_sector_lengths(cox.PLCP(0.01, 0.01), HALF, 200.0, 20000, seed=3)
    expect = plp_length_campbell(0.01, HALF, 200.0) - 200.0  # ego street excluded
    se = lengths.std() / math.sqrt(lengths.size)
    assert abs(lengths.mean() - expect) < 4 * se


def test_sir_without_interferers_is_infinite():
    real = cox.Realization([geo.LineParams(0.0, 0.0)], [], sector())
    assert cox.sample_sir(real, cox.RadioParams(), 15.0, seed=0) == math.inf


def test_empirical_md_curve():
    m = cox.PLCP(0.01, 0.01)
    c = cox.empirical_md(m, sector(), cox.RadioParams(), 0.5, 15.0, 2000, seed=2, t_grid=np.linspace(0, 1, 11))
    assert c.F[0] == 1.0
    assert np.all(np.diff(c.F) <= 0)
    assert c.samples.size == 2000
