import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radarnet import optimize as op
from radarnet.cox import BLCP, PLCP


def test_count_local_optima():
    assert op.count_local_optima([1, 2, 3, 2, 1]) == 1
    assert op.count_local_optima([1, 3, 2, 4, 1]) == 2
    assert op.count_local_optima([3, 2, 1]) == 1
    assert op.count_local_optima([1, 2, 2, 2, 1]) == 1
    assert op.count_local_optima([3, 1, 2], maximize=False) == 1
    assert op.count_local_optima([5, 5, 5]) == 1


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=30))
def test_sorted_sequences_have_one_optimum(values):
    v = sorted(values)
    assert op.count_local_optima(v) == 1
    assert op.count_local_optima(v, maximize=False) == 1


def test_with_param_routes_to_the_right_field():
    sc = op.default_scenario("plcp")
    assert sc.with_param("Omega", 20).omega_deg == 20.0
    assert sc.with_param("p", 0.3).radio.p == 0.3
    assert sc.with_param("lam", 0.02).model.lam == 0.02
    assert sc.with_param("R", 30).thresholds.R == 30.0
    assert sc.with_param("beta", 0.0).thresholds.beta_sf == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sc.with_param("n_B", 10)
    with pytest.raises(ValueError):
        sc.with_param("bogus", 1)
    b = op.default_scenario("blcp")
    assert b.with_param("n_B", 99.6).model.n_B == 100
    assert isinstance(b.model, BLCP) and isinstance(sc.model, PLCP)


def test_sweep_validation():
    sc = op.default_scenario("blcp")
    with pytest.raises(ValueError):
        op.sweep("n_D", "Omega", [], sc)
    with pytest.raises(ValueError):
        op.sweep("nope", "Omega", [10.0], sc)
    with pytest.raises(ValueError):
        op.SweepResult("Omega", [2.0, 1.0], [0.0, 0.0], 1.0, 0.0)


def test_sweep_threads_agree():
    sc = op.default_scenario("blcp")
    grid = np.linspace(5, 25, 5)
    op.clear_cache()
    a = op.sweep("n_D", "Omega", grid, sc)
    op.clear_cache()
    b = op.sweep("n_D", "Omega", grid, sc, threads=3)
    np.testing.assert_array_equal(a.objective, b.objective)


def test_beamwidth_optimum_is_interior_and_refined():
    res = op.optimal_beamwidth(op.default_scenario("blcp"), points=21)
    assert 1.0 < res.argopt < 30.0
    assert res.refined and not res.multimodal
    assert res.opt_value >= res.objective.max() - 1e-12


def test_transmit_probability_optimum():
    res = op.optimal_transmit_probability(op.default_scenario("blcp"), points=21)
    assert 0.01 < res.argopt < 1.0
    assert res.opt_value <= np.nanmin(res.objective) + 1e-12
    # everyone transmitting makes the delay diverge
    assert math.isinf(res.objective[-1])


def test_delay_diverging_everywhere_raises():
    sc = op.default_scenario("plcp", lam=5.0)
    with pytest.raises(ArithmeticError):
        op.optimal_transmit_probability(sc, p_range=(0.5, 1.0), points=3)


def test_sweep_csv(tmp_path):
    res = op.optimal_beamwidth(op.default_scenario("blcp"), points=11)
    path = tmp_path / "s.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "param,value,objective,is_opt"
    assert len(lines) == 1 + 11 + (1 if res.refined else 0)
    assert sum(line.endswith(",1") for line in lines[1:]) == 1
