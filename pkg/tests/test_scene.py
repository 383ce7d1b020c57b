import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfmimo.scene import (Jammer, PolarNode, Scenario, Target, eta, eta_all, place_nodes_uniform_disk)


def test_polar_node_wraps_azimuth_and_rejects_negative_radius():
    assert PolarNode(1.0, 3 * math.pi).azimuth == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        PolarNode(-1.0, 0.0)


def test_eta_examples():
    # on-axis node projects its full radius, a broadside node projects nothing
    assert eta(PolarNode(2.0, 0.0), 0.0) == pytest.approx(2.0)
    assert eta(PolarNode(2.0, math.pi / 2), 0.0) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0, 50), st.floats(0, 2 * math.pi), st.floats(-math.pi, math.pi))
def test_eta_is_bounded_by_radius(r, az, theta):
    assert abs(eta(PolarNode(r, az), theta)) <= r + 1e-12


def test_eta_all_matches_scalar():
    nodes = [PolarNode(1.0, 0.3), PolarNode(2.5, 4.0)]
    thetas = np.array([[0.0, 0.1], [-0.2, 1.0]])
    out = eta_all(nodes, thetas)
    assert out.shape == (2, 2, 2)
    for i, n in enumerate(nodes):
        np.testing.assert_allclose(out[i], [[eta(n, t) for t in row] for row in thetas])


def test_uniform_disk_is_uniform_by_area():
    nodes = place_nodes_uniform_disk(20000, 10.0, np.random.default_rng(0))
    r = np.array([n.radius for n in nodes])
    assert r.max() <= 10.0
    # fraction inside half the radius is a quarter of the area
    assert np.mean(r < 5.0) == pytest.approx(0.25, abs=0.015)


def test_target_doppler_and_validation():
    t = Target(0.0, 75.0, 1250.0)
    assert t.doppler(5e9) == pytest.approx(2 * 75 * 5e9 / 3e8)
    with pytest.raises(ValueError):
        Target(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        Jammer(1000.0, 0.1, -1.0)


def test_scenario_enforces_far_field():
    nodes = [PolarNode(10.0, 0.0)]
    Scenario(nodes, nodes, [Target(0.0, 0.0, 1000.0)])
    with pytest.raises(ValueError, match="far field"):
        Scenario(nodes, nodes, [Target(0.0, 0.0, 999.0)])
    with pytest.raises(ValueError):
        Scenario([], nodes)
