import math

import numpy as np
import pytest

from pointcasimir.errors import (
    ConfigurationError,
    InadmissibleConfiguration,
    NonIdenticalStrengths,
)
from pointcasimir.model import (
    FOUR_PI,
    ObstacleConfiguration,
    RescaledConfiguration,
    four_obstacle_geometry,
    require_admissible,
    rescale,
    three_obstacle_geometry,
    validate,
)


def test_single_obstacle_rho_zero():
    cfg = ObstacleConfiguration([[0, 0, 0]], [1.0])
    assert cfg.rho == 0.0
    assert validate(cfg).admissible


def test_pair_rho_at_distance_two():
    cfg = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, 2.0]])
    assert cfg.rho == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    assert cfg.report.admissible
    assert not cfg.report.slow_convergence


def test_pair_at_cutoff_is_inadmissible():
    cfg = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, math.sqrt(2)]])
    rep = validate(cfg)
    assert rep.rho == pytest.approx(1.0, rel=1e-14)
    assert not rep.admissible
    with pytest.raises(InadmissibleConfiguration):
        require_admissible(cfg)


def test_slow_convergence_flag():
    d = math.sqrt(2) / 0.97
    rep = ObstacleConfiguration.from_rescaled([[0, 0, 0], [d, 0, 0]]).report
    assert rep.admissible and rep.slow_convergence


def test_nonpositive_strength_and_coincident_points_rejected():
    rep = validate(ObstacleConfiguration([[0, 0, 0], [5, 0, 0]], [1.0, -1.0]))
    assert not rep.admissible
    rep = validate(ObstacleConfiguration([[0, 0, 0], [0, 0, 0]], [1.0, 1.0]))
    assert not rep.admissible
    assert rep.violations


@pytest.mark.parametrize("bad", [
    dict(positions=[[0, 0]], strengths=[1.0]),
    dict(positions=[[0, 0, 0]], strengths=[1.0, 2.0]),
    dict(positions=[[0, 0, np.nan]], strengths=[1.0]),
    dict(positions=[[0, 0, 0]], strengths=[1.0], ell=0.0),
])
def test_malformed_input(bad):
    with pytest.raises(ConfigurationError):
        ObstacleConfiguration(**bad)


def test_rescale_examples():
    r = rescale(ObstacleConfiguration([[0, 0, 0], [1, 0, 0]], [1 / FOUR_PI] * 2))
    np.testing.assert_allclose(r.y_positions[1] - r.y_positions[0], [1, 0, 0])
    r = rescale(ObstacleConfiguration([[0, 0, 0.5]], [1.0]))
    np.testing.assert_allclose(r.y_positions[0], [0, 0, 2 * math.pi])
    with pytest.raises(NonIdenticalStrengths):
        rescale(ObstacleConfiguration([[0, 0, 0], [3, 0, 0]], [1.0, 2.0]))


def test_rescaled_round_trip():
    y = np.array([[0.0, 0, 0], [0, 0, 3.0], [1, 2, 0]])
    r = RescaledConfiguration(y, 0.3)
    cfg = r.to_configuration(2.0)
    assert cfg.rho == pytest.approx(r.rho, rel=1e-14)
    np.testing.assert_allclose(rescale(cfg).y_positions, y, atol=1e-14)


def test_rho_invariant_under_joint_scaling():
    pos = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1.5, 0]])
    alpha = np.array([0.1, 0.2, 0.15])
    base = ObstacleConfiguration(pos, alpha).rho
    for lam in (0.1, 3.0, 70.0):
        assert ObstacleConfiguration(lam * pos, alpha / lam).rho == pytest.approx(base, rel=1e-13)


def test_geometries():
    g3 = three_obstacle_geometry(5.0, 1.0, 2.0)
    np.testing.assert_allclose(g3, [[0, 0, -2.5], [0, 0, 2.5], [1, 0, 2]])
    g4 = four_obstacle_geometry(5.0, 0.0, 0.0)
    np.testing.assert_allclose(np.linalg.norm(g4[:3], axis=1), 5.0)
    np.testing.assert_allclose(g4[:3].mean(axis=0), 0.0, atol=1e-14)
