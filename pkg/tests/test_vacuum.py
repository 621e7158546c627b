import math

import numpy as np
import pytest

from pointcasimir.errors import (
    InadmissibleConfiguration,
    NonIdenticalStrengths,
    PathBudgetExceeded,
    StepWouldViolateAdmissibility,
    TailBoundUnreachable,
    ZeroInteraction,
)
from pointcasimir.model import FOUR_PI, ObstacleConfiguration, RescaledConfiguration, rescale
from pointcasimir.spectral import zeta_laurent
from pointcasimir.specfun import xi
from pointcasimir.vacuum import (
    Route,
    born_terms,
    choose_J,
    energy_born,
    energy_direct,
    energy_identical,
    first_order_energy,
    forces,
    interaction_energy,
    path_count,
    relative_error_estimate,
    rescaled_terms,
    self_energy,
    tail_bound,
)
from conftest import random_admissible, single_closed_form


@pytest.mark.parametrize("alpha,ell", [(1.0, 1.0), (0.5, 2.0), (2.0, 0.1)])
def test_single_obstacle_all_routes(alpha, ell):
    cfg = ObstacleConfiguration([[0, 0, 0]], [alpha], ell)
    exact = single_closed_form(alpha, ell)
    assert energy_born(cfg).total == pytest.approx(exact, rel=1e-12)
    assert energy_direct(cfg).total == pytest.approx(exact, rel=1e-9)
    ident = energy_identical(rescale(cfg), 1, ell)
    assert ident.absolute_total == pytest.approx(exact, rel=1e-12)
    assert zeta_laurent(cfg).energy(ell) == pytest.approx(exact, rel=1e-9)


def test_first_order_pair_against_xi():
    """E1 for identical obstacles reduces to exponential integrals."""
    d = 3.0
    cfg = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, d]])
    e1 = first_order_energy(cfg).value
    r = 2 * d
    expected = 2 * (xi(2, r) - 2 * xi(3, r)) / (math.pi * r**2)
    assert e1 == pytest.approx(expected * FOUR_PI * cfg.strengths[0], rel=1e-11)


def test_routes_agree(rng):
    for _ in range(3):
        cfg = random_admissible(rng, 3)
        born = energy_born(cfg, 1e-10)
        direct = energy_direct(cfg, tol=1e-10)
        lau = zeta_laurent(cfg).energy(cfg.ell)
        slack = born.tail_bound + 10 * (born.quadrature_error + direct.quadrature_error)
        assert abs(born.total - direct.total) <= slack
        assert lau == pytest.approx(born.total, abs=1e-8)


def test_identical_routes_agree():
    y = np.array([[0.0, 0, 0], [0, 0, 3.0], [2.5, 0, 1.0]])
    resc = RescaledConfiguration(y, 0.2)
    cfg = resc.to_configuration(1.5)
    born = energy_born(cfg, J=8)
    ident = energy_identical(resc, 8, 1.5)
    assert ident.route is Route.IDENTICAL_XI
    assert ident.absolute_total == pytest.approx(born.total, rel=1e-12)
    np.testing.assert_allclose(np.array(ident.higher_terms) * ident.energy_scale,
                               born.higher_terms, rtol=1e-9, atol=1e-16)


def test_paths_and_laplace_agree():
    resc = RescaledConfiguration(np.array([[0.0, 0, 0], [0, 0, 2.0], [2, 0, 1.0], [1, 1.5, 0]]), 0.1)
    e1a, a = rescaled_terms(resc, 6, method="paths")
    e1b, b = rescaled_terms(resc, 6, method="laplace")
    assert e1a == e1b
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-16)


def test_path_budget():
    assert path_count(3, 4) == 3 * (2**2 + 2**3 + 2**4)
    resc = RescaledConfiguration(np.array([[0.0, 0, 0], [0, 0, 3.0], [3, 0, 0]]), 0.1)
    with pytest.raises(PathBudgetExceeded):
        energy_identical(resc, 40)


def test_tail_bound_and_choose_J(pair):
    b = [tail_bound(pair, j) for j in range(2, 12)]
    assert np.all(np.diff(b) < 0)
    J = choose_J(pair, 1e-8)
    assert tail_bound(pair, J + 1) <= 0.5e-8
    assert J == 1 or tail_bound(pair, J) > 0.5e-8
    near = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, math.sqrt(2) * 1.0000001]])
    with pytest.raises(TailBoundUnreachable):
        choose_J(near, 1e-14, j_max=20)


def test_born_terms_bounded_by_tail(pair):
    terms = np.abs(born_terms(pair, 20).value)
    for j, t in enumerate(terms, start=2):
        assert t <= tail_bound(pair, j) + 1e-300


def test_direct_is_v0_invariant(triple):
    e1 = energy_direct(triple, tol=1e-10)
    v0 = 4 * math.pi * triple.strengths.max()
    e2 = energy_direct(triple, v0=2 * v0, tol=1e-10)
    assert abs(e1.total - e2.total) <= 1e-9


def test_interaction_vanishes_with_distance():
    far = [interaction_energy(RescaledConfiguration(np.array([[0.0, 0, 0], [0, 0, d]]), 1 / FOUR_PI), 10)
           for d in (2.0, 4.0, 8.0, 16.0)]
    assert all(e < 0 for e in far)
    assert np.all(np.diff(far) > 0)
    assert abs(far[-1]) < 1e-3 * 0.5


def test_self_energy_and_inadmissible():
    cfg = ObstacleConfiguration([[0, 0, 0], [0, 0, 5]], [0.2, 0.3], 2.0)
    assert self_energy(cfg) == pytest.approx(single_closed_form(0.2, 2.0) + single_closed_form(0.3, 2.0))
    bad = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, 1.0]])
    with pytest.raises(InadmissibleConfiguration):
        energy_born(bad)
    with pytest.raises(NonIdenticalStrengths):
        rescale(cfg)


def test_relative_error_modes():
    resc = RescaledConfiguration(np.array([[0.0, 0, 0], [0, 0, 2.0]]), 1 / FOUR_PI)
    summed = relative_error_estimate(resc, 10, "summed")
    bound = relative_error_estimate(resc, 10, "bound")
    assert 0 < summed <= bound
    with pytest.raises(ZeroInteraction):
        relative_error_estimate(RescaledConfiguration(np.zeros((1, 3)), 1 / FOUR_PI), 10)


def test_pair_forces_attractive_and_balanced(pair):
    res = forces(pair)
    f = res.per_obstacle
    assert f[0, 2] > 0 > f[1, 2]
    np.testing.assert_allclose(res.net_force, 0.0, atol=1e-14)
    # dE/d|x1 - x2| > 0: attraction
    assert res.pairwise_intensities[0, 1] > 0


def test_forces_match_energy_derivative(pair):
    """Force on obstacle 2 along the axis is minus the slope of the pair energy."""
    d = float(pair.distances[0, 1])
    h = 1e-4 * d

    def energy(dist):
        cfg = pair.with_positions([[0, 0, 0], [0, 0, dist]])
        return energy_born(cfg, J=30).interaction

    slope = (energy(d + h) - energy(d - h)) / (2 * h)
    assert forces(pair, J=30).per_obstacle[1, 2] == pytest.approx(-slope, rel=1e-6)


def test_force_step_would_violate():
    cfg = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, math.sqrt(2) * (1 + 1e-9)]])
    with pytest.raises((StepWouldViolateAdmissibility, TailBoundUnreachable)):
        forces(cfg, J=10)


def test_to_dict_round_trip(pair):
    d = energy_born(pair).to_dict()
    assert d["route"] == Route.GENERAL_BORN.value
    assert d["total"] == pytest.approx(energy_born(pair).total)
