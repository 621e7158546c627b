"""Invariance of energies and forces under symmetries of the setup."""
import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from pointcasimir.model import ObstacleConfiguration
from pointcasimir.spectral import spectral_density
from pointcasimir.vacuum import energy_born, forces

jitter = st.floats(-0.5, 0.5, allow_nan=False)
strengths = st.floats(0.1, 0.3)
LATTICE = np.array([[0.0, 0, 0], [4.0, 0, 0], [0, 4.0, 0]])


def rotation(angles):
    a, b, c = angles
    rz = np.array([[np.cos(a), -np.sin(a), 0], [np.sin(a), np.cos(a), 0], [0, 0, 1]])
    ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    rx = np.array([[1, 0, 0], [0, np.cos(c), -np.sin(c)], [0, np.sin(c), np.cos(c)]])
    return rz @ ry @ rx


@st.composite
def configurations(draw):
    pos = LATTICE + np.array([[draw(jitter) for _ in range(3)] for _ in range(3)])
    alpha = np.array([draw(strengths) for _ in range(3)])
    cfg = ObstacleConfiguration(pos, alpha)
    assume(cfg.rho < 0.9)
    return cfg


angles = st.tuples(*[st.floats(0, 2 * np.pi)] * 3)
shifts = st.tuples(*[st.floats(-10, 10)] * 3)


@settings(max_examples=15, deadline=None)
@given(configurations(), angles, shifts)
def test_rigid_motion_invariance(cfg, ang, shift):
    rot = rotation(ang)
    moved = cfg.with_positions(cfg.positions @ rot.T + np.array(shift))
    assert moved.rho == pytest.approx(cfg.rho, rel=1e-10)
    e = energy_born(cfg, J=8).total
    assert energy_born(moved, J=8).total == pytest.approx(e, rel=1e-10, abs=1e-13)
    v = np.array([0.3, 2.0, 9.0])
    np.testing.assert_allclose(spectral_density(moved, v), spectral_density(cfg, v), rtol=1e-9)


@settings(max_examples=15, deadline=None)
@given(configurations(), st.permutations(range(3)))
def test_relabeling_invariance(cfg, perm):
    perm = list(perm)
    relabeled = ObstacleConfiguration(cfg.positions[perm], cfg.strengths[perm], cfg.ell)
    assert energy_born(relabeled, J=8).total == pytest.approx(energy_born(cfg, J=8).total, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(configurations(), st.floats(0.2, 5.0))
def test_joint_scaling(cfg, lam):
    """x -> lam x, alpha -> alpha / lam, ell -> lam ell scales the energy by 1/lam."""
    scaled = ObstacleConfiguration(cfg.positions * lam, cfg.strengths / lam, cfg.ell * lam)
    e = energy_born(cfg, J=8).total
    assert energy_born(scaled, J=8).total == pytest.approx(e / lam, rel=1e-10, abs=1e-13)


@settings(max_examples=5, deadline=None)
@given(configurations(), angles)
def test_forces_rotate_with_configuration(cfg, ang):
    rot = rotation(ang)
    f = forces(cfg, J=6).per_obstacle
    g = forces(cfg.with_positions(cfg.positions @ rot.T), J=6).per_obstacle
    np.testing.assert_allclose(g, f @ rot.T, atol=1e-7 * max(1.0, np.abs(f).max()))
