"""Obstacle configurations, admissibility and the identical-obstacle rescaling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, InadmissibleConfiguration, NonIdenticalStrengths

FOUR_PI = 4.0 * math.pi

# rho within this distance of 1 counts as saturating the admissibility bound
RHO_MARGIN = 1e-12
SLOW_CONVERGENCE_RHO = 0.95
COINCIDENT_RTOL = 1e-12
IDENTICAL_RTOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def pair_distances(points) -> np.ndarray:
    """Matrix of Euclidean distances between the rows of ``points``."""
    p = np.asarray(points, dtype=float)
    return np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(axis=-1))


@dataclass(frozen=True, eq=False)
class ObstacleConfiguration:
    """N point obstacles with positions ``x_n`` and strengths ``alpha_n``.

    Positions are in length units, strengths in inverse length units and
    ``ell`` is the renormalization length.  Construction never rejects a
    physically inadmissible configuration; use :func:`validate` for that.
    """

    positions: np.ndarray
    strengths: np.ndarray
    ell: float = 1.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.strengths, dtype=float))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise DomainError(f"positions must have shape (N, 3), got {pos.shape}")
        if alpha.shape != (pos.shape[0],):
            raise DomainError("need exactly one strength per position")
        if pos.shape[0] < 1:
            raise DomainError("at least one obstacle is required")
        if not (np.isfinite(pos).all() and np.isfinite(alpha).all()):
            raise DomainError("positions and strengths must be finite")
        if not (math.isfinite(self.ell) and self.ell > 0):
            raise DomainError("ell must be a positive finite length")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "strengths", _frozen(alpha))
        object.__setattr__(self, "ell", float(self.ell))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @cached_property
    def distances(self) -> np.ndarray:
        return _frozen(pair_distances(self.positions))

    @cached_property
    def offdiag(self) -> np.ndarray:
        return _frozen(~np.eye(self.n, dtype=bool), bool)

    @cached_property
    def rho(self) -> float:
        return rho(self)

    @cached_property
    def report(self) -> "AdmissibilityReport":
        return validate(self)

    @property
    def scale(self) -> float:
        """Natural frequency scale ``4 pi max(alpha)``."""
        return FOUR_PI * float(self.strengths.max())

    def with_positions(self, positions) -> "ObstacleConfiguration":
        return ObstacleConfiguration(positions, self.strengths, self.ell)

    def with_ell(self, ell: float) -> "ObstacleConfiguration":
        return ObstacleConfiguration(self.positions, self.strengths, ell)

    def to_dict(self) -> dict:
        return {
            "positions": self.positions.tolist(),
            "strengths": self.strengths.tolist(),
            "ell": self.ell,
        }

    @classmethod
    def identical(cls, positions, alpha: float, ell: float = 1.0):
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        return cls(positions, np.full(positions.shape[0], float(alpha)), ell)

    @classmethod
    def from_rescaled(cls, y_positions, alpha: float = 1.0 / FOUR_PI, ell: float = 1.0):
        """Inverse of :func:`rescale`: ``x_n = y_n / (4 pi alpha)``."""
        y = np.atleast_2d(np.asarray(y_positions, dtype=float))
        return cls.identical(y / (FOUR_PI * alpha), alpha, ell)


@dataclass(frozen=True)
class AdmissibilityReport:
    rho: float
    admissible: bool
    min_pair_distance: float
    violations: tuple[str, ...] = ()
    slow_convergence: bool = False

    def raise_if_inadmissible(self):
        if not self.admissible:
            raise InadmissibleConfiguration("; ".join(self.violations))


@dataclass(frozen=True, eq=False)
class RescaledConfiguration:
    """Identical obstacles in the dimensionless coordinates ``y_n = 4 pi alpha x_n``.

    Energies computed from this object are in units of ``energy_scale = 4 pi alpha``.
    """

    y_positions: np.ndarray
    alpha: float
    energy_scale: float = field(init=False)

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.y_positions, dtype=float))
        if y.ndim != 2 or y.shape[1] != 3:
            raise DomainError(f"y_positions must have shape (N, 3), got {y.shape}")
        object.__setattr__(self, "y_positions", _frozen(y))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "energy_scale", FOUR_PI * self.alpha)

    @property
    def n(self) -> int:
        return self.y_positions.shape[0]

    @cached_property
    def distances(self) -> np.ndarray:
        return _frozen(pair_distances(self.y_positions))

    @cached_property
    def rho(self) -> float:
        d = self.distances[~np.eye(self.n, dtype=bool)]
        if d.size == 0:
            return 0.0
        if np.any(d == 0):
            return math.inf
        return math.sqrt(float(np.sum(1.0 / d**2)))

    @property
    def admissible(self) -> bool:
        return self.rho < 1.0 - RHO_MARGIN

    def to_configuration(self, ell: float = 1.0) -> ObstacleConfiguration:
        return ObstacleConfiguration.from_rescaled(self.y_positions, self.alpha, ell)


def rho(config: ObstacleConfiguration) -> float:
    """Dimensionless separation/weakness parameter governing every Born series.

    ``rho**2 = sum_{m != n} (4 pi alpha_m)^-2 |x_m - x_n|^-2``; ``inf`` when two
    points coincide or a strength vanishes.
    """
    if config.n == 1:
        return 0.0
    d = config.distances
    mask = config.offdiag
    a = FOUR_PI * config.strengths
    if np.any(d[mask] == 0) or np.any(a == 0):
        return math.inf
    terms = 1.0 / (a[:, None] ** 2 * np.where(mask, d, 1.0) ** 2)
    return math.sqrt(float(np.sum(terms[mask])))


def validate(config: ObstacleConfiguration) -> AdmissibilityReport:
    violations = []
    alpha = config.strengths
    if np.any(alpha <= 0):
        bad = [int(i) for i in np.flatnonzero(alpha <= 0)]
        violations.append(f"non-positive strength at obstacle(s) {bad}")

    if config.n > 1:
        d = config.distances[config.offdiag]
        dmin = float(d.min())
        tol = COINCIDENT_RTOL * (1.0 + float(np.abs(config.positions).max()))
        if dmin < tol:
            violations.append(f"coincident positions (min distance {dmin:.3e})")
    else:
        dmin = math.inf

    if np.all(alpha > 0) and not violations:
        r = rho(config)
    else:
        r = math.inf if violations else rho(config)

    if r >= 1.0 - RHO_MARGIN and math.isfinite(r):
        violations.append(f"rho = {r:.12g} is not below 1")
    elif not math.isfinite(r) and not violations:
        violations.append("rho is infinite")

    admissible = not violations
    return AdmissibilityReport(
        rho=r,
        admissible=admissible,
        min_pair_distance=dmin,
        violations=tuple(violations),
        slow_convergence=admissible and r >= SLOW_CONVERGENCE_RHO,
    )


def require_admissible(config: ObstacleConfiguration) -> AdmissibilityReport:
    report = validate(config)
    report.raise_if_inadmissible()
    return report


def rescale(config: ObstacleConfiguration) -> RescaledConfiguration:
    alpha = config.strengths
    a0 = float(alpha[0])
    if np.any(np.abs(alpha - a0) > IDENTICAL_RTOL * abs(a0)):
        raise NonIdenticalStrengths(f"strengths differ: {alpha.tolist()}")
    return RescaledConfiguration(FOUR_PI * a0 * config.positions, a0)


def three_obstacle_geometry(a: float, r: float, z: float) -> np.ndarray:
    """Two fixed points at ``(0, 0, -+a/2)`` plus a third at cylindrical ``(r, z)``."""
    return np.array([[0.0, 0.0, -a / 2], [0.0, 0.0, a / 2], [r, 0.0, z]])


def four_obstacle_geometry(b: float, x: float, y: float) -> np.ndarray:
    """Equilateral triangle of side ``b`` centred at the origin plus a fourth point."""
    s = math.sqrt(3.0) / 2.0
    return np.array(
        [[s * b, -b / 2, 0.0], [-s * b, -b / 2, 0.0], [0.0, b, 0.0], [x, y, 0.0]]
    )
