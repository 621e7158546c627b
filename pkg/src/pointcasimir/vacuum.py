"""Renormalized vacuum energy by three routes, truncation control and forces.

Routes:

* direct quadrature of the regularized frequency integral (``energy_direct``);
* the Born series for arbitrary strengths (``energy_born``);
* the Born series for identical strengths through the ``Xi_k`` functions and a
  sum over scattering paths (``energy_identical``).

Born terms with ``j >= 2`` are evaluated after rotating ``v = i t``, where
``V = alpha + t / 4 pi`` and ``P_mn = exp(-t d_mn) / (4 pi d_mn)`` are real and
positive, so every such term is negative and all orders come out of one matrix
recursion per node.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    PathBudgetExceeded,
    QuadratureFailure,
    StepWouldViolateAdmissibility,
    TailBoundUnreachable,
    ZeroInteraction,
)
from .model import (
    FOUR_PI,
    ObstacleConfiguration,
    RescaledConfiguration,
    require_admissible,
    validate,
)
from .quadrature import (
    OscillatoryKernel,
    QuadratureResult,
    integrate_decaying_tail,
    integrate_finite,
    integrate_log_trapezoid,
    integrate_oscillatory,
)
from .spectral import default_v0, spectral_density, uv_remainder
from .specfun import xi

J_MAX = 64
PATH_BUDGET = 100_000_000
PATH_CHUNK = 1 << 18
AUTO_PATH_LIMIT = 200_000
FORCE_STEP_FRACTION = 1e-4
LAPLACE_T_LO = 1e-10
LAPLACE_DECAY = 80.0
LAPLACE_TOL = 1e-15


class Route(enum.Enum):
    GENERAL_BORN = "GeneralBorn"
    IDENTICAL_XI = "IdenticalXi"
    DIRECT_QUADRATURE = "DirectQuadrature"


@dataclass(frozen=True)
class BornEnergyBreakdown:
    """Vacuum energy split into its Born orders.

    ``total = e0_ren + e1_ren + sum(higher_terms)``.  For the direct route,
    which has no Born split, ``e1_ren`` carries the whole interaction energy
    and the individual quadrature pieces are listed in ``components``.
    Values are in units of ``energy_scale`` (1 for absolute energies,
    ``4 pi alpha`` for rescaled identical obstacles).
    """

    e0_ren: float
    e1_ren: float
    higher_terms: tuple[float, ...]
    tail_bound: float
    total: float
    J_used: int
    route: Route
    quadrature_error: float = 0.0
    energy_scale: float = 1.0
    components: dict = field(default_factory=dict)

    @property
    def interaction(self) -> float:
        return self.total - self.e0_ren

    @property
    def absolute_total(self) -> float:
        return self.total * self.energy_scale

    def to_dict(self) -> dict:
        return {
            "route": self.route.value,
            "e0_ren": self.e0_ren,
            "e1_ren": self.e1_ren,
            "higher_terms": list(self.higher_terms),
            "tail_bound": self.tail_bound,
            "total": self.total,
            "J_used": self.J_used,
            "quadrature_error": self.quadrature_error,
            "energy_scale": self.energy_scale,
            "components": dict(self.components),
        }


def _check(res: QuadratureResult, component: str) -> QuadratureResult:
    if not res.converged:
        raise QuadratureFailure(component, res)
    return res


def self_energy(config: ObstacleConfiguration) -> float:
    """Position-independent single-obstacle term ``2 sum alpha_n [1 - log(8 pi alpha_n ell)]``."""
    a = config.strengths
    return float(np.sum(2.0 * a * (1.0 - np.log(2.0 * FOUR_PI * a * config.ell))))


def tail_bound(config: ObstacleConfiguration, J: int) -> float:
    """Bound on ``sum_{j>=J} |E_j|`` for ``J >= 2`` in absolute units."""
    return _tail_bound(config.n, config.rho, J,
                       4.0 * config.n * config.strengths.max() ** 2 / config.strengths.min())


def rescaled_tail_bound(rescaled: RescaledConfiguration, J: int) -> float:
    """Bound on ``sum_{j>=J} |E~_j|`` for identical obstacles, in units of ``4 pi alpha``."""
    return _tail_bound(rescaled.n, rescaled.rho, J, rescaled.n / math.pi)


def _tail_bound(n: int, rho: float, J: int, prefactor: float) -> float:
    if J < 2:
        raise DomainError("the tail bound needs J >= 2")
    if n == 1 or rho == 0.0:
        return 0.0
    if rho >= 1.0:
        return math.inf
    return prefactor * rho ** (J - 2) * min(rho / ((J - 1) * (1.0 - rho)), abs(math.log1p(-rho)))


def first_order_energy(config: ObstacleConfiguration, tol: float = 1e-13) -> QuadratureResult:
    """Renormalized single-exchange term.

    Each ordered pair contributes ``-(1/4 pi d^2) Im int_0^inf A(v) exp(2 i v d) dv``
    with ``A = (a_m a_n + v^2) / ((a_m - i v)^2 (a_n - i v)^2)``, evaluated by
    contour rotation.
    """
    a = FOUR_PI * config.strengths
    d = config.distances
    total = QuadratureResult(0.0, 0.0, 0, True)
    for m in range(config.n):
        for n in range(m + 1, config.n):
            am, an = a[m], a[n]

            def amp(v, am=am, an=an):
                return (am * an + v**2) / ((am - 1j * v) ** 2 * (an - 1j * v) ** 2)

            res = integrate_oscillatory(OscillatoryKernel(2 * d[m, n], amp, 2), 0.0, tol)
            _check(res, f"first-order pair ({m}, {n})")
            contrib = QuadratureResult(complex(res.value).imag, res.error_estimate,
                                       res.nodes_used, True)
            total = total + contrib.scaled(-2.0 / (4.0 * math.pi * d[m, n] ** 2))
    return total


def _laplace_terms(distances: np.ndarray, strengths: np.ndarray, J: int,
                   tol: float = LAPLACE_TOL) -> QuadratureResult:
    """``E_2 .. E_J`` from ``-(1/8 pi^2) int_0^inf t sum_mn [(W P)^j W]_mn e^{-t d_mn} dt``.

    ``W = diag(1 / (alpha + t / 4 pi))``.  All orders share the nodes.
    """
    n = distances.shape[0]
    mask = ~np.eye(n, dtype=bool)
    dsafe = np.where(mask, distances, 1.0)
    dmin = float(distances[mask].min())
    a_min = FOUR_PI * float(strengths.min())
    orders = J - 1

    def f(t):
        t = np.asarray(t, dtype=float)
        decay = np.exp(-t[:, None, None] * distances[None])
        p = np.where(mask, decay / (FOUR_PI * dsafe), 0.0)
        w = 1.0 / (strengths[None, :] + t[:, None] / FOUR_PI)
        q = w[:, :, None] * p
        term = q * w[:, None, :]
        out = np.empty((t.size, orders))
        for j in range(1, J + 1):
            if j > 1:
                term = q @ term
            if j >= 2:
                out[:, j - 2] = (term * decay).sum(axis=(1, 2))
        return -t[:, None] * out / (8.0 * math.pi**2)

    t_lo = LAPLACE_T_LO * min(a_min, 1.0 / dmin)
    t_hi = LAPLACE_DECAY / (2.0 * dmin)
    res = integrate_log_trapezoid(f, t_lo, t_hi, tol)
    return _check(res, "higher Born orders")


def born_terms(config: ObstacleConfiguration, J: int) -> QuadratureResult:
    """``E_2 .. E_J`` in absolute units; empty when ``J < 2`` or ``N = 1``."""
    if J < 2 or config.n == 1:
        return QuadratureResult(np.zeros(max(J - 1, 0)), 0.0, 0, True)
    return _laplace_terms(config.distances, config.strengths, J)


def choose_J(config: ObstacleConfiguration, target_tol: float, j_max: int = J_MAX) -> int:
    """Least ``J`` whose remainder bound after order ``J`` is at most ``target_tol / 2``."""
    if config.n == 1:
        return 1
    for J in range(1, j_max + 1):
        if tail_bound(config, J + 1) <= 0.5 * target_tol:
            return J
    raise TailBoundUnreachable(
        f"remainder bound still above {target_tol / 2:.3e} at J={j_max} (rho={config.rho:.6f})"
    )


def energy_born(config: ObstacleConfiguration, target_tol: float = 1e-8,
                J: int | None = None) -> BornEnergyBreakdown:
    """Vacuum energy from the Born series with a certified remainder bound."""
    report = require_admissible(config)
    if not report.rho < 1.0:
        raise TailBoundUnreachable("rho >= 1")
    if J is None:
        J = choose_J(config, target_tol)
    J = max(int(J), 1)
    e0 = self_energy(config)
    if config.n == 1:
        return BornEnergyBreakdown(e0, 0.0, (), 0.0, e0, J, Route.GENERAL_BORN)
    e1 = first_order_energy(config, min(1e-13, target_tol / 4))
    higher = born_terms(config, J)
    terms = tuple(float(x) for x in np.atleast_1d(higher.value))
    total = e0 + float(e1.value) + sum(terms)
    return BornEnergyBreakdown(
        e0_ren=e0,
        e1_ren=float(e1.value),
        higher_terms=terms,
        tail_bound=tail_bound(config, J + 1),
        total=total,
        J_used=J,
        route=Route.GENERAL_BORN,
        quadrature_error=e1.error_estimate + higher.error_estimate,
    )


def energy_direct(config: ObstacleConfiguration, v0: float | None = None,
                  tol: float = 1e-9) -> BornEnergyBreakdown:
    """Vacuum energy from the regularized frequency integral with split point ``v0``.

    Pieces: the ``log(2 ell v0)`` term, the low-frequency integral of ``v e(v)``,
    the pairwise sine terms and the subtracted high-frequency integral.  The last
    two are rotated onto ``v0 + i t``; the high-frequency integrand additionally
    drops a ``-16 pi i sum alpha^2 / v^2`` piece whose real part vanishes on the
    real axis.
    """
    require_admissible(config)
    v0 = default_v0(config) if v0 is None else float(v0)
    budget = tol / 4.0
    alpha = config.strengths
    d = config.distances

    t1 = 2.0 * (1.0 - math.log(2.0 * config.ell * v0)) * float(alpha.sum())

    low = _check(
        integrate_finite(lambda v: v * spectral_density(config, v), 0.0, v0, budget),
        "low-frequency integral",
    )
    t2 = 0.5 * float(low.value)

    t3 = 0.0
    err3 = 0.0
    for m in range(config.n):
        for n in range(m + 1, config.n):
            dm = d[m, n]
            res = integrate_oscillatory(OscillatoryKernel(2 * dm, lambda v: v ** -2.0, 2), v0, budget)
            _check(res, f"sine tail pair ({m}, {n})")
            sine_tail = complex(res.value).imag
            t3 += 2.0 / (4.0 * math.pi * dm**2) * (math.sin(2 * v0 * dm) / v0 - sine_tail)
            err3 += 2.0 / (4.0 * math.pi * dm**2) * res.error_estimate

    mask = config.offdiag
    dsafe = np.where(mask, d, 1.0)

    def high(t):
        w = v0 + 1j * np.asarray(t)
        osc = np.where(mask[None], np.exp(2j * w[:, None, None] * d[None]) / dsafe[None], 0.0)
        k = w * uv_remainder(config, w, 1) + osc.sum(axis=(1, 2)) / (math.pi * w)
        return 0.5 * (1j * k).real

    hi = _check(integrate_decaying_tail(high, 0.0, 3, budget, scale=v0), "high-frequency integral")
    t4 = float(hi.value)

    e0 = self_energy(config)
    total = t1 + t2 + t3 + t4
    err = 0.5 * low.error_estimate + err3 + hi.error_estimate
    return BornEnergyBreakdown(
        e0_ren=e0,
        e1_ren=total - e0,
        higher_terms=(),
        tail_bound=0.0,
        total=total,
        J_used=0,
        route=Route.DIRECT_QUADRATURE,
        quadrature_error=err,
        components={"log_term": t1, "low_frequency": t2, "sine_terms": t3, "high_frequency": t4},
    )


def _rescaled_e1(rescaled: RescaledConfiguration) -> float:
    d = rescaled.distances
    iu = np.triu_indices(rescaled.n, 1)
    r = 2.0 * d[iu]
    if r.size == 0:
        return 0.0
    return float(2.0 / math.pi * np.sum((xi(2, r) - 2.0 * xi(3, r)) / r**2))


def path_count(n: int, J: int) -> int:
    """Ordered index paths with ``2 .. J`` hops and no repeated neighbours."""
    return sum(n * (n - 1) ** j for j in range(2, J + 1))


def _path_sums(d: np.ndarray, J: int) -> np.ndarray:
    """``E~_2 .. E~_J`` by explicit enumeration of scattering paths.

    Each path ``m -> p_1 -> ... -> n`` with ``j`` hops contributes
    ``[Xi_{j+1}(L) - Xi_j(L)] / (2 pi prod hops)``, ``L`` being the hop lengths
    plus the closing distance ``d_nm``.  Frontiers are expanded breadth first and
    split into chunks to bound memory.
    """
    n = d.shape[0]
    sums = np.zeros(max(J - 1, 0))
    stack = []
    for m in range(n - 1, -1, -1):
        stack.append((1, np.array([m]), np.array([m]), np.ones(1), np.zeros(1)))
    neighbours = [np.array([k for k in range(n) if k != i]) for i in range(n)]
    nbr = np.array(neighbours)
    while stack:
        hops, start, cur, inv_prod, length = stack.pop()
        nxt = nbr[cur]
        start = np.repeat(start, n - 1)
        prev = np.repeat(cur, n - 1)
        cur_new = nxt.ravel()
        hop = d[prev, cur_new]
        inv_prod = np.repeat(inv_prod, n - 1) / hop
        length = np.repeat(length, n - 1) + hop
        if hops >= 2:
            r = length + d[cur_new, start]
            contrib = inv_prod * (xi(hops + 1, r) - xi(hops, r))
            sums[hops - 2] += contrib.sum() / (2.0 * math.pi)
        if hops < J:
            size = cur_new.size
            pieces = range(0, size, PATH_CHUNK)
            for lo in reversed(pieces):
                sl = slice(lo, lo + PATH_CHUNK)
                stack.append((hops + 1, start[sl], cur_new[sl], inv_prod[sl], length[sl]))
    return sums


def energy_identical(rescaled: RescaledConfiguration, J: int,
                     ell: float = 1.0) -> BornEnergyBreakdown:
    """Rescaled vacuum energy of identical obstacles, in units of ``4 pi alpha``."""
    cfg = rescaled.to_configuration(ell)
    require_admissible(cfg)
    n = rescaled.n
    e0 = n * (1.0 - math.log(2.0 * FOUR_PI * rescaled.alpha * ell)) / (2.0 * math.pi)
    if n == 1:
        return BornEnergyBreakdown(e0, 0.0, (), 0.0, e0, J, Route.IDENTICAL_XI,
                                   energy_scale=rescaled.energy_scale)
    count = path_count(n, J)
    if count > PATH_BUDGET:
        raise PathBudgetExceeded(
            f"{count} paths for N={n}, J={J} exceed the budget of {PATH_BUDGET}"
        )
    e1 = _rescaled_e1(rescaled)
    terms = tuple(float(x) for x in _path_sums(rescaled.distances, J))
    bound = rescaled_tail_bound(rescaled, J + 1)
    return BornEnergyBreakdown(
        e0_ren=e0,
        e1_ren=e1,
        higher_terms=terms,
        tail_bound=bound,
        total=e0 + e1 + sum(terms),
        J_used=J,
        route=Route.IDENTICAL_XI,
        energy_scale=rescaled.energy_scale,
    )


def _unit_config(rescaled: RescaledConfiguration) -> ObstacleConfiguration:
    """Obstacles with ``4 pi alpha = 1``, so absolute energies are rescaled energies."""
    return ObstacleConfiguration.from_rescaled(rescaled.y_positions, 1.0 / FOUR_PI)


def rescaled_terms(rescaled: RescaledConfiguration, J: int,
                   method: str = "auto") -> tuple[float, np.ndarray]:
    """``(E~_1, [E~_2 .. E~_J])`` for identical obstacles."""
    if rescaled.n == 1:
        return 0.0, np.zeros(max(J - 1, 0))
    e1 = _rescaled_e1(rescaled)
    if method == "auto":
        method = "paths" if path_count(rescaled.n, J) <= AUTO_PATH_LIMIT else "laplace"
    if method == "paths":
        if path_count(rescaled.n, J) > PATH_BUDGET:
            raise PathBudgetExceeded(f"too many paths for N={rescaled.n}, J={J}")
        return e1, _path_sums(rescaled.distances, J)
    if method == "laplace":
        return e1, np.atleast_1d(born_terms(_unit_config(rescaled), J).value)
    raise DomainError(f"unknown method {method!r}")


def interaction_energy(system, J: int, method: str = "auto") -> float:
    """Interaction energy ``E_1 + sum_{j=2}^J E_j``.

    A :class:`RescaledConfiguration` gives the result in units of ``4 pi alpha``;
    an :class:`ObstacleConfiguration` gives absolute units.
    """
    if isinstance(system, RescaledConfiguration):
        if not system.admissible:
            raise TailBoundUnreachable(f"rho = {system.rho:.12g} is not below 1")
        e1, terms = rescaled_terms(system, J, method)
        return float(e1 + terms.sum())
    config = system
    require_admissible(config)
    if config.n == 1:
        return 0.0
    e1 = first_order_energy(config)
    return float(e1.value) + float(np.sum(born_terms(config, J).value))


def relative_error_estimate(rescaled: RescaledConfiguration, J: int,
                            mode: str = "summed", j_extra_max: int = 2000,
                            remainder_fraction: float = 1e-3) -> float:
    """Relative size of the neglected orders ``sum_{j>J} |E~_j| / |E~_int,J|``.

    ``mode="bound"`` uses the closed remainder bound at ``J + 1``.
    ``mode="summed"`` adds the computed orders ``J+1 .. J'`` and the closed
    bound beyond ``J'``, where ``J'`` is the first order whose remaining bound
    drops below ``remainder_fraction`` of the summed part.  Both are upper
    bounds on the true ratio up to quadrature error.
    """
    if rescaled.n == 1:
        raise ZeroInteraction("a single obstacle has no interaction energy")
    interaction = interaction_energy(rescaled, J)
    if abs(interaction) < 1e-300:
        raise ZeroInteraction("interaction energy vanishes")
    if mode == "bound":
        return rescaled_tail_bound(rescaled, J + 1) / abs(interaction)
    if mode != "summed":
        raise DomainError(f"unknown mode {mode!r}")
    unit = _unit_config(rescaled)
    j_hi = J + 8
    while True:
        extra = np.atleast_1d(born_terms(unit, j_hi).value)[J - 1:]
        summed = float(np.abs(extra).sum())
        remainder = rescaled_tail_bound(rescaled, j_hi + 1)
        if remainder <= remainder_fraction * summed or j_hi >= j_extra_max:
            return (summed + remainder) / abs(interaction)
        j_hi = min(2 * j_hi, j_extra_max)


@dataclass(frozen=True)
class ForceResult:
    """Forces ``F_n = -grad_n E_int`` and the pairwise intensities ``F_mn = dE_int / d|x_m - x_n|``."""

    per_obstacle: np.ndarray
    pairwise_intensities: np.ndarray
    gradient_step_report: dict

    @property
    def net_force(self) -> np.ndarray:
        return self.per_obstacle.sum(axis=0)

    @property
    def max_magnitude(self) -> float:
        return float(np.linalg.norm(self.per_obstacle, axis=1).max())


def forces(config: ObstacleConfiguration, J: int | None = None, tol: float = 1e-8,
           include_self_energy: bool = False, step_fraction: float = FORCE_STEP_FRACTION,
           executor=None) -> ForceResult:
    """Forces by central differences with one Richardson step.

    The step is ``step_fraction`` times the smallest pair distance, and halved
    once for the extrapolation.  With ``include_self_energy`` the constant
    single-obstacle term is differentiated too, which exercises the
    cancellation of the renormalization length.
    """
    require_admissible(config)
    n = config.n
    if n == 1:
        zero = np.zeros((1, 3))
        return ForceResult(zero, np.zeros((1, 1)), {"step": 0.0})
    if J is None:
        J = choose_J(config, tol)
    h = step_fraction * float(config.distances[config.offdiag].min())
    base = config.positions

    def shifted(i, k, step):
        pos = base.copy()
        pos[i, k] += step
        cfg = config.with_positions(pos)
        report = validate(cfg)
        if not report.admissible:
            raise StepWouldViolateAdmissibility(
                f"step {step:.3e} on obstacle {i} axis {k}: {'; '.join(report.violations)}"
            )
        return cfg

    offset = self_energy(config) if include_self_energy else 0.0

    def energy(cfg):
        return offset + interaction_energy(cfg, J)

    tasks = [shifted(i, k, s * step)
             for step in (h, 0.5 * h) for i in range(n) for k in range(3) for s in (1, -1)]
    values = list(executor.map(energy, tasks)) if executor is not None else [energy(c) for c in tasks]
    vals = np.array(values).reshape(2, n, 3, 2)
    d_coarse = (vals[0, :, :, 0] - vals[0, :, :, 1]) / (2 * h)
    d_fine = (vals[1, :, :, 0] - vals[1, :, :, 1]) / h
    grad = (4.0 * d_fine - d_coarse) / 3.0
    force = -grad

    unit = []
    pairs = [(m, k) for m in range(n) for k in range(m + 1, n)]
    design = np.zeros((3 * n, len(pairs)))
    for col, (m, k) in enumerate(pairs):
        u = (base[k] - base[m]) / config.distances[m, k]
        design[3 * m:3 * m + 3, col] = u
        design[3 * k:3 * k + 3, col] = -u
        unit.append(u)
    coef, _, rank, _ = np.linalg.lstsq(design, force.ravel(), rcond=None)
    pairwise = np.zeros((n, n))
    for col, (m, k) in enumerate(pairs):
        pairwise[m, k] = pairwise[k, m] = coef[col]

    report = {
        "step": h,
        "J": J,
        "richardson_change": float(np.abs(d_fine - d_coarse).max()),
        "pairwise_rank": int(rank),
        "pairwise_residual": float(np.abs(design @ coef - force.ravel()).max()),
    }
    return ForceResult(force, pairwise, report)
