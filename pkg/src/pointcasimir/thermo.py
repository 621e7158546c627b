"""Relative Dedekind eta function, renormalized free energy, internal energy and entropy.

Every thermal integral has the form ``int_0^inf weight(v) e(v) dv``.  The
density is split into its single-obstacle part, a sum of Lorentzians handled on
the real axis by the log-variable trapezoid rule, and its oscillating coupled
part.  At low temperature the coupled part stays on the real axis, where the
weight cuts it off within a few periods.  Otherwise it is integrated on the real
axis up to ``v_s = min(1/beta, v0)`` and along the ray ``v_s + i t`` beyond,
where it decays exponentially.  Both weights used here are analytic and
bounded for ``Re v >= v_s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, QuadratureFailure, TailBoundUnreachable
from .model import FOUR_PI, ObstacleConfiguration, require_admissible
from .quadrature import (
    QuadratureResult,
    integrate_decaying_tail,
    integrate_finite,
    integrate_log_trapezoid,
)
from .spectral import (
    coupled_density,
    default_v0,
    f_coefficients,
    spectral_density,
    uv_remainder,
)
from .specfun import bernoulli_even
from .vacuum import energy_born, energy_direct

LOW_T_ORDER = 1


def _check(res: QuadratureResult, component: str) -> QuadratureResult:
    if not res.converged:
        raise QuadratureFailure(component, res)
    return res


def _log_weight(beta):
    return lambda v: np.log(-np.expm1(-beta * v))


def _bose_weight(beta):
    return lambda v: v / np.expm1(beta * v)


def _thermal_integral(config: ObstacleConfiguration, weight, beta: float,
                      tol: float, rtol: float, name: str) -> QuadratureResult:
    a = FOUR_PI * config.strengths

    def diag(v):
        e = (a[None, :] / (a[None, :] ** 2 + v[:, None] ** 2)).sum(axis=1) / math.pi
        return weight(v) * e

    t_lo = 1e-14 * min(1.0 / beta, float(a.min()))
    t_hi = 80.0 / beta
    res = _check(integrate_log_trapezoid(diag, t_lo, t_hi, tol * 0.5), f"{name} single-obstacle part")
    if config.n == 1:
        return res

    d = config.distances[config.offdiag]
    if beta >= 2.0 * config.n * float(d.max()):
        # the Bose weight kills the integrand within a few oscillation periods
        v_hi = 80.0 / beta

        def real(u):
            v = v_hi * u**2
            return 2.0 * v_hi * u * weight(v) * coupled_density(config, v).real

        return res + _check(integrate_finite(real, 0.0, 1.0, tol * 0.5, rtol),
                            f"{name} coupled part")

    vs = min(1.0 / beta, default_v0(config))

    def near(u):
        v = vs * u**2
        return 2.0 * vs * u * weight(v) * coupled_density(config, v).real

    low = _check(integrate_finite(near, 0.0, 1.0, tol * 0.25, rtol), f"{name} coupled part below {vs:.3g}")

    def ray(t):
        w = vs + 1j * t
        return (1j * weight(w) * coupled_density(config, w)).real

    t_hi_ray = 80.0 / (2.0 * float(d.min()))
    breaks = np.geomspace(1e-3 * t_hi_ray, t_hi_ray, 12)[:-1]
    ray_res = _check(integrate_finite(ray, 0.0, t_hi_ray, tol * 0.25, rtol, breakpoints=breaks),
                     f"{name} coupled part along the ray")
    return res + low + ray_res


def log_eta(config: ObstacleConfiguration, beta: float, tol: float = 1e-14,
            rtol: float = 1e-12) -> float:
    """``log eta(beta) = int_0^inf log(1 - exp(-beta v)) e(v) dv``."""
    require_admissible(config)
    if not beta > 0:
        raise DomainError("beta must be positive")
    return float(_thermal_integral(config, _log_weight(beta), beta, tol, rtol, "log eta").value)


def dbeta_log_eta(config: ObstacleConfiguration, beta: float, tol: float = 1e-14,
                  rtol: float = 1e-12) -> float:
    """``d/d beta log eta = int_0^inf v e(v) / (exp(beta v) - 1) dv``."""
    require_admissible(config)
    if not beta > 0:
        raise DomainError("beta must be positive")
    return float(_thermal_integral(config, _bose_weight(beta), beta, tol, rtol, "d log eta").value)


@dataclass(frozen=True)
class HighTConstants:
    """``c_total = int e``, ``c_log = int log(v) e`` and ``c_entropy = int (1 - log v) e``."""

    c_total: float
    c_log: float
    c_entropy: float
    error_estimate: float = 0.0


def _full_range(config: ObstacleConfiguration, g, g_tail_closed, tol: float) -> QuadratureResult:
    """``int_0^inf g(v) e(v) dv`` for a weight ``g`` real on the axis and analytic to the right of ``v0``.

    ``[0, v0]`` is integrated on the real axis with ``v = v0 u^2``.  Beyond ``v0``
    the ``g0 / v^2`` part is done in closed form and the remainder is rotated.
    """
    v0 = default_v0(config)
    g0 = 4.0 * float(config.strengths.sum())
    low = _check(
        integrate_finite(lambda u: 2.0 * v0 * u * g(v0 * u**2) * spectral_density(config, v0 * u**2),
                         0.0, 1.0, tol / 3),
        "high-temperature constant below v0",
    )

    def ray(t):
        w = v0 + 1j * np.asarray(t)
        return (1j * g(w) * uv_remainder(config, w, 1)).real

    tail = _check(integrate_decaying_tail(ray, 0.0, 3.5, tol / 3, scale=v0),
                  "high-temperature constant above v0")
    return low + tail.shifted(g0 * g_tail_closed(v0))


def hight_constants(config: ObstacleConfiguration, tol: float = 1e-11) -> HighTConstants:
    """The three frequency integrals governing the high-temperature limit, each computed separately."""
    require_admissible(config)
    total = _full_range(config, lambda v: np.ones_like(v), lambda v0: 1.0 / v0, tol)
    logw = _full_range(config, np.log, lambda v0: (1.0 + math.log(v0)) / v0, tol)
    ent = _full_range(config, lambda v: 1.0 - np.log(v), lambda v0: -math.log(v0) / v0, tol)
    err = total.error_estimate + logw.error_estimate + ent.error_estimate
    return HighTConstants(float(total.value), float(logw.value), float(ent.value), err)


def low_temperature_model(e_vac: float, f: tuple[float, ...], beta: float) -> dict:
    """Truncated low-temperature series for ``F``, ``U`` and ``S`` using ``f_0 .. f_J``."""
    df = du = ds = 0.0
    for j, fj in enumerate(f):
        c = (2.0 * math.pi) ** (2 * j) * abs(float(bernoulli_even(j))) * fj / beta ** (2 * j)
        df += c / ((j + 1) * (2 * j + 1))
        du += c / (j + 1)
        ds += c / (2 * j + 1)
    k = math.pi**2 / beta**2
    return {"F": e_vac - k * df, "U": e_vac + k * du, "S": 2.0 * math.pi**2 / beta * ds}


def high_temperature_model(c: HighTConstants, beta: float) -> dict:
    """Leading high-temperature behaviour of ``F``, ``U`` and ``S``."""
    lb = math.log(beta)
    return {
        "F": c.c_total * lb / beta + c.c_log / beta,
        "U": c.c_total / beta,
        "S": -c.c_total * lb + c.c_entropy,
    }


@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    e_vac: float
    log_eta: float
    dbeta_log_eta: float
    F_ren: float
    U_ren: float
    S_ren: float
    lowT_model: dict = field(default_factory=dict)
    highT_model: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("beta", "e_vac", "log_eta", "dbeta_log_eta", "F_ren", "U_ren", "S_ren")}
        out.update({f"lowT_{k}": v for k, v in self.lowT_model.items()})
        out.update({f"highT_{k}": v for k, v in self.highT_model.items()})
        return out


def vacuum_energy(config: ObstacleConfiguration, tol: float = 1e-10) -> float:
    """Born-series vacuum energy, falling back to direct quadrature when the bound cannot certify it."""
    try:
        return energy_born(config, tol).total
    except TailBoundUnreachable:
        return energy_direct(config, tol=tol).total


def thermo_point(config: ObstacleConfiguration, beta: float, tol: float = 1e-14,
                 e_vac: float | None = None, constants: HighTConstants | None = None,
                 f: tuple[float, ...] | None = None) -> ThermoPoint:
    """All thermodynamic quantities at inverse temperature ``beta``.

    ``e_vac``, ``constants`` and ``f`` may be passed in to share them across a
    grid of temperatures.
    """
    require_admissible(config)
    if e_vac is None:
        e_vac = vacuum_energy(config)
    if constants is None:
        constants = hight_constants(config)
    if f is None:
        f = f_coefficients(config, LOW_T_ORDER).values
    le = log_eta(config, beta, tol)
    dle = dbeta_log_eta(config, beta, tol)
    return ThermoPoint(
        beta=beta,
        e_vac=e_vac,
        log_eta=le,
        dbeta_log_eta=dle,
        F_ren=e_vac + le / beta,
        U_ren=e_vac + dle,
        S_ren=beta * dle - le,
        lowT_model=low_temperature_model(e_vac, f, beta),
        highT_model=high_temperature_model(constants, beta),
    )
