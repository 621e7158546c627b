"""The Gamma-matrix system, the relative spectral density and the relative zeta function.

Notation used throughout: ``a_n = 4 pi alpha_n``, ``d_mn = |x_m - x_n|`` and

    Gamma(w) = diag(alpha - i w / 4 pi) - P(w),   P_mn = exp(i w d_mn) / (4 pi d_mn),

for complex frequency ``w``.  The analytic density

    H(w) = (1 / 4 pi^2) sum_mn [Gamma(w)^-1]_mn exp(i w d_mn)

is holomorphic in the closed upper half-plane away from 0, and the spectral
density is ``e(v) = Re H(v)`` for real ``v > 0``.  ``H`` is split as
``H = (1/pi) sum_n 1/(a_n - i w) + coupled(w)`` where every term of the coupled
part carries at least one factor ``exp(i w d)``.  On a ray ``w = v0 + i t`` the
coupled part therefore decays exponentially, and the diagonal part is handled
in closed form.  This is what makes contour rotation cheap and accurate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    PoleProximity,
    QuadratureFailure,
    SingularMatrix,
    StripViolation,
    TruncationInsufficient,
)
from .model import FOUR_PI, ObstacleConfiguration
from .quadrature import QuadratureResult, integrate_decaying_tail, integrate_finite

FOUR_PI_SQ = 4.0 * math.pi**2
F_FIT_FRACTION = 0.1
F_FIT_DEGREE = 8
POLE_DISTANCE = 1e-6
# relative rounding level of the low-frequency subtraction
IR_NOISE = 1e-13


def _require(config: ObstacleConfiguration):
    config.report.raise_if_inadmissible()


def _offdiag_distances(config: ObstacleConfiguration) -> np.ndarray:
    """Distance matrix with ones on the diagonal, safe to divide by."""
    return np.where(config.offdiag, config.distances, 1.0)


def _matrices(config: ObstacleConfiguration, w: np.ndarray):
    """Batched ``V^-1`` diagonal, ``P`` and ``E - 1`` for complex frequencies ``w``."""
    w = np.asarray(w, dtype=complex).reshape(-1)
    d = config.distances
    mask = config.offdiag
    phase = np.exp(1j * w[:, None, None] * d[None])
    p = np.where(mask, phase / (FOUR_PI * _offdiag_distances(config)), 0.0)
    e_off = np.where(mask, phase, 0.0)
    vinv = 1.0 / (config.strengths[None, :] - 1j * w[:, None] / FOUR_PI)
    return vinv, p, e_off


def _gamma(config, vinv, p):
    n = config.n
    eye = np.eye(n)
    return eye[None] / vinv[:, :, None] - p


def _solve(config, gamma, rhs, w):
    try:
        return np.linalg.solve(gamma, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(
            f"Gamma matrix singular near w={np.asarray(w).ravel()[:3]} for {config.to_dict()}"
        ) from exc


def diagonal_density(config: ObstacleConfiguration, w):
    """Single-obstacle part ``(1/pi) sum_n 1/(a_n - i w)`` of ``H``."""
    w = np.asarray(w, dtype=complex)
    a = FOUR_PI * config.strengths
    return (1.0 / math.pi) * (1.0 / (a[None, :] - 1j * w.reshape(-1, 1))).sum(axis=1).reshape(w.shape)


def coupled_density(config: ObstacleConfiguration, w):
    """Multiple-scattering part of ``H``: ``(1/4 pi^2) tr[Gamma^-1 (P V^-1 + E_off)]``."""
    w_arr = np.asarray(w, dtype=complex)
    if config.n == 1:
        return np.zeros(w_arr.shape, dtype=complex)
    vinv, p, e_off = _matrices(config, w_arr)
    gamma = _gamma(config, vinv, p)
    rhs = p * vinv[:, None, :] + e_off
    x = _solve(config, gamma, rhs, w_arr)
    return (np.trace(x, axis1=1, axis2=2) / FOUR_PI_SQ).reshape(w_arr.shape)


def density_analytic(config: ObstacleConfiguration, w):
    """``H(w)``; its real part on the positive real axis is the spectral density."""
    return diagonal_density(config, w) + coupled_density(config, w)


def spectral_density(config: ObstacleConfiguration, v):
    """Relative spectral density ``e(v)`` for real ``v > 0`` (scalar or array).

    ``H(v)`` has a genuine imaginary part on the real axis (already for one
    obstacle), so only the real part is returned.
    """
    _require(config)
    v_arr = np.asarray(v, dtype=float)
    a = FOUR_PI * config.strengths
    diag = (a[None, :] / (a[None, :] ** 2 + v_arr.reshape(-1, 1) ** 2)).sum(axis=1) / math.pi
    out = diag.reshape(v_arr.shape) + coupled_density(config, v_arr).real
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class GammaSystem:
    """``V``, ``P`` and ``Gamma = V - P`` at a single frequency, with a lazy inverse."""

    frequency: complex
    V: np.ndarray
    P: np.ndarray

    @property
    def gamma_plus(self) -> np.ndarray:
        return self.V - self.P

    @cached_property
    def inverse(self) -> np.ndarray:
        try:
            return np.linalg.inv(self.gamma_plus)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(f"Gamma matrix singular at w={self.frequency}") from exc

    @cached_property
    def vinv_p(self) -> np.ndarray:
        return self.P / np.diag(self.V)[:, None]

    @property
    def hs_norm(self) -> float:
        """Hilbert-Schmidt norm of ``V^-1 P``."""
        return float(np.linalg.norm(self.vinv_p))


def gamma_system(config: ObstacleConfiguration, v) -> GammaSystem:
    _require(config)
    vinv, p, _ = _matrices(config, np.array([v]))
    return GammaSystem(complex(v), np.diag(1.0 / vinv[0]), p[0])


def neumann_inverse(config: ObstacleConfiguration, v, J: int) -> np.ndarray:
    """Partial Neumann sum ``sum_{j<=J} (V^-1 P)^j V^-1``."""
    g = gamma_system(config, v)
    vinv = np.diag(1.0 / np.diag(g.V))
    term = vinv
    total = vinv.copy()
    for _ in range(J):
        term = g.vinv_p @ term
        total = total + term
    return total


def born_density_terms(config: ObstacleConfiguration, v, J: int) -> np.ndarray:
    """Born terms ``e_0 .. e_J`` at each frequency; shape ``(J + 1,) + shape(v)``.

    ``e_j = (1/4 pi^2) Re sum_mn [(V^-1 P)^j V^-1]_mn exp(i v d_mn)``, with the
    matrix power built incrementally.
    """
    _require(config)
    v_arr = np.asarray(v, dtype=float)
    vinv, p, e_off = _matrices(config, v_arr)
    e_full = e_off + np.eye(config.n)[None]
    q = vinv[:, :, None] * p
    term = np.einsum("ij,mj->mij", np.eye(config.n), vinv)
    out = np.empty((J + 1, vinv.shape[0]))
    for j in range(J + 1):
        if j:
            term = q @ term
        out[j] = (term * e_full).sum(axis=(1, 2)).real / FOUR_PI_SQ
    return out.reshape((J + 1,) + v_arr.shape)


def born_density_term(config: ObstacleConfiguration, j: int, v):
    out = born_density_terms(config, v, j)[j]
    return float(out) if np.ndim(out) == 0 else out


def born_term_bound(config: ObstacleConfiguration, j: int, v):
    """Bound ``N/(4 pi^2 min alpha) rho^j [1 + (v / 4 pi max alpha)^2]^{-(j+1)/2}`` on ``|e_j(v)|``."""
    alpha = config.strengths
    v = np.asarray(v, dtype=float)
    out = (
        config.n / (FOUR_PI_SQ * alpha.min())
        * config.rho**j
        * (1.0 + (v / (FOUR_PI * alpha.max())) ** 2) ** (-(j + 1) / 2)
    )
    return float(out) if out.ndim == 0 else out


def f0(config: ObstacleConfiguration) -> float:
    """Zero-frequency limit ``e(0+) = (1/4 pi^2) sum_mn [Gamma(0)^-1]_mn``."""
    _require(config)
    g0 = np.diag(config.strengths) - np.where(
        config.offdiag, 1.0 / (FOUR_PI * _offdiag_distances(config)), 0.0
    )
    return float(np.linalg.solve(g0, np.ones(config.n)).sum() / FOUR_PI_SQ)


@dataclass(frozen=True)
class FCoefficients:
    """Low-frequency coefficients: ``e(v) = sum_j values[j] v^{2j} + O(v^{2J+2})``."""

    values: tuple[float, ...]
    uncertainties: tuple[float, ...]
    v_fit: float


def _fit_even(config, v_fit: float, J: int) -> np.ndarray:
    degree = max(F_FIT_DEGREE, J + 2)
    k = np.arange(1, 4 * degree + 1)
    x = np.cos(0.5 * math.pi * (k - 0.5) / k.size)  # Chebyshev-type nodes in (0, 1)
    v = v_fit * x
    target = spectral_density(config, v) - f0(config)
    basis = np.stack([x ** (2 * j) for j in range(1, degree + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return coef / v_fit ** (2 * np.arange(1, degree + 1))


def f_coefficients(config: ObstacleConfiguration, J: int = 1) -> FCoefficients:
    """``f_0`` exactly; ``f_1 .. f_J`` by even-polynomial least squares near ``v = 0``.

    The fit window is ``(0, 0.1 * 4 pi min alpha]``; the uncertainty is the
    change when the window is halved.
    """
    if not 0 <= J <= 2:
        raise DomainError("J must be 0, 1 or 2")
    v_fit = F_FIT_FRACTION * FOUR_PI * float(config.strengths.min())
    vals = [f0(config)]
    errs = [0.0]
    if J:
        wide = _fit_even(config, v_fit, J)
        narrow = _fit_even(config, 0.5 * v_fit, J)
        vals += [float(c) for c in narrow[:J]]
        errs += [float(abs(c1 - c2)) for c1, c2 in zip(wide[:J], narrow[:J])]
    return FCoefficients(tuple(vals), tuple(errs), 0.5 * v_fit if J else v_fit)


@dataclass(frozen=True)
class UVAsymptotics:
    """Large-frequency data of ``e``.

    ``v^2 e(v) -> g0 + sum_k Re(h0[k] exp(i freq0[k] v))`` and the next order adds
    ``v^{-3} Re(sum_k h1[k] exp(i freq1[k] v))`` (the non-oscillating ``v^{-3}``
    coefficient vanishes).
    """

    g0: float
    g1: float
    freq0: np.ndarray
    h0: np.ndarray
    freq1: np.ndarray
    h1: np.ndarray

    def leading(self, v):
        v = np.asarray(v, dtype=float)
        osc = (self.h0[None, :] * np.exp(1j * v.reshape(-1, 1) * self.freq0[None, :])).sum(axis=1)
        return ((self.g0 + osc.real) / v.reshape(-1) ** 2).reshape(v.shape)

    def next_order(self, v):
        v = np.asarray(v, dtype=float)
        osc = (self.h1[None, :] * np.exp(1j * v.reshape(-1, 1) * self.freq1[None, :])).sum(axis=1)
        return (osc.real / v.reshape(-1) ** 3).reshape(v.shape)


def uv_asymptotic_data(config: ObstacleConfiguration) -> UVAsymptotics:
    alpha = config.strengths
    d = config.distances
    n = config.n
    f0_list, h0_list, f1_list, h1_list = [], [], [], []
    for m in range(n):
        for k in range(n):
            if m == k:
                continue
            f0_list.append(2 * d[m, k])
            h0_list.append(-1.0 / (math.pi * d[m, k]))
            f1_list.append(2 * d[m, k])
            h1_list.append(4j * (alpha[m] + alpha[k]) / d[m, k])
    for m in range(n):
        for k in range(n):
            for p in range(n):
                if p in (m, k):
                    continue
                f1_list.append(d[m, p] + d[p, k] + d[m, k])
                h1_list.append(-1j / (math.pi * d[m, p] * d[p, k]))
    return UVAsymptotics(
        g0=4.0 * float(alpha.sum()),
        g1=0.0,
        freq0=np.array(f0_list, dtype=float),
        h0=np.array(h0_list, dtype=complex),
        freq1=np.array(f1_list, dtype=float),
        h1=np.array(h1_list, dtype=complex),
    )


def uv_remainder(config: ObstacleConfiguration, w, order: int):
    """``H(w)`` minus its non-oscillating large-``w`` terms.

    ``order=0`` removes ``iN/(pi w)`` and ``g0/w^2``; ``order=1`` also removes
    ``-(i/pi) sum a_n^2 / w^3``.  Both removed ``w^-1`` and ``w^-3`` terms are
    purely imaginary on the real axis, so they never contribute to ``e``.
    """
    w = np.asarray(w, dtype=complex)
    a = FOUR_PI * config.strengths
    wc = w.reshape(-1, 1)
    if order == 0:
        diag = (-(a**2)[None, :] / (wc**2 * (a[None, :] - 1j * wc))).sum(axis=1) / math.pi
    elif order == 1:
        diag = (1j / math.pi) * ((a**3)[None, :] / (wc**3 * (a[None, :] - 1j * wc))).sum(axis=1)
    else:
        raise TruncationInsufficient("only UV orders 0 and 1 are available")
    return diag.reshape(w.shape) + coupled_density(config, w)


def default_v0(config: ObstacleConfiguration) -> float:
    return FOUR_PI * float(config.strengths.max())


def _check(res: QuadratureResult, component: str) -> QuadratureResult:
    if not res.converged:
        raise QuadratureFailure(component, res)
    return res


def _ray_pair(config, s: complex, v0: float, order: int, tol: float) -> QuadratureResult:
    """``(1/2)[int_up w^{-2s} R dw + int_down w^{-2s} conj(R(conj w)) dw]`` from ``v0``."""
    def f(t):
        up = v0 + 1j * t
        down = v0 - 1j * t
        r = uv_remainder(config, up, order)
        return 0.5j * (up ** (-2 * s) * r - down ** (-2 * s) * np.conj(r))

    p = 2 + order + 1 + 2 * s.real
    return _check(integrate_decaying_tail(f, 0.0, p, tol, scale=v0), "zeta UV rays")


def _ir_integral(config, s: complex, v0: float, subtract: tuple[float, ...], tol: float):
    """``int_0^{v0} v^{-2s} (e(v) - sum_j c_j v^{2j}) dv`` via ``v = v0 u^q``.

    For ``Re s >= 1/2`` rounding noise in the subtraction is not integrable at
    0, so below the crossover ``v_c`` the bracket is replaced by its next
    Taylor term and integrated in closed form.
    """
    exponent = 2 * len(subtract) - 2 * s.real
    q = max(2.0, math.ceil(1.0 / max(exponent + 1.0, 1e-3)))
    coeff = np.asarray(subtract, dtype=float)
    u_lo = 0.0
    head = 0.0
    if coeff.size and s.real >= 0.5:
        order = coeff.size
        v_fit = 0.5 * F_FIT_FRACTION * FOUR_PI * float(config.strengths.min())
        c_next = float(_fit_even(config, v_fit, order)[order - 1])
        if c_next != 0.0:
            v_c = min(v_fit, (IR_NOISE * abs(coeff[0]) / abs(c_next)) ** (1.0 / (2 * order)))
            power = 2 * order + 1 - 2 * s
            head = c_next * v_c**power / power
            u_lo = (v_c / v0) ** (1.0 / q)

    def f(u):
        v = v0 * u**q
        poly = sum(c * v ** (2 * j) for j, c in enumerate(coeff)) if coeff.size else 0.0
        e = spectral_density(config, v) - poly
        return v0 * q * u ** (q - 1) * v ** (-2 * s) * e

    res = integrate_finite(f, u_lo, 1.0, tol)
    return _check(res, "zeta IR integral").shifted(head)


def _near_pole(s: complex) -> bool:
    k = round(s.real - 0.5)
    return abs(s - (k + 0.5)) < POLE_DISTANCE


def zeta_strip(config: ObstacleConfiguration, s, tol: float = 1e-11,
               v0: float | None = None) -> complex:
    """``int_0^inf v^{-2s} e(v) dv`` for ``0 < Re s < 1/2``."""
    s = complex(s)
    if not 0.0 < s.real < 0.5:
        raise StripViolation(f"Re s = {s.real} outside (0, 1/2)")
    _require(config)
    v0 = default_v0(config) if v0 is None else float(v0)
    g0 = 4.0 * float(config.strengths.sum())
    ir = _ir_integral(config, s, v0, (), tol)
    uv = g0 * v0 ** (-2 * s - 1) / (2 * s + 1)
    rays = _ray_pair(config, s, v0, 0, tol)
    return complex(ir.value + uv + rays.value)


def zeta_continued(config: ObstacleConfiguration, s, J_IR: int = 0, J_UV: int = 1,
                   v0: float | None = None, tol: float = 1e-11) -> complex:
    """Meromorphic continuation of the relative zeta function.

    Valid for ``-J_UV/2 - 1 < Re s < J_IR + 3/2``.  The low-frequency piece
    subtracts ``sum_{j<=J_IR} f_j v^{2j}`` and adds back its integral in closed
    form; the high-frequency piece adds ``g0 v0^{-2s-1}/(2s+1)`` to the rotated
    remainder integrals, which are entire in ``s``.
    """
    s = complex(s)
    if J_UV not in (0, 1) or not 0 <= J_IR <= 2:
        raise TruncationInsufficient("supported truncations: J_UV in {0, 1}, J_IR in {0, 1, 2}")
    if not -J_UV / 2 - 1 < s.real < J_IR + 1.5:
        raise TruncationInsufficient(
            f"Re s = {s.real} outside ({-J_UV / 2 - 1}, {J_IR + 1.5}) for J_IR={J_IR}, J_UV={J_UV}"
        )
    if _near_pole(s):
        raise PoleProximity(f"s = {s} within {POLE_DISTANCE} of a pole")
    _require(config)
    v0 = default_v0(config) if v0 is None else float(v0)
    f = f_coefficients(config, J_IR).values
    ir_closed = sum(fj * v0 ** (2 * j + 1 - 2 * s) / (2 * j + 1 - 2 * s) for j, fj in enumerate(f))
    ir = _ir_integral(config, s, v0, f, tol)
    g0 = 4.0 * float(config.strengths.sum())
    uv = g0 * v0 ** (-2 * s - 1) / (2 * s + 1)
    rays = _ray_pair(config, s, v0, J_UV, tol)
    return complex(ir_closed + ir.value + uv + rays.value)


@dataclass(frozen=True)
class ZetaLaurent:
    """Residue and finite part of the relative zeta function at ``s = -1/2``."""

    residue: float
    finite_part: float
    error_estimate: float

    def energy(self, ell: float) -> float:
        return (1.0 - math.log(2.0 * ell)) * self.residue + 0.5 * self.finite_part


def zeta_laurent(config: ObstacleConfiguration, v0: float | None = None,
                 tol: float = 1e-11) -> ZetaLaurent:
    """Exact split at ``s = -1/2``: the only singular piece is ``g0 v0^{-2s-1}/(2s+1)``."""
    _require(config)
    v0 = default_v0(config) if v0 is None else float(v0)
    g0 = 4.0 * float(config.strengths.sum())
    s = complex(-0.5)
    ir = _ir_integral(config, s, v0, (), tol)
    rays = _ray_pair(config, s, v0, 1, tol)
    fp = float((ir.value + rays.value).real) - g0 * math.log(v0)
    return ZetaLaurent(0.5 * g0, fp, ir.error_estimate + rays.error_estimate)


@dataclass(frozen=True, eq=False)
class SpectralDensityProfile:
    sampler: Callable
    f0: float
    tail_coefficient_data: UVAsymptotics = field(repr=False)


def spectral_profile(config: ObstacleConfiguration) -> SpectralDensityProfile:
    _require(config)
    return SpectralDensityProfile(
        sampler=lambda v: spectral_density(config, v),
        f0=f0(config),
        tail_coefficient_data=uv_asymptotic_data(config),
    )
