"""Integration engines.

Every integrand is called with a 1-D array of nodes and must return values with
the node axis first; trailing axes make the integrand vector-valued.  Complex
values are fine everywhere.  All engines are deterministic: subdivision order is
fixed and accumulation runs in a fixed order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RotationInvalid

# Gauss-Kronrod 7-15 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])

MAX_INTERVALS = 20_000
# cutoffs beyond this multiple of the scale lose the u-map to rounding
FAR_CUT = 1e8


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float | np.ndarray
    error_estimate: float
    nodes_used: int
    converged: bool

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.nodes_used + other.nodes_used,
            self.converged and other.converged,
        )

    def scaled(self, factor) -> "QuadratureResult":
        return QuadratureResult(
            self.value * factor,
            self.error_estimate * abs(factor),
            self.nodes_used,
            self.converged,
        )

    def shifted(self, amount, extra_error: float = 0.0) -> "QuadratureResult":
        return QuadratureResult(
            self.value + amount,
            self.error_estimate + extra_error,
            self.nodes_used,
            self.converged,
        )


def _gk_batch(f, a: np.ndarray, b: np.ndarray):
    """Kronrod values and |Kronrod - Gauss| for a batch of intervals."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    y = np.asarray(f(x))
    y = y.reshape((a.size, 15) + y.shape[1:])
    shape = (a.size, 15) + (1,) * (y.ndim - 2)
    k = (y * KRONROD_WEIGHTS.reshape(shape[1:])).sum(axis=1)
    g = (y * GAUSS_WEIGHTS.reshape(shape[1:])).sum(axis=1)
    hshape = (a.size,) + (1,) * (k.ndim - 1)
    k = k * half.reshape(hshape)
    g = g * half.reshape(hshape)
    diff = np.abs(k - g)
    err = diff.reshape(a.size, -1).max(axis=1) if diff.ndim > 1 else diff
    return k, err


def _norm(value) -> float:
    return float(np.max(np.abs(value)))


def adaptive_gk(f, breaks, tol: float, rtol: float = 0.0,
                max_intervals: int = MAX_INTERVALS) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod 7-15 over the panels defined by ``breaks``.

    Each round bisects every panel whose error exceeds its length-proportional
    share of the tolerance, so the stopping rule is met once no panel is over
    budget.  Panels shrunk to roundoff width are frozen.
    """
    breaks = np.asarray(breaks, dtype=float)
    a = breaks[:-1].copy()
    b = breaks[1:].copy()
    total_len = float(b[-1] - a[0])
    vals, errs = _gk_batch(f, a, b)
    nodes = 15 * a.size
    frozen = np.zeros(a.size, dtype=bool)
    while True:
        value = vals.sum(axis=0)
        err = float(errs.sum())
        target = max(tol, rtol * _norm(value))
        if err <= target:
            return QuadratureResult(value, err, nodes, True)
        share = target * (b - a) / total_len
        split = (errs > share) & ~frozen
        if not split.any() or a.size + split.sum() > max_intervals:
            return QuadratureResult(value, err, nodes, False)
        sa, sb = a[split], b[split]
        sm = 0.5 * (sa + sb)
        na = np.concatenate([sa, sm])
        nb = np.concatenate([sm, sb])
        nv, ne = _gk_batch(f, na, nb)
        nodes += 15 * na.size
        keep = ~split
        order = np.argsort(np.concatenate([a[keep], na]), kind="stable")
        a = np.concatenate([a[keep], na])[order]
        b = np.concatenate([b[keep], nb])[order]
        vals = np.concatenate([vals[keep], nv])[order]
        errs = np.concatenate([errs[keep], ne])[order]
        width = b - a
        frozen = width <= 64 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b))


def integrate_finite(f: Callable, a: float, b: float, tol: float = 1e-10,
                     rtol: float = 0.0, breakpoints=None,
                     max_intervals: int = MAX_INTERVALS) -> QuadratureResult:
    """Adaptive integral of ``f`` over ``[a, b]``.

    Returns with ``converged=False`` rather than raising when the interval budget
    runs out.
    """
    if not b > a:
        raise ValueError("need a < b")
    pts = [a]
    if breakpoints is not None:
        pts += sorted(p for p in breakpoints if a < p < b)
    pts.append(b)
    return adaptive_gk(f, pts, tol, rtol, max_intervals)


def _estimate_decay_constant(f, a: float, p: float, scale: float) -> float:
    v = np.geomspace(max(a, scale), max(a, scale) * 1e3, 16)
    vals = np.abs(np.asarray(f(v)))
    if vals.ndim > 1:
        vals = vals.reshape(v.size, -1).max(axis=1)
    return 2.0 * float(np.max(vals * v**p))


def integrate_decaying_tail(f: Callable, a: float, decay_order: float,
                            tol: float = 1e-10, rtol: float = 0.0,
                            decay_constant: float | None = None,
                            scale: float = 1.0) -> QuadratureResult:
    """``int_a^inf f`` for ``|f(v)| <= C v^{-p}`` with ``p = decay_order > 1``.

    The range is cut at ``V`` where ``C V^{1-p}/(p-1)`` uses a quarter of the
    tolerance; that analytic bound is added to the error estimate.  ``[a, V]`` is
    integrated in ``u`` with ``v = a + scale * u / (1 - u)``.  ``C`` is estimated
    from samples when not supplied.
    """
    p = float(decay_order)
    if not p > 1.0:
        raise ValueError("decay_order must exceed 1")
    if a < 0:
        raise ValueError("a must be nonnegative")
    c = decay_constant if decay_constant is not None else _estimate_decay_constant(f, a, p, scale)
    budget = max(tol, 1e-300)
    cut = (4.0 * c / (budget * (p - 1))) ** (1.0 / (p - 1)) if c > 0 else a + scale
    cut = max(cut, a + scale)
    if cut > FAR_CUT * (a + scale):
        return _algebraic_tail(f, a, p, tol, rtol, scale)
    tail_bound = c * cut ** (1 - p) / (p - 1)
    u_max = (cut - a) / (cut - a + scale)

    def mapped(u):
        w = 1.0 - u
        v = a + scale * u / w
        jac = scale / w**2
        y = np.asarray(f(v))
        return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))

    res = adaptive_gk(mapped, [0.0, u_max], 0.75 * tol, rtol)
    return QuadratureResult(res.value, res.error_estimate + tail_bound,
                            res.nodes_used, res.converged)


def _algebraic_tail(f, a: float, p: float, tol: float, rtol: float, scale: float) -> QuadratureResult:
    """Slow decay: ``[a + scale, inf)`` with ``v = a + scale x^{-2/(p-1)}``, no cutoff.

    A ``v^{-p}`` tail becomes ``x`` times a bounded factor, so the mapped
    integrand vanishes at ``x = 0``.
    """
    gamma = 2.0 / (p - 1.0)

    def mapped(x):
        x = np.maximum(x, 1e-300)
        v = a + scale * x**-gamma
        jac = gamma * scale * x ** (-gamma - 1.0)
        y = np.asarray(f(v))
        return y * jac.reshape((-1,) + (1,) * (y.ndim - 1))

    near = adaptive_gk(f, [a, a + scale], 0.5 * tol, rtol)
    far = adaptive_gk(mapped, [0.0, 1.0], 0.5 * tol, rtol)
    return near + far


@dataclass(frozen=True)
class OscillatoryKernel:
    """Integrand ``amplitude(v) * exp(i * frequency * v)``.

    ``amplitude`` must accept complex node arrays when ``analytic`` is true, since
    the engine evaluates it on the rotated ray ``a + i t``.
    """

    frequency: float
    amplitude: Callable
    decay_order: int = 2
    analytic: bool = True

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    def __call__(self, v):
        v = np.asarray(v)
        y = np.asarray(self.amplitude(v))
        phase = np.exp(1j * self.frequency * v)
        return y * phase.reshape((-1,) + (1,) * (y.ndim - 1))


def integrate_oscillatory(kernel: OscillatoryKernel, a: float = 0.0,
                          tol: float = 1e-10, rtol: float = 0.0,
                          allow_fallback: bool = True) -> QuadratureResult:
    """``int_a^inf amplitude(v) e^{i d v} dv`` by rotating onto ``v = a + i t``.

    With ``t = -log(1 - u) / d`` the exponential weight becomes ``du / d``, so the
    rotated integral is ``(i e^{i d a} / d) int_0^1 amplitude(a + i t(u)) du``.
    Non-analytic amplitudes go to half-period summation, or raise
    :class:`RotationInvalid` when ``allow_fallback`` is false.
    """
    d = float(kernel.frequency)
    if not kernel.analytic:
        if not allow_fallback:
            raise RotationInvalid("amplitude declared non-analytic in the upper half-plane")
        return integrate_halfperiod(kernel, a, tol)

    def rotated(u):
        t = -np.log1p(-u) / d
        return np.asarray(kernel.amplitude(a + 1j * t))

    prefactor = 1j * np.exp(1j * d * a) / d
    res = adaptive_gk(rotated, [0.0, 0.5, 1.0], tol * d, rtol)
    return res.scaled(prefactor)


def wynn_epsilon(seq) -> tuple[complex, float]:
    """Wynn epsilon extrapolation; returns the limit and a change-based error."""
    s = [complex(x) for x in seq]
    n = len(s)
    e_prev = [0j] * (n + 1)
    e_cur = list(s)
    best = [s[-1]]
    for k in range(1, n):
        e_next = []
        for i in range(len(e_cur) - 1):
            diff = e_cur[i + 1] - e_cur[i]
            if diff == 0:
                e_next.append(complex(math.inf))
            else:
                e_next.append(e_prev[i + 1] + 1.0 / diff)
        e_prev, e_cur = e_cur, e_next
        if k % 2 == 0 and e_cur and np.isfinite(e_cur[-1]):
            best.append(e_cur[-1])
        if len(e_cur) < 2:
            break
    if len(best) >= 2:
        return best[-1], abs(best[-1] - best[-2])
    return best[-1], abs(s[-1] - s[-2]) if n > 1 else math.inf


def integrate_halfperiod(kernel: OscillatoryKernel, a: float = 0.0,
                         tol: float = 1e-10, panels: int = 60) -> QuadratureResult:
    """Real-axis oracle: adaptive panels of length ``pi / d`` plus Wynn epsilon."""
    d = float(kernel.frequency)
    width = math.pi / d
    partial = []
    total = 0j
    nodes = 0
    panel_error = 0.0
    converged = True
    for k in range(panels):
        lo = a + k * width
        res = adaptive_gk(kernel, [lo, lo + width], tol * 1e-3)
        nodes += res.nodes_used
        panel_error += res.error_estimate
        converged &= res.converged
        total = total + complex(res.value)
        partial.append(total)
    value, err = wynn_epsilon(partial[panels // 3:])
    err += panel_error
    return QuadratureResult(value, err, nodes, converged and err <= max(tol, 1e-14))


def integrate_log_trapezoid(f: Callable, t_lo: float, t_hi: float,
                            tol: float = 1e-13, initial_step: float = 0.25,
                            max_halvings: int = 8) -> QuadratureResult:
    """``int_{t_lo}^{t_hi} f(t) dt`` by the trapezoid rule in ``u = log t``.

    For Laplace-type integrands, smooth on ``(0, inf)`` with power behaviour at
    0 and exponential decay, the integrand in ``u`` decays at both ends and the
    trapezoid rule converges geometrically.  Nodes sit at ``log(t_lo) + k h``,
    so moving ``t_hi`` only adds or drops negligible end nodes and results vary
    smoothly with parameters inside ``f``.
    """
    u_lo = math.log(t_lo)
    n = max(2, int(math.ceil((math.log(t_hi) - u_lo) / initial_step)))
    h = initial_step

    def g(uu):
        t = np.exp(uu)
        y = np.asarray(f(t))
        return y * t.reshape((-1,) + (1,) * (y.ndim - 1))

    u = u_lo + h * np.arange(n + 1)
    y = g(u)
    est = h * (y.sum(axis=0) - 0.5 * (y[0] + y[-1]))
    nodes = u.size
    err = math.inf
    for _ in range(max_halvings):
        mid = u[:-1] + 0.5 * h
        ym = g(mid)
        nodes += mid.size
        new = 0.5 * est + 0.5 * h * ym.sum(axis=0)
        err = _norm(new - est)
        u = u_lo + 0.5 * h * np.arange(2 * (u.size - 1) + 1)
        h *= 0.5
        est = new
        if err <= tol:
            return QuadratureResult(est, err, nodes, True)
    return QuadratureResult(est, err, nodes, False)
