"""Acceptance criteria.

Each test records one ``PASS``/``FAIL`` line (printed immediately and again in
the terminal summary) and then asserts.  Tolerances and runtime limits are the
contract values; none are relaxed here.
"""
import io
import math
import time
from contextlib import redirect_stdout

import mpmath
import numpy as np

from conftest import ACCEPTANCE_LINES, random_admissible, single_closed_form
from pointcasimir.cli import main
from pointcasimir.model import (
    FOUR_PI,
    ObstacleConfiguration,
    RescaledConfiguration,
    four_obstacle_geometry,
    rescale,
    three_obstacle_geometry,
)
from pointcasimir.spectral import (
    born_density_terms,
    born_term_bound,
    f0,
    spectral_density,
    zeta_continued,
    zeta_strip,
)
from pointcasimir.specfun import i_k, xi
from pointcasimir.thermo import hight_constants, thermo_point
from pointcasimir.vacuum import (
    energy_born,
    energy_direct,
    energy_identical,
    forces,
    interaction_energy,
    relative_error_estimate,
)

SEED = 20240611


def record(number, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_single_obstacle_closed_form():
    worst = 0.0
    with Timer() as t:
        for alpha, ell in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.1)):
            cfg = ObstacleConfiguration([[0, 0, 0]], [alpha], ell)
            exact = single_closed_form(alpha, ell)
            for value in (energy_direct(cfg).total, energy_born(cfg).total,
                          energy_identical(rescale(cfg), 1, ell).absolute_total):
                worst = max(worst, abs(value - exact) / abs(exact))
    record(1, worst <= 1e-9 and t.seconds < 1.0,
           f"max relative deviation {worst:.2e} (limit 1e-9), {t.seconds:.2f} s (limit 1 s)")


def test_criterion_02_route_equivalence():
    rng = np.random.default_rng(SEED)
    worst = 0.0
    with Timer() as t:
        for i in range(10):
            cfg = random_admissible(rng, 2 + i % 2)
            born = energy_born(cfg, 1e-10)
            direct = energy_direct(cfg, tol=1e-9)
            allowed = born.tail_bound + 10 * (born.quadrature_error + direct.quadrature_error)
            worst = max(worst, abs(born.total - direct.total) / allowed)
    record(2, worst <= 1.0 and t.seconds < 120,
           f"max |direct - Born| / allowance = {worst:.3f} (limit 1), {t.seconds:.1f} s (limit 120 s)")


def _xi_closed_mp(k, r):
    with mpmath.workdps(40):
        r = mpmath.mpf(r)
        s = sum(mpmath.factorial(k - h - 2) * (-r) ** h for h in range(k - 1))
        s += (-r) ** (k - 1) * mpmath.exp(r) * mpmath.e1(r)
        return float(s / mpmath.factorial(k - 1))


def test_criterion_03_exponential_integral_family():
    radii = np.geomspace(0.05, 50, 20)
    with Timer() as t:
        recurrence = max(abs(i_k(k, r) - (1j / (k - 1) - r / (k - 1) * i_k(k - 1, r)))
                         for k in range(2, 11) for r in radii)
        closed = max(abs(xi(k, r) / _xi_closed_mp(k, r) - 1)
                     for k in range(2, 11) for r in radii if r <= 5)
    record(3, recurrence <= 1e-9 and closed <= 1e-9 and t.seconds < 10,
           f"recurrence residual {recurrence:.1e}, closed-form deviation {closed:.1e} (limits 1e-9), "
           f"{t.seconds:.2f} s (limit 10 s)")


def test_criterion_04_density_bounds():
    rng = np.random.default_rng(SEED + 4)
    v = np.geomspace(1e-3, 1e3, 40)
    J = 12
    worst_term = worst_sum = 0.0
    with Timer() as t:
        for _ in range(5):
            cfg = random_admissible(rng, 3, rho_max=0.9)
            terms = born_density_terms(cfg, v, J)
            for j in range(J + 1):
                worst_term = max(worst_term, float(np.max(np.abs(terms[j]) / born_term_bound(cfg, j, v))))
            tail = sum(born_term_bound(cfg, j, v) for j in range(J + 1, 2000))
            gap = np.abs(terms.sum(axis=0) - spectral_density(cfg, v))
            worst_sum = max(worst_sum, float(np.max(gap / (tail + 1e-15))))
    record(4, worst_term <= 1.0 + 1e-12 and worst_sum <= 1.0 and t.seconds < 30,
           f"max |e_j| / bound {worst_term:.3f}, max partial-sum gap / tail bound {worst_sum:.3f} "
           f"(limits 1), {t.seconds:.1f} s (limit 30 s)")


def test_criterion_05_split_frequency_invariance():
    rng = np.random.default_rng(SEED + 5)
    tol = 1e-9
    worst = 0.0
    with Timer() as t:
        for i in range(5):
            cfg = random_admissible(rng, 2 + i % 2)
            v0 = FOUR_PI * float(cfg.strengths.max())
            a = energy_direct(cfg, v0=v0, tol=tol).total
            b = energy_direct(cfg, v0=2 * v0, tol=tol).total
            worst = max(worst, abs(a - b))
    record(5, worst <= 10 * tol and t.seconds < 60,
           f"max |E(v0) - E(2 v0)| = {worst:.1e} (limit {10 * tol:.0e}), {t.seconds:.1f} s (limit 60 s)")


def _run_table(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    assert code == 0
    lines = buf.getvalue().splitlines()
    header = lines[1].split(",")
    return [dict(zip(header, row.split(","))) for row in lines[2:]]


def test_criterion_06_pair_phenomenology():
    with Timer() as t:
        rows = _run_table(["scan2", "--grid", "1.5:8:66", "--J", "15"])
    e = np.array([float(r["interaction"]) for r in rows])
    negative = bool(np.all(e < 0))
    nondecreasing = bool(np.all(np.diff(e) >= 0))
    ratio = abs(e[-1]) / abs(e[0])
    record(6, negative and nondecreasing and ratio <= 1e-3 and t.seconds < 120,
           f"negative={negative}, nondecreasing={nondecreasing}, |E(8)|/|E(1.5)| = {ratio:.2e} "
           f"(limit 1e-3), {t.seconds:.1f} s (limit 120 s)")


def test_criterion_07_three_obstacle_error_estimates():
    with Timer() as t:
        centre = relative_error_estimate(
            RescaledConfiguration(three_obstacle_geometry(5.0, 0.0, 0.0), 1 / FOUR_PI), 10)
        off = relative_error_estimate(
            RescaledConfiguration(three_obstacle_geometry(5.0, 3.0, 5.0), 1 / FOUR_PI), 10)
    record(7, centre <= 9.3e-3 and off <= 3e-2 and t.seconds < 300,
           f"relative error {centre:.2e} at (0,0) (limit 9.3e-3), {off:.2e} at (3,5) (limit 3e-2), "
           f"{t.seconds:.1f} s (limit 300 s)")


def test_criterion_08_equilibrium_points():
    with Timer() as t:
        three = ObstacleConfiguration.from_rescaled(three_obstacle_geometry(5.0, 0.0, 0.0))
        four = ObstacleConfiguration.from_rescaled(four_obstacle_geometry(5.0, 0.0, 0.0))
        f3 = float(np.linalg.norm(forces(three, J=10).per_obstacle[2]))
        f4 = float(np.linalg.norm(forces(four, J=10).per_obstacle[3]))
        # a small displacement is pushed further out: the equilibrium is unstable
        nudged = ObstacleConfiguration.from_rescaled(three_obstacle_geometry(5.0, 0.0, 0.5))
        push = float(forces(nudged, J=10).per_obstacle[2, 2])
    record(8, f3 <= 1e-6 and f4 <= 1e-6 and push > 1e-6 and t.seconds < 300,
           f"|F| = {f3:.1e} at the three-obstacle midpoint, {f4:.1e} at the four-obstacle centroid "
           f"(limit 1e-6), outward force {push:.1e} after a 0.5 shift, {t.seconds:.1f} s (limit 300 s)")


def test_criterion_09_thermodynamics():
    single = ObstacleConfiguration([[0, 0, 0]], [1.0])
    pair = ObstacleConfiguration.from_rescaled([[0, 0, 0], [0, 0, 3.0]])
    with Timer() as t:
        entropy_dev = 0.0
        for cfg in (single, pair):
            beta = 1e3 / (FOUR_PI * float(cfg.strengths.min()))
            # (1/12) sum_mn [Gamma(0)^-1]_mn with the sum equal to 4 pi^2 f0
            lead = math.pi**2 * f0(cfg) / 3
            p = thermo_point(cfg, beta)
            entropy_dev = max(entropy_dev, abs(beta * p.S_ren / lead - 1))
        c = hight_constants(pair)
        energy_dev = abs(1e-3 * thermo_point(pair, 1e-3, constants=c).U_ren / c.c_total - 1)
        identity = 0.0
        for beta in (1e-3, 0.1, 1.0, 10.0, 1e3):
            p = thermo_point(pair, beta, constants=c)
            identity = max(identity, abs(p.S_ren - beta * (p.U_ren - p.F_ren)) / max(1.0, abs(p.S_ren)))
    ok = entropy_dev <= 0.05 and energy_dev <= 0.10 and identity <= 1e-12 and t.seconds < 120
    record(9, ok,
           f"(a) entropy deviation {entropy_dev:.1e} (limit 5e-2), (b) energy deviation {energy_dev:.1e} "
           f"(limit 1e-1), (c) identity residual {identity:.1e} (limit 1e-12), {t.seconds:.1f} s (limit 120 s)")


def test_criterion_10_forces_independent_of_ell():
    rng = np.random.default_rng(SEED + 10)
    cfg = random_admissible(rng, 3)
    with Timer() as t:
        a = forces(cfg).per_obstacle
        b = forces(cfg.with_ell(2 * cfg.ell)).per_obstacle
    change = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    record(10, change <= 1e-10 and t.seconds < 30,
           f"max relative force change {change:.1e} (limit 1e-10), {t.seconds:.1f} s (limit 30 s)")


def test_criterion_11_zeta_continuation():
    rng = np.random.default_rng(SEED + 11)
    configs = [random_admissible(rng, n) for n in (1, 2, 3)]
    with Timer() as t:
        strip = max(abs(zeta_continued(c, 0.25) - zeta_strip(c, 0.25)) for c in configs)
        residue_dev = 0.0
        for c in configs:
            # (s + 1/2) zeta(s) is analytic at -1/2; symmetric averages cancel the odd terms
            sym = [0.5 * h * (zeta_continued(c, -0.5 + h) - zeta_continued(c, -0.5 - h)).real
                   for h in (2e-2, 1e-2)]
            extrapolated = (4 * sym[1] - sym[0]) / 3
            residue_dev = max(residue_dev, abs(extrapolated / (2 * c.strengths.sum()) - 1))
    record(11, strip <= 1e-7 and residue_dev <= 1e-2 and t.seconds < 60,
           f"|continued - strip| = {strip:.1e} (limit 1e-7), residue deviation {residue_dev:.1e} "
           f"(limit 1e-2), {t.seconds:.1f} s (limit 60 s)")


def _surface(geometry, xs, ys, J=10):
    grid = np.full((xs.size, ys.size), np.nan)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            system = RescaledConfiguration(geometry(x, y), 1 / FOUR_PI)
            if system.admissible:
                grid[i, j] = interaction_energy(system, J)
    return grid


def test_coarse_surfaces_qualitative():
    r = np.linspace(0.0, 8.0, 20)
    z = np.linspace(-6.0, 6.0, 20)
    s3 = _surface(lambda a, b: three_obstacle_geometry(5.0, a, b), r, z)
    xy = np.linspace(-7.0, 7.0, 20)
    s4 = _surface(lambda a, b: four_obstacle_geometry(5.0, a, b), xy, xy)

    negative = bool(np.nanmax(s3) < 0 and np.nanmax(s4) < 0)
    sym3 = float(np.nanmax(np.abs(s3 - s3[:, ::-1]) / np.abs(s3)))
    sym4 = float(np.nanmax(np.abs(s4 - s4[::-1, :]) / np.abs(s4)))

    def well_distance(surface, coords, fixed):
        i, j = np.unravel_index(np.nanargmin(surface), surface.shape)
        point = coords(i, j)
        return min(float(np.linalg.norm(point - f)) for f in fixed)

    fixed3 = np.array([[0.0, -2.5], [0.0, 2.5]])
    fixed4 = four_obstacle_geometry(5.0, 0.0, 0.0)[:3, :2]
    step3 = max(r[1] - r[0], z[1] - z[0])
    step4 = xy[1] - xy[0]
    well3 = well_distance(s3, lambda i, j: np.array([r[i], z[j]]), fixed3) <= 2.0 + step3
    well4 = well_distance(s4, lambda i, j: np.array([xy[i], xy[j]]), fixed4) <= 2.0 + step4
    ok = negative and sym3 <= 1e-10 and sym4 <= 1e-10 and well3 and well4
    line = (f"{'PASS' if ok else 'FAIL'} coarse surfaces: negative={negative}, z-reflection asymmetry "
            f"{sym3:.1e}, x-reflection asymmetry {sym4:.1e}, wells at fixed obstacles={well3 and well4}")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line
