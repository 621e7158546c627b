"""Command-line interface.

Every command writes one CSV table (to ``--out`` or stdout).  The first line is
a ``#`` comment naming the package version and describing each column.
``--json`` additionally writes the full per-point records.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import COMMANDS, RunManifest, build_manifest
from .errors import ConfigurationError, NumericalError
from .model import (
    FOUR_PI,
    RescaledConfiguration,
    four_obstacle_geometry,
    rescale,
    three_obstacle_geometry,
    validate,
)
from .spectral import born_density_terms, f_coefficients, spectral_density
from .thermo import hight_constants, thermo_point, vacuum_energy
from .vacuum import (
    PATH_BUDGET,
    choose_J,
    energy_born,
    energy_direct,
    energy_identical,
    forces,
    interaction_energy,
    path_count,
    relative_error_estimate,
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
DEFAULT_SCAN_J = 10


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


class Table:
    def __init__(self, command: str, columns: list[tuple[str, str]]):
        self.command = command
        self.columns = columns
        self.rows: list[list] = []
        self.records: list[dict] = []

    def add(self, row: list, record: dict | None = None):
        self.rows.append([_fmt(v) for v in row])
        if record is not None:
            self.records.append(record)

    def render(self) -> str:
        buf = io.StringIO()
        described = "; ".join(f"{name} = {desc}" for name, desc in self.columns)
        buf.write(f"# pointcasimir {__version__} {self.command}: {described}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([name for name, _ in self.columns])
        writer.writerows(self.rows)
        return buf.getvalue()


def _pool_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _scan_point(args):
    """Interaction energy and relative error for one rescaled geometry."""
    y, J, mode = args
    rescaled = RescaledConfiguration(y, 1.0 / FOUR_PI)
    rho = rescaled.rho
    if not rescaled.admissible:
        return rho, False, None, None
    energy = interaction_energy(rescaled, J)
    rel = relative_error_estimate(rescaled, J, mode)
    return rho, True, energy, rel


_SCAN_COLUMNS = [
    ("rho", "separation parameter (admissible iff < 1)"),
    ("admissible", "true when rho < 1"),
    ("interaction", "E1 + sum_{j=2..J} Ej in units of 4*pi*alpha"),
    ("relative_error", "neglected orders sum_{j>J}|Ej| / |interaction|"),
]


def _run_scan(m: RunManifest, labels, points) -> Table:
    J = m.J or DEFAULT_SCAN_J
    table = Table(m.command, labels + _SCAN_COLUMNS)
    results = _pool_map(_scan_point, [(y, J, m.rel_error) for _, y in points], m.workers)
    for (coords, _), (rho, ok, energy, rel) in zip(points, results):
        table.add(list(coords) + [rho, ok, energy, rel],
                  {"coords": list(coords), "rho": rho, "admissible": ok,
                   "interaction": energy, "relative_error": rel, "J": J})
    return table


def cmd_scan2(m: RunManifest) -> Table:
    axis = m.grid[0] if m.grid else None
    if axis is None or len(m.grid) != 1:
        raise ConfigurationError("scan2 needs --grid d0:d1:n")
    pts = [((float(d),), np.array([[0.0, 0.0, 0.0], [0.0, 0.0, float(d)]]))
           for d in axis.values()]
    return _run_scan(m, [("d12", "rescaled distance |y1 - y2|")], pts)


def cmd_grid3(m: RunManifest) -> Table:
    if len(m.grid) != 2:
        raise ConfigurationError("grid3 needs --grid r0:r1:n,z0:z1:n")
    pts = [((float(r), float(z)), three_obstacle_geometry(m.a, r, z))
           for r in m.grid[0].values() for z in m.grid[1].values()]
    return _run_scan(m, [("r", "rescaled cylindrical radius of obstacle 3"),
                         ("z", "rescaled height of obstacle 3; obstacles 1, 2 at z = -+a/2")], pts)


def cmd_grid4(m: RunManifest) -> Table:
    if len(m.grid) != 2:
        raise ConfigurationError("grid4 needs --grid x0:x1:n,y0:y1:n")
    pts = [((float(x), float(y)), four_obstacle_geometry(m.b, x, y))
           for x in m.grid[0].values() for y in m.grid[1].values()]
    return _run_scan(m, [("x", "rescaled x of obstacle 4"),
                         ("y", "rescaled y of obstacle 4; triangle vertices at distance b")], pts)


def cmd_validate(m: RunManifest) -> Table:
    cfg = m.configuration()
    rep = validate(cfg)
    table = Table(m.command, [
        ("n", "number of obstacles"),
        ("rho", "separation parameter"),
        ("admissible", "true when all strengths are positive, points distinct and rho < 1"),
        ("min_pair_distance", "smallest |x_m - x_n| in input length units"),
        ("slow_convergence", "true when rho >= 0.95"),
        ("violations", "reasons for rejection"),
    ])
    table.add([cfg.n, rep.rho, rep.admissible, rep.min_pair_distance, rep.slow_convergence,
               "; ".join(rep.violations)],
              {"n": cfg.n, "rho": rep.rho, "admissible": rep.admissible,
               "min_pair_distance": rep.min_pair_distance, "violations": list(rep.violations)})
    return table


def cmd_density(m: RunManifest) -> Table:
    cfg = m.configuration()
    if len(m.grid) != 1:
        raise ConfigurationError("density needs --grid v0:v1:n")
    J = m.J or 10
    v = m.grid[0].values()
    if np.any(v <= 0):
        raise ConfigurationError("density frequencies must be positive")
    exact = spectral_density(cfg, v)
    born = born_density_terms(cfg, v, J).sum(axis=0)
    q = (1.0 + (v / (FOUR_PI * cfg.strengths.max())) ** 2) ** -0.5
    rq = cfg.rho * q
    bound = cfg.n / (4 * math.pi**2 * cfg.strengths.min()) * q * rq ** (J + 1) / (1.0 - rq)
    table = Table(m.command, [
        ("v", "frequency"),
        ("e", "relative spectral density from the exact Gamma inverse"),
        ("born_partial", f"sum of Born density terms e_0..e_{J}"),
        ("remainder_bound", "geometric bound on the omitted Born terms"),
    ])
    for row in zip(v, np.atleast_1d(exact), born, bound):
        table.add(list(row), dict(zip(("v", "e", "born_partial", "remainder_bound"), map(float, row))))
    return table


def cmd_energy(m: RunManifest) -> Table:
    cfg = m.configuration()
    cfg.report.raise_if_inadmissible()
    table = Table(m.command, [
        ("route", "evaluation route"),
        ("total", "vacuum energy in absolute units"),
        ("e0_ren", "single-obstacle term"),
        ("e1_ren", "single-exchange term (whole interaction for the direct route)"),
        ("higher", "sum of Born orders j >= 2"),
        ("tail_bound", "bound on omitted Born orders"),
        ("J", "last Born order kept"),
        ("quadrature_error", "summed quadrature error estimates"),
    ])
    results = [energy_born(cfg, m.tol, m.J), energy_direct(cfg, m.v0, m.tol)]
    try:
        rescaled = rescale(cfg)
    except ConfigurationError:
        rescaled = None
    if rescaled is not None:
        J = m.J or (choose_J(cfg, m.tol) if cfg.n > 1 else 1)
        if cfg.n == 1 or path_count(cfg.n, J) <= PATH_BUDGET:
            results.append(energy_identical(rescaled, J, cfg.ell))
    for r in results:
        s = r.energy_scale
        table.add([r.route.value, r.total * s, r.e0_ren * s, r.e1_ren * s, sum(r.higher_terms) * s,
                   r.tail_bound * s, r.J_used, r.quadrature_error * s], r.to_dict())
    return table


def cmd_force(m: RunManifest) -> Table:
    cfg = m.configuration()
    res = forces(cfg, J=m.J, tol=m.tol)
    table = Table(m.command, [
        ("obstacle", "index"),
        ("Fx", "x component of minus the gradient of the interaction energy"),
        ("Fy", "y component"),
        ("Fz", "z component"),
        ("magnitude", "Euclidean norm"),
    ])
    for i, f in enumerate(res.per_obstacle):
        table.add([i, f[0], f[1], f[2], float(np.linalg.norm(f))],
                  {"obstacle": i, "force": f.tolist()})
    table.records.append({"pairwise_intensities": res.pairwise_intensities.tolist(),
                          "step_report": res.gradient_step_report})
    return table


def cmd_thermo(m: RunManifest) -> Table:
    cfg = m.configuration()
    cfg.report.raise_if_inadmissible()
    if not m.betas:
        raise ConfigurationError("thermo needs --beta b1,b2,...")
    e_vac = vacuum_energy(cfg, m.tol)
    constants = hight_constants(cfg)
    f = f_coefficients(cfg, 1).values
    table = Table(m.command, [
        ("beta", "inverse temperature"),
        ("log_eta", "int log(1 - exp(-beta v)) e(v) dv"),
        ("dbeta_log_eta", "int v e(v) / (exp(beta v) - 1) dv"),
        ("F", "free energy E_vac + log_eta / beta"),
        ("U", "internal energy E_vac + dbeta_log_eta"),
        ("S", "entropy beta (U - F)"),
        ("F_lowT", "low-temperature series through order beta^-4"),
        ("U_lowT", "low-temperature series through order beta^-4"),
        ("S_lowT", "low-temperature series through order beta^-3"),
        ("F_highT", "leading high-temperature terms"),
        ("U_highT", "leading high-temperature term"),
        ("S_highT", "leading high-temperature terms"),
    ])
    for beta in m.betas:
        p = thermo_point(cfg, beta, e_vac=e_vac, constants=constants, f=f)
        table.add([beta, p.log_eta, p.dbeta_log_eta, p.F_ren, p.U_ren, p.S_ren,
                   p.lowT_model["F"], p.lowT_model["U"], p.lowT_model["S"],
                   p.highT_model["F"], p.highT_model["U"], p.highT_model["S"]], p.to_dict())
    return table


HANDLERS = {
    "validate": cmd_validate,
    "density": cmd_density,
    "energy": cmd_energy,
    "force": cmd_force,
    "thermo": cmd_thermo,
    "scan2": cmd_scan2,
    "grid3": cmd_grid3,
    "grid4": cmd_grid4,
}


def run(manifest: RunManifest) -> int:
    table = HANDLERS[manifest.command](manifest)
    text = table.render()
    if manifest.output_path:
        with open(manifest.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if manifest.json_path:
        with open(manifest.json_path, "w") as fh:
            json.dump({"version": __version__, "command": manifest.command,
                       "points": table.records}, fh, indent=2, default=_json_default)
            fh.write("\n")
    return 0


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointcasimir",
        description="Casimir energies, forces and thermodynamics of point obstacles.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML or JSON run configuration")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--json", dest="json_path", help="also write full records as JSON")
    parser.add_argument("--tol", type=float, help="target tolerance for energies")
    parser.add_argument("--J", type=int, help="Born truncation order")
    parser.add_argument("--v0", type=float, help="split frequency for direct quadrature")
    parser.add_argument("--beta", help="comma-separated inverse temperatures")
    parser.add_argument("--grid", help='grid axes, e.g. "0:8:41,-6:6:49"')
    parser.add_argument("--a", type=float, help="fixed-pair separation for grid3 (rescaled)")
    parser.add_argument("--b", type=float, help="triangle size for grid4 (rescaled)")
    parser.add_argument("--workers", type=int, help="worker processes for grids")
    parser.add_argument("--rel-error", choices=("summed", "bound"),
                        help="relative error from summed extra orders or from the closed bound")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = build_manifest(
            args.command, args.config,
            output_path=args.out, json_path=args.json_path, tol=args.tol, J=args.J,
            v0=args.v0, betas=args.beta, grid=args.grid, a=args.a, b=args.b,
            workers=args.workers, rel_error=args.rel_error,
        )
        return run(manifest)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
