"""Command-line driver: transform, resonance-scan, cube, torus, verify, export.

Configuration is an INI-style file (``key = value`` under ``[section]``
headers) read with configparser.  See README.md for the full grammar.

Exit codes: 0 success, 1 a verification check failed, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .bianchi import build_cube
from .darboux import (
    DEFAULT_OFF_PLANE_ANGLE,
    closed_darboux,
    dual_route_agreement,
    move_transform_off_plane,
    resonance_scan,
)
from .errors import ConfigError, IsotoriError
from .formats import format_cube_manifest, read_grid_map, read_loop, write_grid_map, write_loop, write_obj, write_report
from .loops import make_circle, make_discrete_circle
from .lorentz import RESONANCE_THRESHOLD
from .torus import default_walk_2torus, extract_torus, product_grid_map
from .transport import DEFAULT_SUBSTEPS
from .verify import CheckReport, Tolerances, VerificationReport, check_theorem_instance, cube_reports

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

DUAL_ROUTE_TOLERANCE = 1e-8

_RUN_KEYS = {"n", "mode", "samples", "vertices", "polarization", "substeps", "precision", "loop_file"}
_GRID_KEYS = {"map", "k", "file"}
_TRANSFORM_KEYS = {"mu", "eigen_index", "off_plane_axis", "angle", "initial"}
_SCAN_KEYS = {"mu_min", "mu_max", "grid", "threshold", "width"}
_TOLERANCE_KEYS = {f.name for f in fields(Tolerances)}


@dataclass(frozen=True)
class TransformSpec:
    mu: float
    eigen_index: int = 0
    off_plane_axis: int | None = None
    angle: float = DEFAULT_OFF_PLANE_ANGLE
    random_initial: bool = False


@dataclass(frozen=True)
class ScanSpec:
    mu_min: float
    mu_max: float
    grid: int
    threshold: float = RESONANCE_THRESHOLD
    width: float = 1e-9


@dataclass(frozen=True)
class RunConfig:
    n: int
    mode: str
    size: int
    polarization: float = 1.0
    loop_file: str | None = None
    substeps: int = DEFAULT_SUBSTEPS
    precision: int = 9
    transforms: tuple = ()
    grid_map: str | None = None
    k: int | None = None
    grid_file: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    scan: ScanSpec | None = None


def _get(section, key, convert, name):
    raw = section[key]
    try:
        return convert(raw)
    except ValueError:
        raise ConfigError(f"[{name}] {key} = {raw!r} is not a valid {convert.__name__}") from None


def _reject_unknown(section, allowed, name):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")


def _parse_transform(section, name) -> TransformSpec:
    _reject_unknown(section, _TRANSFORM_KEYS, name)
    if "mu" not in section:
        raise ConfigError(f"[{name}] needs mu")
    mu = _get(section, "mu", float, name)
    if mu == 0 or not math.isfinite(mu):
        raise ConfigError(f"[{name}] mu must be finite and nonzero")
    index = _get(section, "eigen_index", int, name) if "eigen_index" in section else 0
    if index < 0:
        raise ConfigError(f"[{name}] eigen_index must be >= 0")
    axis = _get(section, "off_plane_axis", int, name) if "off_plane_axis" in section else None
    if "angle" in section and axis is None:
        raise ConfigError(f"[{name}] angle needs off_plane_axis")
    angle = _get(section, "angle", float, name) if "angle" in section else DEFAULT_OFF_PLANE_ANGLE
    initial = section.get("initial", "eigen")
    if initial not in ("eigen", "random"):
        raise ConfigError(f"[{name}] initial must be eigen or random")
    return TransformSpec(mu, index, axis, angle, initial == "random")


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    sections = parser.sections()
    for name in sections:
        if name not in ("run", "grid", "tolerances", "scan") and not name.startswith("transform."):
            raise ConfigError(f"unknown section [{name}]")
    if "run" not in parser:
        raise ConfigError("missing [run] section")
    run = parser["run"]
    _reject_unknown(run, _RUN_KEYS, "run")
    for key in ("n", "mode"):
        if key not in run:
            raise ConfigError(f"[run] needs {key}")
    n = _get(run, "n", int, "run")
    if n < 2:
        raise ConfigError("[run] n must be at least 2")
    mode = run["mode"]
    if mode not in ("smooth", "discrete"):
        raise ConfigError("[run] mode must be smooth or discrete")
    size_key = "samples" if mode == "smooth" else "vertices"
    other = "vertices" if mode == "smooth" else "samples"
    if other in run:
        raise ConfigError(f"[run] {other} does not apply to mode={mode}")
    loop_file = run.get("loop_file")
    if loop_file is not None:
        loop_file = os.path.join(base_dir, loop_file)
        size = 0
        if size_key in run or "polarization" in run:
            raise ConfigError(f"[run] loop_file excludes {size_key} and polarization")
    else:
        if size_key not in run:
            raise ConfigError(f"[run] needs {size_key} for mode={mode}")
        size = _get(run, size_key, int, "run")
    polarization = _get(run, "polarization", float, "run") if "polarization" in run else 1.0
    if polarization == 0 or (mode == "smooth" and polarization < 0):
        raise ConfigError("[run] polarization must be nonzero (positive for smooth loops)")
    substeps = _get(run, "substeps", int, "run") if "substeps" in run else DEFAULT_SUBSTEPS
    precision = _get(run, "precision", int, "run") if "precision" in run else 9
    if substeps < 1 or not 1 <= precision <= 17:
        raise ConfigError("[run] substeps must be >= 1 and precision in 1..17")

    names = sorted((s for s in sections if s.startswith("transform.")), key=_transform_order)
    transforms = tuple(_parse_transform(parser[s], s) for s in names)
    mus = [t.mu for t in transforms]
    if len(set(mus)) != len(mus):
        raise ConfigError("transform spectral parameters must be distinct")

    grid_map = k = grid_file = None
    if "grid" in parser:
        grid = parser["grid"]
        _reject_unknown(grid, _GRID_KEYS, "grid")
        if "map" not in grid or "k" not in grid:
            raise ConfigError("[grid] needs map and k")
        grid_map = grid["map"]
        k = _get(grid, "k", int, "grid")
        if grid_map not in ("default_2torus", "product", "file"):
            raise ConfigError("[grid] map must be default_2torus, product or file")
        if grid_map == "default_2torus" and k != 2:
            raise ConfigError("[grid] default_2torus has k = 2")
        if grid_map == "file":
            if "file" not in grid:
                raise ConfigError("[grid] map = file needs file")
            grid_file = os.path.join(base_dir, grid["file"])
        elif "file" in grid:
            raise ConfigError("[grid] file only applies to map = file")

    tolerances = Tolerances()
    if "tolerances" in parser:
        section = parser["tolerances"]
        _reject_unknown(section, _TOLERANCE_KEYS, "tolerances")
        values = {key: _get(section, key, float, "tolerances") for key in section}
        if any(not v > 0 for v in values.values()):
            raise ConfigError("[tolerances] values must be positive")
        tolerances = Tolerances(**values)

    scan = None
    if "scan" in parser:
        section = parser["scan"]
        _reject_unknown(section, _SCAN_KEYS, "scan")
        for key in ("mu_min", "mu_max", "grid"):
            if key not in section:
                raise ConfigError(f"[scan] needs {key}")
        lo, hi = _get(section, "mu_min", float, "scan"), _get(section, "mu_max", float, "scan")
        count = _get(section, "grid", int, "scan")
        if not lo < hi or lo <= 0 <= hi:
            raise ConfigError("[scan] needs mu_min < mu_max and a range excluding 0")
        if count < 3:
            raise ConfigError("[scan] grid needs at least 3 points to bracket a minimum")
        extra = {key: _get(section, key, float, "scan") for key in ("threshold", "width") if key in section}
        scan = ScanSpec(lo, hi, count, **extra)

    return RunConfig(
        n=n,
        mode=mode,
        size=size,
        polarization=polarization,
        loop_file=loop_file,
        substeps=substeps,
        precision=precision,
        transforms=transforms,
        grid_map=grid_map,
        k=k,
        grid_file=grid_file,
        tolerances=tolerances,
        scan=scan,
    )


def _transform_order(name):
    suffix = name.split(".", 1)[1]
    try:
        return int(suffix)
    except ValueError:
        raise ConfigError(f"transform section [{name}] needs an integer label") from None


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


# -- Pipeline ----------------------------------------------------------------


def base_loop(config: RunConfig):
    if config.loop_file is not None:
        try:
            loop = read_loop(config.loop_file)
        except OSError as exc:
            raise ConfigError(f"cannot read loop file: {exc}") from None
        except IsotoriError as exc:
            raise ConfigError(f"bad loop file: {exc}") from None
        if loop.kind != config.mode or loop.n != config.n:
            raise ConfigError("loop file kind or dimension disagrees with [run]")
        return loop
    try:
        if config.mode == "smooth":
            return make_circle(config.n, config.size, config.polarization)
        return make_discrete_circle(config.n, config.size, config.polarization)
    except IsotoriError as exc:
        raise ConfigError(str(exc)) from None


def random_lightlike(n: int, rng) -> np.ndarray:
    u = rng.standard_normal(n + 1)
    return np.append(u, np.linalg.norm(u))


def first_layer(config: RunConfig, loop, seed: int = 0):
    if not config.transforms:
        raise ConfigError("no [transform.N] sections")
    rng = np.random.default_rng(seed)
    out = []
    for spec in config.transforms:
        initial = random_lightlike(loop.n, rng) if spec.random_initial else None
        tr = closed_darboux(loop, spec.mu, spec.eigen_index, initial, config.substeps)
        if spec.off_plane_axis is not None:
            tr = move_transform_off_plane(tr, spec.off_plane_axis, spec.angle)
        out.append(tr)
    return out


def grid_for(config: RunConfig, directions: int):
    if config.grid_map is None:
        raise ConfigError("missing [grid] section")
    if config.grid_map == "default_2torus":
        return default_walk_2torus(directions)
    if config.grid_map == "product":
        return product_grid_map(directions, config.k)
    try:
        grid = read_grid_map(config.grid_file)
    except OSError as exc:
        raise ConfigError(f"cannot read grid file: {exc}") from None
    except IsotoriError as exc:
        raise ConfigError(f"bad grid file: {exc}") from None
    if grid.k != config.k:
        raise ConfigError(f"grid file has k={grid.k}, [grid] says k={config.k}")
    return grid


def build_net(config: RunConfig, seed: int = 0):
    loop = base_loop(config)
    layer = first_layer(config, loop, seed)
    cube = build_cube(loop, layer)
    grid = grid_for(config, cube.directions)
    return cube, extract_torus(cube, grid)


def _transform_lines(transforms, tol):
    info, checks = [], []
    for r, tr in enumerate(transforms, start=1):
        scope = f"transform:{r}"
        if tr.eigen is not None:
            e = tr.eigen
            info.append(
                f"transform r={r} mu={tr.spectral_parameter!r} eigen_index={tr.eigen_index} "
                f"eigenvalue={e.eigenvalue:.9e} lightlike_defect={e.lightlike_defect:.9e} "
                f"residual={e.residual:.9e} resonance={int(tr.resonance is not None)}"
            )
        else:
            info.append(
                f"transform r={r} mu={tr.spectral_parameter!r} initial=given resonance={int(tr.resonance is not None)}"
            )
        checks.append(CheckReport("closure", scope, tr.closure_gap, tol.closure, tr.closure_gap <= tol.closure))
        if tr.source.kind == "discrete" and not tr.infinity_samples:
            agreement = dual_route_agreement(tr)
            checks.append(
                CheckReport("dual_route", scope, agreement, DUAL_ROUTE_TOLERANCE, agreement <= DUAL_ROUTE_TOLERANCE)
            )
    return info, VerificationReport(checks)


# -- Commands ------------------------------------------------------------------


def cmd_transform(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    loop = base_loop(config)
    transforms = first_layer(config, loop, seed)
    info, report = _transform_lines(transforms, tol)
    write_loop(loop, os.path.join(out, "base.loop"))
    for r, tr in enumerate(transforms, start=1):
        if tr.infinity_samples:
            info.append(f"transform r={r} infinity_samples={','.join(str(i) for i in tr.infinity_samples)}")
        else:
            write_loop(tr.result, os.path.join(out, f"transform_{r}.loop"))
    _write_text(os.path.join(out, "transforms.manifest"), "\n".join(info) + "\n")
    write_report(report, os.path.join(out, "transform.report"))
    print(report.lines()[-1])
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_resonance_scan(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    if config.scan is None:
        raise ConfigError("missing [scan] section")
    loop = base_loop(config)
    scan = config.scan
    if loop.kind == "discrete":
        pol = loop.edge_polarization
        if np.any((pol >= scan.mu_min) & (pol <= scan.mu_max)):
            raise ConfigError("[scan] range contains a pole mu = m")
    report = resonance_scan(loop, (scan.mu_min, scan.mu_max), scan.grid, config.substeps, scan.threshold, scan.width)
    lines = [
        f"resonances count={len(report.mu_values)} mu_min={scan.mu_min!r} mu_max={scan.mu_max!r} "
        f"grid={scan.grid} width={report.refinement_width:.9e}"
    ]
    for mu, d, s in zip(report.mu_values, report.defects, report.signs):
        lines.append(f"resonance mu={mu:.12f} defect={d:.9e} sign={s:+d}")
    _write_text(os.path.join(out, "resonances.txt"), "\n".join(lines) + "\n")
    print(lines[0])
    return EXIT_OK


def cmd_cube(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    loop = base_loop(config)
    cube = build_cube(loop, first_layer(config, loop, seed))
    report = cube_reports(cube, tol)
    _write_text(os.path.join(out, "cube.manifest"), format_cube_manifest(cube, report))
    for mask, vertex in enumerate(cube.vertex_loops):
        label = "-".join(str(i) for i in _members(mask)) or "base"
        write_loop(vertex, os.path.join(out, f"vertex_{label}.loop"))
    print(report.lines()[-1])
    return EXIT_OK if report.passed else EXIT_VERIFY


def _members(mask):
    return [i + 1 for i in range(mask.bit_length()) if mask >> i & 1]


def _net_and_report(config, seed, tol):
    cube, net = build_net(config, seed)
    return cube, net, check_theorem_instance(net, config.n, net.grid.k, tol)


def cmd_torus(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    cube, net, report = _net_and_report(config, seed, tol)
    write_obj(net, os.path.join(out, "torus.obj"), config.precision)
    write_grid_map(net.grid, os.path.join(out, "torus.gridmap"))
    _write_text(os.path.join(out, "cube.manifest"), format_cube_manifest(cube, cube_reports(cube, tol)))
    write_report(report, os.path.join(out, "torus.report"))
    print(report.lines()[-1])
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_verify(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    _, _, report = _net_and_report(config, seed, tol)
    write_report(report, os.path.join(out, "verify.report"))
    sys.stdout.write(report.text())
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_export(config: RunConfig, out: str, seed: int, tol: Tolerances) -> int:
    _, net = build_net(config, seed)
    write_obj(net, os.path.join(out, "torus.obj"), config.precision)
    write_grid_map(net.grid, os.path.join(out, "torus.gridmap"))
    print(f"wrote {os.path.join(out, 'torus.obj')} vertices={len(net.mesh_vertices)} quads={len(net.mesh_quads)}")
    return EXIT_OK


def _write_text(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


COMMANDS = {
    "transform": cmd_transform,
    "resonance-scan": cmd_resonance_scan,
    "cube": cmd_cube,
    "torus": cmd_torus,
    "verify": cmd_verify,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isotori", description="Darboux transforms and isothermic tori of closed curves.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for random initial conditions")
    parser.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if not args.tolerance_scale > 0:
            raise ConfigError("--tolerance-scale must be positive")
        config = load_config(args.config)
        tol = config.tolerances.scaled(args.tolerance_scale)
        return COMMANDS[args.command](config, args.out, args.seed, tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IsotoriError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
