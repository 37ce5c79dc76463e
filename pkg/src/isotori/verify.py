"""Machine-checkable certificates for cubes and toroidal nets.

Every check produces a ``CheckReport`` whose ``passed`` flag is
``value <= tolerance``.  A check that cannot be evaluated (infinitesimal
cross ratios without a common tangent circle) is reported with value NaN and
``applicable=False`` and does not count as a failure on its own.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .darboux import quad_law, ribbon_law
from .moebius import (
    cross_ratio_many,
    infinitesimal_cross_ratio,
    ribbon_tangency_defects,
)


@dataclass(frozen=True)
class Tolerances:
    closure: float = 1e-6
    concircular: float = 1e-9
    cross_ratio: float = 1e-10
    alternating: float = 1e-10
    factorization: float = 1e-8
    tangency: float = 1e-6
    infinitesimal: float = 1e-4
    ribbon_factorization: float = 1e-4
    consistency: float = 1e-7

    def scaled(self, factor: float) -> "Tolerances":
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class CheckReport:
    name: str
    scope: str
    value: float
    tolerance: float
    passed: bool
    applicable: bool = True

    def line(self) -> str:
        scope = self.scope if self.applicable else self.scope + ":n/a"
        return (
            f"check={self.name} scope={scope} value={_decimal(self.value)} "
            f"tol={_decimal(self.tolerance)} pass={int(self.passed)}"
        )


def _decimal(x: float) -> str:
    if np.isnan(x):
        return "nan"
    return f"{x:.9e}"


def _report(name, scope, value, tol) -> CheckReport:
    value = float(value)
    return CheckReport(name, scope, value, float(tol), bool(value <= tol))


@dataclass
class VerificationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def get(self, name: str) -> CheckReport:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> list:
        out = [c.line() for c in self.checks]
        out.append(f"summary checks={len(self.checks)} failed={len(self.failed)} pass={int(self.passed)}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _argmax_location(values, labels):
    flat = np.nan_to_num(np.abs(values), nan=np.inf)
    idx = np.unravel_index(int(np.argmax(flat)), values.shape)
    return labels(idx)


# -- Edge level -------------------------------------------------------------


def ribbon_measurements(a, b, mu):
    """Tangency defects and infinitesimal cross ratio errors of a smooth ribbon."""
    tangency = ribbon_tangency_defects(a.samples, a.velocity, b.samples, b.velocity)
    icr = infinitesimal_cross_ratio(a.samples, b.samples)
    law = ribbon_law(mu, a.polarization)
    return tangency, icr, np.abs(icr.value - law)


def quad_measurements(a, b, mu):
    """Concircularity defects and cross ratio errors of the quads between two polygons."""
    x, xn = a.samples, np.roll(a.samples, -1, axis=0)
    y, yn = b.samples, np.roll(b.samples, -1, axis=0)
    values, defects = cross_ratio_many(x, xn, yn, y)
    return defects, np.abs(values - quad_law(mu, a.polarization))


def edge_reports(a, b, mu, scope, tolerances=None) -> list:
    tol = tolerances or Tolerances()
    if a.kind == "discrete":
        defects, errors = quad_measurements(a, b, mu)
        return [
            _report("quad_concircular", f"{scope}@j{int(np.argmax(defects))}", np.max(defects), tol.concircular),
            _report("quad_cross_ratio", f"{scope}@j{int(np.argmax(errors))}", np.max(errors), tol.cross_ratio),
        ]
    tangency, _, errors = ribbon_measurements(a, b, mu)
    tan = _report("ribbon_tangency", f"{scope}@i{int(np.argmax(tangency))}", np.max(tangency), tol.tangency)
    if not tan.passed:
        icr = CheckReport("ribbon_icr", scope, float("nan"), tol.infinitesimal, True, applicable=False)
    else:
        icr = _report("ribbon_icr", f"{scope}@i{int(np.argmax(errors))}", np.max(errors), tol.infinitesimal)
    return [tan, icr]


# -- Net level --------------------------------------------------------------


def _vertex_array(net):
    """Positions indexed by (*grid, sample, coordinate)."""
    shape = net.grid.shape
    arr = np.empty(shape + (net.samples, net.n))
    for p, loop in net.loops.items():
        arr[p] = loop.samples
    return arr


def _labels(net, axis_count):
    """Per-axis edge labels broadcastable over (*grid, sample)."""
    grid = net.grid
    out = []
    for d in range(len(grid.shape)):
        lab = np.empty(grid.shape)
        for p in grid.points():
            lab[p] = net.edge_labels[(p, d)][1]
        out.append(lab[..., None])
    if axis_count > len(grid.shape):
        first = next(iter(net.loops.values()))
        out.append(np.broadcast_to(first.polarization, grid.shape + (net.samples,)))
    return out


def _face_data(verts, labels, a, b):
    va = np.roll(verts, -1, axis=a)
    vb = np.roll(verts, -1, axis=b)
    vab = np.roll(va, -1, axis=b)
    values, defects = cross_ratio_many(verts, va, vab, vb)
    expected = labels[b] / labels[a]
    return values, defects, expected, (verts, va, vab, vb)


def _min_corner_distance(corners):
    dists = []
    for i in range(4):
        for j in range(i + 1, 4):
            dists.append(np.linalg.norm(corners[i] - corners[j], axis=-1))
    return np.min(np.stack(dists), axis=0)


def _fit_residual(logs, a, b):
    moved = np.moveaxis(logs, (a, b), (-2, -1))
    rows = moved.mean(axis=-1, keepdims=True)
    cols = moved.mean(axis=-2, keepdims=True) - moved.mean(axis=(-2, -1), keepdims=True)
    return np.abs(moved - rows - cols)


def _sign_mismatch(values, a, b):
    s = np.sign(np.moveaxis(values, (a, b), (-2, -1)))
    pattern = s * s[..., :1, :] * s[..., :, :1] * s[..., :1, :1]
    return int(np.sum(pattern < 0))


def discrete_cell_reports(net, tol: Tolerances) -> list:
    """Concircularity and factorization over all discrete-discrete 2-cells."""
    verts = _vertex_array(net)
    grid_axes = len(net.grid.shape)
    loop_axis = grid_axes
    discrete_axes = list(range(grid_axes)) + ([loop_axis] if net.kind == "fully discrete" else [])
    labels = _labels(net, len(discrete_axes))
    pairs = [(a, b) for i, a in enumerate(discrete_axes) for b in discrete_axes[i + 1 :]]
    if not pairs:
        return []
    # Loop direction first so Darboux faces read (x_j, x_{j+1}, xh_{j+1}, xh_j).
    pairs = [(b, a) if b == loop_axis else (a, b) for a, b in pairs]
    worst = {"defect": (0.0, ""), "cr": (0.0, ""), "alt": (0.0, ""), "fit": (0.0, ""), "close": (np.inf, "")}
    sign_bad = 0

    def bump(key, value, loc, larger=True):
        if (value > worst[key][0]) if larger else (value < worst[key][0]):
            worst[key] = (float(value), loc)

    def where(a, b):
        def fmt(idx):
            return f"face{a}{b}:" + ",".join(str(int(i)) for i in idx[:-1]) + f"@j{int(idx[-1])}"

        return fmt

    for a, b in pairs:
        values, defects, expected, corners = _face_data(verts, labels, a, b)
        loc = where(a, b)
        bump("defect", np.max(defects), _argmax_location(defects, loc))
        err = np.abs(values - expected)
        bump("cr", np.max(err), _argmax_location(err, loc))
        dist = _min_corner_distance(corners)
        bump("close", np.min(dist), _argmax_location(-dist, loc), larger=False)
        alt = values / np.roll(values, 1, axis=a) * np.roll(np.roll(values, 1, axis=a), 1, axis=b) / np.roll(values, 1, axis=b)
        alt_err = np.abs(alt - 1.0)
        bump("alt", np.max(alt_err), _argmax_location(alt_err, loc))
        fit = _fit_residual(np.log(np.abs(values)), a, b)
        bump("fit", np.max(fit), f"face{a}{b}")
        sign_bad += _sign_mismatch(values, a, b)
    scale = float(np.max(np.abs(verts)))
    distinct = worst["close"][0] > 1e-12 * max(scale, 1.0)
    return [
        _report("quad_concircular", worst["defect"][1], worst["defect"][0], tol.concircular),
        CheckReport("quad_distinct_vertices", worst["close"][1], worst["close"][0], 0.0, distinct),
        _report("face_cross_ratio", worst["cr"][1], worst["cr"][0], tol.cross_ratio),
        _report("cr_alternating_product", worst["alt"][1], worst["alt"][0], tol.alternating),
        _report("cr_factorization_fit", worst["fit"][1], worst["fit"][0], tol.factorization),
        _report("cr_sign_pattern", "global", sign_bad, 0),
    ]


def check_quads_concircular(net, tolerances=None) -> CheckReport:
    return _pick(discrete_cell_reports(net, tolerances or Tolerances()), "quad_concircular")


def check_cr_factorization(net, tolerances=None) -> VerificationReport:
    names = {"cr_alternating_product", "cr_factorization_fit", "cr_sign_pattern"}
    reports = discrete_cell_reports(net, tolerances or Tolerances())
    return VerificationReport([r for r in reports if r.name in names])


def _pick(reports, name):
    for r in reports:
        if r.name == name:
            return r
    raise ValueError(f"net has no cells for {name}")


def check_semidiscrete_ribbons(net, tolerances=None) -> VerificationReport:
    """Tangency, infinitesimal cross ratio law and cross-ribbon factorization."""
    tol = tolerances or Tolerances()
    if net.kind != "semi-discrete":
        raise ValueError("ribbon checks need a semi-discrete net")
    grid = net.grid
    worst_tan, worst_icr = (0.0, ""), (0.0, "")
    icr_values = []
    for p in grid.points():
        for d in range(len(grid.shape)):
            q = grid.neighbour(p, d)
            _, mu = net.edge_labels[(p, d)]
            tangency, icr, errors = ribbon_measurements(net.loops[p], net.loops[q], mu)
            where = f"ribbon:{_pt(p)}->{_pt(q)}"
            if np.max(tangency) > worst_tan[0]:
                worst_tan = (float(np.max(tangency)), f"{where}@i{int(np.argmax(tangency))}")
            if np.max(errors) > worst_icr[0]:
                worst_icr = (float(np.max(errors)), f"{where}@i{int(np.argmax(errors))}")
            icr_values.append(icr.value)
    tan = _report("ribbon_tangency", worst_tan[1] or "ribbon", worst_tan[0], tol.tangency)
    reference = icr_values[0]
    variation = 0.0
    for vals in icr_values[1:]:
        ratio = vals / reference
        variation = max(variation, float((np.max(ratio) - np.min(ratio)) / np.abs(np.mean(ratio))))
    if tan.passed:
        icr = _report("ribbon_icr", worst_icr[1], worst_icr[0], tol.infinitesimal)
        fac = _report("ribbon_factorization", "global", variation, tol.ribbon_factorization)
    else:
        icr = CheckReport("ribbon_icr", "ribbon", float("nan"), tol.infinitesimal, True, applicable=False)
        fac = CheckReport("ribbon_factorization", "global", float("nan"), tol.ribbon_factorization, True, applicable=False)
    return VerificationReport([tan, icr, fac])


def _pt(p):
    return "(" + ",".join(str(v) for v in p) + ")"


def check_theorem_instance(net, n: int, k: int, tolerances=None) -> VerificationReport:
    """All applicable checks plus closure, fullness and dimension audit."""
    from .torus import fullness_rank

    tol = tolerances or Tolerances()
    checks = []
    gaps = net.closure_gaps()
    worst = max(gaps, key=lambda p: gaps[p])
    checks.append(_report("closure", f"loop:{_pt(worst)}", gaps[worst], tol.closure))
    if net.kind == "semi-discrete":
        checks.extend(check_semidiscrete_ribbons(net, tol).checks)
    checks.extend(discrete_cell_reports(net, tol))
    rank = fullness_rank(net.mesh_vertices)
    checks.append(CheckReport("fullness_rank", f"global:rank={rank}", float(n - rank), 0.0, rank == n))
    dims = len(net.grid.shape) + 1
    checks.append(CheckReport("dimension", f"global:dims={dims}", float(abs(dims - k)), 0.0, dims == k and net.n == n))
    return VerificationReport(checks)


def cube_reports(cube, tolerances=None) -> VerificationReport:
    """Closure per vertex, hexahedron consistency and every cube edge law."""
    from .bianchi import format_subset, verify_cube_edge

    tol = tolerances or Tolerances()
    checks = []
    for mask in range(len(cube.vertex_loops)):
        checks.append(_report("closure", f"vertex:{format_subset(mask)}", cube.closure_gap(mask), tol.closure))
    for mask, value in sorted(cube.consistency.items()):
        checks.append(_report("consistency", f"vertex:{format_subset(mask)}", value, tol.consistency))
    for mask in range(len(cube.vertex_loops)):
        for r in range(cube.directions):
            if not mask >> r & 1:
                checks.extend(verify_cube_edge(cube, mask, r + 1, tol))
    return VerificationReport(checks)
