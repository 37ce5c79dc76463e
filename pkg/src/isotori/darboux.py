"""Closed Darboux transforms, the cross-ratio propagation oracle and resonance scans."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    EigenIndexOutOfRange,
    ForbiddenCrossRatio,
    NoRealLightlikeEigenvector,
    PlaneNotInComplement,
    ZeroSpectralParameter,
)
from .loops import DiscreteLoop
from .lorentz import (
    RESONANCE_THRESHOLD,
    LightlikeEigenvector,
    Resonance,
    circle_fixing_rotation,
    inner,
    lift,
    lightlike_eigenvectors,
    project_many,
    real_lightlike_eigenvectors,
    resonance_defect,
)
from .moebius import solve_fourth_point_many
from .transport import DEFAULT_SUBSTEPS, discrete_point_transport, monodromies, transport_path

DEFAULT_OFF_PLANE_ANGLE = np.pi / 4


def ribbon_law(mu, m):
    """Infinitesimal cross ratio of a smooth Darboux ribbon: -mu/m."""
    return -np.asarray(mu, dtype=float) / np.asarray(m, dtype=float)


def quad_law(mu, m):
    """Cross ratio cr(x_j, x_{j+1}, xh_{j+1}, xh_j) of a discrete Darboux quad."""
    return np.asarray(mu, dtype=float) / np.asarray(m, dtype=float)


def permutability_law(nu1, nu2):
    """cr(y, y1, y12, y2) when y1, y2 are the nu1-, nu2-transforms of y."""
    return float(nu2) / float(nu1)


@dataclass(frozen=True, eq=False)
class DarbouxTransform:
    source: object
    result: object
    spectral_parameter: float
    initial_condition: np.ndarray
    eigen: LightlikeEigenvector | None
    eigen_index: int | None
    closure_gap: float
    sections: np.ndarray
    resonance: Resonance | None = None
    infinity_samples: tuple = ()
    touching_samples: tuple = ()
    section_lightlike_defect: float = 0.0


def _check_mu(mu):
    if mu == 0:
        raise ZeroSpectralParameter("spectral parameter must be nonzero")


def _resonance_initial(loop, mu, substeps, eigen_index):
    """Limit eigenvector at a resonance: lightlike eigenvectors of dP/dmu."""
    h = 1e-4 * max(1.0, abs(mu))
    pair = monodromies(loop, [mu - h, mu + h], substeps)
    found = lightlike_eigenvectors((pair[1] - pair[0]) / (2.0 * h))
    if not found:
        raise NoRealLightlikeEigenvector(f"no lightlike limit eigenvector at resonance mu={mu:g}")
    return _pick(found, eigen_index)


def _pick(found, eigen_index):
    if not 0 <= eigen_index < len(found):
        raise EigenIndexOutOfRange(f"eigen_index {eigen_index} out of range (have {len(found)})")
    return found[eigen_index]


def _discrete_sections(loop, mu, initial):
    """Sections from the point form of the edge maps, or None if it passes infinity."""
    scale = -inner(initial, np.r_[np.zeros(loop.n), -0.5, 0.5])
    if abs(scale) <= 1e-12 * np.linalg.norm(initial):
        return None
    start = initial[: loop.n] / (2.0 * scale)
    pts, scales = discrete_point_transport(loop, mu, start[None])
    if not np.all(np.isfinite(pts)) or np.min(np.abs(scales)) <= 1e-12 * np.max(np.abs(scales)):
        return None
    return scale * scales[:, 0, None] * lift(pts[:, 0])


def _build(loop, mu, path, initial, eigen, eigen_index, resonance):
    sections = None
    if loop.kind == "discrete":
        sections = _discrete_sections(loop, mu, initial)
    if sections is None:
        if path is None:
            path = transport_path(loop, mu)
        sections = path @ initial
    norms = np.linalg.norm(sections, axis=1)
    ldef = float(np.max(np.abs(inner(sections, sections)) / norms**2))
    points, at_inf = project_many(sections)
    lifts = lift(loop.samples)
    count = loop.size
    touch = np.abs(inner(sections[:count], lifts)) <= 1e-10 * norms[:count] * np.linalg.norm(lifts, axis=1)
    gap = float(np.linalg.norm(points[count] - points[0])) if not (at_inf[0] or at_inf[count]) else float("inf")
    result = loop.with_samples(points[:count]) if not at_inf[:count].any() else _flagged_loop(loop, points[:count])
    return DarbouxTransform(
        source=loop,
        result=result,
        spectral_parameter=float(mu),
        initial_condition=np.asarray(initial, dtype=float),
        eigen=eigen,
        eigen_index=eigen_index,
        closure_gap=gap,
        sections=sections,
        resonance=resonance,
        infinity_samples=tuple(int(i) for i in np.flatnonzero(at_inf[:count])),
        touching_samples=tuple(int(i) for i in np.flatnonzero(touch)),
        section_lightlike_defect=ldef,
    )


def _flagged_loop(loop, points):
    # Samples through infinity cannot form a valid loop object; keep the raw array.
    return points


def closed_darboux(loop, mu: float, eigen_index: int = 0, initial=None, substeps: int = DEFAULT_SUBSTEPS):
    """Darboux transform from a monodromy eigenvector (or an explicit initial vector).

    At a resonance every lightlike vector closes; without ``initial`` the
    lightlike eigenvectors of dP/dmu are used there.
    """
    _check_mu(mu)
    if loop.kind == "discrete":
        path = None
        final = monodromies(loop, [mu])[0]
    else:
        path = transport_path(loop, mu, substeps)
        final = path[-1]
    outcome = real_lightlike_eigenvectors(final)
    resonance = outcome if isinstance(outcome, Resonance) else None
    eigen = None
    if initial is None:
        if resonance is not None:
            eigen = _resonance_initial(loop, mu, substeps, eigen_index)
        else:
            eigen = _pick(outcome, eigen_index)
        initial = eigen.vector
    else:
        eigen_index = None
    return _build(loop, mu, path, np.asarray(initial, dtype=float), eigen, eigen_index, resonance)


def closed_darboux_smooth(loop, mu: float, eigen_index: int = 0, initial=None, substeps: int = DEFAULT_SUBSTEPS):
    if loop.kind != "smooth":
        raise TypeError("expected a smooth loop")
    return closed_darboux(loop, mu, eigen_index, initial, substeps)


def closed_darboux_discrete(loop, mu: float, eigen_index: int = 0, initial=None):
    if loop.kind != "discrete":
        raise TypeError("expected a discrete loop")
    return closed_darboux(loop, mu, eigen_index, initial)


@dataclass(frozen=True, eq=False)
class PropagatedLoop:
    loop: DiscreteLoop
    closure_gap: float
    end_point: np.ndarray


def cross_ratio_propagate(loop: DiscreteLoop, mu: float, start) -> PropagatedLoop:
    """Vertex-by-vertex transform with cr(x_j, x_{j+1}, xh_{j+1}, xh_j) = mu / m_j."""
    _check_mu(mu)
    targets = mu / loop.edge_polarization
    if np.any((targets == 0) | (targets == 1)):
        raise ForbiddenCrossRatio("mu / m equals 0 or 1 on some edge")
    verts = loop.vertices
    count = loop.size
    out = np.empty((count + 1, loop.n))
    out[0] = np.asarray(start, dtype=float)
    for j in range(count):
        pts, status = solve_fourth_point_many(verts[j], verts[(j + 1) % count], out[j], targets[j])
        if status[0]:
            raise ForbiddenCrossRatio(f"propagation failed on edge {j} (status {status[0]})")
        out[j + 1] = pts[0]
    gap = float(np.linalg.norm(out[count] - out[0]))
    return PropagatedLoop(DiscreteLoop(out[:count], loop.edge_polarization), gap, out[count])


def dual_route_agreement(transform: DarbouxTransform) -> float:
    """Max vertex distance between the matrix route and cross-ratio propagation."""
    prop = cross_ratio_propagate(transform.source, transform.spectral_parameter, transform.result.vertices[0])
    return float(np.max(np.linalg.norm(prop.loop.vertices - transform.result.vertices, axis=1)))


@dataclass(frozen=True)
class ResonanceReport:
    mu_values: tuple
    defects: tuple
    signs: tuple
    refinement_width: float


def resonance_defects(loop, mus, substeps: int = DEFAULT_SUBSTEPS):
    """d(mu) = min(max|P - I|, max|P + I|) for each mu, with the winning sign."""
    maps = monodromies(loop, mus, substeps)
    out = [resonance_defect(m) for m in maps]
    return np.array([d for d, _ in out]), np.array([s for _, s in out])


def resonance_scan(
    loop,
    mu_range,
    grid: int,
    substeps: int = DEFAULT_SUBSTEPS,
    threshold: float = RESONANCE_THRESHOLD,
    width: float = 1e-9,
) -> ResonanceReport:
    """Grid scan of d(mu), golden-section refinement of interior local minima."""
    lo, hi = (float(v) for v in mu_range)
    if not lo < hi:
        raise ValueError("empty spectral range")
    if lo <= 0 <= hi:
        raise ZeroSpectralParameter("scan range must exclude 0")
    if grid < 3:
        raise ValueError("grid needs at least 3 points to bracket a minimum")
    if loop.kind == "discrete":
        pol = loop.edge_polarization
        if np.any((pol >= lo) & (pol <= hi)):
            raise ValueError("scan range contains a pole mu = m")
    mus = np.linspace(lo, hi, grid)
    d, _ = resonance_defects(loop, mus, substeps)
    found, defects, signs = [], [], []
    for i in range(1, grid - 1):
        if not (d[i] < d[i - 1] and d[i] <= d[i + 1]):
            continue
        f = lambda mu: float(resonance_defects(loop, [mu], substeps)[0][0])
        mid = mus[i]
        res = minimize_scalar(f, bracket=(mus[i - 1], mid, mus[i + 1]), method="golden", tol=width / (2.0 * abs(mid)))
        dval, sign = resonance_defects(loop, [res.x], substeps)
        if dval[0] <= threshold:
            found.append(float(res.x))
            defects.append(float(dval[0]))
            signs.append(int(sign[0]))
    return ResonanceReport(tuple(found), tuple(defects), tuple(signs), width)


def move_transform_off_plane(transform: DarbouxTransform, target_axis: int, angle: float = DEFAULT_OFF_PLANE_ANGLE):
    """Rotate a transform of the planar circle toward the coordinate axis e_j (1-based).

    The rotation acts in the plane of e_j and the ``1 - |x|^2`` slot, which is
    orthogonal to every lift of a circle centered at the origin in
    span{e1, e2}, so the circle stays fixed pointwise.
    """
    source = transform.source
    n = source.n
    if not 3 <= target_axis <= n:
        raise PlaneNotInComplement(f"target axis must satisfy 3 <= j <= {n}")
    count = source.size
    picks = source.samples[[0, count // 3, (2 * count) // 3]]
    pair = (n, target_axis - 1)
    rot = circle_fixing_rotation(picks, pair, angle)
    lifts = lift(source.samples)
    if np.max(np.abs(lifts[:, list(pair)])) > 1e-10 * np.max(np.abs(lifts)):
        raise PlaneNotInComplement("source loop is not the circle fixed by this rotation")
    sections = transform.sections @ rot.T
    points, at_inf = project_many(sections)
    gap = float(np.linalg.norm(points[count] - points[0]))
    result = source.with_samples(points[:count]) if not at_inf[:count].any() else points[:count]
    eigen = transform.eigen
    if eigen is not None:
        eigen = replace(eigen, vector=rot @ eigen.vector)
    return replace(
        transform,
        result=result,
        initial_condition=rot @ transform.initial_condition,
        eigen=eigen,
        closure_gap=gap,
        sections=sections,
        infinity_samples=tuple(int(i) for i in np.flatnonzero(at_inf[:count])),
    )

