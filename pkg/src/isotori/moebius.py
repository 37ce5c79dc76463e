"""Cross ratios, the fourth-point solver and tangent circles.

Cross ratios are evaluated with the light-cone formula

    cr(y, y1, y12, y2) = (<Y,Y1><Y12,Y2> + <Y,Y2><Y1,Y12> - <Y,Y12><Y1,Y2>)
                         / (2 <Y,Y2><Y1,Y12>)

on the lifts, with each pairing taken as <X, Y> = -2|x - y|^2.  For four concircular points this is the real number
((a-b)(c-d)) / ((b-c)(d-a)) with (a, b, c, d) = (y, y1, y12, y2) read as
complex coordinates in the plane of the circle; for coplanar points in
general it is the real part of that complex number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CoincidentPoints,
    DegenerateInput,
    DegenerateQuadruple,
    ForbiddenCrossRatio,
    SolutionAtInfinity,
    StepTooSmall,
)
from .lorentz import lift

CONCIRCULAR_TOL = 1e-8


@dataclass(frozen=True)
class CrossRatioValue:
    value: float
    concircularity_defect: float


def concircularity_defect(y, y1, y12, y2):
    """sigma_min / sigma_max of the four row-normalized lifts (stack-aware)."""
    rows = np.stack([lift(y), lift(y1), lift(y12), lift(y2)], axis=-2)
    rows = rows / np.linalg.norm(rows, axis=-1, keepdims=True)
    sv = np.linalg.svd(rows, compute_uv=False)
    return sv[..., 3] / sv[..., 0]


def _pairing(x, y):
    """<lift x, lift y> = -2|x - y|^2, free of the cancellation in the lifted coordinates."""
    return -2.0 * np.sum((np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) ** 2, axis=-1)


def cross_ratio_many(y, y1, y12, y2):
    """Vectorized light-cone cross ratio.  Returns ``(values, defects)``."""
    ab, cd, ad, bc = _pairing(y, y1), _pairing(y12, y2), _pairing(y, y2), _pairing(y1, y12)
    ac, bd = _pairing(y, y12), _pairing(y1, y2)
    den = 2.0 * ad * bc
    num = ab * cd + ad * bc - ac * bd
    with np.errstate(divide="ignore", invalid="ignore"):
        values = num / den
    return values, concircularity_defect(y, y1, y12, y2)


def cross_ratio(y, y1, y12, y2) -> CrossRatioValue:
    pts = [np.asarray(p, dtype=float) for p in (y, y1, y12, y2)]
    scale = max(np.max(np.abs(p)) for p in pts) + 1.0
    if np.linalg.norm(pts[0] - pts[3]) <= 1e-14 * scale or np.linalg.norm(pts[1] - pts[2]) <= 1e-14 * scale:
        raise DegenerateQuadruple("y = y2 or y1 = y12 makes the denominator vanish")
    value, defect = cross_ratio_many(*pts)
    return CrossRatioValue(float(value), float(defect))


def complex_cross_ratio(a: complex, b: complex, c: complex, d: complex) -> complex:
    """((a-b)(c-d)) / ((b-c)(d-a)), the convention matching the light-cone formula."""
    return ((a - b) * (c - d)) / ((b - c) * (d - a))


def _plane_frames(y, y1, y2):
    """Orthonormal frames (e1, e2) at y with e1 along y1 - y, e2 in the plane of y2."""
    u = y1 - y
    base = np.linalg.norm(u, axis=-1)
    e1 = u / np.where(base > 0, base, 1.0)[:, None]
    w = y2 - y
    r = w - np.sum(w * e1, axis=-1)[:, None] * e1
    rn = np.linalg.norm(r, axis=-1)
    wn = np.linalg.norm(w, axis=-1)
    collinear = rn <= 1e-12 * np.maximum(wn, 1e-300)
    e2 = r / np.where(collinear, 1.0, rn)[:, None]
    for i in np.flatnonzero(collinear):
        # Lowest-index coordinate axis not parallel to the line.
        for k in range(y.shape[1]):
            if abs(e1[i, k]) < 1.0 - 1e-9:
                axis = np.zeros(y.shape[1])
                axis[k] = 1.0
                v = axis - e1[i, k] * e1[i]
                e2[i] = v / np.linalg.norm(v)
                break
    return e1, e2, base


def solve_fourth_point_many(y, y1, y2, target):
    """Vectorized solver for y12 with cr(y, y1, y12, y2) = target.

    Returns ``(points, status)``; status is 0 for success, 1 for coincident
    inputs and 2 when the solution is the point at infinity.  Failed rows
    are NaN.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    y1 = np.atleast_2d(np.asarray(y1, dtype=float))
    y2 = np.atleast_2d(np.asarray(y2, dtype=float))
    t = np.broadcast_to(np.asarray(target, dtype=float), y.shape[:1])
    scale = 1.0 + np.max(np.abs(np.concatenate([y, y1, y2], axis=1)), axis=1)
    coincident = (
        (np.linalg.norm(y1 - y, axis=1) <= 1e-13 * scale)
        | (np.linalg.norm(y2 - y, axis=1) <= 1e-13 * scale)
        | (np.linalg.norm(y2 - y1, axis=1) <= 1e-13 * scale)
    )
    e1, e2, b = _plane_frames(y, y1, y2)
    w = y2 - y
    d = np.sum(w * e1, axis=1) + 1j * np.sum(w * e2, axis=1)
    # With a = 0: c (t d - b) = d b (t - 1).
    den = t * d - b
    num = d * b * (t - 1.0)
    at_inf = (np.abs(den) <= 1e-13 * np.maximum(np.abs(t * d), b)) & ~coincident
    c = num / np.where(at_inf | coincident, 1.0, den)
    pts = y + c.real[:, None] * e1 + c.imag[:, None] * e2
    status = np.zeros(y.shape[0], dtype=int)
    status[coincident] = 1
    status[at_inf] = 2
    pts[status != 0] = np.nan
    return pts, status


def solve_fourth_point(y, y1, y2, target_cr: float) -> np.ndarray:
    """The point y12 concircular with y, y1, y2 with cr(y, y1, y12, y2) = target."""
    target_cr = float(target_cr)
    if target_cr == 0.0 or target_cr == 1.0:
        raise ForbiddenCrossRatio(f"target {target_cr:g} forces coincident vertices")
    pts, status = solve_fourth_point_many(y, y1, y2, target_cr)
    if status[0] == 1:
        raise DegenerateInput("y, y1, y2 must be pairwise distinct")
    if status[0] == 2:
        n = np.asarray(y).shape[-1]
        witness = np.zeros(n + 2)
        witness[-2] = -1.0
        witness[-1] = 1.0
        raise SolutionAtInfinity("solved point is the point at infinity", witness=witness)
    return pts[0]


@dataclass(frozen=True)
class InfinitesimalCrossRatio:
    """Richardson estimate of lim cr / delta^2 with the two raw quotients."""

    value: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    delta: float


def infinitesimal_cross_ratio(curve_a, curve_b, index=None, step: int = 4) -> InfinitesimalCrossRatio:
    """Infinitesimal cross ratio of two sampled periodic curves.

    Uses the symmetric quadrilateral (a(t-h), a(t+h), b(t+h), b(t-h)) whose
    quotient cr / (2h)^2 is even in h, evaluated at widths ``step`` and
    ``step/2`` samples and combined as (4 f_fine - f_coarse) / 3.  ``index``
    selects samples (default: all).
    """
    a = np.asarray(curve_a, dtype=float)
    b = np.asarray(curve_b, dtype=float)
    count = a.shape[0]
    if step < 2 or step % 2:
        raise ValueError("step must be an even number of samples >= 2")
    delta = 2.0 * np.pi * step / count
    if (delta / 2.0) ** 2 < np.sqrt(np.finfo(float).eps):
        raise StepTooSmall(f"step {delta:.3e} loses more than half the mantissa")
    idx = np.arange(count) if index is None else np.atleast_1d(np.asarray(index))

    def quotient(width):
        h = width // 2
        lo = (idx - h) % count
        hi = (idx + h) % count
        vals, _ = cross_ratio_many(a[lo], a[hi], b[hi], b[lo])
        return vals / (2.0 * np.pi * width / count) ** 2

    coarse = quotient(step)
    fine = quotient(step // 2)
    value = (4.0 * fine - coarse) / 3.0
    if index is not None and np.ndim(index) == 0:
        return InfinitesimalCrossRatio(float(value[0]), float(coarse[0]), float(fine[0]), delta)
    return InfinitesimalCrossRatio(value, coarse, fine, delta)


@dataclass(frozen=True)
class TangentCircle:
    center: np.ndarray
    radius: float
    plane: np.ndarray
    tangent_at_end: np.ndarray


@dataclass(frozen=True)
class Line:
    point: np.ndarray
    direction: np.ndarray
    tangent_at_end: np.ndarray


def _end_tangents(p, u, p_hat):
    """Tangent at p_hat of the circle through p (tangent u) and p_hat, stack-aware."""
    w = p_hat - p
    wn = np.linalg.norm(w, axis=-1, keepdims=True)
    w_hat = w / wn
    return u - 2.0 * np.sum(u * w_hat, axis=-1, keepdims=True) * w_hat, wn[..., 0]


def tangent_circle_through(p, u, p_hat):
    """The circle (or line) through p and p_hat that is tangent to u at p."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    p_hat = np.asarray(p_hat, dtype=float)
    w = p_hat - p
    wn = np.linalg.norm(w)
    if wn <= 1e-14 * (1.0 + np.linalg.norm(p)):
        raise CoincidentPoints("p and p_hat coincide")
    end_tangent, _ = _end_tangents(p, u, p_hat)
    perp = w - np.dot(w, u) * u
    pn = np.linalg.norm(perp)
    if pn <= 1e-12 * wn:
        return Line(p.copy(), u, end_tangent)
    normal = perp / pn
    offset = np.dot(w, w) / (2.0 * np.dot(w, normal))
    return TangentCircle(p + offset * normal, float(abs(offset)), np.stack([u, normal]), end_tangent)


def ribbon_tangency_defects(p, u, p_hat, u_hat):
    """Vectorized angle in [0, pi/2] between the transported tangent and the line of u_hat."""
    p, u, p_hat, u_hat = (np.asarray(v, dtype=float) for v in (p, u, p_hat, u_hat))
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    u_hat = u_hat / np.linalg.norm(u_hat, axis=-1, keepdims=True)
    end, dist = _end_tangents(p, u, p_hat)
    if np.any(dist <= 0):
        raise CoincidentPoints("p and p_hat coincide")
    end = end / np.linalg.norm(end, axis=-1, keepdims=True)
    sign = np.where(np.sum(end * u_hat, axis=-1) < 0, -1.0, 1.0)[..., None]
    aligned = sign * u_hat
    return 2.0 * np.arctan2(np.linalg.norm(end - aligned, axis=-1), np.linalg.norm(end + aligned, axis=-1))


def ribbon_tangency_defect(p, u, p_hat, u_hat) -> float:
    tangent_circle_through(p, u, p_hat)
    return float(ribbon_tangency_defects(p, u, p_hat, u_hat))


@dataclass(frozen=True)
class CircleFit:
    center: np.ndarray
    radius: float
    normal_residual: float
    circle_residual: float


def fit_circle(points) -> CircleFit:
    """Least-squares circle: best 2-plane by SVD, then an algebraic fit in it.

    ``normal_residual`` is the largest distance to the plane and
    ``circle_residual`` the largest deviation of in-plane distance from the
    radius.
    """
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    frame = vt[:2]
    inplane = centered @ frame.T
    normal_res = float(np.max(np.linalg.norm(centered - inplane @ frame, axis=1)))
    design = np.column_stack([2.0 * inplane, np.ones(len(pts))])
    rhs = np.sum(inplane**2, axis=1)
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    c2 = sol[:2]
    radius = float(np.sqrt(sol[2] + c2 @ c2))
    circle_res = float(np.max(np.abs(np.linalg.norm(inplane - c2, axis=1) - radius)))
    return CircleFit(centroid + c2 @ frame, radius, normal_res, circle_res)
