"""Parallel transport for the associated family of flat connections.

Smooth case: the connection is d + lam (X ^ X_t) / (m <X_t, X_t>) dt.  Its
sections are integrated as Y' = -SECTION_RATE * A(t) Y with a fixed-step
classical Runge-Kutta scheme.  The rate 2 makes the infinitesimal cross ratio
of a transform ribbon equal to -mu/m, the same magnitude as the
discrete law and the continuum limit of the edge connection below.

Discrete case: the edge map from vertex j to j+1 is

    Y -> Y + k (a <Y, X_{j+1}> X_j - <Y, X_j> X_{j+1}),
    k = lam / (m <X_j, X_{j+1}>),  a = m / (m - lam),

whose transforms satisfy cr(x_j, x_{j+1}, xh_{j+1}, xh_j) = mu / m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoincidentVertices, NonImmersedSample, PoleAtLambdaEqualsM, StepFailure
from .lorentz import inner, lift, lorentz_defect, reorthonormalize_stack, signature, wedge_action
from .loops import LoopLift, lift_tangent

SECTION_RATE = 2.0
DEFAULT_SUBSTEPS = 4
REORTHONORMALIZE_EVERY = 64
CONVERGENCE_GATE = 1e-8
_CHUNK_ELEMENTS = 4_000_000


def smooth_coefficient(lift_data: LoopLift, i: int, lam: float) -> np.ndarray:
    """Generator lam (X ^ X_t) / (m <X_t, X_t>) at sample ``i``."""
    x = lift_data.points[i]
    xt = lift_data.tangents[i]
    speed = inner(xt, xt)
    if not speed > 0:
        raise NonImmersedSample(f"<X_t, X_t> = {speed:.3e} at sample {i}")
    return lam * wedge_action(x, xt) / (lift_data.polarization[i] * speed)


def _unit_generators(loop, times):
    """(X ^ X_t) / (m <X_t, X_t>) at arbitrary parameters, shape times.shape + (d, d)."""
    x = loop.position_at(times)
    xt = loop.velocity_at(times)
    big_x = lift(x)
    big_xt = lift_tangent(x, xt)
    speed = inner(big_xt, big_xt)
    if np.any(speed <= 0):
        raise NonImmersedSample("loop velocity vanishes between samples")
    scale = 1.0 / (loop.polarization_at(times) * speed)
    return wedge_action(big_x, big_xt) * scale[..., None, None]


def _rk4_steps(units, lams, h):
    """One-step propagators for Y' = -rate lam U(t) Y.

    ``units`` has shape (N, 3, d, d) holding U at t, t + h/2, t + h; the
    result has shape (G, N, d, d) for G spectral parameters.
    """
    coef = (-SECTION_RATE * np.asarray(lams, dtype=float))[:, None, None, None]
    b1 = coef * units[None, :, 0]
    b2 = coef * units[None, :, 1]
    b3 = coef * units[None, :, 2]
    eye = np.eye(units.shape[-1])
    k1 = b1
    k2 = b2 @ (eye + 0.5 * h * k1)
    k3 = b2 @ (eye + 0.5 * h * k2)
    k4 = b3 @ (eye + h * k3)
    return eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _accumulate(steps, record_every=None):
    """Ordered product steps[N-1] ... steps[0] over a stack (G, N, d, d).

    Reorthonormalizes every REORTHONORMALIZE_EVERY steps.  When
    ``record_every`` is set, returns the partial products after every such
    number of steps as well (including the identity at the start).
    """
    g, count, dim, _ = steps.shape
    acc = np.broadcast_to(np.eye(dim), (g, dim, dim)).copy()
    records = [acc.copy()] if record_every else None
    for k in range(count):
        acc = steps[:, k] @ acc
        if (k + 1) % REORTHONORMALIZE_EVERY == 0 or k + 1 == count:
            worst = max(lorentz_defect(m) for m in acc)
            if not worst <= 1e-3:
                raise StepFailure(f"Lorentz defect {worst:.3e} before correction at step {k + 1}")
            acc = reorthonormalize_stack(acc)
        if record_every and (k + 1) % record_every == 0:
            records.append(acc.copy())
    if record_every:
        return acc, np.stack(records, axis=1)
    return acc, None


def _smooth_transport(loop, lams, start, stop, substeps, record=False):
    """Transport from sample ``start`` to ``stop`` (universal-cover indices)."""
    count = loop.size
    dim = loop.n + 2
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    intervals = stop - start
    if intervals == 0:
        eye = np.broadcast_to(np.eye(dim), (len(lams), dim, dim)).copy()
        return (eye, eye[:, None]) if record else (eye, None)
    direction = 1.0 if intervals > 0 else -1.0
    nsteps = abs(intervals) * substeps
    h = direction * 2.0 * np.pi / (count * substeps)
    t0 = 2.0 * np.pi * start / count + h * np.arange(nsteps)
    times = t0[:, None] + h * np.array([0.0, 0.5, 1.0])
    units = _unit_generators(loop, times)
    per_chunk = max(1, _CHUNK_ELEMENTS // (nsteps * dim * dim))
    finals, records = [], []
    for lo in range(0, len(lams), per_chunk):
        steps = _rk4_steps(units, lams[lo : lo + per_chunk], h)
        final, rec = _accumulate(steps, substeps if record else None)
        finals.append(final)
        records.append(rec)
    final = np.concatenate(finals)
    return final, (np.concatenate(records) if record else None)


def transport_smooth(loop, lam: float, i_from: int, i_to: int, substeps: int = DEFAULT_SUBSTEPS) -> np.ndarray:
    """Transport of the section ODE from sample ``i_from`` to ``i_to``.

    Indices live on the universal cover: i_to > i_from integrates forward,
    i_to < i_from backward, and a difference of S is one full period.
    """
    final, _ = _smooth_transport(loop, [lam], int(i_from), int(i_to), substeps)
    return final[0]


def transport_path(loop, lam: float, substeps: int = DEFAULT_SUBSTEPS) -> np.ndarray:
    """Transports M(t_i) from t_0 for i = 0..S, shape (S+1, d, d)."""
    if loop.kind == "discrete":
        return discrete_section_maps(loop, lam)
    _, rec = _smooth_transport(loop, [lam], 0, loop.size, substeps, record=True)
    return rec[0]


def _check_poles(loop, lams):
    pol = loop.edge_polarization
    for lam in np.atleast_1d(lams):
        hit = np.abs(lam - pol) <= 1e-14 * np.maximum(1.0, np.abs(pol))
        if np.any(hit):
            j = int(np.flatnonzero(hit)[0])
            raise PoleAtLambdaEqualsM(f"spectral parameter {lam:g} equals m on edge {j}")


def discrete_edge_connection(lift_data: LoopLift, j: int, lam: float) -> np.ndarray:
    """Edge map from vertex j to vertex j+1 (cyclic)."""
    pts = lift_data.points
    count = pts.shape[0]
    xj, xk = pts[j % count], pts[(j + 1) % count]
    m = float(lift_data.polarization[j % count])
    if abs(lam - m) <= 1e-14 * max(1.0, abs(m)):
        raise PoleAtLambdaEqualsM(f"spectral parameter {lam:g} equals m on edge {j}")
    pairing = inner(xj, xk)
    if abs(pairing) <= 1e-14 * np.linalg.norm(xj) * np.linalg.norm(xk):
        raise CoincidentVertices(f"vertices {j} and {j + 1} coincide")
    return _edge_matrices(xj[None], xk[None], np.array([m]), np.array([lam]))[0, 0]


def _edge_matrices(xj, xk, pol, lams):
    """Edge maps for every (lam, edge) pair, shape (G, L, d, d)."""
    sig = signature(xj.shape[-1])
    pairing = inner(xj, xk)
    lams = np.asarray(lams, dtype=float)[:, None]
    kappa = lams / (pol * pairing)
    alpha = pol / (pol - lams)
    out_k = xj[:, :, None] * (sig * xk)[:, None, :]
    out_j = xk[:, :, None] * (sig * xj)[:, None, :]
    eye = np.eye(xj.shape[-1])
    return eye + kappa[..., None, None] * (alpha[..., None, None] * out_k - out_j)


def discrete_edge_maps(loop, lams) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    _check_poles(loop, lams)
    pts = lift(loop.vertices)
    return _edge_matrices(pts, np.roll(pts, -1, axis=0), loop.edge_polarization, lams)


def discrete_point_transport(loop, lam: float, start_points):
    """Edge connection applied to the lifts of points, in point form.

    For Y = lift(p) the edge map gives s * lift(p') with
    p' = (p + k a B x_j - k A x_{j+1}) / s and s = 1 + k a B - k A, where
    A = <Y, X_j> = -2|p - x_j|^2 and B = <Y, X_{j+1}> = -2|p - x_{j+1}|^2.
    Inner products come from point differences, so no cancellation occurs
    between the large entries of the edge matrix.

    Returns ``(points, scales)`` of shapes (l+1, K, n) and (l+1, K); the
    section at vertex j is scales[j] * lift(points[j]).
    """
    _check_poles(loop, [lam])
    verts = loop.vertices
    pol = loop.edge_polarization
    count = loop.size
    p = np.atleast_2d(np.asarray(start_points, dtype=float))
    pts = [p]
    scales = [np.ones(p.shape[0])]
    for j in range(count):
        xj, xk = verts[j], verts[(j + 1) % count]
        m = pol[j]
        kappa = lam / (m * -2.0 * np.sum((xj - xk) ** 2))
        alpha = m / (m - lam)
        a = -2.0 * np.sum((p - xj) ** 2, axis=1)
        b = -2.0 * np.sum((p - xk) ** 2, axis=1)
        wj = kappa * alpha * b
        wk = -kappa * a
        s = 1.0 + wj + wk
        p = (p + wj[:, None] * xj + wk[:, None] * xk) / s[:, None]
        pts.append(p)
        scales.append(scales[-1] * s)
    return np.stack(pts), np.stack(scales)


def _reference_points(n):
    """n+2 points whose lifts are linearly independent (no common sphere)."""
    pts = np.zeros((n + 2, n))
    pts[1 : n + 1] = np.eye(n)
    pts[n + 1] = -1.0
    return pts


def discrete_monodromy_point_form(loop, lam: float) -> np.ndarray:
    """Edge-product monodromy assembled from the images of n+2 reference lifts."""
    ref = _reference_points(loop.n)
    for shift in (0.0, 0.37, -0.61, 1.13):
        base = ref + shift
        pts, scales = discrete_point_transport(loop, lam, base)
        if np.all(np.isfinite(pts)) and np.min(np.abs(scales)) > 1e-8 * np.max(np.abs(scales)):
            images = scales[-1][:, None] * lift(pts[-1])
            return np.linalg.solve(lift(base), images).T
    edges = discrete_edge_maps(loop, [lam])[0]
    acc = np.eye(edges.shape[-1])
    for e in edges:
        acc = e @ acc
    return acc


def discrete_section_maps(loop, lam: float) -> np.ndarray:
    """Cumulative edge products from vertex 0 to vertex j, j = 0..l."""
    edges = discrete_edge_maps(loop, [lam])[0]
    out = [np.eye(edges.shape[-1])]
    for e in edges:
        out.append(e @ out[-1])
    return np.stack(out)


@dataclass(frozen=True)
class Monodromy:
    map: np.ndarray
    spectral_parameter: float
    steps: int
    defect: float
    convergence_delta: float | None = None

    @property
    def converged(self) -> bool | None:
        if self.convergence_delta is None:
            return None
        return self.convergence_delta <= CONVERGENCE_GATE


def monodromies(loop, lams, substeps: int = DEFAULT_SUBSTEPS) -> np.ndarray:
    """Full-period transports for a batch of spectral parameters, shape (G, d, d)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if loop.kind == "discrete":
        return np.stack([discrete_monodromy_point_form(loop, lam) for lam in lams])
    final, _ = _smooth_transport(loop, lams, 0, loop.size, substeps)
    return final


def monodromy(loop, lam: float, substeps: int = DEFAULT_SUBSTEPS, check_convergence: bool = False) -> Monodromy:
    """Transport around one period starting at sample 0.

    With ``check_convergence`` the smooth transport is repeated at twice the
    substep count and the max entry change is stored as ``convergence_delta``.
    """
    m = monodromies(loop, [lam], substeps)[0]
    steps = loop.size if loop.kind == "discrete" else loop.size * substeps
    delta = None
    if check_convergence and loop.kind == "smooth":
        fine = monodromies(loop, [lam], 2 * substeps)[0]
        delta = float(np.max(np.abs(fine - m)))
    return Monodromy(m, float(lam), steps, lorentz_defect(m), delta)
