"""Linear algebra of the Lorentz space R^{n+1,1}.

Vectors are plain numpy arrays of length n+2.  The first n entries hold the
Euclidean block, entry n+1 the ``1 - |x|^2`` slot and entry n+2 the timelike
``1 + |x|^2`` slot, so the metric is diag(1, ..., 1, -1).  Transport maps are
(n+2)x(n+2) arrays acting on these coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCircle,
    DimensionMismatch,
    NoRealLightlikeEigenvector,
    NotLorentzOrthogonal,
    PlaneNotInComplement,
    PointAtInfinity,
    TooFarFromGroup,
)

LIGHTLIKE_TOL = 1e-8
RESONANCE_THRESHOLD = 1e-6
GROUP_DEFECT_TOL = 1e-8
REORTHONORMALIZE_LIMIT = 1e-3
INFINITY_TOL = 1e-12


def signature(dim: int) -> np.ndarray:
    """Diagonal of the metric for ambient dimension ``dim`` (= n+2)."""
    sig = np.ones(dim)
    sig[-1] = -1.0
    return sig


def metric(dim: int) -> np.ndarray:
    return np.diag(signature(dim))


def inner(a, b):
    """Lorentz inner product, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch(f"ambient dimensions differ: {a.shape[-1]} vs {b.shape[-1]}")
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


def infinity_vector(n: int) -> np.ndarray:
    """The vector q representing the point at infinity of R^n."""
    q = np.zeros(n + 2)
    q[-2] = -0.5
    q[-1] = 0.5
    return q


def lift(x) -> np.ndarray:
    """Light-cone lift (2x, 1 - |x|^2, 1 + |x|^2); works on stacks of points."""
    x = np.asarray(x, dtype=float)
    sq = np.sum(x * x, axis=-1)[..., None]
    return np.concatenate([2.0 * x, 1.0 - sq, 1.0 + sq], axis=-1)


def q_pairing(v) -> np.ndarray:
    """inner(v, q) without building q: (v[n+1] + v[n+2]) / 2 with a sign flip."""
    v = np.asarray(v, dtype=float)
    return -0.5 * (v[..., -2] + v[..., -1])


def project(v, tol: float = INFINITY_TOL) -> np.ndarray:
    """Inverse of ``lift`` up to scale.  Raises PointAtInfinity near q."""
    v = np.asarray(v, dtype=float)
    pairing = q_pairing(v)
    scale = np.linalg.norm(v)
    if not np.isfinite(pairing) or abs(pairing) <= tol * max(scale, 1e-300):
        raise PointAtInfinity(f"vector pairs to {pairing:.3e} with q")
    return v[:-2] / (-2.0 * pairing)


def project_many(vs, tol: float = INFINITY_TOL):
    """Project a stack of vectors.

    Returns ``(points, at_infinity)``; rows flagged at infinity are NaN.
    """
    vs = np.asarray(vs, dtype=float)
    pairing = q_pairing(vs)
    scale = np.linalg.norm(vs, axis=-1)
    bad = np.abs(pairing) <= tol * np.maximum(scale, 1e-300)
    safe = np.where(bad, 1.0, pairing)
    pts = vs[..., :-2] / (-2.0 * safe[..., None])
    pts[bad] = np.nan
    return pts, bad


def normalize_against_q(v) -> np.ndarray:
    """Scale v so that inner(v, q) = -1."""
    v = np.asarray(v, dtype=float)
    return v / (-q_pairing(v))


def wedge_action(a, b) -> np.ndarray:
    """Matrix of c -> inner(a, c) b - inner(b, c) a."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DimensionMismatch("wedge factors have different dimensions")
    sig = signature(a.shape[-1])
    return b[..., :, None] * (sig * a)[..., None, :] - a[..., :, None] * (sig * b)[..., None, :]


def lorentz_defect(m) -> float:
    """max |M^T J M - J| entrywise."""
    m = np.asarray(m, dtype=float)
    sig = signature(m.shape[-1])
    gram = m.T @ (sig[:, None] * m)
    return float(np.max(np.abs(gram - np.diag(sig))))


def skew_defect(a) -> float:
    """max |A^T J + J A| entrywise."""
    a = np.asarray(a, dtype=float)
    jm = metric(a.shape[-1])
    return float(np.max(np.abs(a.T @ jm + jm @ a)))


def reorthonormalize(m) -> np.ndarray:
    """Snap a nearly Lorentz-orthogonal matrix back onto the group.

    Gram-Schmidt in the Lorentz metric over the columns, spacelike columns
    first and the timelike column last.
    """
    m = np.array(m, dtype=float)
    defect = lorentz_defect(m)
    if not defect <= REORTHONORMALIZE_LIMIT:
        raise TooFarFromGroup(f"Lorentz defect {defect:.3e} exceeds {REORTHONORMALIZE_LIMIT:g}")
    return reorthonormalize_stack(m)


@dataclass(frozen=True)
class LightlikeEigenvector:
    vector: np.ndarray
    eigenvalue: float
    lightlike_defect: float
    residual: float
    at_infinity: bool = False


@dataclass(frozen=True)
class Resonance:
    """Returned instead of eigenvectors when M is numerically +I or -I."""

    sign: int
    defect: float


def resonance_defect(m):
    """Return ``(defect, sign)`` with defect = min over +-1 of max|M -+ I|."""
    m = np.asarray(m, dtype=float)
    eye = np.eye(m.shape[0])
    plus = float(np.max(np.abs(m - eye)))
    minus = float(np.max(np.abs(m + eye)))
    return (plus, 1) if plus <= minus else (minus, -1)


def _real_eigen_clusters(m):
    vals, vecs = np.linalg.eig(m)
    real = np.abs(vals.imag) <= 1e-9 * (1.0 + np.abs(vals))
    clusters = []
    for idx in np.flatnonzero(real):
        rho = vals[idx].real
        for cl in clusters:
            if abs(cl["rho"] - rho) <= 1e-6 * (1.0 + abs(rho)):
                cl["members"].append(idx)
                break
        else:
            clusters.append({"rho": rho, "members": [idx]})
    for cl in clusters:
        cl["rho"] = float(np.mean(vals[cl["members"]].real))
    return clusters, vecs


def _eigenspace(m, rho, size, vecs, members):
    if size == 1:
        v = vecs[:, members[0]].real
        return (v / np.linalg.norm(v))[:, None]
    shifted = m - rho * np.eye(m.shape[0])
    _, sv, vt = np.linalg.svd(shifted)
    scale = max(1.0, float(sv[0]))
    keep = [i for i in range(len(sv) - size, len(sv)) if sv[i] <= 1e-6 * scale]
    return vt[keep].T


def _sign_canonical(v):
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    return -v if v[nz[0]] < 0 else v


def _lightlike_in_subspace(basis):
    """Deterministic lightlike representatives of the subspace spanned by ``basis``."""
    dim = basis.shape[0]
    sig = signature(dim)
    gram = basis.T @ (sig[:, None] * basis)
    gvals, gvecs = np.linalg.eigh(gram)
    gscale = max(1.0, float(np.max(np.abs(gvals))))
    zero = np.abs(gvals) <= 1e-8 * gscale
    negative = gvals < -1e-8 * gscale
    reps = []
    if basis.shape[1] == 1:
        if zero[0]:
            reps.append(basis[:, 0])
        return reps
    if not negative.any():
        # Degenerate subspace tangent to the cone: its radical is lightlike.
        for i in np.flatnonzero(zero):
            reps.append(basis @ gvecs[:, i])
        return reps
    neg = int(np.flatnonzero(negative)[0])
    u = basis @ gvecs[:, neg] / np.sqrt(-gvals[neg])
    if u[-1] < 0:
        u = -u
    want = basis.shape[1] - 1
    spacelike = []
    proj = basis @ basis.T
    for axis in range(dim - 1, -1, -1):
        if len(spacelike) == want:
            break
        c = proj[:, axis].copy()
        c += inner(c, u) * u
        for s in spacelike:
            c -= inner(c, s) * s
        norm2 = inner(c, c)
        if norm2 > 1e-10:
            spacelike.append(c / np.sqrt(norm2))
    for s in spacelike:
        reps.append(u + s)
        reps.append(u - s)
    return reps


def lightlike_eigenvectors(m, lightlike_tol: float = LIGHTLIKE_TOL):
    """Lightlike real eigendirections of an arbitrary real matrix.

    Ordered by descending |eigenvalue|, then descending eigenvalue, then the
    deterministic order of representatives inside each eigenspace.
    """
    m = np.asarray(m, dtype=float)
    clusters, vecs = _real_eigen_clusters(m)
    clusters.sort(key=lambda cl: (-abs(cl["rho"]), -cl["rho"]))
    found = []
    for cl in clusters:
        rho = cl["rho"]
        basis = _eigenspace(m, rho, len(cl["members"]), vecs, cl["members"])
        if basis.shape[1] == 0:
            continue
        for v in _lightlike_in_subspace(basis):
            v = v / np.linalg.norm(v)
            pairing = q_pairing(v)
            at_inf = abs(pairing) <= INFINITY_TOL * 1e3
            v = _sign_canonical(v) if at_inf else normalize_against_q(v)
            norm2 = float(np.dot(v, v))
            ldef = abs(float(inner(v, v))) / norm2
            if ldef > lightlike_tol:
                continue
            resid = float(np.linalg.norm(m @ v - rho * v) / np.sqrt(norm2))
            found.append(LightlikeEigenvector(v, rho, ldef, resid, bool(at_inf)))
    return found


def real_lightlike_eigenvectors(
    m,
    defect_tol: float = GROUP_DEFECT_TOL,
    resonance_threshold: float = RESONANCE_THRESHOLD,
    lightlike_tol: float = LIGHTLIKE_TOL,
):
    """Lightlike eigenvectors of a Lorentz-orthogonal map, or a Resonance flag."""
    m = np.asarray(m, dtype=float)
    # Roundoff in M^T J M grows with |M|^2, so the tolerance is scaled by it.
    allowed = defect_tol * max(1.0, float(np.max(np.abs(m)))) ** 2
    defect = lorentz_defect(m)
    if not defect <= allowed:
        raise NotLorentzOrthogonal(f"Lorentz defect {defect:.3e} exceeds {allowed:.3e}")
    rdef, sign = resonance_defect(m)
    if rdef <= resonance_threshold:
        return Resonance(sign, rdef)
    found = lightlike_eigenvectors(m, lightlike_tol)
    if not found:
        raise NoRealLightlikeEigenvector("no real lightlike eigendirection found")
    return found


def circle_fixing_rotation(circle_points, plane_pair, angle: float, tol: float = 1e-9) -> np.ndarray:
    """Rotation in the coordinate plane ``plane_pair`` fixing a circle pointwise.

    ``circle_points`` are three points of the circle; ``plane_pair`` holds two
    0-based ambient axis indices that must be Lorentz-orthogonal to the lifts
    of the circle.
    """
    pts = np.asarray(circle_points, dtype=float)
    if pts.shape[0] != 3:
        raise DegenerateCircle("need exactly three points")
    n = pts.shape[1]
    dim = n + 2
    p0, p1, p2 = pts
    scale = max(np.linalg.norm(p1 - p0), np.linalg.norm(p2 - p0), 1e-300)
    if min(np.linalg.norm(p1 - p0), np.linalg.norm(p2 - p0), np.linalg.norm(p2 - p1)) <= 1e-12 * scale:
        raise DegenerateCircle("coincident points")
    d1, d2 = (p1 - p0) / scale, (p2 - p0) / scale
    cross = np.dot(d1, d1) * np.dot(d2, d2) - np.dot(d1, d2) ** 2
    if cross <= 1e-20:
        raise DegenerateCircle("collinear points")
    a, b = (int(i) for i in plane_pair)
    if a == b or not (0 <= a < dim and 0 <= b < dim):
        raise PlaneNotInComplement(f"invalid axis pair {plane_pair}")
    lifts = lift(pts)
    sig = signature(dim)
    for axis in (a, b):
        pairing = sig[axis] * lifts[:, axis]
        if np.max(np.abs(pairing)) > tol * np.max(np.linalg.norm(lifts, axis=1)):
            raise PlaneNotInComplement(f"axis {axis} is not orthogonal to the circle's lifts")
    rot = np.eye(dim)
    c, s = np.cos(angle), np.sin(angle)
    rot[a, a] = c
    rot[b, b] = c
    rot[a, b] = -s
    rot[b, a] = s
    return rot


def reorthonormalize_stack(ms) -> np.ndarray:
    """``reorthonormalize`` applied to a stack of matrices (..., d, d)."""
    ms = np.array(ms, dtype=float)
    dim = ms.shape[-1]
    sig = signature(dim)
    gram = np.swapaxes(ms, -1, -2) @ (sig[:, None] * ms)
    defect = np.max(np.abs(gram - np.diag(sig)), axis=(-1, -2)) if ms.ndim > 2 else np.max(np.abs(gram - np.diag(sig)))
    worst = float(np.max(defect))
    if not worst <= REORTHONORMALIZE_LIMIT:
        raise TooFarFromGroup(f"Lorentz defect {worst:.3e} exceeds {REORTHONORMALIZE_LIMIT:g}")
    out = np.empty_like(ms)
    for i in range(dim):
        v = ms[..., :, i].copy()
        for k in range(i):
            v -= inner(v, out[..., :, k])[..., None] * out[..., :, k]
        norm2 = inner(v, v)
        out[..., :, i] = v / np.sqrt(np.abs(norm2))[..., None]
    return out
