"""Polarized closed curves, smooth (sampled) and discrete."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidLoop
from .lorentz import lift

DEFAULT_SAMPLES = 256
VERIFICATION_SAMPLES = 1024


@dataclass(frozen=True)
class Circle:
    """Analytic circle c(t) = center + radius (cos t f0 + sin t f1)."""

    center: np.ndarray
    radius: float
    frame: np.ndarray

    def position(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.center + self.radius * (np.cos(t) * self.frame[0] + np.sin(t) * self.frame[1])

    def velocity(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return self.radius * (-np.sin(t) * self.frame[0] + np.cos(t) * self.frame[1])


def _periodic_derivative(samples):
    """Order-4 central difference on a uniform periodic grid over [0, 2pi)."""
    h = 2.0 * np.pi / samples.shape[0]
    r = lambda k: np.roll(samples, -k, axis=0)
    return (r(-2) - 8.0 * r(-1) + 8.0 * r(1) - r(2)) / (12.0 * h)


def _lagrange_weights(frac):
    """Weights of the 6-point Lagrange interpolant at offsets -2..3 for position ``frac``."""
    nodes = np.arange(-2, 4, dtype=float)
    frac = np.asarray(frac, dtype=float)[..., None]
    w = np.ones(frac.shape[:-1] + (6,))
    for j in range(6):
        for k in range(6):
            if k != j:
                w[..., j] *= (frac[..., 0] - nodes[k]) / (nodes[j] - nodes[k])
    return w


def _periodic_interpolate(values, t):
    count = values.shape[0]
    pos = np.asarray(t, dtype=float) * count / (2.0 * np.pi)
    base = np.floor(pos).astype(int)
    w = _lagrange_weights(pos - base)
    idx = (base[..., None] + np.arange(-2, 4)) % count
    return np.einsum("...k,...kd->...d", w, values[idx])


@dataclass(frozen=True, eq=False)
class SmoothLoop:
    """A closed curve sampled at t_i = 2 pi i / S with polarization m(t_i) > 0."""

    samples: np.ndarray
    polarization: np.ndarray
    circle: Circle | None = None
    derivative_order: int = 4
    _velocity: np.ndarray = field(init=False, repr=False)

    kind = "smooth"

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[0] < 16 or samples.shape[1] < 2:
            raise InvalidLoop("smooth loop needs at least 16 samples in R^n, n >= 2")
        pol = np.broadcast_to(np.asarray(self.polarization, dtype=float), samples.shape[:1]).copy()
        if not np.all(pol > 0) or not np.all(np.isfinite(pol)):
            raise InvalidLoop("smooth polarization must be positive")
        if self.derivative_order != 4:
            raise InvalidLoop("only order-4 differences are supported")
        samples.setflags(write=False)
        pol.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "polarization", pol)
        if self.circle is not None:
            vel = self.circle.velocity(self.parameters)
        else:
            vel = _periodic_derivative(samples)
        if np.any(np.linalg.norm(vel, axis=1) <= 1e-12 * (1.0 + np.max(np.abs(samples)))):
            raise InvalidLoop("loop is not immersed at some sample")
        vel.setflags(write=False)
        object.__setattr__(self, "_velocity", vel)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def parameters(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size

    @property
    def velocity(self) -> np.ndarray:
        return self._velocity

    def position_at(self, t):
        """Position at arbitrary parameters (analytic or interpolated)."""
        if self.circle is not None:
            return self.circle.position(t)
        return _periodic_interpolate(self.samples, t)

    def velocity_at(self, t):
        if self.circle is not None:
            return self.circle.velocity(t)
        return _periodic_interpolate(self._velocity, t)

    def polarization_at(self, t):
        pol = self.polarization
        if np.all(pol == pol[0]):
            return np.full(np.shape(t), pol[0])
        return _periodic_interpolate(pol[:, None], t)[..., 0]

    def with_samples(self, samples) -> "SmoothLoop":
        """A new loop with the same polarization and no analytic tag."""
        return SmoothLoop(samples, self.polarization)


@dataclass(frozen=True, eq=False)
class DiscreteLoop:
    """Closed polygon x_0..x_{l-1} with nonzero edge polarization m_{j,j+1}."""

    vertices: np.ndarray
    edge_polarization: np.ndarray

    kind = "discrete"

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] < 2:
            raise InvalidLoop("discrete loop needs at least 3 vertices in R^n, n >= 2")
        pol = np.broadcast_to(np.asarray(self.edge_polarization, dtype=float), verts.shape[:1]).copy()
        if np.any(pol == 0) or not np.all(np.isfinite(pol)):
            raise InvalidLoop("edge polarization must be nonzero")
        step = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
        if np.any(step <= 1e-14 * (1.0 + np.max(np.abs(verts)))):
            raise InvalidLoop("consecutive vertices coincide")
        verts.setflags(write=False)
        pol.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edge_polarization", pol)

    @property
    def samples(self) -> np.ndarray:
        return self.vertices

    @property
    def polarization(self) -> np.ndarray:
        return self.edge_polarization

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    @property
    def n(self) -> int:
        return self.vertices.shape[1]

    def with_samples(self, samples) -> "DiscreteLoop":
        return DiscreteLoop(samples, self.edge_polarization)


def make_circle(n: int, samples: int = DEFAULT_SAMPLES, polarization: float = 1.0) -> SmoothLoop:
    """Unit circle (cos t, sin t, 0, ..., 0) with analytic derivatives."""
    if n < 2 or samples < 16:
        raise InvalidLoop("need n >= 2 and at least 16 samples")
    if not polarization > 0:
        raise InvalidLoop("smooth polarization must be positive")
    frame = np.zeros((2, n))
    frame[0, 0] = frame[1, 1] = 1.0
    circle = Circle(np.zeros(n), 1.0, frame)
    t = 2.0 * np.pi * np.arange(samples) / samples
    return SmoothLoop(circle.position(t), polarization, circle=circle)


def make_discrete_circle(n: int, vertices: int, polarization: float = 1.0) -> DiscreteLoop:
    """Regular polygon inscribed in the unit circle of span{e1, e2}."""
    if n < 2 or vertices < 3:
        raise InvalidLoop("need n >= 2 and at least 3 vertices")
    t = 2.0 * np.pi * np.arange(vertices) / vertices
    pts = np.zeros((vertices, n))
    pts[:, 0] = np.cos(t)
    pts[:, 1] = np.sin(t)
    return DiscreteLoop(pts, polarization)


@dataclass(frozen=True)
class LoopLift:
    points: np.ndarray
    tangents: np.ndarray | None
    polarization: np.ndarray


def lift_tangent(x, xt):
    """X_t = (2 x_t, -2 <x, x_t>, 2 <x, x_t>)."""
    x = np.asarray(x, dtype=float)
    xt = np.asarray(xt, dtype=float)
    dot = np.sum(x * xt, axis=-1)[..., None]
    return np.concatenate([2.0 * xt, -2.0 * dot, 2.0 * dot], axis=-1)


def lift_loop(loop) -> LoopLift:
    points = lift(loop.samples)
    if loop.kind == "smooth":
        return LoopLift(points, lift_tangent(loop.samples, loop.velocity), loop.polarization)
    return LoopLift(points, None, loop.polarization)


def closure_gap(obj) -> float:
    """Gap |x(end) - x(start)|.

    Loops are periodic by construction and return 0; objects carrying a
    ``closure_gap`` attribute report it; an array is treated as an open
    propagated curve whose last row should return to the first.
    """
    if isinstance(obj, (SmoothLoop, DiscreteLoop)):
        return 0.0
    if hasattr(obj, "closure_gap"):
        return float(obj.closure_gap)
    pts = np.asarray(obj, dtype=float)
    return float(np.linalg.norm(pts[-1] - pts[0]))
