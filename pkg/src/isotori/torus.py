"""Toroidal subnets of Bianchi cubes: grid maps, extraction, mesh, fullness."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .bianchi import BianchiCube, format_subset
from .errors import InsufficientDirections, InvalidGridMap

SEMI_DISCRETE = "semi-discrete"
FULLY_DISCRETE = "fully discrete"


@dataclass(frozen=True, eq=False)
class GridMap:
    """Cyclic grid of shape (l_1, ..., l_{k-1}) with a cube vertex (bitmask) per point."""

    shape: tuple
    assignment: np.ndarray

    def __post_init__(self):
        shape = tuple(int(v) for v in self.shape)
        assignment = np.asarray(self.assignment, dtype=np.int64)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "assignment", assignment)
        validate_grid_map(self)

    @property
    def k(self) -> int:
        return len(self.shape) + 1

    def points(self):
        return list(product(*(range(v) for v in self.shape)))

    def neighbour(self, point, direction):
        p = list(point)
        p[direction] = (p[direction] + 1) % self.shape[direction]
        return tuple(p)

    def toggled(self, point, direction) -> int:
        """0-based cube direction toggled along the grid edge leaving ``point``."""
        diff = int(self.assignment[point] ^ self.assignment[self.neighbour(point, direction)])
        return diff.bit_length() - 1


def validate_grid_map(grid: GridMap):
    shape = grid.shape
    if len(shape) < 1:
        raise InvalidGridMap("need k >= 2, i.e. at least one grid direction")
    if any(v < 2 for v in shape):
        raise InvalidGridMap("every cyclic grid dimension must be at least 2")
    if grid.assignment.shape != shape:
        raise InvalidGridMap(f"assignment shape {grid.assignment.shape} does not match {shape}")
    if np.any(grid.assignment < 0):
        raise InvalidGridMap("negative cube index")
    for point in grid.points():
        for d in range(len(shape)):
            diff = int(grid.assignment[point] ^ grid.assignment[grid.neighbour(point, d)])
            if diff == 0 or diff & (diff - 1):
                raise InvalidGridMap(f"grid edge at {point} along {d + 1} does not toggle exactly one index")
        for d1 in range(len(shape)):
            for d2 in range(d1 + 1, len(shape)):
                if grid.toggled(point, d1) == grid.toggled(point, d2):
                    raise InvalidGridMap(f"2-cell at {point} toggles the same index twice")
                corners = {
                    int(grid.assignment[point]),
                    int(grid.assignment[grid.neighbour(point, d1)]),
                    int(grid.assignment[grid.neighbour(point, d2)]),
                    int(grid.assignment[grid.neighbour(grid.neighbour(point, d1), d2)]),
                }
                if len(corners) != 4:
                    raise InvalidGridMap(f"2-cell at {point} has repeated vertices")


def _snake(first: int, last: int):
    """Masks of the cycle {}, {a}, {a,a+1}, {a+1}, ..., {b} over 1-based indices a..b."""
    masks = [0]
    for i in range(first, last + 1):
        masks.append(1 << (i - 1))
        if i < last:
            masks.append((1 << (i - 1)) | (1 << i))
    return masks


def default_walk_2torus(directions: int) -> GridMap:
    if directions < 1:
        raise InsufficientDirections("need at least one direction")
    masks = _snake(1, directions)
    return GridMap((len(masks),), np.array(masks))


def product_grid_map(directions: int, k: int) -> GridMap:
    """Snake over {k-1..N} in grid direction 1, toggles of index d-1 in direction d."""
    if k < 2:
        raise InvalidGridMap("k must be at least 2")
    if directions < k - 1:
        raise InsufficientDirections(f"k={k} needs at least {k - 1} directions, have {directions}")
    axes = [_snake(k - 1, directions)]
    for d in range(2, k):
        axes.append([0, 1 << (d - 2)])
    shape = tuple(len(a) for a in axes)
    assignment = np.zeros(shape, dtype=np.int64)
    for point in product(*(range(v) for v in shape)):
        mask = 0
        for d, i in enumerate(point):
            mask ^= axes[d][i]
        assignment[point] = mask
    return GridMap(shape, assignment)


@dataclass(frozen=True, eq=False)
class TorusNet:
    kind: str
    grid: GridMap
    cube: BianchiCube
    loops: dict
    edge_labels: dict
    mesh_vertices: np.ndarray
    mesh_loops: list
    mesh_quads: list

    @property
    def samples(self) -> int:
        return next(iter(self.loops.values())).size

    @property
    def n(self) -> int:
        return next(iter(self.loops.values())).n

    def closure_gaps(self) -> dict:
        return {p: self.cube.closure_gap(int(self.grid.assignment[p])) for p in self.grid.points()}


def extract_torus(cube: BianchiCube, grid: GridMap, kind: str | None = None) -> TorusNet:
    """Materialize the net; loops are the cube's own objects (no copies)."""
    if int(np.max(grid.assignment)) >= len(cube.vertex_loops):
        raise InvalidGridMap("grid uses cube directions beyond the cube's N")
    base_kind = cube.vertex_loops[0].kind
    inferred = SEMI_DISCRETE if base_kind == "smooth" else FULLY_DISCRETE
    if kind is not None and kind != inferred:
        raise ValueError(f"cube loops are {base_kind}; a {kind} net cannot be formed")
    points = grid.points()
    loops = {p: cube.vertex_loops[int(grid.assignment[p])] for p in points}
    labels = {}
    for p in points:
        for d in range(len(grid.shape)):
            r = grid.toggled(p, d)
            labels[(p, d)] = (r + 1, cube.spectral_parameters[r])
    count = loops[points[0]].size
    verts = np.concatenate([loops[p].samples for p in points])
    index = {p: i for i, p in enumerate(points)}
    mesh_loops = [[index[p] * count + j for j in range(count)] for p in points]
    quads = []
    for d in range(len(grid.shape)):
        for p in points:
            q = grid.neighbour(p, d)
            for j in range(count):
                jn = (j + 1) % count
                quads.append((index[p] * count + j, index[p] * count + jn, index[q] * count + jn, index[q] * count + j))
    return TorusNet(inferred, grid, cube, loops, labels, verts, mesh_loops, quads)


def fullness_rank(points, rel_tol: float = 1e-8) -> int:
    """Affine rank of a point cloud."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def describe_point(grid: GridMap, point) -> str:
    return "(" + ",".join(str(v) for v in point) + ")" + format_subset(int(grid.assignment[point]))
