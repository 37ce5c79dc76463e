"""Permutability and Bianchi cubes of Darboux transforms."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .darboux import DarbouxTransform, permutability_law
from .errors import CubeInconsistency, DegenerateInput, EqualSpectralParameters, ZeroSpectralParameter
from .lorentz import project
from .moebius import solve_fourth_point_many

MAX_DIRECTIONS = 24
CONSISTENCY_EXPECTED = 1e-7
CONSISTENCY_LIMIT = 1e-6


def subset_of(mask: int) -> tuple:
    """1-based direction indices contained in a bitmask."""
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


def mask_of(indices) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << (int(i) - 1)
    return mask


def format_subset(mask: int) -> str:
    return "{" + ",".join(str(i) for i in subset_of(mask)) + "}"


def _fill_degenerate(points, bad):
    """Replace flagged samples by linear continuation from the nearest good neighbours."""
    count = len(points)
    good = np.flatnonzero(~bad)
    if good.size == 0:
        raise DegenerateInput("every sample is degenerate")
    out = points.copy()
    for i in np.flatnonzero(bad):
        before = good[good < i]
        after = good[good > i]
        lo = before[-1] if before.size else good[-1] - count
        hi = after[0] if after.size else good[0] + count
        w = (i - lo) / (hi - lo)
        out[i] = (1.0 - w) * points[lo % count] + w * points[hi % count]
    return out


def permute_points(y, y1, y2, nu1, nu2):
    """Samplewise fourth points; returns ``(points, flagged_indices)``."""
    nu1, nu2 = float(nu1), float(nu2)
    if nu1 == nu2:
        raise EqualSpectralParameters(f"spectral parameters must differ (both {nu1:g})")
    if nu1 == 0 or nu2 == 0:
        raise ZeroSpectralParameter("spectral parameters must be nonzero")
    pts, status = solve_fourth_point_many(y, y1, y2, permutability_law(nu1, nu2))
    bad = status != 0
    if bad.any():
        pts = _fill_degenerate(pts, bad)
    return pts, tuple(int(i) for i in np.flatnonzero(bad))


def permute(y, y1, y2, nu1: float, nu2: float):
    """Common transform y12 of the nu1-transform y1 and the nu2-transform y2 of y."""
    pts, _ = permute_points(y.samples, y1.samples, y2.samples, nu1, nu2)
    return y.with_samples(pts)


@dataclass(eq=False)
class BianchiCube:
    directions: int
    spectral_parameters: tuple
    vertex_loops: list
    end_points: list
    provenance: list
    consistency: dict = field(default_factory=dict)
    flagged_samples: dict = field(default_factory=dict)

    def loop(self, mask: int):
        return self.vertex_loops[mask]

    def closure_gap(self, mask: int) -> float:
        return float(np.linalg.norm(self.end_points[mask] - self.vertex_loops[mask].samples[0]))

    @property
    def closure_gaps(self) -> list:
        return [self.closure_gap(m) for m in range(len(self.vertex_loops))]

    @property
    def max_consistency(self) -> float:
        return max(self.consistency.values(), default=0.0)


def build_cube(base, first_layer, consistency_limit: float = CONSISTENCY_LIMIT) -> BianchiCube:
    """Fill all 2^N vertices from a base loop and N first-layer transforms."""
    count = len(first_layer)
    if not 1 <= count <= MAX_DIRECTIONS:
        raise ValueError(f"need between 1 and {MAX_DIRECTIONS} first-layer transforms")
    mus = tuple(float(t.spectral_parameter) for t in first_layer)
    if any(m == 0 for m in mus):
        raise ZeroSpectralParameter("spectral parameters must be nonzero")
    for a, b in combinations(range(count), 2):
        if mus[a] == mus[b]:
            raise EqualSpectralParameters(f"directions {a + 1} and {b + 1} share mu={mus[a]:g}")
    size = 1 << count
    loops = [None] * size
    ends = [None] * size
    prov = [""] * size
    loops[0] = base
    ends[0] = base.samples[0]
    prov[0] = "base"
    for r, tr in enumerate(first_layer):
        if not isinstance(tr, DarbouxTransform):
            raise TypeError("first layer must be DarbouxTransform objects")
        if tr.result.samples.shape != base.samples.shape:
            raise ValueError("first-layer loops must match the base sample count")
        loops[1 << r] = tr.result
        ends[1 << r] = project(tr.sections[-1])
        prov[1 << r] = f"transform mu={mus[r]:.17g}"
    cube = BianchiCube(count, mus, loops, ends, prov)
    order = sorted(range(size), key=lambda m: (bin(m).count("1"), m))
    for mask in order:
        if bin(mask).count("1") < 2:
            continue
        members = [i for i in range(count) if mask >> i & 1]
        results = []
        for r, s in combinations(members, 2):
            parent = mask & ~(1 << r) & ~(1 << s)
            y, y1, y2 = loops[parent], loops[parent | 1 << r], loops[parent | 1 << s]
            pts, flagged = permute_points(y.samples, y1.samples, y2.samples, mus[r], mus[s])
            end, _ = permute_points(
                ends[parent][None], ends[parent | 1 << r][None], ends[parent | 1 << s][None], mus[r], mus[s]
            )
            results.append((r, s, pts, end[0], flagged))
        r, s, pts, end, flagged = results[0]
        loops[mask] = base.with_samples(pts)
        ends[mask] = end
        prov[mask] = f"permute parent={format_subset(mask & ~(1 << r) & ~(1 << s))} r={r + 1} s={s + 1}"
        if flagged:
            cube.flagged_samples[mask] = flagged
        if len(results) > 1:
            worst = max(float(np.max(np.abs(alt[2] - pts))) for alt in results[1:])
            cube.consistency[mask] = worst
            if worst > consistency_limit:
                raise CubeInconsistency(
                    f"vertex {format_subset(mask)}: parent triples disagree by {worst:.3e}",
                    vertex=mask,
                    disagreement=worst,
                )
    return cube


def verify_cube_edge(cube: BianchiCube, mask: int, direction: int, tolerances=None):
    """Darboux relation with mu_r along the cube edge (S, S + {r}); r is 1-based."""
    from .verify import edge_reports

    r = direction - 1
    if mask >> r & 1:
        raise ValueError("direction already contained in the subset")
    a = cube.loop(mask)
    b = cube.loop(mask | 1 << r)
    scope = f"edge:{format_subset(mask)}+{direction}"
    return edge_reports(a, b, cube.spectral_parameters[r], scope, tolerances)
