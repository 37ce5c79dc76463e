"""Plain-text file formats: loops, grid maps, reports, cube manifests, OBJ meshes.

Blank lines and lines starting with ``#`` are ignored by every reader.
Floats are written with ``repr`` precision (17 significant digits) unless a
format states otherwise, so a write/read round trip is exact.
"""

from __future__ import annotations

import os

import numpy as np

from .bianchi import format_subset
from .errors import ConfigError, InvalidGridMap
from .loops import DiscreteLoop, SmoothLoop
from .torus import GridMap


def _content_lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def _header_fields(line: str, keyword: str, required) -> dict:
    parts = line.split()
    if not parts or parts[0] != keyword:
        raise ConfigError(f"expected a '{keyword}' header, got {line!r}")
    out = {}
    for token in parts[1:]:
        key, sep, value = token.partition("=")
        if not sep:
            raise ConfigError(f"malformed header field {token!r}")
        out[key] = value
    missing = [k for k in required if k not in out]
    extra = sorted(set(out) - set(required))
    if missing or extra:
        raise ConfigError(f"'{keyword}' header needs exactly {', '.join(required)}")
    return out


def _int_field(fields, key) -> int:
    try:
        return int(fields[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {fields[key]!r}") from None


def _floats(line: str, count: int, number: int) -> list:
    parts = line.split()
    if len(parts) != count:
        raise ConfigError(f"line {number}: expected {count} values, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"line {number}: not a decimal number") from None


# -- Loops ------------------------------------------------------------------


def format_loop(loop) -> str:
    lines = [f"loop n={loop.n} kind={loop.kind} size={loop.size}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in loop.samples)
    lines.append("polarization")
    lines.extend(repr(float(v)) for v in loop.polarization)
    return "\n".join(lines) + "\n"


def parse_loop(text: str):
    """Loop from its text form; the polarization block defaults to m = 1."""
    lines = list(_content_lines(text))
    if not lines:
        raise ConfigError("empty loop file")
    fields = _header_fields(lines[0][1], "loop", ("n", "kind", "size"))
    n, size = _int_field(fields, "n"), _int_field(fields, "size")
    kind = fields["kind"]
    if kind not in ("smooth", "discrete"):
        raise ConfigError(f"kind must be smooth or discrete, got {kind!r}")
    body = lines[1:]
    if len(body) < size:
        raise ConfigError(f"expected {size} sample lines, got {len(body)}")
    samples = np.array([_floats(line, n, number) for number, line in body[:size]])
    rest = body[size:]
    polarization = np.ones(size)
    if rest:
        if rest[0][1] != "polarization":
            raise ConfigError(f"line {rest[0][0]}: expected 'polarization' or end of file")
        values = rest[1:]
        if len(values) != size:
            raise ConfigError(f"polarization block needs {size} values, got {len(values)}")
        polarization = np.array([_floats(line, 1, number)[0] for number, line in values])
    if kind == "smooth":
        return SmoothLoop(samples, polarization)
    return DiscreteLoop(samples, polarization)


def read_loop(path):
    with open(path, encoding="utf-8") as fh:
        return parse_loop(fh.read())


def write_loop(loop, path):
    _write(path, format_loop(loop))


# -- Grid maps ----------------------------------------------------------------


def format_grid_map(grid: GridMap) -> str:
    lines = [f"gridmap k={grid.k} shape={','.join(str(v) for v in grid.shape)}"]
    for point in grid.points():
        mask = int(grid.assignment[point])
        indices = [str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1]
        lines.append(" ".join([str(v) for v in point] + indices))
    return "\n".join(lines) + "\n"


def parse_grid_map(text: str) -> GridMap:
    lines = list(_content_lines(text))
    if not lines:
        raise ConfigError("empty gridmap file")
    fields = _header_fields(lines[0][1], "gridmap", ("k", "shape"))
    k = _int_field(fields, "k")
    try:
        shape = tuple(int(v) for v in fields["shape"].split(","))
    except ValueError:
        raise ConfigError(f"bad shape {fields['shape']!r}") from None
    if len(shape) != k - 1:
        raise InvalidGridMap(f"k={k} needs {k - 1} grid dimensions, shape has {len(shape)}")
    assignment = np.full(shape, -1, dtype=np.int64)
    for number, line in lines[1:]:
        try:
            values = [int(v) for v in line.split()]
        except ValueError:
            raise ConfigError(f"line {number}: expected integers") from None
        point, indices = tuple(values[: k - 1]), values[k - 1 :]
        if len(point) != k - 1 or any(not 0 <= p < s for p, s in zip(point, shape)):
            raise InvalidGridMap(f"line {number}: grid point out of range")
        if indices != sorted(set(indices)) or any(i < 1 for i in indices):
            raise InvalidGridMap(f"line {number}: directions must be sorted, distinct and >= 1")
        if assignment[point] != -1:
            raise InvalidGridMap(f"line {number}: grid point {point} listed twice")
        assignment[point] = sum(1 << (i - 1) for i in indices)
    if np.any(assignment < 0):
        raise InvalidGridMap("some grid points are not assigned")
    return GridMap(shape, assignment)


def read_grid_map(path) -> GridMap:
    with open(path, encoding="utf-8") as fh:
        return parse_grid_map(fh.read())


def write_grid_map(grid: GridMap, path):
    _write(path, format_grid_map(grid))


# -- Reports and manifests ------------------------------------------------------


def write_report(report, path):
    _write(path, report.text())


def format_cube_manifest(cube, report) -> str:
    lines = [f"cube directions={cube.directions} vertices={len(cube.vertex_loops)}"]
    for r, mu in enumerate(cube.spectral_parameters):
        lines.append(f"direction r={r + 1} mu={mu!r}")
    for mask in range(len(cube.vertex_loops)):
        origin = cube.provenance[mask].replace(" ", ";")
        consistency = cube.consistency.get(mask)
        extra = f" consistency={consistency:.9e}" if consistency is not None else ""
        lines.append(
            f"vertex subset={format_subset(mask)} closure={cube.closure_gap(mask):.9e}{extra} origin={origin}"
        )
    lines.extend(report.lines())
    return "\n".join(lines) + "\n"


# -- OBJ ------------------------------------------------------------------------


def _fixed(value: float, precision: int) -> str:
    text = f"{value:.{precision}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def format_obj(net, precision: int = 9) -> str:
    """Vertices grid-major then sample order, one closed ``l`` per loop, ``f`` quads.

    Points in R^2 are padded with a zero third coordinate; points in R^n with
    n > 3 keep all n coordinates on their ``v`` line.
    """
    verts = np.asarray(net.mesh_vertices, dtype=float)
    if verts.shape[1] == 2:
        verts = np.hstack([verts, np.zeros((verts.shape[0], 1))])
    lines = [f"# torus n={net.n} grid={'x'.join(str(v) for v in net.grid.shape)} samples={net.samples}"]
    lines.extend("v " + " ".join(_fixed(c, precision) for c in row) for row in verts)
    for loop in net.mesh_loops:
        lines.append("l " + " ".join(str(i + 1) for i in list(loop) + [loop[0]]))
    lines.extend("f " + " ".join(str(i + 1) for i in quad) for quad in net.mesh_quads)
    return "\n".join(lines) + "\n"


def write_obj(net, path, precision: int = 9):
    _write(path, format_obj(net, precision))


def _write(path, text: str):
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
