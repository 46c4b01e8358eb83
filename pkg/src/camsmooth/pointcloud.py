"""Colored point clouds: PLY I/O and downsampling.

Clouds are immutable value objects holding float64 positions (meters) and
per-point colors in [0, 1]. PLY is the interchange format: ASCII or
binary-little-endian with float x/y/z and uchar red/green/blue vertex
properties. Two downsampling stages speed up repeated rendering: keep
every k-th point, then merge points voxel-wise (centroid position, mean
color, output ordered by voxel key for reproducibility).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PlyParseError(ValueError):
    """Malformed PLY input; carries the 1-based header line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PlySchemaError(ValueError):
    """Structurally valid PLY that lacks the required vertex properties."""


@dataclass(frozen=True, eq=False)
class ColoredPointCloud:
    """Positions (n, 3) in meters plus per-point colors (n, C) in [0, 1]."""

    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        col = np.ascontiguousarray(self.colors, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError(f"positions must be (n, 3), got {pos.shape}")
        if col.ndim != 2 or col.shape[0] != pos.shape[0]:
            raise ValueError(
                f"colors must be (n, C) with n = {pos.shape[0]}, got {col.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if col.size and (col.min() < 0.0 or col.max() > 1.0):
            raise ValueError("colors must lie in [0, 1]")
        pos.setflags(write=False)
        col.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "colors", col)

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def channel_count(self) -> int:
        return self.colors.shape[1]


_PLY_FLOAT_TYPES = {"float", "float32", "double", "float64"}
_PLY_UCHAR_TYPES = {"uchar", "uint8"}
_PLY_TYPE_TO_DTYPE = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
_REQUIRED_PROPS = ("x", "y", "z", "red", "green", "blue")


def parse_ply(data: bytes) -> ColoredPointCloud:
    """Parse an ASCII or binary-little-endian PLY into a cloud.

    Colors are normalized from uint8 to [0, 1]; point order is preserved.
    Extra scalar vertex properties are skipped. Raises PlyParseError for a
    malformed header or truncated body, PlySchemaError when a required
    property is missing or has the wrong type.
    """
    if not isinstance(data, (bytes, bytearray)):
        raise TypeError("parse_ply expects bytes")
    end_tag = b"end_header"
    end = data.find(end_tag)
    if not data.startswith(b"ply") or end < 0:
        raise PlyParseError("not a PLY file (missing 'ply'/'end_header')", line=1)
    # header ends at the newline after end_header
    body_start = data.find(b"\n", end)
    if body_start < 0:
        raise PlyParseError("no newline after end_header")
    body = data[body_start + 1:]
    header_lines = data[:end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements: list[tuple[str, int, list[tuple[str, str]]]] = []
    for lineno, raw in enumerate(header_lines, start=1):
        tokens = raw.strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "ply":
            continue
        if tokens[0] == "format":
            if len(tokens) < 2:
                raise PlyParseError("format line needs a format name", lineno)
            fmt = tokens[1]
            if fmt not in ("ascii", "binary_little_endian"):
                raise PlyParseError(f"unsupported format {fmt!r}", lineno)
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise PlyParseError("element line needs a name and a count", lineno)
            try:
                count = int(tokens[2])
            except ValueError:
                raise PlyParseError(f"bad element count {tokens[2]!r}", lineno) from None
            if count < 0:
                raise PlyParseError(f"negative element count {count}", lineno)
            elements.append((tokens[1], count, []))
        elif tokens[0] == "property":
            if not elements:
                raise PlyParseError("property before any element", lineno)
            if tokens[1] == "list":
                elements[-1][2].append(("__list__", " ".join(tokens[2:])))
            elif len(tokens) == 3:
                elements[-1][2].append((tokens[2], tokens[1]))
            else:
                raise PlyParseError(f"malformed property line {raw!r}", lineno)
        else:
            raise PlyParseError(f"unknown header keyword {tokens[0]!r}", lineno)
    if fmt is None:
        raise PlyParseError("missing format line")

    vertex_index = next(
        (i for i, (name, _, _) in enumerate(elements) if name == "vertex"), None
    )
    if vertex_index is None:
        raise PlySchemaError("no vertex element")
    for name, _, props in elements[:vertex_index]:
        if any(p == "__list__" for p, _ in props):
            raise PlySchemaError(
                f"element {name!r} with list properties precedes vertex data"
            )
    _, n_vertices, vprops = elements[vertex_index]
    if any(p == "__list__" for p, _ in vprops):
        raise PlySchemaError("list properties on the vertex element are unsupported")
    names = [p for p, _ in vprops]
    types = dict(vprops)
    for req in _REQUIRED_PROPS:
        if req not in names:
            raise PlySchemaError(f"missing required vertex property {req!r}")
    for coord in ("x", "y", "z"):
        if types[coord] not in _PLY_FLOAT_TYPES:
            raise PlySchemaError(f"property {coord!r} must be float, is {types[coord]}")
    for chan in ("red", "green", "blue"):
        if types[chan] not in _PLY_UCHAR_TYPES:
            raise PlySchemaError(f"property {chan!r} must be uchar, is {types[chan]}")

    # rows of elements before the vertex element (all fixed-size here)
    def element_row_dtype(props):
        return np.dtype([(p, "<" + _PLY_TYPE_TO_DTYPE[t]) for p, t in props])

    if fmt == "ascii":
        text_rows = body.decode("ascii", errors="replace").splitlines()
        rows_before = sum(count for _, count, _ in elements[:vertex_index])
        rows = [r for r in text_rows if r.strip()]
        vertex_rows = rows[rows_before: rows_before + n_vertices]
        if len(vertex_rows) < n_vertices:
            raise PlyParseError(
                f"truncated file: header promises {n_vertices} vertices, "
                f"found {len(vertex_rows)}"
            )
        raw = np.empty((n_vertices, len(names)), dtype=np.float64)
        for i, row in enumerate(vertex_rows):
            parts = row.split()
            if len(parts) < len(names):
                raise PlyParseError(
                    f"vertex row {i} has {len(parts)} values, expected {len(names)}"
                )
            raw[i] = [float(p) for p in parts[: len(names)]]
        cols = {name: raw[:, j] for j, name in enumerate(names)}
    else:
        offset = sum(
            count * element_row_dtype(props).itemsize
            for _, count, props in elements[:vertex_index]
        )
        dtype = element_row_dtype(vprops)
        needed = n_vertices * dtype.itemsize
        if len(body) - offset < needed:
            raise PlyParseError(
                f"truncated file: need {needed} bytes of vertex data, "
                f"have {max(0, len(body) - offset)}"
            )
        table = np.frombuffer(body, dtype=dtype, count=n_vertices, offset=offset)
        cols = {name: table[name].astype(np.float64) for name in names}

    positions = np.stack([cols["x"], cols["y"], cols["z"]], axis=1)
    colors = np.stack([cols["red"], cols["green"], cols["blue"]], axis=1) / 255.0
    if colors.size and (colors.min() < 0.0 or colors.max() > 1.0):
        raise PlyParseError("color values outside the uint8 range")
    return ColoredPointCloud(positions, colors)


def write_ply(cloud: ColoredPointCloud) -> bytes:
    """Serialize as binary-little-endian PLY; colors round to uint8 half-up."""
    if cloud.channel_count != 3:
        raise ValueError(
            f"PLY stores RGB clouds only, got {cloud.channel_count} channels"
        )
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(cloud)}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "end_header\n"
    ).encode("ascii")
    dtype = np.dtype(
        [("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
         ("red", "u1"), ("green", "u1"), ("blue", "u1")]
    )
    table = np.empty(len(cloud), dtype=dtype)
    pos = cloud.positions.astype(np.float32)
    table["x"], table["y"], table["z"] = pos[:, 0], pos[:, 1], pos[:, 2]
    quant = np.floor(cloud.colors * 255.0 + 0.5).astype(np.uint8)
    table["red"], table["green"], table["blue"] = quant[:, 0], quant[:, 1], quant[:, 2]
    return header + table.tobytes()


def uniform_downsample(cloud: ColoredPointCloud, k: int) -> ColoredPointCloud:
    """Keep points at indices 0, k, 2k, ... (order preserved)."""
    if k < 1:
        raise ValueError(f"keep-every-k counter must be >= 1, got {k}")
    if k == 1:
        return cloud
    return ColoredPointCloud(cloud.positions[::k], cloud.colors[::k])


def voxel_downsample(cloud: ColoredPointCloud, voxel_size: float) -> ColoredPointCloud:
    """Merge points sharing a voxel into one centroid point with mean color.

    Output is sorted by voxel key, z-major then y then x, so the result is
    identical across runs and platforms.
    """
    if not (np.isfinite(voxel_size) and voxel_size > 0):
        raise ValueError(f"voxel size must be > 0, got {voxel_size}")
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud.positions / voxel_size).astype(np.int64)
    order = np.lexsort((keys[:, 0], keys[:, 1], keys[:, 2]))
    sorted_keys = keys[order]
    boundary = np.empty(len(cloud), dtype=bool)
    boundary[0] = True
    boundary[1:] = np.any(sorted_keys[1:] != sorted_keys[:-1], axis=1)
    starts = np.nonzero(boundary)[0]
    counts = np.diff(np.append(starts, len(cloud)))[:, None]
    pos_sums = np.add.reduceat(cloud.positions[order], starts, axis=0)
    col_sums = np.add.reduceat(cloud.colors[order], starts, axis=0)
    return ColoredPointCloud(pos_sums / counts, np.clip(col_sums / counts, 0.0, 1.0))
