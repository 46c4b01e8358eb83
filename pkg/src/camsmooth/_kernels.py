"""Hot kernels for point splatting, in numba and pure-numpy variants.

Both variants perform the identical sequence of IEEE operations (projection
expanded elementwise, two-pass depth-then-index selection), so they produce
bit-identical winner arrays. Selection rule per pixel: among points whose
floored pixel lands there and whose depth exceeds ``depth_eps``, take the
minimum depth; every candidate within ``tie_tol`` of that minimum is a tie,
and the lowest point index among ties wins.

Keep the arithmetic in ``_project_numpy`` and ``_project_splat_numba`` in
lockstep with ``geometry.camera_frame_coords``.
"""

from __future__ import annotations

import numpy as np

from ._backend import NUMBA_ENABLED

# Depths within this absolute tolerance of the per-pixel minimum count as
# tied, which makes the winner stable under ~1 ulp re-associations when the
# same scene is rendered through algebraically equal motion compositions.
DEPTH_TIE_TOL = 1e-12


def _splat_numpy(lin, depth, index, n_pixels):
    """Winner point index per pixel (-1 where uncovered), numpy path."""
    depth_buf = np.full(n_pixels, np.inf)
    np.minimum.at(depth_buf, lin, depth)
    tied = depth <= depth_buf[lin] + DEPTH_TIE_TOL
    winner = np.full(n_pixels, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(winner, lin[tied], index[tied])
    winner[winner == np.iinfo(np.int64).max] = -1
    return winner


def _project_numpy(positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps):
    """Project points and keep in-grid, in-front ones.

    Returns (lin, depth, index): flattened pixel id, depth, and original
    point index of each surviving point.
    """
    dx = positions[:, 0] - t[0]
    dy = positions[:, 1] - t[1]
    dz = positions[:, 2] - t[2]
    X = rinv[0, 0] * dx + rinv[0, 1] * dy + rinv[0, 2] * dz
    Y = rinv[1, 0] * dx + rinv[1, 1] * dy + rinv[1, 2] * dz
    Z = rinv[2, 0] * dx + rinv[2, 1] * dy + rinv[2, 2] * dz
    in_front = Z > depth_eps
    safe = np.where(in_front, Z, 1.0)
    u = fx * X / safe + cx
    v = fy * Y / safe + cy
    col = np.floor(u).astype(np.int64)
    row = np.floor(v).astype(np.int64)
    keep = in_front & (col >= 0) & (col < width) & (row >= 0) & (row < height)
    index = np.nonzero(keep)[0]
    return row[keep] * width + col[keep], Z[keep], index


def render_winner_numpy(positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps):
    lin, depth, index = _project_numpy(
        positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps
    )
    return _splat_numpy(lin, depth, index, width * height)


if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _project_splat_numba(
        positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps, tie_tol
    ):  # pragma: no cover - exercised via render()
        n = positions.shape[0]
        n_pixels = width * height
        depth_buf = np.full(n_pixels, np.inf)
        lin = np.empty(n, dtype=np.int64)
        depth = np.empty(n, dtype=np.float64)
        r00, r01, r02 = rinv[0, 0], rinv[0, 1], rinv[0, 2]
        r10, r11, r12 = rinv[1, 0], rinv[1, 1], rinv[1, 2]
        r20, r21, r22 = rinv[2, 0], rinv[2, 1], rinv[2, 2]
        tx, ty, tz = t[0], t[1], t[2]
        for i in range(n):
            dx = positions[i, 0] - tx
            dy = positions[i, 1] - ty
            dz = positions[i, 2] - tz
            Z = r20 * dx + r21 * dy + r22 * dz
            lin[i] = -1
            if Z <= depth_eps:
                continue
            X = r00 * dx + r01 * dy + r02 * dz
            Y = r10 * dx + r11 * dy + r12 * dz
            u = fx * X / Z + cx
            v = fy * Y / Z + cy
            col = int(np.floor(u))
            row = int(np.floor(v))
            if col < 0 or col >= width or row < 0 or row >= height:
                continue
            p = row * width + col
            lin[i] = p
            depth[i] = Z
            if Z < depth_buf[p]:
                depth_buf[p] = Z
        winner = np.full(n_pixels, -1, dtype=np.int64)
        for i in range(n):
            p = lin[i]
            if p < 0:
                continue
            if depth[i] <= depth_buf[p] + tie_tol:
                w = winner[p]
                if w < 0 or i < w:
                    winner[p] = i
        return winner

    def render_winner_numba(
        positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps
    ):
        return _project_splat_numba(
            positions, rinv, t, float(fx), float(fy), float(cx), float(cy),
            width, height, float(depth_eps), DEPTH_TIE_TOL,
        )
else:
    render_winner_numba = None


def render_winner(positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps):
    """Dispatch to the active backend."""
    if NUMBA_ENABLED:
        return render_winner_numba(
            positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps
        )
    return render_winner_numpy(
        positions, rinv, t, fx, fy, cx, cy, width, height, depth_eps
    )
