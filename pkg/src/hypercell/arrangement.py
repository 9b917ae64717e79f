"""Bounded faces of a planar line arrangement inside a disk.

Lines are ``{x : <x, u_i> = t_i}``. Faces are found by walking directed edges
with a left-turn rule: arriving at a vertex along line i, the boundary of the
face on the left continues along the other line through that vertex in the
direction that turns left. In a simple arrangement (two lines per vertex,
which holds almost surely) every directed edge belongs to exactly one face.
"""

from __future__ import annotations

import numpy as np

from .errors import ArrangementOverflow

MAX_CELLS = 10 ** 6
PARALLEL_TOL = 1e-12


def bounded_faces_in_disk(normals: np.ndarray, offsets: np.ndarray, radius: float):
    """Faces of the arrangement lying entirely inside the open disk of the given radius.

    Returns a list of ``(vertices, normals, bounds, lines)`` where vertices are
    in counter-clockwise order, edge k runs from vertex k to vertex k+1 and lies
    on line ``lines[k]``, and ``normals[k], bounds[k]`` give its outward halfspace.
    """
    U = np.asarray(normals, dtype=float)
    t = np.asarray(offsets, dtype=float)
    n = len(U)
    if n * (n - 1) // 2 + n + 1 > MAX_CELLS:
        raise ArrangementOverflow(f"{n} lines may produce more than {MAX_CELLS} cells")
    if n < 3:
        return []
    ii, jj = np.triu_indices(n, 1)
    det = U[ii, 0] * U[jj, 1] - U[ii, 1] * U[jj, 0]
    ok = np.abs(det) > PARALLEL_TOL
    ii, jj, det = ii[ok], jj[ok], det[ok]
    x = (t[ii] * U[jj, 1] - t[jj] * U[ii, 1]) / det
    y = (U[ii, 0] * t[jj] - U[jj, 0] * t[ii]) / det
    inside = x * x + y * y < radius * radius
    ii, jj, x, y, det = ii[inside], jj[inside], x[inside], y[inside], det[inside]
    P = np.column_stack([x, y])
    nv = len(P)
    if nv == 0:
        return []

    # each line's vertices ordered along its direction d_i = (-u_i1, u_i0)
    along_i = -U[ii, 1] * x + U[ii, 0] * y
    along_j = -U[jj, 1] * x + U[jj, 0] * y
    line_of = np.concatenate([ii, jj])
    other_of = np.concatenate([jj, ii])
    vid = np.concatenate([np.arange(nv), np.arange(nv)])
    order = np.lexsort((np.concatenate([along_i, along_j]), line_of))
    line_sorted = line_of[order]
    starts = np.searchsorted(line_sorted, np.arange(n + 1))
    others = other_of[order].tolist()
    vids = vid[order].tolist()
    starts = starts.tolist()
    # position of each incidence along its line, keyed by (line, other line)
    position = {}
    for i in range(n):
        for k in range(starts[i], starts[i + 1]):
            position[(i, others[k])] = k - starts[i]
    cross_sign = np.sign(U[:, None, 0] * U[None, :, 1] - U[:, None, 1] * U[None, :, 0]).tolist()
    lengths = [starts[i + 1] - starts[i] for i in range(n)]

    visited = set()
    faces = []
    for i0 in range(n):
        for k0 in range(lengths[i0]):
            for s0 in (1, -1):
                state = (i0, k0, s0)
                if state in visited or not 0 <= k0 + s0 < lengths[i0]:
                    continue
                verts, lines, signs = [], [], []
                i, k, s = state
                closed = False
                while True:
                    visited.add((i, k, s))
                    verts.append(vids[starts[i] + k])
                    lines.append(i)
                    signs.append(s)
                    k2 = k + s
                    if not 0 <= k2 < lengths[i]:
                        break
                    j = others[starts[i] + k2]
                    s2 = s * int(cross_sign[i][j])
                    kj = position[(j, i)]
                    nxt = (j, kj, s2)
                    if nxt == state:
                        closed = True
                        break
                    if nxt in visited:
                        break
                    i, k, s = nxt
                if closed and len(verts) >= 3:
                    lines_arr = np.array(lines)
                    sg = np.array(signs, dtype=float)
                    faces.append((P[verts], U[lines_arr] * sg[:, None], t[lines_arr] * sg, lines_arr))
                    if len(faces) > MAX_CELLS:
                        raise ArrangementOverflow("too many cells")
    return faces
