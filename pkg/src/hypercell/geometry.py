"""Exact convex geometry for hyperplane tessellation cells.

Cells are bounded convex polytopes in dimension 2 or 3 carried in both
representations at once: a list of irredundant halfspaces ``<x, n_k> <= b_k``
and the vertex set. In the plane the vertices form a counter-clockwise ring and
edge ``k`` (from vertex ``k`` to vertex ``k+1``) lies on halfspace ``k``. In
space every halfspace ``k`` owns face ``k``, a ring of vertex indices ordered
counter-clockwise when seen from outside.

Simplex queries (``vertex_v``, ``delta_d``, the positive-spanning test) work in
any dimension up to 8.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._lp import simplex_standard
from .errors import EmptyCell, IllConditioned, NotPositivelySpanning, UnboundedCell

EPS_GEOM = 1e-9
KAPPA_MAX = 1e12
DELTA_SPAN = 1e-10
MAX_SIMPLEX_DIM = 8

# ambiguous positive-spanning decisions (margin within DELTA_SPAN); diagnostic only
span_ambiguity_counter = {"count": 0}


def unit_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError("cannot normalise a zero or non-finite vector")
    return v / norm


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane ``{x : <x, normal> = offset}`` with ``offset > 0``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", unit_vector(self.normal))
        if not self.offset > 0:
            raise ValueError("hyperplane offset must be positive")

    @property
    def halfspace(self) -> "Halfspace":
        """The closed halfspace bounded by this hyperplane that contains the origin."""
        return Halfspace(self.normal, self.offset)


@dataclass(frozen=True)
class Halfspace:
    """``{x : <x, normal> <= bound}``."""

    normal: np.ndarray
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "normal", unit_vector(self.normal))
        object.__setattr__(self, "bound", float(self.bound))


@dataclass(frozen=True, eq=False)
class ConvexCell:
    vertices: np.ndarray
    normals: np.ndarray
    bounds: np.ndarray
    faces: tuple | None = None  # only for dim 3
    _scale: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self._scale == 0.0:
            scale = float(np.sqrt((self.vertices ** 2).sum(axis=1).max()))
            object.__setattr__(self, "_scale", max(scale, 1e-300))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_facets(self) -> int:
        return len(self.bounds)

    @property
    def scale(self) -> float:
        """Largest vertex norm; tolerances are taken relative to it."""
        return self._scale

    @property
    def tol(self) -> float:
        return EPS_GEOM * self._scale

    def halfspaces(self) -> list[Halfspace]:
        return [Halfspace(n, b) for n, b in zip(self.normals, self.bounds)]

    def translated(self, x) -> "ConvexCell":
        x = np.asarray(x, dtype=float)
        return ConvexCell(self.vertices + x, self.normals, self.bounds + self.normals @ x, self.faces)

    def scaled(self, t: float) -> "ConvexCell":
        if not t > 0:
            raise ValueError("scale factor must be positive")
        return ConvexCell(self.vertices * t, self.normals, self.bounds * t, self.faces)

    def contains(self, x, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(np.all(self.normals @ np.asarray(x, dtype=float) - self.bounds <= tol))

    def edges(self) -> list[tuple[int, int]]:
        """Vertex index pairs of the 1-dimensional faces."""
        if self.dim == 2:
            n = len(self.vertices)
            return [(i, (i + 1) % n) for i in range(n)]
        seen = set()
        for face in self.faces:
            for a, b in zip(face, face[1:] + face[:1]):
                seen.add((min(a, b), max(a, b)))
        return sorted(seen)

    def edge_facets(self) -> dict[tuple[int, int], tuple[int, int]]:
        """For dim 3: map each edge to the two faces sharing it."""
        owners: dict[tuple[int, int], list[int]] = {}
        for k, face in enumerate(self.faces):
            for a, b in zip(face, face[1:] + face[:1]):
                owners.setdefault((min(a, b), max(a, b)), []).append(k)
        return {e: tuple(f) for e, f in owners.items()}


# ----------------------------------------------------------------------------
# constructors


def polygon(vertices) -> ConvexCell:
    """Cell from the vertices of a convex polygon (either orientation)."""
    V = np.asarray(vertices, dtype=float)
    if len(V) < 3:
        raise EmptyCell("polygon needs at least 3 vertices")
    x, y = V[:, 0], V[:, 1]
    signed = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if signed < 0:
        V = V[::-1].copy()
    E = np.roll(V, -1, axis=0) - V
    lengths = np.hypot(E[:, 0], E[:, 1])
    N = np.column_stack([E[:, 1], -E[:, 0]]) / lengths[:, None]
    return ConvexCell(V, N, np.einsum("ij,ij->i", N, V))


def box(lo, hi) -> ConvexCell:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape == (2,):
        return polygon([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    if lo.shape != (3,):
        raise ValueError("box supports dimensions 2 and 3")
    corners = np.array([[hi[0] if i & 1 else lo[0], hi[1] if i & 2 else lo[1], hi[2] if i & 4 else lo[2]]
                        for i in range(8)])
    normals = np.array([[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]], dtype=float)
    bounds = np.array([-lo[0], hi[0], -lo[1], hi[1], -lo[2], hi[2]])
    faces = tuple(_ccw_face(corners, [i for i in range(8) if normals[k] @ corners[i] >= bounds[k] - 1e-12],
                            normals[k]) for k in range(6))
    return ConvexCell(corners, normals, bounds, faces)


def _plane_basis(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(u, a)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(u, e1)


def _ccw_face(points: np.ndarray, idx, normal: np.ndarray) -> tuple:
    idx = list(idx)
    P = points[idx]
    c = P.mean(axis=0)
    e1, e2 = _plane_basis(normal)
    ang = np.arctan2((P - c) @ e2, (P - c) @ e1)
    return tuple(idx[i] for i in np.argsort(ang, kind="stable"))


def cell_from_halfspaces(normals, bounds) -> ConvexCell:
    """Bounded cell ``{x : N x <= b}`` in dimension 2 or 3.

    Raises UnboundedCell if the intersection is unbounded and EmptyCell if it
    has empty interior.
    """
    N = np.array([unit_vector(n) for n in normals])
    b = np.asarray(bounds, dtype=float) / np.linalg.norm(np.asarray(normals, dtype=float), axis=1)
    d = N.shape[1]
    pts = []
    for combo in itertools.combinations(range(len(N)), d):
        M = N[list(combo)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(combo)])
        if np.all(N @ x - b <= 1e-9 * max(1.0, np.abs(x).max())):
            pts.append(x)
    if not pts:
        raise UnboundedCell("no vertices found")
    pts = np.array(pts)
    centre = pts.mean(axis=0)
    half = 2.0 * np.abs(pts - centre).max() + 1.0
    cell = box(centre - half, centre + half)
    box_planes = {(tuple(n), bb) for n, bb in zip(cell.normals, cell.bounds)}
    for n, bb in zip(N, b):
        cell = clip(cell, Halfspace(n, bb))
    for n, bb in zip(cell.normals, cell.bounds):
        if (tuple(n), bb) in box_planes:
            raise UnboundedCell("halfspaces do not bound a cell")
    return cell


# ----------------------------------------------------------------------------
# clipping


def clip(cell: ConvexCell, hs: Halfspace) -> ConvexCell:
    """Intersect ``cell`` with a halfspace, keeping both representations consistent.

    A halfspace containing the cell leaves it unchanged (the redundant
    constraint is not recorded); EmptyCell is raised when nothing with
    interior remains.
    """
    return clip_raw(cell, hs.normal, hs.bound)


def clip_raw(cell: ConvexCell, u: np.ndarray, b: float) -> ConvexCell:
    """``clip`` for a unit normal and bound given directly."""
    if cell.dim == 2:
        return _clip2d(cell, u, b)
    if cell.dim == 3:
        return _clip3d(cell, u, b)
    raise ValueError("clipping supports dimensions 2 and 3 only")


def _clip2d(cell: ConvexCell, u: np.ndarray, b: float) -> ConvexCell:
    V = cell.vertices
    s = V @ u - b
    tol = cell.tol
    if s.max() <= tol:
        return cell
    if s.min() >= -tol:
        raise EmptyCell("halfspace misses the cell interior")
    n = len(V)
    sl = s.tolist()
    vl = V.tolist()
    pts = []
    labels = []
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        si, sj = sl[i], sl[j]
        if si <= tol:
            pts.append(vl[i])
            if sj > tol:
                if si < -tol:
                    labels.append(i)
                    f = si / (si - sj)
                    pts.append([vl[i][0] + f * (vl[j][0] - vl[i][0]), vl[i][1] + f * (vl[j][1] - vl[i][1])])
                labels.append(-1)
            else:
                labels.append(i)
        elif sj < -tol:
            f = si / (si - sj)
            pts.append([vl[i][0] + f * (vl[j][0] - vl[i][0]), vl[i][1] + f * (vl[j][1] - vl[i][1])])
            labels.append(i)
    return _finish2d(cell, pts, labels, u, b, tol)


def _finish2d(cell, pts, labels, u, b, tol):
    # merge consecutive coincident vertices, dropping the zero-length edge
    n = len(pts)
    lengths = [math.hypot(pts[(i + 1) % n][0] - pts[i][0], pts[(i + 1) % n][1] - pts[i][1]) for i in range(n)]
    short = [h <= tol for h in lengths]
    if any(short) and not all(short):
        pts = [q for q, sh in zip(pts, short) if not sh]
        labels = [lab for lab, sh in zip(labels, short) if not sh]
        n = len(pts)
        lengths = [math.hypot(pts[(i + 1) % n][0] - pts[i][0], pts[(i + 1) % n][1] - pts[i][1]) for i in range(n)]
    if n < 3:
        raise EmptyCell("clipped polygon degenerated")
    area = 0.5 * sum(pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1] for i in range(n))
    if area <= tol * sum(lengths):
        raise EmptyCell("clipped polygon has empty interior")
    idx = np.array(labels)
    normals = cell.normals[idx]
    bounds = cell.bounds[idx]
    new = idx < 0
    normals[new] = u
    bounds[new] = b
    return ConvexCell(np.array(pts), normals, bounds)


def _clip3d(cell: ConvexCell, u: np.ndarray, b: float) -> ConvexCell:
    V = cell.vertices
    s = V @ u - b
    tol = cell.tol
    if s.max() <= tol:
        return cell
    if s.min() >= -tol:
        raise EmptyCell("halfspace misses the cell interior")
    keep = s <= tol
    pts = [V[i] for i in np.flatnonzero(keep)]
    remap = {int(i): k for k, i in enumerate(np.flatnonzero(keep))}
    cut_index: dict[tuple[int, int], int] = {}

    def cut(a, c):
        key = (a, c) if a < c else (c, a)
        if key not in cut_index:
            t = s[a] / (s[a] - s[c])
            pts.append(V[a] + t * (V[c] - V[a]))
            cut_index[key] = len(pts) - 1
        return cut_index[key]

    cap = set()
    new_faces = []
    labels = []
    for k, face in enumerate(cell.faces):
        ring = []
        m = len(face)
        for t in range(m):
            a, c = face[t], face[(t + 1) % m]
            if keep[a]:
                ring.append(remap[a])
                if s[a] >= -tol:
                    cap.add(remap[a])
                elif s[c] > tol:
                    p = cut(a, c)
                    ring.append(p)
                    cap.add(p)
            elif s[c] < -tol:
                p = cut(a, c)
                ring.append(p)
                cap.add(p)
        if len(ring) >= 3:
            new_faces.append(ring)
            labels.append(k)
    P = np.array(pts)
    if len(cap) >= 3:
        new_faces.append(list(_ccw_face(P, sorted(cap), u)))
        labels.append(-1)
    return _finish3d(cell, P, new_faces, labels, u, b, tol)


def _finish3d(cell, P, faces, labels, u, b, tol):
    # drop faces that collapsed to a segment within tolerance
    good_faces, good_labels = [], []
    for face, lab in zip(faces, labels):
        Q = P[face]
        area = _polygon_area3(Q)
        perim = float(np.linalg.norm(Q - np.roll(Q, -1, axis=0), axis=1).sum())
        if area > tol * perim:
            good_faces.append(face)
            good_labels.append(lab)
    if len(good_faces) < 4:
        raise EmptyCell("clipped polyhedron degenerated")
    used = sorted({i for f in good_faces for i in f})
    index = {old: new for new, old in enumerate(used)}
    P = P[used]
    faces = tuple(tuple(index[i] for i in f) for f in good_faces)
    normals = np.array([u if lab < 0 else cell.normals[lab] for lab in good_labels])
    bounds = np.array([b if lab < 0 else cell.bounds[lab] for lab in good_labels])
    out = ConvexCell(P, normals, bounds, faces)
    vol = _polyhedron_volume(out)
    if vol <= tol * _polyhedron_surface(out):
        raise EmptyCell("clipped polyhedron has empty interior")
    return out


def _polygon_area3(Q: np.ndarray) -> float:
    c = Q.mean(axis=0)
    cr = np.cross(Q - c, np.roll(Q, -1, axis=0) - c)
    return 0.5 * float(np.linalg.norm(cr.sum(axis=0)))


def _polyhedron_surface(cell: ConvexCell) -> float:
    return sum(_polygon_area3(cell.vertices[list(f)]) for f in cell.faces)


def _polyhedron_volume(cell: ConvexCell) -> float:
    V = cell.vertices
    c = V.mean(axis=0)
    vol = 0.0
    for f in cell.faces:
        f0 = V[f[0]] - c
        for i in range(1, len(f) - 1):
            vol += float(np.dot(f0, np.cross(V[f[i]] - c, V[f[i + 1]] - c)))
    return vol / 6.0


# ----------------------------------------------------------------------------
# direction tuples and the circumscribed simplex


def _as_tuple(dirs) -> np.ndarray:
    U = np.asarray(dirs, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1] + 1:
        raise ValueError("a direction tuple is a (d+1, d) array")
    if U.shape[1] > MAX_SIMPLEX_DIM:
        raise ValueError(f"dimension above {MAX_SIMPLEX_DIM} not supported")
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def span_coefficients(U: np.ndarray) -> np.ndarray:
    """Null vector of ``U^T`` for a (..., d+1, d) batch, via signed maximal minors."""
    U = np.asarray(U, dtype=float)
    k = U.shape[-2]
    lam = np.empty(U.shape[:-1])
    for i in range(k):
        rows = [j for j in range(k) if j != i]
        lam[..., i] = (-1) ** i * np.linalg.det(U[..., rows, :])
    return lam


def positive_span_margin(U) -> np.ndarray:
    """Normalised smallest coefficient of the positive dependency of a (d+1)-tuple batch.

    Returns ``min_i lambda_i / sum_i lambda_i`` when the coefficients share a
    sign, and a non-positive value otherwise.
    """
    lam = span_coefficients(U)
    total = lam.sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = lam / total[..., None]
    margin = ratio.min(axis=-1)
    margin = np.where(np.isfinite(margin) & (np.abs(total) > 0), margin, -1.0)
    return margin


def in_P_batch(U) -> np.ndarray:
    """Vectorised membership of (N, d+1, d) tuples in the positively spanning set."""
    return positive_span_margin(U) > DELTA_SPAN


def spanning_margin_lp(dirs) -> float:
    """Largest t with ``sum lambda_i u_i = 0``, ``sum lambda_i = 1``, ``lambda_i >= t``.

    Works for any number of directions (not only d+1) and is used to decide
    positive spanning of arbitrary direction subsets.
    """
    U = np.asarray(dirs, dtype=float)
    n, d = U.shape
    # lambda_i = mu_i + t with mu, t >= 0; maximising t over this cone covers t >= 0
    M = np.zeros((d + 1, n + 1))
    M[:d, :n] = U.T
    M[:d, n] = U.sum(axis=0)
    M[d, :n] = 1.0
    M[d, n] = n
    rhs = np.zeros(d + 1)
    rhs[d] = 1.0
    cost = np.zeros(n + 1)
    cost[n] = -1.0
    res = simplex_standard(cost, M, rhs)
    if res.status != "optimal":
        return -1.0
    return float(res.y[n])


def half_sphere_test(dirs) -> bool:
    """True iff no closed half sphere contains all the given unit vectors."""
    U = np.asarray(dirs, dtype=float)
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    n, d = U.shape
    if n < d + 1:
        return False
    if n == d + 1:
        margin = float(positive_span_margin(U))
    else:
        margin = spanning_margin_lp(U)
    if abs(margin) <= DELTA_SPAN:
        span_ambiguity_counter["count"] += 1
    return margin > DELTA_SPAN


def delta_d(dirs) -> float:
    """Volume of the convex hull of the d+1 unit vectors."""
    U = np.asarray(dirs, dtype=float)
    return float(delta_d_batch(U[None])[0])


def delta_d_batch(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    d = U.shape[-1]
    D = U[..., 1:, :] - U[..., :1, :]
    return np.abs(np.linalg.det(D)) / math.factorial(d)


def _check_conditioning(M: np.ndarray) -> None:
    cond = np.linalg.cond(M)
    if not np.all(np.isfinite(cond)) or np.any(cond > KAPPA_MAX):
        raise IllConditioned(f"vertex system condition number {np.max(cond):.3g} exceeds {KAPPA_MAX:g}")


def vertex_v(dirs, i: int) -> np.ndarray:
    """Vertex of T(dirs) opposite the facet with normal ``dirs[i]``."""
    U = _as_tuple(dirs)
    if not half_sphere_test(U):
        raise NotPositivelySpanning("direction tuple lies in a closed half sphere")
    rows = [j for j in range(len(U)) if j != i]
    M = U[rows]
    _check_conditioning(M)
    return np.linalg.solve(M, np.ones(len(rows)))


def simplex_vertices_batch(U) -> np.ndarray:
    """All vertices of T(u) for a (N, d+1, d) batch; row i is opposite facet i."""
    U = np.asarray(U, dtype=float)
    k = U.shape[-2]
    d = U.shape[-1]
    out = np.empty(U.shape[:-2] + (k, d))
    ones = np.ones(U.shape[:-2] + (d, 1))
    for i in range(k):
        rows = [j for j in range(k) if j != i]
        out[..., i, :] = np.linalg.solve(U[..., rows, :], ones)[..., 0]
    return out


def simplex_T(dirs) -> ConvexCell:
    """The simplex ``T(u) = intersection of {<x, u_i> <= 1}``, circumscribing the unit ball."""
    U = _as_tuple(dirs)
    d = U.shape[1]
    if d not in (2, 3):
        raise ValueError("full simplex cells are built for d in {2, 3}; use vertex_v for higher d")
    if not half_sphere_test(U):
        raise NotPositivelySpanning("direction tuple lies in a closed half sphere")
    verts = np.empty((d + 1, d))
    for i in range(d + 1):
        M = U[[j for j in range(d + 1) if j != i]]
        _check_conditioning(M)
        verts[i] = np.linalg.solve(M, np.ones(d))
    return simplex_from_vertices(U, verts)


def simplex_from_vertices(U: np.ndarray, verts: np.ndarray) -> ConvexCell:
    """Assemble T(u) from its facet normals and opposite vertices (no checks)."""
    d = U.shape[1]
    if d == 2:
        c = verts.mean(axis=0)
        order = [int(i) for i in np.argsort(np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0]))]
        facet = [3 - order[k] - order[(k + 1) % 3] for k in range(3)]
        return ConvexCell(verts[order], U[facet], np.ones(3))
    faces = tuple(_ccw_face(verts, [j for j in range(d + 1) if j != i], U[i]) for i in range(d + 1))
    return ConvexCell(verts, U.copy(), np.ones(d + 1), faces)


def support_function(cell: ConvexCell, u) -> float:
    return float((cell.vertices @ np.asarray(u, dtype=float)).max())
