"""Size functionals, centre functions and the shape map for convex cells."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from ._lp import lp_min
from .directions import Density, Discrete, Isotropic, Mixture, atoms_of
from .errors import EmptyCell, QuadratureNotConverged
from .geometry import ConvexCell, _polygon_area3, _polyhedron_surface, _polyhedron_volume, spanning_margin_lp

SIZE_FUNCTIONALS = ("Inradius", "Circumradius", "Diameter", "Perimeter", "SurfaceArea", "Volume", "PhiContent")
QUAD_RTOL = 1e-6
PLANAR_VERTEX_ENUM_MAX = 24


@dataclass(frozen=True)
class SizeFunctionalSpec:
    name: str
    degree: float


def size_functional(name: str, d: int) -> SizeFunctionalSpec:
    if name not in SIZE_FUNCTIONALS:
        raise ValueError(f"unknown size functional {name!r}")
    if name == "Perimeter" and d != 2:
        raise ValueError("Perimeter is the planar boundary measure; use SurfaceArea in d=3")
    if name == "SurfaceArea" and d != 3:
        raise ValueError("SurfaceArea is defined for d=3")
    if name == "Volume":
        return SizeFunctionalSpec(name, float(d))
    if name == "SurfaceArea":
        return SizeFunctionalSpec(name, 2.0)
    return SizeFunctionalSpec(name, 1.0)


def ball_value(name: str, d: int) -> float:
    """Value of the functional on the unit ball."""
    table = {
        "Inradius": 1.0,
        "Circumradius": 1.0,
        "Diameter": 2.0,
        "PhiContent": 1.0,
        "Perimeter": 2.0 * math.pi,
        "SurfaceArea": 4.0 * math.pi,
        "Volume": math.pi if d == 2 else 4.0 * math.pi / 3.0,
    }
    size_functional(name, d)
    return table[name]


def boundary_name(d: int) -> str:
    return "Perimeter" if d == 2 else "SurfaceArea"


@dataclass(frozen=True)
class ShapeSummary:
    fcount: int
    phi: float
    circ_over_in: float
    iso_ratio: float
    diam_norm: float

    def as_dict(self) -> dict:
        return asdict(self)


class Inball(NamedTuple):
    radius: float
    center: np.ndarray
    non_unique: bool


class Ball(NamedTuple):
    radius: float
    center: np.ndarray


# ----------------------------------------------------------------------------
# elementary measures


def volume(cell: ConvexCell) -> float:
    if cell.dim == 2:
        V = cell.vertices
        x, y = V[:, 0], V[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    return _polyhedron_volume(cell)


def perimeter(cell: ConvexCell) -> float:
    if cell.dim != 2:
        raise ValueError("perimeter is defined for planar cells")
    V = cell.vertices
    return float(np.sqrt(((np.roll(V, -1, axis=0) - V) ** 2).sum(axis=1)).sum())


def surface_area(cell: ConvexCell) -> float:
    if cell.dim != 3:
        raise ValueError("surface area is defined for cells in space")
    return _polyhedron_surface(cell)


def diameter(cell: ConvexCell) -> float:
    V = cell.vertices
    diff = V[:, None, :] - V[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1).max()))


def centroid(cell: ConvexCell) -> np.ndarray:
    V = cell.vertices
    if cell.dim == 2:
        x, y = V[:, 0], V[:, 1]
        xn = np.concatenate([x[1:], x[:1]])
        yn = np.concatenate([y[1:], y[:1]])
        cross = x * yn - xn * y
        a = cross.sum() / 2.0
        return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)
    c0 = V.mean(axis=0)
    total = 0.0
    acc = np.zeros(3)
    for f in cell.faces:
        for i in range(1, len(f) - 1):
            a, b, c = V[f[0]], V[f[i]], V[f[i + 1]]
            w = float(np.dot(a - c0, np.cross(b - c0, c - c0))) / 6.0
            total += w
            acc += w * (c0 + a + b + c) / 4.0
    return acc / total


# ----------------------------------------------------------------------------
# inball and circumball


def inradius(cell: ConvexCell, resolve_ties: bool = True) -> Inball:
    """Largest inscribed ball, by LP over the irredundant halfspaces.

    When the optimal centre is not unique (a rectangle, say) the
    lexicographically smallest optimal centre is returned and ``non_unique``
    is set.
    """
    N, b = cell.normals, cell.bounds
    d = cell.dim
    if not resolve_ties and d == 2 and len(b) <= PLANAR_VERTEX_ENUM_MAX:
        return _inradius_planar(N, b, cell.tol)
    A = np.hstack([N, np.ones((len(b), 1))])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    status, z, _ = lp_min(c, A, b)
    if status != "optimal" or z[-1] <= 0:
        raise EmptyCell("inradius LP has no interior solution")
    r, x = float(z[-1]), z[:d]
    if not resolve_ties:
        return Inball(r, x, False)
    slack = b - N @ x - r
    tight = N[slack <= 1e-9 * cell.scale]
    if len(tight) >= d + 1 and spanning_margin_lp(tight) > 1e-9:
        return Inball(r, x, False)
    # the optimal face is a segment or larger: pick its lexicographic minimum
    eps = 1e-9 * cell.scale
    shrunk = b - r + eps
    rows, rhs = [N], [shrunk]
    lo_hi = []
    for k in range(d):
        ek = np.zeros(d)
        ek[k] = 1.0
        A_k, b_k = np.vstack(rows), np.concatenate(rhs)
        _, lo, vlo = lp_min(ek, A_k, b_k)
        _, hi, vhi = lp_min(-ek, A_k, b_k)
        lo_hi.append(-vhi - vlo)
        x = lo
        rows.append(ek[None, :])
        rhs.append(np.array([vlo + eps]))
    non_unique = max(lo_hi) > 1e3 * eps
    return Inball(r, x, bool(non_unique))


_TRIPLES: dict[int, np.ndarray] = {}


def _inradius_planar(N: np.ndarray, b: np.ndarray, tol: float) -> Inball:
    """Chebyshev centre by enumerating the vertices of the (x, r) feasible set.

    The LP optimum sits where three constraints <x, n_i> + r = b_i are tight,
    so the best feasible solution over all triples is the inradius.
    """
    m = len(b)
    if m not in _TRIPLES:
        _TRIPLES[m] = np.array([(i, j, k) for i in range(m) for j in range(i + 1, m) for k in range(j + 1, m)])
    T = _TRIPLES[m]
    A = np.concatenate([N[T], np.ones(T.shape + (1,))], axis=2)
    det = np.linalg.det(A)
    ok = np.abs(det) > 1e-12
    sol = np.linalg.solve(A[ok], b[T[ok]][..., None])[..., 0]
    slack = b[None, :] - sol[:, :2] @ N.T - sol[:, 2:3]
    feasible = (slack >= -tol).all(axis=1) & (sol[:, 2] > 0)
    if not feasible.any():
        raise EmptyCell("no interior point found")
    best = np.flatnonzero(feasible)[np.argmax(sol[feasible, 2])]
    return Inball(float(sol[best, 2]), sol[best, :2].copy(), False)


def _support_ball(P: np.ndarray) -> Ball | None:
    """Smallest ball having every point of P on its boundary (centre in aff P)."""
    k = len(P)
    if k == 0:
        return None
    if k == 1:
        return Ball(0.0, P[0].copy())
    A = P[1:] - P[0]
    G = A @ A.T
    rhs = 0.5 * np.diag(G)
    try:
        lam = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError:
        lam = np.linalg.lstsq(G, rhs, rcond=None)[0]
    c = P[0] + lam @ A
    return Ball(float(np.linalg.norm(P[0] - c)), c)


def _circle2(a, b):
    cx, cy = (a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0
    return (cx, cy, math.hypot(a[0] - cx, a[1] - cy))


def _circle3(a, b, c):
    ax, ay = a
    bx, by = b[0] - ax, b[1] - ay
    cx, cy = c[0] - ax, c[1] - ay
    den = 2.0 * (bx * cy - by * cx)
    if den == 0.0:
        # collinear: the two farthest points span the circle
        pairs = [(a, b), (a, c), (b, c)]
        return max((_circle2(p, q) for p, q in pairs), key=lambda t: t[2])
    b2, c2 = bx * bx + by * by, cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / den
    uy = (bx * c2 - cx * b2) / den
    return (ax + ux, ay + uy, math.hypot(ux, uy))


def _mec2d(pts: list) -> Ball:
    """Planar Welzl with move-to-front, on plain floats."""
    scale = max(1.0, max(max(abs(x), abs(y)) for x, y in pts))
    eps = 1e-12 * scale

    def inside(c, p):
        return math.hypot(p[0] - c[0], p[1] - c[1]) <= c[2] + eps

    c = None
    for i, p in enumerate(pts):
        if c is None or not inside(c, p):
            c = (p[0], p[1], 0.0)
            for j in range(i):
                q = pts[j]
                if not inside(c, q):
                    c = _circle2(p, q)
                    for k in range(j):
                        w = pts[k]
                        if not inside(c, w):
                            c = _circle3(p, q, w)
    return Ball(c[2], np.array([c[0], c[1]]))


def min_enclosing_ball(points) -> Ball:
    """Smallest enclosing ball of a point set (Welzl recursion, move-to-front in general d)."""
    P = [np.asarray(p, dtype=float) for p in points]
    if not P:
        raise ValueError("empty point set")
    d = len(P[0])
    if d == 2:
        return _mec2d([(float(p[0]), float(p[1])) for p in P])
    scale = max(1.0, max(float(np.abs(p).max()) for p in P))
    eps = 1e-12 * scale

    def mtf(n: int, support: list) -> Ball | None:
        ball = _support_ball(np.array(support)) if support else None
        if len(support) == d + 1:
            return ball
        i = 0
        while i < n:
            p = P[i]
            if ball is None or np.linalg.norm(p - ball.center) > ball.radius + eps:
                ball = mtf(i, support + [p])
                P.insert(0, P.pop(i))
            i += 1
        return ball

    return mtf(len(P), [])


def circumradius(cell: ConvexCell) -> Ball:
    return min_enclosing_ball(cell.vertices)


# ----------------------------------------------------------------------------
# Phi-content


def _gauss_arcs(alpha0: np.ndarray, width: np.ndarray, verts: np.ndarray, sym_pdf, n: int) -> np.ndarray:
    """Sum over arcs of int <v, u(theta)> rho(theta) dtheta with n-point Gauss-Legendre rules.

    alpha0, width: (..., m) arcs; verts: (..., m, 2) supporting vertex per arc.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    theta = alpha0[..., None] + 0.5 * width[..., None] * (x + 1.0)
    U = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    h = np.einsum("...mk,...mqk->...mq", verts, U)
    rho = sym_pdf(U)
    return (0.5 * width * (h * rho * w).sum(axis=-1)).sum(axis=-1)


def _ring_arcs(V: np.ndarray, N: np.ndarray):
    """Arcs of the normal fan for CCW rings V (..., m, 2) with edge normals N."""
    alpha = np.arctan2(N[..., 1], N[..., 0])
    nxt = np.roll(alpha, -1, axis=-1)
    width = np.mod(nxt - alpha, 2.0 * math.pi)
    # vertex k+1 is the support point between normals k and k+1
    return alpha, width, np.roll(V, -1, axis=-2)


def phi_density_ring(V: np.ndarray, N: np.ndarray, dens: Density) -> np.ndarray:
    """Phi-content for planar convex rings under a density, adaptively refined."""
    alpha, width, verts = _ring_arcs(V, N)
    n = 8
    prev = _gauss_arcs(alpha, width, verts, dens.symmetric_pdf, n)
    while n < 512:
        n *= 2
        cur = _gauss_arcs(alpha, width, verts, dens.symmetric_pdf, n)
        if np.all(np.abs(cur - prev) <= 1e-3 * QUAD_RTOL * np.abs(cur)):
            return cur
        prev = cur
    raise QuadratureNotConverged("arc quadrature did not reach the error target")


def _normal_cone_fans(cell: ConvexCell) -> tuple[np.ndarray, np.ndarray]:
    """Spherical triangles tiling the sphere by vertex normal cones, with the owning vertex.

    On the normal cone of vertex v the support function is the linear map
    u -> <v, u>, so integrating against a smooth density is smooth on each piece.
    """
    V, N = cell.vertices, cell.normals
    incident: dict[int, list[int]] = {}
    for k, face in enumerate(cell.faces):
        for i in face:
            incident.setdefault(i, []).append(k)
    tris, owner = [], []
    for i, facets in incident.items():
        C = N[facets]
        c = C.sum(axis=0)
        c /= np.linalg.norm(c)
        e1 = np.cross(c, [1.0, 0.0, 0.0] if abs(c[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        order = np.argsort(np.arctan2(C @ e2, C @ e1))
        ring = C[order]
        for j in range(len(ring)):
            tris.append((c, ring[j], ring[(j + 1) % len(ring)]))
            owner.append(i)
    return np.array(tris), V[owner]


def _phi_density_3d(cell: ConvexCell, dens: Density) -> float:
    T, W = _normal_cone_fans(cell)
    a, b, c = T[:, 0], T[:, 1], T[:, 2]
    det = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    prev = None
    n = 6
    while n <= 96:
        x, w = np.polynomial.legendre.leggauss(n)
        x, w = 0.5 * (x + 1.0), 0.5 * w
        s, t = np.meshgrid(x, x, indexing="ij")
        ws = (w[:, None] * w[None, :] * s).ravel()
        s, t = s.ravel(), t.ravel()
        # collapsed-square map onto the planar triangle, then radial projection
        P = a[:, None] + s[None, :, None] * ((1 - t)[None, :, None] * b[:, None] + t[None, :, None] * c[:, None] - a[:, None])
        rho = np.linalg.norm(P, axis=-1)
        U = P / rho[..., None]
        f = np.einsum("mkj,mj->mk", U, W) * dens.symmetric_pdf(U.reshape(-1, 3)).reshape(U.shape[:2])
        cur = float(((f / rho ** 3) * ws[None, :]).sum(axis=1) @ det)
        if prev is not None and abs(cur - prev) <= 0.01 * QUAD_RTOL * abs(cur):
            return cur
        prev = cur
        n *= 2
    raise QuadratureNotConverged("spherical quadrature did not reach the error target")


def _phi_isotropic_3d(cell: ConvexCell) -> float:
    # half the mean width: sum over edges of length times exterior dihedral angle, over 8 pi
    V = cell.vertices
    total = 0.0
    for (a, b), (f, g) in cell.edge_facets().items():
        cosang = float(np.clip(cell.normals[f] @ cell.normals[g], -1.0, 1.0))
        total += float(np.linalg.norm(V[a] - V[b])) * math.acos(cosang)
    return total / (8.0 * math.pi)


def phi_content(cell: ConvexCell, dist) -> float:
    """Phi(K): the integral of the support function against the directional distribution."""
    if isinstance(dist, Mixture):
        return float(sum(w * phi_content(cell, c) for w, c in zip(dist.weights, dist.components) if w > 0))
    if isinstance(dist, Discrete):
        V = cell.vertices
        hp = (V @ dist.atoms.T).max(axis=0)
        hm = (-V @ dist.atoms.T).max(axis=0)
        return float((dist.masses * 0.5 * (hp + hm)).sum())
    if isinstance(dist, Isotropic):
        if cell.dim == 2:
            return perimeter(cell) / (2.0 * math.pi)
        return _phi_isotropic_3d(cell)
    if isinstance(dist, Density):
        if cell.dim == 2:
            return float(phi_density_ring(cell.vertices[None], cell.normals[None], dist)[0])
        return _phi_density_3d(cell, dist)
    raise TypeError(type(dist).__name__)


# ----------------------------------------------------------------------------
# evaluation, centres, shape


def evaluate(name: str, cell: ConvexCell, dist=None) -> float:
    if name == "Inradius":
        return inradius(cell, resolve_ties=False).radius
    if name == "Circumradius":
        return circumradius(cell).radius
    if name == "Diameter":
        return diameter(cell)
    if name == "Perimeter":
        return perimeter(cell)
    if name == "SurfaceArea":
        return surface_area(cell)
    if name == "Volume":
        return volume(cell)
    if name == "PhiContent":
        return phi_content(cell, dist)
    raise ValueError(f"unknown size functional {name!r}")


def iso_ratio(vol: float, boundary: float, d: int) -> float:
    if d == 2:
        return 4.0 * math.pi * vol / boundary ** 2
    return 36.0 * math.pi * vol ** 2 / boundary ** 3


def _planar_measures(V: np.ndarray) -> tuple[float, float, float]:
    E = np.concatenate([V[1:], V[:1]]) - V
    perim = float(np.sqrt(E[:, 0] ** 2 + E[:, 1] ** 2).sum())
    area = 0.5 * float((V[:, 0] * E[:, 1] - V[:, 1] * E[:, 0]).sum())
    diff = V[:, None, :] - V[None, :, :]
    diam = math.sqrt(float((diff ** 2).sum(axis=-1).max()))
    return perim, area, diam


def all_functionals(cell: ConvexCell, dist, inball: Inball | None = None) -> tuple[dict, Ball, Inball]:
    """Every implemented functional of ``cell``; ``inball`` skips the LP when already known."""
    d = cell.dim
    if inball is None:
        inball = inradius(cell, resolve_ties=False)
    ball = circumradius(cell)
    if d == 2:
        perim, area, diam = _planar_measures(cell.vertices)
        phi = perim / (2.0 * math.pi) if isinstance(dist, Isotropic) else phi_content(cell, dist)
        values = {"PhiContent": phi, "Inradius": inball.radius, "Circumradius": ball.radius,
                  "Diameter": diam, "Volume": area, "Perimeter": perim}
        return values, ball, inball
    values = {
        "PhiContent": phi_content(cell, dist),
        "Inradius": inball.radius,
        "Circumradius": ball.radius,
        "Diameter": diameter(cell),
        "Volume": volume(cell),
        "SurfaceArea": surface_area(cell),
    }
    return values, ball, inball


def summary_from_values(values: dict, fcount: int, d: int) -> ShapeSummary:
    """Shape summary from raw functional values; every field is scale and translation free."""
    phi = values["PhiContent"]
    return ShapeSummary(
        fcount=int(fcount),
        phi=1.0,
        circ_over_in=values["Circumradius"] / values["Inradius"],
        iso_ratio=iso_ratio(values["Volume"], values[boundary_name(d)], d),
        diam_norm=values["Diameter"] / phi,
    )


def center(cell: ConvexCell, kind: str) -> np.ndarray:
    if kind == "Incenter":
        return inradius(cell).center
    if kind == "Centroid":
        return centroid(cell)
    raise ValueError(f"unknown centre function {kind!r}")


def shape(cell: ConvexCell, kind: str, dist) -> tuple[ConvexCell, ShapeSummary]:
    """Translate the centre to the origin and rescale to unit Phi-content."""
    phi = phi_content(cell, dist)
    normalized = cell.translated(-center(cell, kind)).scaled(1.0 / phi)
    check = phi_content(normalized, dist)
    if abs(check - 1.0) > 1e-9:
        raise ArithmeticError(f"normalised Phi-content {check!r} differs from 1")
    values, _, _ = all_functionals(normalized, dist)
    return normalized, summary_from_values(values, normalized.n_facets, cell.dim)


# ----------------------------------------------------------------------------
# batched functionals of circumscribed simplices


def triangle_rings(U: np.ndarray, verts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """CCW vertex rings and matching edge normals for a batch of T(u) triangles."""
    e1 = verts[:, 1] - verts[:, 0]
    e2 = verts[:, 2] - verts[:, 0]
    ccw = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) > 0
    order = np.where(ccw[:, None], np.array([0, 1, 2]), np.array([0, 2, 1]))
    facet = np.where(ccw[:, None], np.array([2, 0, 1]), np.array([1, 0, 2]))
    idx = np.arange(len(U))[:, None]
    return verts[idx, order], U[idx, facet]


def _triangle_circumradius(V: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(V[:, 1] - V[:, 2], axis=1)
    b = np.linalg.norm(V[:, 0] - V[:, 2], axis=1)
    c = np.linalg.norm(V[:, 0] - V[:, 1], axis=1)
    sides = np.sort(np.stack([a, b, c], axis=1), axis=1)
    e1 = V[:, 1] - V[:, 0]
    e2 = V[:, 2] - V[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    obtuse = sides[:, 2] ** 2 >= sides[:, 0] ** 2 + sides[:, 1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        circ = a * b * c / (4.0 * area)
    return np.where(obtuse, sides[:, 2] / 2.0, circ)


def phi_content_rings(V: np.ndarray, N: np.ndarray, dist) -> np.ndarray:
    """Phi-content of a batch of planar CCW rings sharing one vertex count."""
    if isinstance(dist, Mixture):
        return sum(w * phi_content_rings(V, N, c) for w, c in zip(dist.weights, dist.components) if w > 0)
    if isinstance(dist, Isotropic):
        return np.linalg.norm(np.roll(V, -1, axis=1) - V, axis=2).sum(axis=1) / (2.0 * math.pi)
    if isinstance(dist, Discrete):
        out = np.zeros(len(V))
        for a, m in atoms_of(dist):
            hp = (V @ a).max(axis=1)
            hm = (-(V @ a)).max(axis=1)
            out += m * 0.5 * (hp + hm)
        return out
    if isinstance(dist, Density):
        return phi_density_ring(V, N, dist)
    raise TypeError(type(dist).__name__)


def simplex_functionals_batch(U: np.ndarray, verts: np.ndarray, dist) -> dict[str, np.ndarray]:
    """Functionals of T(u) (inradius 1, incentre 0) for a batch of direction tuples."""
    n, k, d = verts.shape
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edge_len = np.stack([np.linalg.norm(verts[:, i] - verts[:, j], axis=1) for i, j in pairs], axis=1)
    out = {"Inradius": np.ones(n), "Diameter": edge_len.max(axis=1)}
    if d == 2:
        V, N = triangle_rings(U, verts)
        out["Perimeter"] = edge_len.sum(axis=1)
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        out["Volume"] = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        out["Circumradius"] = _triangle_circumradius(verts)
        out["PhiContent"] = phi_content_rings(V, N, dist)
        return out
    # d == 3: tetrahedra
    out["Volume"] = np.abs(np.linalg.det(verts[:, 1:] - verts[:, :1])) / 6.0
    surf = np.zeros(n)
    for i in range(4):
        a, b, c = [verts[:, j] for j in range(4) if j != i]
        surf += 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    out["SurfaceArea"] = surf
    out["Circumradius"] = np.array([min_enclosing_ball(v).radius for v in verts])
    if isinstance(dist, Isotropic):
        phi = np.zeros(n)
        for (a, b), length in zip(pairs, edge_len.T):
            f, g = [j for j in range(4) if j not in (a, b)]
            cosang = np.clip((U[:, f] * U[:, g]).sum(axis=1), -1.0, 1.0)
            phi += length * np.arccos(cosang)
        out["PhiContent"] = phi / (8.0 * math.pi)
    else:
        from .geometry import simplex_from_vertices
        out["PhiContent"] = np.array([phi_content(simplex_from_vertices(u, v), dist) for u, v in zip(U, verts)])
    return out


def simplex_summary_batch(values: dict[str, np.ndarray], d: int) -> dict[str, np.ndarray]:
    """Vectorised ShapeSummary fields for simplices."""
    bname = boundary_name(d)
    vol, bd = values["Volume"], values[bname]
    iso = 4.0 * math.pi * vol / bd ** 2 if d == 2 else 36.0 * math.pi * vol ** 2 / bd ** 3
    n = len(vol)
    return {
        "fcount": np.full(n, d + 1),
        "phi": np.ones(n),
        "circ_over_in": values["Circumradius"] / values["Inradius"],
        "iso_ratio": iso,
        "diam_norm": values["Diameter"] / values["PhiContent"],
    }
