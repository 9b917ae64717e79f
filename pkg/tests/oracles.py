"""Brute-force reference implementations used only by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.spatial import ConvexHull


def vertices_by_enumeration(normals, bounds, tol=1e-9):
    """Vertices of {x : N x <= b} from every d-subset of constraints."""
    N = np.asarray(normals, dtype=float)
    b = np.asarray(bounds, dtype=float)
    d = N.shape[1]
    pts = []
    for combo in itertools.combinations(range(len(N)), d):
        M = N[list(combo)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(combo)])
        if np.all(N @ x - b <= tol * max(1.0, np.abs(x).max())):
            if not any(np.abs(x - p).max() < 1e-7 for p in pts):
                pts.append(x)
    return np.array(pts)


def same_point_sets(P, Q, tol=1e-6) -> float:
    """Hausdorff distance between two finite point sets."""
    P, Q = np.asarray(P), np.asarray(Q)
    D = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=-1)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def inradius_grid(normals, bounds, vertices, levels=12, n=41):
    """Maximise min_i (b_i - <n_i, x>) by repeated grid refinement (the function is concave)."""
    N = np.asarray(normals, dtype=float)
    b = np.asarray(bounds, dtype=float)
    V = np.asarray(vertices, dtype=float)
    lo, hi = V.min(axis=0), V.max(axis=0)
    centre = (lo + hi) / 2
    half = (hi - lo) / 2
    best = -np.inf
    for _ in range(levels):
        axes = [np.linspace(c - h, c + h, n) for c, h in zip(centre, half)]
        G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(centre))
        val = (b[None, :] - G @ N.T).min(axis=1)
        k = int(np.argmax(val))
        best = max(best, float(val[k]))
        centre = G[k]
        half = half * 4.0 / (n - 1)
    return best


def _circumsphere(P):
    """Smallest sphere through all points of P (centre in their affine hull)."""
    if len(P) == 1:
        return 0.0, P[0]
    A = P[1:] - P[0]
    G = A @ A.T
    if abs(np.linalg.det(G)) < 1e-14:
        return None
    lam = np.linalg.solve(G, 0.5 * np.diag(G))
    c = P[0] + lam @ A
    return float(np.linalg.norm(P[0] - c)), c


def meb_exhaustive(points):
    """Minimum enclosing ball as the smallest support-set sphere containing all points."""
    P = np.asarray(points, dtype=float)
    d = P.shape[1]
    best = (math.inf, None)
    scale = max(1.0, float(np.abs(P).max()))
    for k in range(1, d + 2):
        for combo in itertools.combinations(range(len(P)), k):
            ball = _circumsphere(P[list(combo)])
            if ball is None or ball[0] >= best[0]:
                continue
            r, c = ball
            if np.all(np.linalg.norm(P - c, axis=1) <= r + 1e-10 * scale):
                best = (r, c)
    return best


def hull_volume(points) -> float:
    P = np.asarray(points, dtype=float)
    if len(P) == 3 and P.shape[1] == 2:
        e1, e2 = P[1] - P[0], P[2] - P[0]
        return 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    try:
        return float(ConvexHull(P).volume)
    except Exception:
        return 0.0


def in_closed_half_plane_by_sweep(dirs, m=200_000) -> bool:
    """True when some normal w has <u_i, w> >= 0 for every u_i (dense angular sweep plus gap test)."""
    U = np.asarray(dirs, dtype=float)
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    W = np.column_stack([np.cos(th), np.sin(th)])
    if np.any(np.all(U @ W.T >= -1e-12, axis=0)):
        return True
    ang = np.sort(np.arctan2(U[:, 1], U[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    return bool(gaps.max() >= np.pi - 1e-12)


def phi_isotropic_quadrature_2d(vertices, n=10_000) -> float:
    """(1/2pi) * integral of h(K, theta) by the midpoint rule."""
    th = (np.arange(n) + 0.5) * 2 * np.pi / n
    W = np.column_stack([np.cos(th), np.sin(th)])
    return float((np.asarray(vertices) @ W.T).max(axis=0).mean())


def phi_density_quadrature_2d(vertices, pdf, n=200_000) -> float:
    th = (np.arange(n) + 0.5) * 2 * np.pi / n
    W = np.column_stack([np.cos(th), np.sin(th)])
    h = (np.asarray(vertices) @ W.T).max(axis=0)
    return float((h * pdf(W)).sum() * 2 * np.pi / n)


def phi_sphere_quadrature_3d(vertices, pdf=None, n_z=600, n_phi=1200) -> float:
    """Spherical quadrature of h: Gauss-Legendre in z times the midpoint rule in azimuth."""
    z, wz = np.polynomial.legendre.leggauss(n_z)
    ph = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    Z, PH = np.meshgrid(z, ph, indexing="ij")
    s = np.sqrt(1 - Z ** 2)
    U = np.stack([s * np.cos(PH), s * np.sin(PH), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(n_phi, 2 * np.pi / n_phi)[None, :]).reshape(-1)
    h = (np.asarray(vertices) @ U.T).max(axis=0)
    dens = np.full(len(U), 1 / (4 * np.pi)) if pdf is None else pdf(U)
    return float((h * dens * w).sum())


def random_polygon_halfspaces(rng, m):
    """m random tangent halfspaces around a random interior point, unit normals."""
    th = np.sort(rng.uniform(0, 2 * np.pi, m))
    N = np.column_stack([np.cos(th), np.sin(th)])
    b = rng.uniform(0.5, 2.0, m)
    return N, b
