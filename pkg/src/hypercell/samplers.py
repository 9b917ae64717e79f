"""Typical-cell samplers for stationary Poisson hyperplane tessellations.

Two exact routes are provided:

* the inball sampler, for absolutely continuous directional distributions:
  draw the inradius r ~ Exp(gamma), draw d+1 facet normals with density
  proportional to the hull volume Delta_d on the positively spanning set,
  build r*T(u) and clip it by every hyperplane of the process that misses
  the inball;
* the window sampler (d = 2), for any directional distribution: build the
  line arrangement inside a large disk and emit every cell whose centroid
  lies in the inner disk, each recentred at its centroid.  Cells cut by the
  window circle are completed with lines drawn lazily in outer shells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrangement import bounded_faces_in_disk
from .directions import (
    Discrete, ProcessParams, delta_max, has_continuous_part, is_absolutely_continuous, sample_directions,
)
from .errors import GeometryError, IllConditioned, RejectionStall, UnsupportedDistribution
from .functionals import (
    Inball, ShapeSummary, all_functionals, ball_value, centroid, inradius, size_functional, summary_from_values,
    triangle_rings,
)
from .geometry import (
    KAPPA_MAX, ConvexCell, Hyperplane, clip_raw, delta_d_batch, in_P_batch, simplex_from_vertices,
    box, simplex_vertices_batch,
)

DELTA_W = 0.1
STALL_PROPOSALS = 10 ** 7
STALL_RATE = 1e-6


@dataclass
class TypicalCellSample:
    cell: ConvexCell
    inball_r: float
    fcount: int
    functionals: dict
    summary: ShapeSummary
    origin: str  # "InballSampler" | "WindowSampler"
    conditioned_a: float | None = None
    center_kind: str = "Incenter"
    slot: int = -1

    def record(self, seed: int, stream: int) -> dict:
        """JSON-lines record with the documented field set."""
        return {
            "origin": self.origin,
            "seed": int(seed),
            "stream": int(stream),
            "slot": int(self.slot),
            "fcount": int(self.fcount),
            "inball_r": float(self.inball_r),
            "functionals": {k: float(v) for k, v in sorted(self.functionals.items())},
            "summary": self.summary.as_dict(),
            "conditioned_a": None if self.conditioned_a is None else float(self.conditioned_a),
            "dropped": False,
        }


@dataclass
class SamplerStats:
    proposals: int = 0
    accepted: int = 0
    direction_proposals: int = 0
    direction_accepted: int = 0
    dropped: int = 0
    rejected_sigma: int = 0
    windows: int = 0

    def merge(self, other: "SamplerStats") -> "SamplerStats":
        return SamplerStats(*(getattr(self, f) + getattr(other, f) for f in self.__dataclass_fields__))

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class EnvironmentShell:
    inner_r: float
    outer_R: float
    normals: np.ndarray
    offsets: np.ndarray

    @property
    def hyperplanes(self) -> list[Hyperplane]:
        return [Hyperplane(u, t) for u, t in zip(self.normals, self.offsets)]

    def __len__(self) -> int:
        return len(self.offsets)


# ----------------------------------------------------------------------------
# building blocks


def sample_inradius(gamma: float, a_cap: float | None, rng: np.random.Generator, size=None):
    """Exp(gamma) draw, or the exact draw conditioned on being below ``a_cap``."""
    u = rng.random(size)
    if a_cap is None:
        return -np.log1p(-u) / gamma
    if not a_cap > 0:
        raise ValueError("a_cap must be positive")
    return -np.log1p(-u * -np.expm1(-gamma * a_cap)) / gamma


def sample_environment(params: ProcessParams, shell: tuple[float, float], rng: np.random.Generator) -> EnvironmentShell:
    """Hyperplanes of the process with distance to the origin in (inner_r, outer_R]."""
    inner, outer = float(shell[0]), float(shell[1])
    if not 0 <= inner < outer < math.inf:
        raise ValueError("shell must satisfy 0 <= inner < outer < inf")
    count = rng.poisson(params.gamma * (outer - inner))
    # 1 - U lies in (0, 1], so offsets land in (inner, outer]
    offsets = inner + (outer - inner) * (1.0 - rng.random(count))
    normals = sample_directions(params.dist, rng, count)
    return EnvironmentShell(inner, outer, normals, offsets)


def sample_simplex_directions_batch(dist, rng: np.random.Generator, n: int,
                                    stats: SamplerStats | None = None) -> np.ndarray:
    """``n`` tuples u_0..u_d with density proportional to Delta_d on the positively spanning set."""
    if not has_continuous_part(dist):
        raise UnsupportedDistribution("simplex direction sampling needs an absolutely continuous part")
    d = dist.dim
    dmax = delta_max(dist)
    stats = stats if stats is not None else SamplerStats()
    out = []
    got = 0
    rate = 0.1
    while got < n:
        m = int(min(max(64, 1.3 * (n - got) / max(rate, 1e-3)), 2 ** 20))
        U = sample_directions(dist, rng, m * (d + 1)).reshape(m, d + 1, d)
        delta = delta_d_batch(U)
        acc = (rng.random(m) * dmax < delta) & in_P_batch(U)
        stats.direction_proposals += m
        stats.direction_accepted += int(acc.sum())
        rate = max(stats.direction_accepted, 1) / stats.direction_proposals
        if stats.direction_proposals >= STALL_PROPOSALS and stats.direction_accepted / stats.direction_proposals < STALL_RATE:
            raise RejectionStall("direction acceptance rate below 1e-6")
        out.append(U[acc])
        got += int(acc.sum())
    return np.concatenate(out)[:n]


def sample_simplex_directions(dist, rng: np.random.Generator) -> np.ndarray:
    return sample_simplex_directions_batch(dist, rng, 1)[0]


def _simplex_conditioning(U: np.ndarray) -> np.ndarray:
    """Worst condition number of the vertex systems for a (m, d+1, d) batch."""
    k = U.shape[1]
    subs = np.stack([U[:, [j for j in range(k) if j != i]] for i in range(k)], axis=1)
    return np.linalg.cond(subs).max(axis=1)


def _simplex_cells(U: np.ndarray, verts: np.ndarray, radii: np.ndarray) -> list:
    """r*T(u) for a batch; None where the vertex systems are ill-conditioned."""
    bad = ~(_simplex_conditioning(U) <= KAPPA_MAX)
    if U.shape[2] == 2:
        V, N = triangle_rings(U, verts)
        cells = [ConvexCell(V[j] * radii[j], N[j], np.full(3, radii[j])) for j in range(len(U))]
    else:
        cells = [simplex_from_vertices(U[j], verts[j]).scaled(radii[j]) for j in range(len(U))]
    return [None if b else c for c, b in zip(cells, bad)]


def _clip_by_environment(cell: ConvexCell, params: ProcessParams, r: float, outer: float,
                         rng: np.random.Generator) -> ConvexCell:
    env = sample_environment(params, (r, outer), rng)
    if len(env) == 0:
        return cell
    # only hyperplanes cutting the starting simplex can matter; nearest first
    h = (env.normals @ cell.vertices.T).max(axis=1)
    hits = np.flatnonzero(env.offsets < h)
    for k in hits[np.argsort(env.offsets[hits], kind="stable")]:
        w, t = env.normals[k], env.offsets[k]
        if float((cell.vertices @ w).max()) > t:
            cell = clip_raw(cell, w, t)
    return cell


def _inball_sample(params, cell, verts, r, rng, conditioned_a=None, slot=-1) -> TypicalCellSample:
    if cell is None:
        raise IllConditioned("simplex vertex systems are ill-conditioned")
    outer = r * float(np.linalg.norm(verts, axis=1).max())
    cell = _clip_by_environment(cell, params, r, outer, rng)
    inball = Inball(r, np.zeros(params.dim), False)
    values, _, _ = all_functionals(cell, params.dist, inball=inball)
    return TypicalCellSample(
        cell=cell, inball_r=r, fcount=cell.n_facets, functionals=values,
        summary=summary_from_values(values, cell.n_facets, params.dim),
        origin="InballSampler", conditioned_a=conditioned_a, center_kind="Incenter", slot=slot,
    )


def _check_inball_params(params: ProcessParams) -> None:
    if not is_absolutely_continuous(params.dist):
        raise UnsupportedDistribution("the inball sampler needs an absolutely continuous directional distribution")
    if params.dim not in (2, 3):
        raise UnsupportedDistribution("cell sampling supports d in {2, 3}")


def sample_typical_cell_inball(params: ProcessParams, a_cap: float | None, rng: np.random.Generator) -> TypicalCellSample:
    """One exact draw of the typical cell, optionally conditioned on inradius < a_cap."""
    _check_inball_params(params)
    U = sample_simplex_directions(params.dist, rng)
    r = float(sample_inradius(params.gamma, a_cap, rng))
    verts = simplex_vertices_batch(U[None])[0]
    cell = _simplex_cells(U[None], verts[None], np.array([r]))[0]
    return _inball_sample(params, cell, verts, r, rng, conditioned_a=a_cap)


def truncation_cap(sigma: str, a: float, d: int) -> float:
    """Inradius bound implied by Sigma^(1/k) < a through Sigma(B)^(1/k) r <= Sigma^(1/k)."""
    spec = size_functional(sigma, d)
    return a / ball_value(sigma, d) ** (1.0 / spec.degree)


def inball_batch(params: ProcessParams, n: int, rng: np.random.Generator, *, a_cap: float | None = None,
                 sigma: str | None = None, a: float | None = None, block: int = 256,
                 stats: SamplerStats | None = None, truncate: bool = True) -> tuple[list[TypicalCellSample], SamplerStats]:
    """``n`` accepted inball-sampler cells from one random stream.

    With ``sigma`` and ``a`` the cells are conditioned on Sigma^(1/k) < a by
    exact inradius truncation followed by rejection on the actual value
    (``truncate=False`` keeps the rejection step only).
    Degenerate geometry is dropped and counted, never retried in the same slot.
    """
    _check_inball_params(params)
    stats = stats if stats is not None else SamplerStats()
    k = None
    if sigma is not None:
        if a is None:
            raise ValueError("conditioning on sigma requires a threshold a")
        k = size_functional(sigma, params.dim).degree
        if truncate:
            cap = truncation_cap(sigma, a, params.dim)
            a_cap = cap if a_cap is None else min(a_cap, cap)
    out: list[TypicalCellSample] = []
    slot = 0
    while len(out) < n:
        m = block if sigma is not None else min(block, n - len(out))
        U = sample_simplex_directions_batch(params.dist, rng, m, stats)
        radii = sample_inradius(params.gamma, a_cap, rng, size=m)
        verts = simplex_vertices_batch(U)
        cells = _simplex_cells(U, verts, radii)
        for j in range(m):
            if len(out) >= n:
                break
            stats.proposals += 1
            try:
                s = _inball_sample(params, cells[j], verts[j], float(radii[j]), rng,
                                   conditioned_a=a if sigma is not None else a_cap, slot=slot)
            except GeometryError:
                stats.dropped += 1
                slot += 1
                continue
            slot += 1
            if sigma is not None and not s.functionals[sigma] ** (1.0 / k) < a:
                stats.rejected_sigma += 1
                continue
            stats.accepted += 1
            out.append(s)
    return out, stats


# ----------------------------------------------------------------------------
# window sampler


class _Shells:
    """Lines of the process beyond the window, drawn one annulus at a time."""

    def __init__(self, params: ProcessParams, radius: float, rng: np.random.Generator):
        self.params, self.rng = params, rng
        self.radii = [radius]
        self.normals: list[np.ndarray] = []
        self.offsets: list[np.ndarray] = []

    def upto(self, k: int):
        while len(self.radii) <= k:
            lo = self.radii[-1]
            count = self.rng.poisson(self.params.gamma * lo)
            self.offsets.append(lo + lo * (1.0 - self.rng.random(count)))
            self.normals.append(sample_directions(self.params.dist, self.rng, count))
            self.radii.append(2 * lo)
        return self.radii[k], self.normals[:k], self.offsets[:k]


def _arc_points(normals, offsets, radius):
    """One point on the circle inside each arc cut out by the lines."""
    if len(offsets) == 0:
        return np.array([[radius, 0.0]])
    base = np.arctan2(normals[:, 1], normals[:, 0])
    half = np.arccos(np.clip(offsets / radius, -1.0, 1.0))
    ang = np.sort(np.mod(np.concatenate([base - half, base + half]), 2 * np.pi))
    mid = (ang + np.append(ang[1:], ang[0] + 2 * np.pi)) / 2
    return radius * np.column_stack([np.cos(mid), np.sin(mid)])


def _clip_sides(cell, normals, offsets, x):
    for u, t in zip(normals, offsets):
        if u @ x < t:
            cell = clip_raw(cell, u, float(t))
        else:
            cell = clip_raw(cell, -u, -float(t))
    return cell


def _square(h):
    return box([-h, -h], [h, h])


def _distance_to_origin(cell) -> float:
    if np.all(cell.bounds >= 0):
        return 0.0
    V = cell.vertices
    E = np.roll(V, -1, axis=0) - V
    s = np.clip(-np.einsum("ij,ij->i", V, E) / np.einsum("ij,ij->i", E, E), 0.0, 1.0)
    return float(np.linalg.norm(V + s[:, None] * E, axis=1).min())


def _boundary_cells(normals, offsets, radius, inner, shells: _Shells):
    """True cells of the faces cut by the window circle that may reach the inner disk.

    The window lines alone give a superset of the cell; if that superset
    misses the inner disk, so does the centroid.  Otherwise outer shells are
    added until the cell fits inside the radius they cover, after which no
    further line can cut it.  Yields None for a cell lost to a geometry error.
    """
    seen = set()
    for x in _arc_points(normals, offsets, radius):
        key = (normals @ x < offsets).tobytes()
        if key in seen:
            continue
        seen.add(key)
        try:
            if _distance_to_origin(_clip_sides(_square(2 * radius), normals, offsets, x)) >= inner:
                continue
            k = 1
            while True:
                R_k, extra_n, extra_t = shells.upto(k)
                cell = _clip_sides(_square(2 * R_k), normals, offsets, x)
                for N, T in zip(extra_n, extra_t):
                    cell = _clip_sides(cell, N, T, x)
                if np.linalg.norm(cell.vertices, axis=1).max() < R_k:
                    break
                k += 1
                if k > 40:
                    raise GeometryError("window cell did not close")
        except GeometryError:
            yield None
            continue
        yield cell


def sample_window_tessellation(params: ProcessParams, window_R: float, rng: np.random.Generator,
                               delta_w: float = DELTA_W, stats: SamplerStats | None = None) -> list[TypicalCellSample]:
    """Cells of one planar window with centroid in the inner disk, centred at their centroids."""
    if params.dim != 2:
        raise UnsupportedDistribution("the window sampler is planar")
    stats = stats if stats is not None else SamplerStats()
    count = rng.poisson(params.gamma * window_R)
    offsets = window_R * (1.0 - rng.random(count))
    normals = sample_directions(params.dist, rng, count)
    faces = bounded_faces_in_disk(normals, offsets, window_R)
    stats.windows += 1
    inner = (1.0 - delta_w) * window_R
    cells = [ConvexCell(P, N, b) for P, N, b, _ in faces]
    cells.extend(_boundary_cells(normals, offsets, window_R, inner, _Shells(params, window_R, rng)))
    out = []
    for slot, cell in enumerate(cells):
        if cell is None:
            stats.dropped += 1
            continue
        try:
            c = centroid(cell)
            if float(np.hypot(c[0], c[1])) >= inner:
                continue
            stats.proposals += 1
            cell = cell.translated(-c)
            inball = inradius(cell, resolve_ties=False)
            values, _, _ = all_functionals(cell, params.dist, inball=inball)
        except GeometryError:
            stats.dropped += 1
            continue
        stats.accepted += 1
        out.append(TypicalCellSample(
            cell=cell, inball_r=inball.radius, fcount=cell.n_facets, functionals=values,
            summary=summary_from_values(values, cell.n_facets, 2), origin="WindowSampler",
            center_kind="Centroid", slot=slot,
        ))
    return out


def window_batch(params: ProcessParams, n_windows: int, window_R: float, rng: np.random.Generator,
                 stats: SamplerStats | None = None) -> tuple[list[TypicalCellSample], SamplerStats]:
    stats = stats if stats is not None else SamplerStats()
    out = []
    for w in range(n_windows):
        cells = sample_window_tessellation(params, window_R, rng, stats=stats)
        for c in cells:
            c.slot = w * 10 ** 6 + c.slot
        out.extend(cells)
    return out, stats


def facet_normals_in_support(sample: TypicalCellSample, dist: Discrete, tol: float = 1e-9) -> bool:
    signed = dist.signed_support()
    return all(np.abs(signed - n).max(axis=1).min() <= tol for n in sample.cell.normals)
