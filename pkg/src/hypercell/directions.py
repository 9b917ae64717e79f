"""Even directional distributions on the unit sphere and their support predicates."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, EnvelopeViolation, SupportTooLarge
from .geometry import delta_d_batch, half_sphere_test, unit_vector

SUPPORT_CAP = 40
MASS_TOL = 1e-12
ATOM_TOL = 1e-9


@dataclass(frozen=True)
class Isotropic:
    dim: int

    @property
    def kind(self) -> str:
        return "isotropic"


@dataclass(frozen=True)
class Density:
    """Bounded density on the sphere.

    ``pdf`` maps an (N, d) array of unit vectors to density values with respect
    to surface measure (arc length ``dtheta`` in the plane, area on S^2).
    ``bound`` is the user-declared envelope M, checked on every proposal.
    """

    dim: int
    pdf: Callable[[np.ndarray], np.ndarray]
    bound: float
    name: str = "density"
    params: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "density"

    def symmetric_pdf(self, U: np.ndarray) -> np.ndarray:
        return 0.5 * (self.pdf(U) + self.pdf(-U))


@dataclass(frozen=True)
class Discrete:
    """Atoms stored as antipodal pairs: ``atoms[k]`` and its negative share ``masses[k]``."""

    atoms: np.ndarray
    masses: np.ndarray

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def kind(self) -> str:
        return "discrete"

    def signed_support(self) -> np.ndarray:
        return np.concatenate([self.atoms, -self.atoms])


@dataclass(frozen=True)
class Mixture:
    weights: tuple
    components: tuple

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def kind(self) -> str:
        return "mixture"


DirectionalDistribution = Union[Isotropic, Density, Discrete, Mixture]


@dataclass(frozen=True)
class ProcessParams:
    gamma: float
    dist: DirectionalDistribution
    dim: int

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("intensity gamma must be positive")
        if self.dist.dim != self.dim:
            raise ConfigError("distribution dimension does not match the process dimension")


# ----------------------------------------------------------------------------
# construction


def _canonical(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > ATOM_TOL)
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


def discrete(pairs, check_span: bool = True) -> Discrete:
    """Build a discrete even distribution from ``(direction, mass)`` pairs.

    Directions are canonicalised so the first non-zero coordinate is positive;
    pairs naming the same axis (``u`` and ``-u``) are merged. ``check_span``
    may be switched off for a component whose mixture spans the space anyway.
    """
    atoms: list[np.ndarray] = []
    masses: list[float] = []
    for direction, mass in pairs:
        if mass < 0:
            raise ConfigError("atom masses must be non-negative")
        u = _canonical(unit_vector(direction))
        for k, a in enumerate(atoms):
            if np.abs(a - u).max() <= ATOM_TOL:
                masses[k] += float(mass)
                break
        else:
            atoms.append(u)
            masses.append(float(mass))
    A = np.array(atoms)
    m = np.array(masses)
    if abs(m.sum() - 1.0) > MASS_TOL:
        raise ConfigError(f"atom masses sum to {m.sum():.15g}, expected 1")
    if check_span and np.linalg.matrix_rank(A, tol=1e-9) < A.shape[1]:
        raise ConfigError("support of the directional distribution lies in a great subsphere")
    return Discrete(A, m)


def mixture(parts) -> Mixture:
    weights = tuple(float(w) for w, _ in parts)
    comps = tuple(c for _, c in parts)
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > MASS_TOL:
        raise ConfigError("mixture weights must be non-negative and sum to 1")
    if len({c.dim for c in comps}) != 1:
        raise ConfigError("mixture components must share a dimension")
    mix = Mixture(weights, comps)
    if not has_continuous_part(mix):
        A = np.array([a for a, m in atoms_of(mix) if m > 0])
        if np.linalg.matrix_rank(A, tol=1e-9) < A.shape[1]:
            raise ConfigError("support of the directional distribution lies in a great subsphere")
    return mix


def cos2theta_density(dim: int, amplitude: float, bound: float | None = None) -> Density:
    """Density proportional to ``1 + A cos(2 theta)``.

    In the plane theta is the polar angle of the direction; on S^2 it is the
    angle to the third axis.
    """
    if not -1.0 <= amplitude <= 1.0:
        raise ConfigError("cos2theta amplitude must lie in [-1, 1]")
    A = float(amplitude)
    if dim == 2:
        norm = 2.0 * math.pi

        def pdf(U):
            theta = np.arctan2(U[..., 1], U[..., 0])
            return (1.0 + A * np.cos(2.0 * theta)) / norm
    elif dim == 3:
        norm = 4.0 * math.pi * (1.0 - A / 3.0)

        def pdf(U):
            c = np.clip(U[..., 2], -1.0, 1.0)
            return (1.0 + A * (2.0 * c * c - 1.0)) / norm
    else:
        raise ConfigError("cos2theta density is defined for d in {2, 3}")
    if bound is None:
        bound = (1.0 + abs(A)) / norm
    return Density(dim, pdf, float(bound), "cos2theta", {"amplitude": A})


def has_continuous_part(dist: DirectionalDistribution) -> bool:
    if isinstance(dist, (Isotropic, Density)):
        return True
    if isinstance(dist, Mixture):
        return any(w > 0 and has_continuous_part(c) for w, c in zip(dist.weights, dist.components))
    return False


def is_absolutely_continuous(dist: DirectionalDistribution) -> bool:
    if isinstance(dist, (Isotropic, Density)):
        return True
    if isinstance(dist, Mixture):
        return all(w == 0 or is_absolutely_continuous(c) for w, c in zip(dist.weights, dist.components))
    return False


def has_bounded_density(dist: DirectionalDistribution) -> bool:
    return is_absolutely_continuous(dist)


# ----------------------------------------------------------------------------
# sampling


def _uniform_sphere(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    X = rng.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def sample_directions(dist: DirectionalDistribution, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. directions from ``dist`` as an (n, d) array."""
    d = dist.dim
    if n == 0:
        return np.empty((0, d))
    if isinstance(dist, Isotropic):
        return _uniform_sphere(rng, n, d)
    if isinstance(dist, Discrete):
        cdf = np.cumsum(dist.masses)
        cdf[-1] = 1.0
        k = np.searchsorted(cdf, rng.random(n), side="right")
        k = np.minimum(k, len(cdf) - 1)
        sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        return dist.atoms[k] * sign[:, None]
    if isinstance(dist, Density):
        out = []
        got = 0
        while got < n:
            m = max(16, 2 * (n - got))
            U = _uniform_sphere(rng, m, d)
            rho = dist.symmetric_pdf(U)
            if np.any(rho > dist.bound * (1 + 1e-12)):
                raise EnvelopeViolation(f"density {rho.max():.6g} exceeds declared bound {dist.bound:.6g}")
            acc = rng.random(m) * dist.bound < rho
            out.append(U[acc])
            got += int(acc.sum())
        return np.concatenate(out)[:n]
    if isinstance(dist, Mixture):
        w = np.cumsum(dist.weights)
        w[-1] = 1.0
        comp = np.searchsorted(w, rng.random(n), side="right")
        comp = np.minimum(comp, len(w) - 1)
        out = np.empty((n, d))
        for k, c in enumerate(dist.components):
            idx = np.flatnonzero(comp == k)
            if idx.size:
                out[idx] = sample_directions(c, rng, idx.size)
        return out
    raise TypeError(f"unknown distribution {type(dist).__name__}")


def sample_direction(dist: DirectionalDistribution, rng: np.random.Generator) -> np.ndarray:
    return sample_directions(dist, rng, 1)[0]


# ----------------------------------------------------------------------------
# structural predicates


def atom_mass(dist: DirectionalDistribution, u) -> float:
    """phi({u, -u})."""
    if isinstance(dist, (Isotropic, Density)):
        return 0.0
    if isinstance(dist, Discrete):
        v = _canonical(unit_vector(u))
        hit = np.abs(dist.atoms - v).max(axis=1) <= ATOM_TOL
        return float(dist.masses[hit].sum())
    if isinstance(dist, Mixture):
        return float(sum(w * atom_mass(c, u) for w, c in zip(dist.weights, dist.components)))
    raise TypeError(f"unknown distribution {type(dist).__name__}")


def atoms_of(dist: DirectionalDistribution) -> list[tuple[np.ndarray, float]]:
    """All atom pairs with their total mass phi({u, -u})."""
    if isinstance(dist, Discrete):
        return [(a, float(m)) for a, m in zip(dist.atoms, dist.masses)]
    if isinstance(dist, Mixture):
        found: list[tuple[np.ndarray, float]] = []
        for w, c in zip(dist.weights, dist.components):
            for a, m in atoms_of(c):
                for k, (b, mb) in enumerate(found):
                    if np.abs(a - b).max() <= ATOM_TOL:
                        found[k] = (b, mb + w * m)
                        break
                else:
                    found.append((a, w * m))
        return found
    return []


def _discrete_support(dist: DirectionalDistribution) -> np.ndarray:
    atoms = [a for a, m in atoms_of(dist) if m > 0]
    A = np.array(atoms)
    if 2 * len(A) > SUPPORT_CAP:
        raise SupportTooLarge(f"{2 * len(A)} signed directions exceed the cap of {SUPPORT_CAP}")
    return np.concatenate([A, -A])


def n_min(dist: DirectionalDistribution, d: int | None = None) -> int:
    """Smallest facet number a cell can have with positive probability.

    A bounded cell's facet normals positively span the space, so this is the
    size of the smallest positively spanning subset of the signed support.
    """
    d = dist.dim if d is None else d
    if has_continuous_part(dist):
        return d + 1
    S = _discrete_support(dist)
    for size in range(d + 1, len(S) + 1):
        for combo in itertools.combinations(range(len(S)), size):
            if half_sphere_test(S[list(combo)]):
                return size
    raise ConfigError("signed support does not positively span the space")


def supp_condition_atoms(dist: DirectionalDistribution, d: int | None = None) -> bool:
    """Whether the support has d+1 points not all in a closed half sphere."""
    return n_min(dist, d) == (dist.dim if d is None else d) + 1


def regular_simplex_delta(d: int) -> float:
    """Volume of the regular simplex inscribed in the unit sphere."""
    return (d + 1) ** ((d + 1) / 2) / (math.factorial(d) * d ** (d / 2))


def delta_max(dist: DirectionalDistribution, d: int | None = None) -> float:
    """Upper bound of delta_d over tuples drawn from the support of ``dist``."""
    d = dist.dim if d is None else d
    if has_continuous_part(dist):
        return regular_simplex_delta(d)
    S = _discrete_support(dist)
    combos = np.array(list(itertools.combinations(range(len(S)), d + 1)))
    if len(combos) == 0:
        return 0.0
    return float(delta_d_batch(S[combos]).max())


def describe(dist: DirectionalDistribution) -> dict:
    """Config-style tagged record of a distribution."""
    if isinstance(dist, Isotropic):
        return {"type": "isotropic"}
    if isinstance(dist, Density):
        rec = {"type": "density", "kind": dist.name, "bound": dist.bound}
        rec.update(dist.params)
        return rec
    if isinstance(dist, Discrete):
        return {"type": "discrete", "atoms": [{"dir": a.tolist(), "mass": float(m)}
                                              for a, m in zip(dist.atoms, dist.masses)]}
    if isinstance(dist, Mixture):
        return {"type": "mixture", "parts": [{"weight": w, "dist": describe(c)}
                                             for w, c in zip(dist.weights, dist.components)]}
    raise TypeError(type(dist).__name__)


_RECORD_KEYS = {
    "isotropic": {"type"},
    "discrete": {"type", "atoms"},
    "density": {"type", "kind", "amplitude", "bound"},
    "mixture": {"type", "parts"},
}


def from_record(rec: dict, dim: int, _component: bool = False) -> DirectionalDistribution:
    kind = rec.get("type")
    extra = set(rec) - _RECORD_KEYS.get(kind, set(rec))
    if extra:
        raise ConfigError(f"unknown keys for a {kind} distribution: {sorted(extra)}")
    if kind == "isotropic":
        return Isotropic(dim)
    if kind == "discrete":
        pairs = [(a["dir"], a["mass"]) for a in rec["atoms"]]
        if any(len(p[0]) != dim for p in pairs):
            raise ConfigError("atom dimension does not match dim")
        return discrete(pairs, check_span=not _component)
    if kind == "density":
        if rec.get("kind") != "cos2theta":
            raise ConfigError(f"unknown density kind {rec.get('kind')!r}")
        return cos2theta_density(dim, rec["amplitude"], rec.get("bound"))
    if kind == "mixture":
        return mixture([(p["weight"], from_record(p["dist"], dim, True)) for p in rec["parts"]])
    raise ConfigError(f"unknown distribution type {kind!r}")
