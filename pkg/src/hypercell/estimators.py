"""Statistical estimators for typical-cell samples.

Every estimator is a deterministic function of its sample list. Samples may be
``TypicalCellSample`` objects or the JSON-lines records they serialise to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy import special, stats

from .directions import is_absolutely_continuous, sample_directions
from .errors import DegenerateGrid, EmptyCondition, UnsupportedDistribution
from .functionals import SizeFunctionalSpec, ball_value, simplex_functionals_batch, simplex_summary_batch
from .geometry import delta_d_batch, in_P_batch, simplex_vertices_batch

KS_C95 = 1.36
Z95 = 1.959963984540054


# ----------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class ConditionalEstimate:
    numerator_count: int
    denominator_count: int
    p_hat: float
    ci_low: float
    ci_high: float
    a: float
    sigma_name: str
    n: int
    event: str = "f=n"

    def __post_init__(self):
        if self.denominator_count <= 0:
            raise EmptyCondition("conditioning event has no samples")


@dataclass(frozen=True)
class RateFit:
    a_grid: list
    p_values: list
    slope: float
    intercept: float
    slope_stderr: float

    def as_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.slope_stderr, "intercept": self.intercept,
                "grid": [[a, p] for a, p in zip(self.a_grid, self.p_values)]}


@dataclass(frozen=True)
class KSResult:
    statistic: float
    n_samples: int
    threshold_5pct: float
    tolerance_factor: float = 1.5

    @property
    def passed(self) -> bool:
        return self.statistic < self.tolerance_factor * self.threshold_5pct


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int


@dataclass(frozen=True)
class TailCheck:
    points: list  # (t, survival_hat, bound_ok)
    slope: float
    slope_stderr: float
    min_phi: float
    n: int

    @property
    def all_above_one(self) -> bool:
        return self.min_phi > 1.0


# ----------------------------------------------------------------------------
# sample access


def _get(s, name):
    return s[name] if isinstance(s, dict) else getattr(s, name)


def _summary(s) -> dict:
    summ = _get(s, "summary")
    return summ if isinstance(summ, dict) else summ.as_dict()


def _dim(s) -> int:
    if isinstance(s, dict):
        return 2 if "Perimeter" in s["functionals"] else 3
    return s.cell.dim


def _columns(samples, sigma_name: str | None = None):
    f = np.array([_get(s, "fcount") for s in samples], dtype=int)
    r = np.array([_get(s, "inball_r") for s in samples], dtype=float)
    sig = None if sigma_name is None else np.array([_get(s, "functionals")[sigma_name] for s in samples])
    return f, r, sig


# ----------------------------------------------------------------------------
# proportions


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    if n <= 0:
        raise EmptyCondition("no trials")
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    p = k / n
    return min(float(ci.low), p), max(float(ci.high), p)


def _proportion(k, n, a, sigma_name, n_facets, event) -> ConditionalEstimate:
    if n == 0:
        raise EmptyCondition(f"no samples satisfy the conditioning event at a={a}")
    lo, hi = wilson_interval(k, n)
    return ConditionalEstimate(int(k), int(n), k / n, lo, hi, float(a), sigma_name, int(n_facets), event)


def estimate_conditional(samples, sigma: SizeFunctionalSpec, a: float, n: int, event: str = "f=n") -> ConditionalEstimate:
    """P(event | Sigma^(1/k) < a) with ``event`` one of ``f=n`` and ``f>n``."""
    samples = list(samples)
    if not samples:
        raise EmptyCondition("empty sample list")
    d = _dim(samples[0])
    cap = a / ball_value(sigma.name, d) ** (1.0 / sigma.degree)
    for s in samples:
        ca = _get(s, "conditioned_a")
        if ca is not None and ca < cap * (1 - 1e-12):
            raise ValueError("samples were conditioned on a smaller event than requested")
    f, _, sig = _columns(samples, sigma.name)
    cond = sig ** (1.0 / sigma.degree) < a
    if event == "f=n":
        hit = f == n
    elif event == "f>n":
        hit = f > n
    else:
        raise ValueError(f"unknown event {event!r}")
    return _proportion(int((hit & cond).sum()), int(cond.sum()), a, sigma.name, n, event)


def estimate_conditional_facet_prob(samples, sigma: SizeFunctionalSpec, a: float, n: int) -> ConditionalEstimate:
    return estimate_conditional(samples, sigma, a, n, "f=n")


# ----------------------------------------------------------------------------
# mu-measures


def _mu_terms(samples, n: int, S: Callable[[dict], bool]) -> np.ndarray:
    return np.array([float(_get(s, "fcount") == n and bool(S(_summary(s)))) for s in samples])


def _mean_se(x: np.ndarray) -> MCEstimate:
    m = len(x)
    sd = float(x.std(ddof=1)) if m > 1 else 0.0
    return MCEstimate(float(x.mean()), sd / math.sqrt(m), m)


def estimate_mu_n_s(samples, n: int, S: Callable[[dict], bool] = lambda _s: True) -> MCEstimate:
    """Plug-in estimate of P(f(Z) = n, shape in S)."""
    samples = list(samples)
    hits = _mu_terms(samples, n, S)
    if not hits.any():
        raise EmptyCondition(f"no sample with f={n} in S")
    return _mean_se(hits)


def estimate_mu_n_s_sigma(samples, n: int, S: Callable[[dict], bool], sigma: str, k: float) -> MCEstimate:
    """Sigma-weighted measure (1/(n-d)!) E[1(f=n, shape in S) Sigma(shape)^(-(n-d)/k)].

    Sigma of the normalised shape is Sigma(Z) / Phi(Z)^k by homogeneity.
    """
    samples = list(samples)
    hits = _mu_terms(samples, n, S)
    if not hits.any():
        raise EmptyCondition(f"no sample with f={n} in S")
    d = _dim(samples[0])
    terms = np.zeros(len(samples))
    for i, s in enumerate(samples):
        if hits[i]:
            fv = _get(s, "functionals")
            sig_shape = fv[sigma] / fv["PhiContent"] ** k
            terms[i] = sig_shape ** (-(n - d) / k)
    return _mean_se(terms / math.factorial(n - d))


# ----------------------------------------------------------------------------
# limit-shape oracle


def _weighted_mean(w: np.ndarray, g: np.ndarray) -> MCEstimate:
    """Ratio estimator sum(w g)/sum(w) with its delta-method standard error."""
    total = w.sum()
    value = float((w * g).sum() / total)
    se = float(np.sqrt((w ** 2 * (g - value) ** 2).sum()) / total)
    return MCEstimate(value, se, len(w))


def _oracle_draws(dist, sigma: str, k: float, N: int, rng, block: int = 200_000):
    """Weights Delta_d/Sigma(T)^(1/k) on P, zero elsewhere, with summaries of T."""
    d = dist.dim
    weights, summaries = [], []
    done = 0
    while done < N:
        m = min(block, N - done)
        U = sample_directions(dist, rng, m * (d + 1)).reshape(m, d + 1, d)
        inP = in_P_batch(U)
        w = np.zeros(m)
        summ = {key: np.full(m, np.nan) for key in ("fcount", "phi", "circ_over_in", "iso_ratio", "diam_norm")}
        if inP.any():
            Up = U[inP]
            vals = simplex_functionals_batch(Up, simplex_vertices_batch(Up), dist)
            w[inP] = delta_d_batch(Up) / vals[sigma] ** (1.0 / k)
            for key, v in simplex_summary_batch(vals, d).items():
                summ[key][inP] = v
        weights.append(w)
        summaries.append(summ)
        done += m
    w = np.concatenate(weights)
    summ = {key: np.concatenate([s[key] for s in summaries]) for key in summaries[0]}
    return w, summ


def limit_shape_oracle(dist, sigma: str, k: float, g: Callable[[dict], np.ndarray], N: int, rng) -> MCEstimate:
    """Unnormalised integral of g(shape(T(u))) Delta_d(u) / Sigma(shape(T(u)))^(1/k) over P.

    ``g`` receives a dict of summary columns and returns one value per draw.
    Proposals are plain phi^(d+1) draws; those outside P contribute zero.
    """
    if not is_absolutely_continuous(dist):
        raise UnsupportedDistribution("the limit-shape oracle needs an absolutely continuous distribution")
    w, summ = _oracle_draws(dist, sigma, k, N, rng)
    inP = w > 0
    gv = np.zeros(len(w))
    gv[inP] = np.asarray(g({key: v[inP] for key, v in summ.items()}), dtype=float)
    return _mean_se(w * gv)


def limit_shape_ratio(dist, sigma: str, k: float, g: Callable[[dict], np.ndarray], N: int, rng,
                      return_draws: bool = False):
    """Normalised oracle: the limit of E[g(shape(Z)) | Sigma(Z)^(1/k) < a] as a -> 0."""
    if not is_absolutely_continuous(dist):
        raise UnsupportedDistribution("the limit-shape oracle needs an absolutely continuous distribution")
    w, summ = _oracle_draws(dist, sigma, k, N, rng)
    inP = w > 0
    gv = np.zeros(len(w))
    gv[inP] = np.asarray(g({key: v[inP] for key, v in summ.items()}), dtype=float)
    est = _weighted_mean(w, gv)
    return (est, w, summ) if return_draws else est


def weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    return float(values[order][np.searchsorted(cw, q * cw[-1])])


def conditional_mean(samples, sigma: SizeFunctionalSpec, a: float, field_name: str) -> MCEstimate:
    """E[summary field | Sigma^(1/k) < a] with its standard error."""
    samples = list(samples)
    _, _, sig = _columns(samples, sigma.name)
    cond = sig ** (1.0 / sigma.degree) < a
    if not cond.any():
        raise EmptyCondition(f"no samples with Sigma^(1/k) < {a}")
    vals = np.array([_summary(s)[field_name] for s, c in zip(samples, cond) if c], dtype=float)
    return _mean_se(vals)


# ----------------------------------------------------------------------------
# goodness of fit


def ks_statistic(values, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    x = np.sort(np.asarray(values, dtype=float))
    n = len(x)
    F = cdf(x)
    i = np.arange(1, n + 1)
    return float(max((i / n - F).max(), (F - (i - 1) / n).max()))


def ks_vs_gamma(values, shape_n_minus_d: int, gamma: float, tolerance_factor: float = 1.5) -> KSResult:
    """Exact one-sample KS distance to the Gamma(shape, rate gamma) law."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise EmptyCondition("no values")
    if np.any(values <= 0):
        raise ValueError("values must be positive")
    if shape_n_minus_d < 1:
        raise ValueError("shape parameter must be at least 1")
    stat = ks_statistic(values, lambda x: special.gammainc(shape_n_minus_d, gamma * x))
    n = len(values)
    return KSResult(stat, n, KS_C95 / math.sqrt(n), tolerance_factor)


def two_sample_ks(x, y):
    return stats.ks_2samp(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def pearson(x, y) -> float:
    return float(np.corrcoef(np.asarray(x, dtype=float), np.asarray(y, dtype=float))[0, 1])


def holm(pvalues: Iterable[float], alpha: float = 0.05) -> list[bool]:
    """Holm step-down rejections at family-wise level ``alpha``."""
    p = list(pvalues)
    order = sorted(range(len(p)), key=lambda i: p[i])
    reject = [False] * len(p)
    m = len(p)
    for rank, i in enumerate(order):
        if p[i] > alpha / (m - rank):
            break
        reject[i] = True
    return reject


# ----------------------------------------------------------------------------
# decay rates and tails


def fit_decay_rate(points) -> RateFit:
    """Weighted least squares of log p on log a; weights from the delta-method variance."""
    usable = [(a, p, se) for a, p, se in points
              if a > 0 and p > 0 and math.isfinite(p) and math.isfinite(a)]
    if len(usable) < 4:
        raise DegenerateGrid(f"{len(usable)} usable grid points, need at least 4")
    a = np.array([u[0] for u in usable])
    p = np.array([u[1] for u in usable])
    se = np.array([u[2] for u in usable], dtype=float)
    x, y = np.log(a), np.log(p)
    rel = se / p
    if np.all(rel > 0):
        w = 1.0 / rel ** 2
    else:
        w = np.ones_like(x)
    X = np.column_stack([np.ones_like(x), x])
    W = X * w[:, None]
    cov = np.linalg.inv(X.T @ W)
    beta = cov @ (W.T @ y)
    if np.all(rel > 0):
        slope_se = math.sqrt(cov[1, 1])
    else:
        resid = y - X @ beta
        s2 = float(resid @ resid) / max(len(y) - 2, 1)
        slope_se = math.sqrt(s2 * cov[1, 1])
    return RateFit(a.tolist(), p.tolist(), float(beta[1]), float(beta[0]), slope_se)


def tail_check_phi_T(dist, N: int, t_grid, rng, block: int = 200_000) -> TailCheck:
    """Empirical survival of Phi(T(u)) for u ~ phi^(d+1) restricted to P, unweighted."""
    d = dist.dim
    phis = []
    got = 0
    while got < N:
        m = min(block, 2 * (N - got) + 64)
        U = sample_directions(dist, rng, m * (d + 1)).reshape(m, d + 1, d)
        U = U[in_P_batch(U)][: N - got]
        if len(U):
            phis.append(simplex_functionals_batch(U, simplex_vertices_batch(U), dist)["PhiContent"])
            got += len(U)
    phi = np.concatenate(phis)
    t = np.asarray(list(t_grid), dtype=float)
    surv = np.array([(phi > ti).mean() for ti in t])
    counts = surv * N
    pos = counts > 0
    if pos.sum() >= 2:
        x, y = np.log(t[pos]), np.log(surv[pos])
        w = counts[pos]
        X = np.column_stack([np.ones_like(x), x])
        cov = np.linalg.inv(X.T @ (X * w[:, None]))
        beta = cov @ ((X * w[:, None]).T @ y)
        slope = float(beta[1])
        resid = y - X @ beta
        s2 = float((w * resid ** 2).sum()) / max(pos.sum() - 2, 1)
        slope_se = math.sqrt(s2 * cov[1, 1])
    else:
        slope, slope_se = float("nan"), float("nan")
    # t * S(t) must stay below its value at the first grid point, up to sampling noise
    ref = t[0] * surv[0] * (1 + 3 / math.sqrt(max(counts[0], 1)))
    points = [(float(ti), float(si), bool(ti * si <= ref)) for ti, si in zip(t, surv)]
    return TailCheck(points, slope, slope_se, float(phi.min()), N)


# ----------------------------------------------------------------------------
# parallel facets


def has_parallel_pair(cell, u, a: float, tol: float = 1e-9) -> bool:
    """Two facets with normals u and -u bounding a slab of width < a."""
    u = np.asarray(u, dtype=float)
    c = cell.normals @ u
    plus = np.flatnonzero(c >= 1 - tol)
    minus = np.flatnonzero(c <= -1 + tol)
    if len(plus) == 0 or len(minus) == 0:
        return False
    width = cell.bounds[plus].min() + cell.bounds[minus].min()
    return bool(width < a)


def parallel_facet_fraction(samples, u, a: float, tol: float = 1e-9) -> ConditionalEstimate:
    """Fraction of cells in A_{u,a} among those with inradius < a."""
    cond = [s for s in samples if s.inball_r < a]
    k = sum(has_parallel_pair(s.cell, u, a, tol) for s in cond)
    return _proportion(k, len(cond), a, "Inradius", -1, "A_{u,a}")
