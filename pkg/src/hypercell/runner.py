"""Experiment orchestration.

Work is cut into chunks, each drawing from its own ``RandomStream(seed,
stream_id)``. Results are merged in chunk order, so outputs do not depend on
the number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .directions import ProcessParams, atoms_of, is_absolutely_continuous, n_min
from .errors import EmptyCondition, HypercellError
from .estimators import (
    Z95, conditional_mean, estimate_conditional, fit_decay_rate, ks_vs_gamma, limit_shape_ratio,
    parallel_facet_fraction, pearson, tail_check_phi_T, wilson_interval,
)
from .functionals import size_functional
from .output import sha256_file, write_estimates, write_json, write_jsonl
from .rng import RandomStream
from .samplers import SamplerStats, inball_batch, window_batch

STREAM_SHIFT = 32
ORACLE_STREAM = (1 << 31) - 1
WINDOW_ROUND = 4
SLOPE_BANDS = {"Circumradius": (0.85, 1.15), "Inradius": (0.70, 1.15)}
DEFAULT_SLOPE_BAND = (0.70, 1.15)
MAX_DROP_RATE = 1e-6


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunResult:
    samples: list = field(default_factory=list)  # (stream_id, sample)
    rows: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    ratefit: dict | None = None
    stats: SamplerStats = field(default_factory=SamplerStats)


# ----------------------------------------------------------------------------
# chunk workers (top level so they pickle)


def _params(cfg: ExperimentConfig) -> ProcessParams:
    return ProcessParams(cfg.gamma, cfg.distribution(), cfg.dim)


def _inball_chunk(task):
    cfg, stream_id, n, a = task
    rng = RandomStream(cfg.seed, stream_id).generator()
    if a is None:
        samples, stats = inball_batch(_params(cfg), n, rng)
    else:
        samples, stats = inball_batch(_params(cfg), n, rng, sigma=cfg.sigma, a=a,
                                      truncate=a * cfg.gamma < 1)
    return stream_id, samples, stats


def _window_chunk(task):
    cfg, stream_id = task
    rng = RandomStream(cfg.seed, stream_id).generator()
    samples, stats = window_batch(_params(cfg), 1, _window_R(cfg), rng)
    return stream_id, samples, stats


def _window_R(cfg: ExperimentConfig) -> float:
    return cfg.window_R if cfg.window_R is not None else 40.0 / cfg.gamma


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ----------------------------------------------------------------------------
# sampling drivers


def collect_inball(cfg: ExperimentConfig, task_index: int, n: int, a: float | None):
    """``n`` inball cells for one grid point, in chunk order."""
    sizes = [cfg.chunk_size] * (n // cfg.chunk_size)
    if n % cfg.chunk_size:
        sizes.append(n % cfg.chunk_size)
    tasks = [(cfg, (task_index << STREAM_SHIFT) | c, m, a) for c, m in enumerate(sizes)]
    out, stats = [], SamplerStats()
    for stream_id, samples, st in _map(_inball_chunk, tasks, cfg.workers):
        out.extend((stream_id, s) for s in samples)
        stats = stats.merge(st)
    return out, stats


def collect_window(cfg: ExperimentConfig, task_index: int, n: int):
    """The first ``n`` retained window cells, one window per chunk."""
    out, stats = [], SamplerStats()
    chunk = 0
    while len(out) < n:
        batch = max(cfg.workers, 1) * WINDOW_ROUND
        tasks = [(cfg, (task_index << STREAM_SHIFT) | (chunk + i)) for i in range(batch)]
        chunk += batch
        for stream_id, samples, st in _map(_window_chunk, tasks, cfg.workers):
            if len(out) >= n:
                break
            out.extend((stream_id, s) for s in samples)
            stats = stats.merge(st)
    return out[:n], stats


# ----------------------------------------------------------------------------
# experiments


def _row(cfg, tag, est=None, **kw):
    row = {"experiment_id": cfg.experiment, "theorem_tag": tag, "seed": cfg.seed}
    if est is not None:
        row.update(sigma=est.sigma_name, a=est.a, n=est.n, p_hat=est.p_hat, ci_low=est.ci_low,
                   ci_high=est.ci_high, n_samples=est.denominator_count)
    row.update(kw)
    return row


def _drop_check(stats: SamplerStats) -> Check:
    rate = stats.dropped / max(stats.proposals, 1)
    return Check("drop_rate", rate < MAX_DROP_RATE, f"{stats.dropped} of {stats.proposals} proposals dropped")


def _fcount_rows(cfg, samples, tag):
    f = np.array([s.fcount for _, s in samples])
    rows = []
    for n in sorted(set(f.tolist())):
        k = int((f == n).sum())
        lo, hi = wilson_interval(k, len(f))
        rows.append(_row(cfg, tag, n=n, p_hat=k / len(f), ci_low=lo, ci_high=hi, n_samples=len(f)))
    return rows


def run_complementary(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    res.samples, res.stats = collect_inball(cfg, 0, cfg.n_samples, None)
    cells = [s for _, s in res.samples]
    res.rows = _fcount_rows(cfg, res.samples, "complementary")
    d = cfg.dim
    for n in (d + 1, d + 2):
        phi = np.array([s.functionals["PhiContent"] for s in cells if s.fcount == n])
        if len(phi) == 0:
            res.checks.append(Check(f"ks_gamma_f{n}", False, "no cells with this facet count"))
            continue
        ks = ks_vs_gamma(phi, n - d, cfg.gamma, cfg.ks_tolerance)
        res.checks.append(Check(f"ks_gamma_f{n}", ks.passed,
                                f"D={ks.statistic:.6g}, limit={ks.tolerance_factor * ks.threshold_5pct:.6g}, N={ks.n_samples}"))
    simplicial = [s for s in cells if s.fcount == d + 1]
    if len(simplicial) > 2:
        phi = [s.functionals["PhiContent"] for s in simplicial]
        limit = 3.0 / math.sqrt(len(simplicial))
        for name in ("iso_ratio", "circ_over_in"):
            rho = pearson(phi, [getattr(s.summary, name) for s in simplicial])
            res.checks.append(Check(f"independence_{name}", abs(rho) < limit, f"corr={rho:.6g}, limit={limit:.6g}"))
    res.checks.append(_drop_check(res.stats))
    return res


def _conditioned(cfg: ExperimentConfig):
    """Conditioned samples per grid point: list of (a, samples)."""
    out, stats = [], SamplerStats()
    for j, a in enumerate(cfg.a_grid):
        samples, st = collect_inball(cfg, j + 1, cfg.n_samples, a)
        out.append((a, samples))
        stats = stats.merge(st)
    return out, stats


def _monotone_check(ests) -> Check:
    bad = [i for i in range(1, len(ests)) if ests[i].ci_high < ests[i - 1].ci_low]
    return Check("monotone_within_ci", not bad, "p_hat: " + ", ".join(f"{e.p_hat:.4g}" for e in ests))


def run_small_cells(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    grid, res.stats = _conditioned(cfg)
    spec = size_functional(cfg.sigma, cfg.dim)
    nm = n_min(cfg.distribution())
    ests = []
    for a, samples in grid:
        res.samples.extend(samples)
        est = estimate_conditional([s for _, s in samples], spec, a, nm, "f=n")
        ests.append(est)
        res.rows.append(_row(cfg, "facet_limit", est))
    res.checks.append(_monotone_check(ests))
    res.checks.append(_drop_check(res.stats))
    return res


def run_speed(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    grid, res.stats = _conditioned(cfg)
    spec = size_functional(cfg.sigma, cfg.dim)
    nm = n_min(cfg.distribution())
    points = []
    for a, samples in grid:
        res.samples.extend(samples)
        est = estimate_conditional([s for _, s in samples], spec, a, nm, "f>n")
        res.rows.append(_row(cfg, "speed_f_gt_n", est))
        se = math.sqrt(est.p_hat * (1 - est.p_hat) / est.denominator_count)
        points.append((a, est.p_hat, se))
    lo, hi = SLOPE_BANDS.get(cfg.sigma, DEFAULT_SLOPE_BAND)
    try:
        fit = fit_decay_rate(points)
    except HypercellError as exc:
        res.checks.append(Check("rate_slope", False, str(exc)))
    else:
        res.ratefit = fit.as_dict()
        res.checks.append(Check("rate_slope", lo <= fit.slope <= hi,
                                f"slope={fit.slope:.6g}+-{fit.slope_stderr:.3g}, band=[{lo}, {hi}]"))
    res.checks.append(_drop_check(res.stats))
    return res


def run_limit_shape(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    grid, res.stats = _conditioned(cfg)
    spec = size_functional(cfg.sigma, cfg.dim)
    rng = RandomStream(cfg.seed, ORACLE_STREAM).generator()
    oracle = limit_shape_ratio(cfg.distribution(), cfg.sigma, spec.degree, lambda s: s["iso_ratio"],
                               cfg.oracle_n, rng)
    res.rows.append(_row(cfg, "limit_shape_oracle", sigma=cfg.sigma, p_hat=oracle.value,
                         ci_low=oracle.value - Z95 * oracle.stderr, ci_high=oracle.value + Z95 * oracle.stderr,
                         n_samples=oracle.n))
    empirical = None
    for a, samples in grid:
        res.samples.extend(samples)
        empirical = conditional_mean([s for _, s in samples], spec, a, "iso_ratio")
        res.rows.append(_row(cfg, "limit_shape_conditional", sigma=cfg.sigma, a=a, p_hat=empirical.value,
                             ci_low=empirical.value - Z95 * empirical.stderr,
                             ci_high=empirical.value + Z95 * empirical.stderr, n_samples=empirical.n))
    # grid is checked at its smallest a
    a_min = min(cfg.a_grid)
    samples = dict(grid)[a_min]
    empirical = conditional_mean([s for _, s in samples], spec, a_min, "iso_ratio")
    joint = math.hypot(oracle.stderr, empirical.stderr)
    z = abs(oracle.value - empirical.value) / joint
    res.checks.append(Check("limit_shape_agreement", z < 3.0,
                            f"oracle={oracle.value:.6g}, conditional={empirical.value:.6g}, z={z:.3g}"))
    res.checks.append(_drop_check(res.stats))
    return res


def run_atoms(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    res.samples, res.stats = collect_window(cfg, 0, cfg.n_samples)
    cells = [s for _, s in res.samples]
    dist = cfg.distribution()
    nm = cfg.dim + 1
    spec = size_functional("Inradius", cfg.dim)
    ests = []
    u = atoms_of(dist)[0][0]
    for a in sorted(cfg.a_grid, reverse=True):
        try:
            est = estimate_conditional(cells, spec, a, nm, "f>n")
        except EmptyCondition as exc:
            res.checks.append(Check(f"nonempty_a_{a:g}", False, str(exc)))
            continue
        ests.append(est)
        res.rows.append(_row(cfg, "atoms_f_gt_n", est))
        par = parallel_facet_fraction(cells, u, a)
        res.rows.append(_row(cfg, "parallel_facets", par))
    if ests:
        first, last = ests[0], ests[-1]
        res.checks.append(Check("atoms_lower_bound", last.ci_low > 0.02,
                                f"ci_low={last.ci_low:.4g} at a={last.a:g}"))
        res.checks.append(Check("atoms_non_vanishing", last.p_hat >= 0.5 * first.p_hat,
                                f"first={first.p_hat:.4g}, last={last.p_hat:.4g}"))
    res.checks.append(_drop_check(res.stats))
    return res


def run_tail_lemma(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    rng = RandomStream(cfg.seed, 0).generator()
    tail = tail_check_phi_T(cfg.distribution(), cfg.n_samples, cfg.t_grid, rng)
    for t, surv, _ in tail.points:
        k = int(round(surv * tail.n))
        lo, hi = wilson_interval(k, tail.n)
        res.rows.append(_row(cfg, "tail_survival", sigma="PhiContent", a=t, p_hat=surv, ci_low=lo, ci_high=hi,
                             n_samples=tail.n))
    res.ratefit = {"slope": tail.slope, "stderr": tail.slope_stderr,
                   "grid": [[t, s] for t, s, _ in tail.points]}
    res.checks.append(Check("tail_exponent", tail.slope <= -0.9, f"slope={tail.slope:.6g}"))
    res.checks.append(Check("phi_T_above_one", tail.all_above_one, f"min={tail.min_phi:.6g}"))
    return res


def run_sample_dump(cfg: ExperimentConfig) -> RunResult:
    res = RunResult()
    if is_absolutely_continuous(cfg.distribution()):
        res.samples, res.stats = collect_inball(cfg, 0, cfg.n_samples, None)
    else:
        res.samples, res.stats = collect_window(cfg, 0, cfg.n_samples)
    res.rows = _fcount_rows(cfg, res.samples, "facet_counts")
    res.checks.append(_drop_check(res.stats))
    return res


EXPERIMENT_RUNNERS = {
    "complementary": run_complementary,
    "small_cells": run_small_cells,
    "speed": run_speed,
    "limit_shape": run_limit_shape,
    "atoms": run_atoms,
    "tail_lemma": run_tail_lemma,
    "sample_dump": run_sample_dump,
}


# ----------------------------------------------------------------------------
# top level


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(cfg: ExperimentConfig) -> dict:
    """Execute ``cfg`` and write its outputs; returns the manifest."""
    cfg.check()
    started = _now()
    t0 = time.perf_counter()
    res = EXPERIMENT_RUNNERS[cfg.experiment](cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.hash()
    write_jsonl(out / "samples.jsonl", (s.record(cfg.seed, sid) for sid, s in res.samples))
    write_estimates(out / "estimates.csv", res.rows)
    write_json(out / "ratefit.json", {"config_hash": config_hash, **(res.ratefit or {})})
    files = ["samples.jsonl", "estimates.csv", "ratefit.json"]
    manifest = {
        "config_hash": config_hash,
        "config": cfg.to_dict(),
        "code_version": __version__,
        "started": started,
        "finished": _now(),
        "elapsed_seconds": time.perf_counter() - t0,
        "counters": res.stats.as_dict(),
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in res.checks],
        "all_passed": all(c.passed for c in res.checks),
        "files": [{"name": f, "sha256": sha256_file(out / f)} for f in files],
    }
    write_json(out / "manifest.json", manifest)
    return manifest
