"""Simulation-study harness and file I/O.

Implements the desk-scale study machinery behind the CLI: replicate
engines for bias and coverage grids (sharing simulated datasets through
a common seed derivation, so the two studies are mutually consistent),
goodness-of-fit histogram averaging, and the probability-plot data used
to judge the gamma random-effect assumption.

Replicates within a grid cell run in a process pool capped by the
``ZICP_THREADS`` environment variable; every replicate owns streams
derived from (seed, cell, replicate), so results do not depend on the
pool size.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import multiprocessing
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DataFormatError, DomainError, StudyError, ZicpError
from .estep import stratum_stats
from .inference import FitResult, McemConfig, confidence_region, mcem_fit
from .model import (CONTINUOUS, DISCRETE, KINDS, Dataset, LatentTruth, Observation,
                    Stratum, Theta, simulate_hierarchy, uniform_design)
from .specfun import RngStream, reg_lower_gamma

STUDY_MCEM = McemConfig(g_schedule=(500,) * 5 + (2000,) * 10 + (8000,), max_iter=30)


# ---------------------------------------------------------------------------
# Dataset CSV schema: header "stratum,effort,y" (effort optional, default 1)
# ---------------------------------------------------------------------------


def read_dataset_csv(path: str, kind: str) -> Dataset:
    """Parse a dataset CSV; malformed rows are reported by number."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    groups: dict = {}
    order: List[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header == ["stratum", "effort", "y"]:
            has_effort = True
        elif header == ["stratum", "y"]:
            has_effort = False
        else:
            raise DataFormatError(
                f"{path}: header must be 'stratum,effort,y' or 'stratum,y', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path} row {lineno}: expected {len(header)} fields, "
                                      f"got {len(row)}")
            label = row[0].strip()
            try:
                effort = float(row[1]) if has_effort and row[1].strip() else 1.0
                y = float(row[-1])
            except ValueError as exc:
                raise DataFormatError(f"{path} row {lineno}: {exc}") from None
            if y < 0 or effort <= 0:
                raise DataFormatError(
                    f"{path} row {lineno}: need y >= 0 and effort > 0, got y={y}, effort={effort}")
            if kind == DISCRETE and y != math.floor(y):
                raise DataFormatError(f"{path} row {lineno}: discrete data requires integer y, "
                                      f"got {y}")
            if label not in groups:
                groups[label] = []
                order.append(label)
            groups[label].append(Observation(y=y, effort=effort))
    if not order:
        raise DataFormatError(f"{path}: no data rows")
    strata = tuple(Stratum(id=label, observations=tuple(groups[label])) for label in order)
    return Dataset(kind=kind, strata=strata)


def _format_y(y: float, kind: str) -> str:
    return str(int(y)) if kind == DISCRETE else repr(float(y))


def write_dataset_csv(dataset: Dataset, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stratum", "effort", "y"])
        for stratum in dataset.strata:
            for obs in stratum.observations:
                writer.writerow([stratum.id, repr(float(obs.effort)),
                                 _format_y(obs.y, dataset.kind)])


def write_latent_csv(dataset: Dataset, truth: LatentTruth, path: str) -> None:
    """Latent-truth CSV: one row per tow with its stratum's random effects."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stratum", "effort", "y", "n_clumps", "mu", "mark"])
        for s_idx, stratum in enumerate(dataset.strata):
            for o_idx, obs in enumerate(stratum.observations):
                writer.writerow([
                    stratum.id, repr(float(obs.effort)), _format_y(obs.y, dataset.kind),
                    truth.clumps[s_idx][o_idx], repr(truth.mu[s_idx]), repr(truth.mark[s_idx]),
                ])


# ---------------------------------------------------------------------------
# Replicate engine shared by the bias and coverage studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyGrid:
    """Design grid of a simulation study."""

    s_values: Tuple[int, ...]
    m_values: Tuple[int, ...]
    replicates: int
    theta_true: Theta
    level: float = 0.90
    seed: int = 0
    kind: str = CONTINUOUS
    mcem: McemConfig = STUDY_MCEM

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if not self.s_values or not self.m_values:
            raise DomainError("grids must be non-empty")
        if self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not 0.0 < self.level < 1.0:
            raise DomainError("level must be in (0,1)")
        object.__setattr__(self, "s_values", tuple(int(s) for s in self.s_values))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))


@dataclass(frozen=True)
class ReplicateOutcome:
    s: int
    m: int
    rep: int
    converged: bool
    error: Optional[str]
    theta_hat: Optional[np.ndarray]
    covered_ellipsoid: Optional[bool]
    covered_components: Optional[np.ndarray]


def replicate_data_stream(seed: int, s: int, m: int, rep: int) -> RngStream:
    """Stream simulating replicate data; shared across bias and coverage."""
    return RngStream(seed).substream(s, m, rep, 0)


def replicate_fit_seed(seed: int, s: int, m: int, rep: int) -> int:
    mixer = np.random.SeedSequence(entropy=seed, spawn_key=(s, m, rep, 1))
    return int(mixer.generate_state(1, np.uint64)[0])


def _run_replicate(task) -> ReplicateOutcome:
    grid, s, m, rep = task
    data_stream = replicate_data_stream(grid.seed, s, m, rep)
    dataset, _ = simulate_hierarchy(grid.theta_true, uniform_design(s, m),
                                    grid.kind, data_stream)
    cfg = dataclasses.replace(grid.mcem, seed=replicate_fit_seed(grid.seed, s, m, rep),
                              kind=grid.kind)
    try:
        fit = mcem_fit(dataset, cfg)
    except ZicpError as exc:
        return ReplicateOutcome(s, m, rep, False, f"{type(exc).__name__}: {exc}",
                                None, None, None)
    if fit.covariance is None:
        return ReplicateOutcome(s, m, rep, False, "fisher_not_pd",
                                fit.theta_hat.as_array(), None, None)
    region = confidence_region(fit.theta_hat, fit.covariance, grid.level)
    return ReplicateOutcome(
        s, m, rep,
        converged=True,
        error=None,
        theta_hat=fit.theta_hat.as_array(),
        covered_ellipsoid=region.contains(grid.theta_true),
        covered_components=region.interval_covers(grid.theta_true),
    )


def _pool_size(n_tasks: int) -> int:
    env = os.environ.get("ZICP_THREADS", "").strip()
    workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(workers, n_tasks))


def _map_replicates(grid: StudyGrid, cells: Sequence[Tuple[int, int]]) -> List[ReplicateOutcome]:
    tasks = [(grid, s, m, rep) for (s, m) in cells for rep in range(grid.replicates)]
    workers = _pool_size(len(tasks))
    if workers == 1:
        return [_run_replicate(t) for t in tasks]
    with multiprocessing.get_context("fork").Pool(workers) as pool:
        return pool.map(_run_replicate, tasks, chunksize=1)


# ---------------------------------------------------------------------------
# Bias and coverage studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BiasCell:
    s: int
    m: int
    replicates: int
    n_converged: int
    rel_bias: np.ndarray  # (4,) mean (theta_hat - theta)/theta over converged


@dataclass(frozen=True)
class CoverageCell:
    s: int
    m: int
    replicates: int
    n_converged: int
    n_covered: int
    component_covered: np.ndarray  # (4,) interval-coverage counts

    @property
    def coverage(self) -> float:
        return self.n_covered / self.n_converged if self.n_converged else math.nan

    @property
    def coverage_se(self) -> float:
        if not self.n_converged:
            return math.nan
        p = self.coverage
        return math.sqrt(p * (1.0 - p) / self.n_converged)


def bias_study(grid: StudyGrid) -> List[BiasCell]:
    """Mean relative estimation error per grid cell, over converged replicates."""
    cells = [(s, m) for s in grid.s_values for m in grid.m_values]
    outcomes = _map_replicates(grid, cells)
    truth = grid.theta_true.as_array()
    out = []
    for s, m in cells:
        rows = [o for o in outcomes if o.s == s and o.m == m]
        est = [o.theta_hat for o in rows if o.converged]
        if est:
            rel = (np.vstack(est) - truth) / truth
            bias = rel.mean(axis=0)
        else:
            bias = np.full(4, math.nan)
        out.append(BiasCell(s=s, m=m, replicates=grid.replicates,
                            n_converged=len(est), rel_bias=bias))
    return out


def coverage_study(grid: StudyGrid) -> List[CoverageCell]:
    """Proportion of confidence regions covering the truth, per grid cell."""
    cells = [(s, m) for s in grid.s_values for m in grid.m_values]
    outcomes = _map_replicates(grid, cells)
    out = []
    for s, m in cells:
        rows = [o for o in outcomes if o.s == s and o.m == m and o.converged]
        n_cov = sum(bool(o.covered_ellipsoid) for o in rows)
        comp = (np.vstack([o.covered_components for o in rows]).sum(axis=0)
                if rows else np.zeros(4, dtype=np.int64))
        out.append(CoverageCell(s=s, m=m, replicates=grid.replicates,
                                n_converged=len(rows), n_covered=n_cov,
                                component_covered=comp.astype(np.int64)))
    return out


def write_bias_csv(cells: Sequence[BiasCell], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "m", "replicates", "n_converged",
                         "bias_a", "bias_b", "bias_c", "bias_d"])
        for c in cells:
            writer.writerow([c.s, c.m, c.replicates, c.n_converged,
                             *(repr(float(v)) for v in c.rel_bias)])


def write_coverage_csv(cells: Sequence[CoverageCell], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "m", "replicates", "n_converged", "n_covered",
                         "coverage", "coverage_se",
                         "covered_a", "covered_b", "covered_c", "covered_d"])
        for c in cells:
            writer.writerow([c.s, c.m, c.replicates, c.n_converged, c.n_covered,
                             repr(float(c.coverage)), repr(float(c.coverage_se)),
                             *(int(v) for v in c.component_covered)])


# ---------------------------------------------------------------------------
# Goodness of fit: averaged histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GofResult:
    """Observed vs model-averaged histogram, with an overflow bin at the end.

    Row 0 is the zero atom; the last bin is open-ended so simulated values
    beyond the observed range stay accounted for.
    """

    bin_edges: np.ndarray  # (B+1,) edges of the positive bins, last = +inf
    observed: np.ndarray  # (B+1,) zero count then per-bin counts
    expected_mean: np.ndarray
    expected_q05: np.ndarray
    expected_q95: np.ndarray
    replicates: int

    def zero_count_within_envelope(self) -> bool:
        return bool(self.expected_q05[0] <= self.observed[0] <= self.expected_q95[0])


def _hist_counts(dataset: Dataset, edges: np.ndarray) -> np.ndarray:
    values = np.concatenate([s.y for s in dataset.strata])
    zero = float((values == 0.0).sum())
    pos = values[values > 0.0]
    counts, _ = np.histogram(pos, bins=edges)
    return np.concatenate([[zero], counts])


def gof_histogram(dataset: Dataset, theta_hat: Theta, replicates: int,
                  bins: int = 30, rng: Optional[RngStream] = None) -> GofResult:
    """Average the histograms of datasets re-simulated at the estimate.

    The re-simulations reuse the observed design (stratum sizes and
    efforts); the zero-count envelope is the 5%/95% quantile band across
    replicates.
    """
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    if bins < 1:
        raise DomainError("bins must be >= 1")
    rng = rng or RngStream(0)
    y_all = np.concatenate([s.y for s in dataset.strata])
    top = float(y_all.max()) if (y_all > 0).any() else 1.0
    inner = np.linspace(0.0, top * 1.0000001, bins + 1)
    edges = np.concatenate([inner, [math.inf]])
    design = [list(s.efforts) for s in dataset.strata]
    sims = np.empty((replicates, bins + 2))
    for r in range(replicates):
        sim, _ = simulate_hierarchy(theta_hat, design, dataset.kind, rng.substream(r))
        sims[r] = _hist_counts(sim, edges)
    return GofResult(
        bin_edges=edges,
        observed=_hist_counts(dataset, edges),
        expected_mean=sims.mean(axis=0),
        expected_q05=np.percentile(sims, 5.0, axis=0),
        expected_q95=np.percentile(sims, 95.0, axis=0),
        replicates=replicates,
    )


def write_gof_csv(result: GofResult, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "observed",
                         "expected_mean", "expected_q05", "expected_q95"])
        lows = np.concatenate([[0.0], result.bin_edges[:-1]])
        highs = np.concatenate([[0.0], result.bin_edges[1:]])
        for i in range(result.observed.size):
            writer.writerow([repr(float(lows[i])), repr(float(highs[i])),
                             repr(float(result.observed[i])),
                             repr(float(result.expected_mean[i])),
                             repr(float(result.expected_q05[i])),
                             repr(float(result.expected_q95[i]))])


# ---------------------------------------------------------------------------
# Probability-plot data for the gamma random-effect check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PpplotStratum:
    stratum_id: str
    n_obs: int
    n_nonzero: int
    mu_hat: Optional[float]
    rho_hat: Optional[float]
    excluded: bool
    flagged_high_zeros: bool


@dataclass(frozen=True)
class PpplotPair:
    stratum_id: str
    estimate: float
    empirical_p: float
    fitted_p: float


@dataclass(frozen=True)
class PpplotResult:
    strata: Tuple[PpplotStratum, ...]
    pairs_mu: Tuple[PpplotPair, ...]
    pairs_rho: Tuple[PpplotPair, ...]
    n_excluded: int
    gamma_mu: Tuple[float, float]
    gamma_rho: Tuple[float, float]

    def max_deviation(self) -> float:
        """Largest |empirical - fitted| probability gap over both parameters."""
        return max(abs(p.empirical_p - p.fitted_p)
                   for p in self.pairs_mu + self.pairs_rho)


def _mom_gamma(values: np.ndarray) -> Tuple[float, float]:
    m = float(values.mean())
    v = float(values.var(ddof=1)) if values.size >= 2 else 0.0
    if v <= 0.0 or m <= 0.0:
        return 1.0, 1.0 / max(m, 1e-12)
    return m * m / v, m / v


def _pp_pairs(ids: Sequence[str], estimates: np.ndarray):
    shape, rate = _mom_gamma(estimates)
    order = np.argsort(estimates, kind="stable")
    k = estimates.size
    pairs = tuple(
        PpplotPair(
            stratum_id=ids[j],
            estimate=float(estimates[j]),
            empirical_p=float((rank + 0.5) / k),
            fitted_p=reg_lower_gamma(shape, rate * float(estimates[j])),
        )
        for rank, j in enumerate(order)
    )
    return pairs, (shape, rate)


def ppplot_data(dataset: Dataset) -> PpplotResult:
    """Per-stratum moment estimates and empirical-vs-fitted gamma pairs.

    Strata with fewer than two nonzero tows (or degenerate variance) are
    excluded from the pairs; strata with at least 75% zeros are flagged.
    Raises :class:`StudyError` with fewer than three usable strata.
    """
    if dataset.kind != CONTINUOUS:
        raise StudyError("probability-plot diagnostics apply to continuous data")
    rows: List[PpplotStratum] = []
    ids: List[str] = []
    mu_est, rho_est = [], []
    for stratum in dataset.strata:
        st = stratum_stats(stratum)
        z = stratum.y / stratum.efforts
        m = float(z.mean())
        v = float(z.var(ddof=1)) if z.size >= 2 else 0.0
        usable = st.n_nonzero >= 2 and v > 0.0 and m > 0.0
        mu_hat = rho_hat = None
        if usable:
            rho_hat = 2.0 * m / v
            mu_hat = m * rho_hat
            ids.append(stratum.id)
            mu_est.append(mu_hat)
            rho_est.append(rho_hat)
        rows.append(PpplotStratum(
            stratum_id=stratum.id,
            n_obs=st.n_obs,
            n_nonzero=st.n_nonzero,
            mu_hat=mu_hat,
            rho_hat=rho_hat,
            excluded=not usable,
            flagged_high_zeros=(st.n_obs - st.n_nonzero) >= 0.75 * st.n_obs,
        ))
    if len(mu_est) < 3:
        raise StudyError(f"only {len(mu_est)} usable strata; need at least 3")
    pairs_mu, gam_mu = _pp_pairs(ids, np.asarray(mu_est))
    pairs_rho, gam_rho = _pp_pairs(ids, np.asarray(rho_est))
    return PpplotResult(strata=tuple(rows), pairs_mu=pairs_mu, pairs_rho=pairs_rho,
                        n_excluded=sum(r.excluded for r in rows),
                        gamma_mu=gam_mu, gamma_rho=gam_rho)


def write_ppplot_csv(result: PpplotResult, path: str) -> None:
    stratum_rows = {r.stratum_id: r for r in result.strata}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "stratum", "n_obs", "n_nonzero", "excluded",
                         "flagged_high_zeros", "estimate", "empirical_p", "fitted_p"])
        for param, pairs in (("mu", result.pairs_mu), ("rho", result.pairs_rho)):
            for row in result.strata:
                if row.excluded:
                    writer.writerow([param, row.stratum_id, row.n_obs, row.n_nonzero,
                                     1, int(row.flagged_high_zeros), "", "", ""])
            for pair in pairs:
                row = stratum_rows[pair.stratum_id]
                writer.writerow([param, pair.stratum_id, row.n_obs, row.n_nonzero,
                                 0, int(row.flagged_high_zeros),
                                 repr(pair.estimate), repr(pair.empirical_p),
                                 repr(pair.fitted_p)])
