"""MCEM driver, information matrix, confidence regions and predictors.

The fit alternates an importance-sampling E-step (per stratum) with the
stationarity M-step, ramping the particle count along the iterations.
At the estimate the observed information is assembled as complete-data
information minus missing information:

    I_e = S * Fix(theta)  -  sum_s (A_s + B_s)

where Fix is the negative Hessian of one stratum's complete-data prior
term, A_s is the posterior expectation of the conditional score
covariance given the clump total, and B_s is the posterior covariance of
the conditional score expectation.  Both are functions of the clump
total N+ only, so the weighted N+ sample from the final E-step feeds the
whole matrix.  A finite-difference Hessian of the exact marginal
log-likelihood (computable for small strata) validates the assembly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _backend as K
from .errors import (DomainError, GuardError, IdentifiabilityError, MStepError,
                     NonConvergenceError)
from .estep import (NplusSummary, Particle, StratumStats, _allocation_logw,
                    _particle_summary, estep_stratum, exact_nplus_posterior,
                    moments_from_summary, stratum_stats)
from .model import CONTINUOUS, DISCRETE, KINDS, Dataset, Theta
from .mstep import MStepInput, q_value, solve_beta_pair, solve_gamma_pair
from .specfun import RngStream, chi2_quantile_4, digamma, log_gamma, normal_quantile, trigamma

_MAX_CONSECUTIVE_MSTEP_FAILURES = 10


@dataclass(frozen=True)
class McemConfig:
    """Controls of one MCEM fit.

    ``g_schedule`` gives per-iteration particle counts (the last entry is
    held for the remaining iterations and for the final inference pass);
    the stopping rule declares convergence when the max-abs parameter
    change stays below 10**-stop_decimals for three consecutive
    iterations.  ``l_ref`` sizes the reference sample locating the clump
    total in discrete strata.
    """

    g_schedule: Tuple[int, ...] = (1000, 1000, 2000, 4000, 8000, 16000, 32000,
                                   64000, 100000)
    max_iter: int = 40
    stop_decimals: int = 6
    l_ref: int = 1000
    seed: int = 0
    kind: Optional[str] = None

    def __post_init__(self) -> None:
        if len(self.g_schedule) == 0 or any(g < 1 for g in self.g_schedule):
            raise DomainError("g_schedule must be non-empty positive counts")
        if any(b < a for a, b in zip(self.g_schedule, self.g_schedule[1:])):
            raise DomainError("g_schedule must be non-decreasing")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if self.stop_decimals < 1:
            raise DomainError("stop_decimals must be >= 1")
        if self.kind is not None and self.kind not in KINDS:
            raise DomainError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def g_at(self, iteration: int) -> int:
        return self.g_schedule[min(iteration, len(self.g_schedule) - 1)]


@dataclass(frozen=True)
class StratumPredictor:
    stratum_id: str
    mu: float
    mark: float  # rho (continuous) or p (discrete)


@dataclass(frozen=True)
class FitDiagnostics:
    ess: np.ndarray
    trunc_mass: np.ndarray
    g_final: int
    mstep_reuse: int
    flags: Tuple[str, ...]


@dataclass(frozen=True)
class FitResult:
    theta_hat: Theta
    kind: str
    iterations: int
    converged: bool
    trajectory: np.ndarray
    score_at_hat: np.ndarray
    fisher: np.ndarray
    covariance: Optional[np.ndarray]
    predictors: Tuple[StratumPredictor, ...]
    diagnostics: FitDiagnostics

    def to_dict(self, level: float = 0.90) -> dict:
        """JSON-ready dictionary (stable schema, documented in the README)."""
        intervals = None
        if self.covariance is not None:
            region = confidence_region(self.theta_hat, self.covariance, level)
            intervals = {
                "level": level,
                **{name: [float(lo), float(hi)]
                   for name, (lo, hi) in zip("abcd", region.intervals)},
            }
        mark_key = "rho" if self.kind == CONTINUOUS else "p"
        return {
            "theta_hat": {k: float(v) for k, v in
                          zip("abcd", self.theta_hat.as_array())},
            "kind": self.kind,
            "iterations": self.iterations,
            "converged": self.converged,
            "trajectory": [[float(v) for v in row] for row in self.trajectory],
            "score_at_hat": [float(v) for v in self.score_at_hat],
            "fisher": [[float(v) for v in row] for row in self.fisher],
            "covariance": (None if self.covariance is None
                           else [[float(v) for v in row] for row in self.covariance]),
            "intervals": intervals,
            "predictors": [
                {"stratum": p.stratum_id, "mu": float(p.mu), mark_key: float(p.mark)}
                for p in self.predictors
            ],
            "diagnostics": {
                "ess": [float(v) for v in self.diagnostics.ess],
                "trunc_mass": [float(v) for v in self.diagnostics.trunc_mass],
                "g_final": self.diagnostics.g_final,
                "mstep_reuse": self.diagnostics.mstep_reuse,
                "flags": list(self.diagnostics.flags),
            },
        }


@dataclass(frozen=True)
class ConfidenceRegion:
    """Componentwise Wald intervals plus the joint ellipsoid."""

    level: float
    center: np.ndarray
    intervals: np.ndarray  # (4, 2)
    covariance: np.ndarray
    chi2_radius: float

    def contains(self, theta: Theta) -> bool:
        delta = theta.as_array() - self.center
        dist = float(delta @ np.linalg.solve(self.covariance, delta))
        return dist <= self.chi2_radius

    def interval_covers(self, theta: Theta) -> np.ndarray:
        arr = theta.as_array()
        return (self.intervals[:, 0] <= arr) & (arr <= self.intervals[:, 1])


def confidence_region(theta_hat: Theta, covariance: np.ndarray,
                      level: float) -> ConfidenceRegion:
    """Asymptotic-normal region: Wald intervals and chi-square(4) ellipsoid."""
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must be in (0,1), got {level}")
    cov = np.asarray(covariance, dtype=np.float64)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise DomainError("covariance must be positive definite") from exc
    z = normal_quantile(0.5 * (1.0 + level))
    center = theta_hat.as_array()
    half = z * np.sqrt(np.diag(cov))
    intervals = np.stack([center - half, center + half], axis=1)
    return ConfidenceRegion(level=level, center=center, intervals=intervals,
                            covariance=cov, chi2_radius=chi2_quantile_4(level))


# ---------------------------------------------------------------------------
# Score, information matrix, predictors (summary-based cores)
# ---------------------------------------------------------------------------


def _dataset_stats(dataset: Dataset) -> List[StratumStats]:
    return [stratum_stats(s) for s in dataset.strata]


def _resolve_kind(dataset: Dataset, kind: Optional[str]) -> str:
    if kind is None:
        return dataset.kind
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind != dataset.kind:
        raise DomainError(f"kind {kind!r} does not match dataset kind {dataset.kind!r}")
    return kind


def _score_from_summaries(stats_list: Sequence[StratumStats],
                          summaries: Sequence[NplusSummary],
                          theta: Theta, kind: str) -> np.ndarray:
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    n = len(stats_list)
    sums = np.zeros(4)
    for st, sm in zip(stats_list, summaries):
        m = moments_from_summary(sm, st, theta, kind)
        if kind == CONTINUOUS:
            sums += (m.e_ln_mu, -m.e_mu, m.e_ln_rho, -m.e_rho)
        else:
            sums += (m.e_ln_mu, -m.e_mu, m.e_ln_p, m.e_ln_1mp)
    if kind == CONTINUOUS:
        fixed = np.array([math.log(b) - digamma(a), a / b,
                          math.log(d) - digamma(c), c / d])
    else:
        psi_cd = digamma(c + d)
        fixed = np.array([math.log(b) - digamma(a), a / b,
                          psi_cd - digamma(c), psi_cd - digamma(d)])
    return n * fixed + sums


def _fixed_information_block(theta: Theta, kind: str) -> np.ndarray:
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    fix = np.zeros((4, 4))
    fix[0, 0] = trigamma(a)
    fix[0, 1] = fix[1, 0] = -1.0 / b
    fix[1, 1] = a / (b * b)
    if kind == CONTINUOUS:
        fix[2, 2] = trigamma(c)
        fix[2, 3] = fix[3, 2] = -1.0 / d
        fix[3, 3] = c / (d * d)
    else:
        t_cd = trigamma(c + d)
        fix[2, 2] = trigamma(c) - t_cd
        fix[2, 3] = fix[3, 2] = -t_cd
        fix[3, 3] = trigamma(d) - t_cd
    return fix


def _stratum_information_terms(st: StratumStats, sm: NplusSummary, theta: Theta,
                               kind: str) -> np.ndarray:
    """A_s + B_s: missing information carried by one stratum's clump total."""
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    v = sm.values.astype(np.float64)
    p = sm.probs
    b_star = b + st.d_plus
    a_star = a + v
    psi1_a = K.trigamma_vec(a_star)
    psi_a = K.digamma_vec(a_star)
    a_mat = np.zeros((4, 4))
    a_mat[0, 0] = p @ psi1_a
    a_mat[0, 1] = a_mat[1, 0] = -1.0 / b_star
    a_mat[1, 1] = (p @ a_star) / (b_star * b_star)
    h = np.empty((v.size, 4))
    h[:, 0] = psi_a - math.log(b_star)
    h[:, 1] = -a_star / b_star
    if kind == CONTINUOUS:
        d_star = d + st.y_plus
        c_star = c + v
        a_mat[2, 2] = p @ K.trigamma_vec(c_star)
        a_mat[2, 3] = a_mat[3, 2] = -1.0 / d_star
        a_mat[3, 3] = (p @ c_star) / (d_star * d_star)
        h[:, 2] = K.digamma_vec(c_star) - math.log(d_star)
        h[:, 3] = -c_star / d_star
    else:
        c_star = c + v
        d_star = d + st.y_plus - v
        psi1_total = trigamma(c + d + st.y_plus)
        psi_total = digamma(c + d + st.y_plus)
        a_mat[2, 2] = p @ K.trigamma_vec(c_star) - psi1_total
        a_mat[2, 3] = a_mat[3, 2] = -psi1_total
        a_mat[3, 3] = p @ K.trigamma_vec(d_star) - psi1_total
        h[:, 2] = K.digamma_vec(c_star) - psi_total
        h[:, 3] = K.digamma_vec(d_star) - psi_total
    centered = h - p @ h
    b_mat = centered.T @ (p[:, None] * centered)
    return a_mat + b_mat


def _fisher_from_summaries(stats_list: Sequence[StratumStats],
                           summaries: Sequence[NplusSummary],
                           theta: Theta, kind: str) -> np.ndarray:
    fisher = len(stats_list) * _fixed_information_block(theta, kind)
    for st, sm in zip(stats_list, summaries):
        fisher -= _stratum_information_terms(st, sm, theta, kind)
    asym = float(np.abs(fisher - fisher.T).max())
    if asym > 1e-10 * max(1.0, float(np.abs(fisher).max())):
        raise RuntimeError(f"information matrix assembly asymmetric by {asym}")
    return 0.5 * (fisher + fisher.T)


def _predictors_from_summaries(dataset: Dataset,
                               stats_list: Sequence[StratumStats],
                               summaries: Sequence[NplusSummary],
                               theta: Theta, kind: str) -> Tuple[StratumPredictor, ...]:
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    out = []
    for stratum, st, sm in zip(dataset.strata, stats_list, summaries):
        e_n = sm.e_nplus
        mu_pred = (a + e_n) / (b + st.d_plus)
        if kind == CONTINUOUS:
            mark = (c + e_n) / (d + st.y_plus)
        else:
            mark = (c + e_n) / (c + d + st.y_plus)
        out.append(StratumPredictor(stratum_id=stratum.id, mu=mu_pred, mark=mark))
    return tuple(out)


def _summaries_from_particles(particles: Sequence[Sequence[Particle]]) -> List[NplusSummary]:
    out = []
    for plist in particles:
        values, probs, ess = _particle_summary(plist)
        out.append(NplusSummary(values=values, probs=probs, ess=ess,
                                trunc_mass=0.0, exact=bool(values.size == 1)))
    return out


def score_monitor(dataset: Dataset, theta: Theta,
                  particles: Sequence[Sequence[Particle]],
                  kind: Optional[str] = None) -> np.ndarray:
    """Conditional expectation of the complete-data score at ``theta``.

    Vanishes (to solver tolerance) exactly at M-step stationarity with the
    same particle set, and drifts to zero along a converging fit.
    """
    kind = _resolve_kind(dataset, kind)
    stats_list = _dataset_stats(dataset)
    summaries = _summaries_from_particles(particles)
    return _score_from_summaries(stats_list, summaries, theta, kind)


def fisher_information(dataset: Dataset, theta_hat: Theta,
                       particles: Sequence[Sequence[Particle]],
                       kind: Optional[str] = None) -> np.ndarray:
    """Observed information at the estimate, from the final particle sets."""
    kind = _resolve_kind(dataset, kind)
    stats_list = _dataset_stats(dataset)
    summaries = _summaries_from_particles(particles)
    return _fisher_from_summaries(stats_list, summaries, theta_hat, kind)


def fisher_information_exact(dataset: Dataset, theta_hat: Theta,
                             kind: Optional[str] = None) -> np.ndarray:
    """Observed information with the clump-total posterior computed exactly.

    Restricted to small strata (exact posterior by allocation convolution);
    used to validate the particle-based assembly and by the
    finite-difference cross-checks.
    """
    kind = _resolve_kind(dataset, kind)
    stats_list = _dataset_stats(dataset)
    summaries = []
    for st in stats_list:
        values, probs = exact_nplus_posterior(st, theta_hat, kind)
        summaries.append(NplusSummary(values=values, probs=probs, ess=math.inf,
                                      trunc_mass=0.0, exact=True))
    return _fisher_from_summaries(stats_list, summaries, theta_hat, kind)


def predict_random_effects(dataset: Dataset, theta_hat: Theta,
                           particles: Sequence[Sequence[Particle]],
                           kind: Optional[str] = None) -> Tuple[StratumPredictor, ...]:
    """Posterior-mean predictors of the per-stratum random effects."""
    kind = _resolve_kind(dataset, kind)
    stats_list = _dataset_stats(dataset)
    summaries = _summaries_from_particles(particles)
    return _predictors_from_summaries(dataset, stats_list, summaries, theta_hat, kind)


# ---------------------------------------------------------------------------
# Exact marginal log-likelihood (small strata)
# ---------------------------------------------------------------------------


def _stratum_marginal(st: StratumStats, theta: Theta, kind: str, max_cap: int) -> float:
    a, b, c, d = theta.a, theta.b, theta.c, theta.d
    ip = st.n_nonzero
    if ip == 0:
        # no clumps caught: the mark layer integrates to one
        return a * math.log(b / (b + st.d_plus))
    if kind == DISCRETE:
        yp = int(round(st.y_plus))
        cap = yp
        logw = _allocation_logw(st, kind, cap)
        support = np.arange(ip, cap + 1, dtype=np.int64)
        summand = (
            logw[support]
            + K.lgamma_vec(a + support) - (a + support) * math.log(b + st.d_plus)
            + K.lgamma_vec(c + support) + K.lgamma_vec(d + yp - support)
            - log_gamma(c + d + yp)
        )
        const = (a * math.log(b) - log_gamma(a)
                 + log_gamma(c + d) - log_gamma(c) - log_gamma(d))
        m = float(summand.max())
        return m + math.log(np.exp(summand - m).sum()) + const

    cap = ip + 2 * math.ceil(st.y_plus * max(c / d, 1.0)) + 64
    cap = min(cap, max_cap)
    log_b = math.log(b + st.d_plus)
    log_d = math.log(d + st.y_plus)
    while True:
        logw = _allocation_logw(st, kind, cap)
        support = np.arange(ip, cap + 1, dtype=np.int64)
        summand = (
            logw[support]
            + K.lgamma_vec(a + support) - (a + support) * log_b
            + K.lgamma_vec(c + support) - (c + support) * log_d
        )
        m = float(summand.max())
        imax = int(np.argmax(summand))
        with np.errstate(invalid="ignore"):
            total = float(np.nansum(np.exp(summand - m)))
        finite = np.isfinite(summand)
        j = int(np.max(np.nonzero(finite)[0]))
        converged = False
        if imax < support.size - 1:
            if j < support.size - 1:
                converged = True  # entries past j underflowed: tail < 1e-300 of max
            elif j > imax:
                r = math.exp(float(summand[j] - summand[j - 1]))
                if r < 0.999999:
                    tail = math.exp(float(summand[j]) - m) * r / (1.0 - r) / total
                    converged = tail < 1e-12
        if converged:
            const = (a * math.log(b) + c * math.log(d) - log_gamma(a) - log_gamma(c))
            return m + math.log(total) + const
        if cap >= max_cap:
            raise GuardError(f"marginal likelihood needs clump support beyond {max_cap}")
        cap = min(2 * cap, max_cap)


def marginal_loglik(dataset: Dataset, theta: Theta, kind: Optional[str] = None,
                    max_cap: int = 20000) -> float:
    """Exact log-likelihood of the data with all latent layers integrated out.

    The random effects integrate analytically (conjugacy); the clump
    allocations are summed by convolution; the clump total is summed over
    an adaptively truncated support (dropped tail below 1e-12 of the
    mass).  Intended for small strata: EM-ascent checks, local-maximum
    checks and finite-difference Hessians.
    """
    kind = _resolve_kind(dataset, kind)
    return sum(_stratum_marginal(st, theta, kind, max_cap)
               for st in _dataset_stats(dataset))


# ---------------------------------------------------------------------------
# Initialization and the EM loop
# ---------------------------------------------------------------------------


def _gamma_mom(values: np.ndarray) -> Tuple[float, float]:
    m = float(values.mean())
    if values.size >= 2:
        v = float(values.var(ddof=1))
        if v > 0.0 and m > 0.0:
            return m * m / v, m / v
    return 1.0, 1.0 / max(m, 1e-6)


def _beta_mom(values: np.ndarray) -> Tuple[float, float]:
    m = float(values.mean())
    m = min(max(m, 0.02), 0.98)
    if values.size >= 2:
        v = float(values.var(ddof=1))
        if 0.0 < v < m * (1.0 - m):
            t = m * (1.0 - m) / v - 1.0
            return m * t, (1.0 - m) * t
    return 2.0 * m, 2.0 * (1.0 - m)


def _clamp(x: float, lo: float = 0.05, hi: float = 200.0) -> float:
    return min(max(x, lo), hi)


def initial_theta(dataset: Dataset) -> Theta:
    """Method-of-moments starting point from per-stratum effort-standardized data."""
    mus, marks = [], []
    for stratum in dataset.strata:
        z = stratum.y / stratum.efforts
        if z.size < 2:
            continue
        m = float(z.mean())
        v = float(z.var(ddof=1))
        if m <= 0.0 or v <= 0.0:
            continue
        if dataset.kind == CONTINUOUS:
            rho = 2.0 * m / v
            mus.append(m * rho)
            marks.append(rho)
        else:
            p = min(max(2.0 * m / (m + v), 0.02), 0.98)
            mus.append(m * p)
            marks.append(p)
    if not mus:
        return Theta(1.0, 1.0, 1.0, 1.0)
    a0, b0 = _gamma_mom(np.asarray(mus))
    if dataset.kind == CONTINUOUS:
        c0, d0 = _gamma_mom(np.asarray(marks))
    else:
        c0, d0 = _beta_mom(np.asarray(marks))
    return Theta(_clamp(a0), _clamp(b0), _clamp(c0), _clamp(d0))


def _mstep_inputs(moments, kind: str) -> MStepInput:
    n = len(moments)
    mean = lambda attr: sum(getattr(m, attr) for m in moments) / n
    if kind == CONTINUOUS:
        return MStepInput(mean_e_mu=mean("e_mu"), mean_e_ln_mu=mean("e_ln_mu"),
                          mean_e_rho=mean("e_rho"), mean_e_ln_rho=mean("e_ln_rho"))
    return MStepInput(mean_e_mu=mean("e_mu"), mean_e_ln_mu=mean("e_ln_mu"),
                      mean_e_ln_p=mean("e_ln_p"), mean_e_ln_1mp=mean("e_ln_1mp"))


def mcem_fit(dataset: Dataset, config: McemConfig) -> FitResult:
    """Fit the hyperparameters by Monte-Carlo EM.

    Raises :class:`IdentifiabilityError` on all-zero datasets (the mark
    layer carries no information) and :class:`NonConvergenceError` when
    the M-step stays infeasible across many consecutive iterations.
    A fit that merely exhausts ``max_iter`` without meeting the stopping
    rule returns normally with ``converged=False``.
    """
    kind = _resolve_kind(dataset, config.kind)
    stats_list = _dataset_stats(dataset)
    if all(st.n_nonzero == 0 for st in stats_list):
        raise IdentifiabilityError(
            "all observations are zero: the mark parameters (c, d) are unidentifiable")
    root = RngStream(config.seed)
    theta = initial_theta(dataset)
    trajectory = [theta.as_array()]
    tol = 10.0 ** (-config.stop_decimals)
    window: deque = deque(maxlen=3)
    flags: List[str] = []
    reuse_total = 0
    consecutive_fail = 0
    converged = False
    iterations = 0

    for it in range(config.max_iter):
        g_it = config.g_at(it)
        summaries = [
            estep_stratum(st, theta, kind, g_it,
                          root.substream(it, s).generator(), config.l_ref)
            for s, st in enumerate(stats_list)
        ]
        moments = [moments_from_summary(sm, st, theta, kind)
                   for st, sm in zip(stats_list, summaries)]
        inputs = _mstep_inputs(moments, kind)
        failed = False
        try:
            a_new, b_new = solve_gamma_pair(inputs.mean_e_mu, inputs.mean_e_ln_mu)
        except MStepError:
            a_new, b_new = theta.a, theta.b
            failed = True
        try:
            if kind == CONTINUOUS:
                c_new, d_new = solve_gamma_pair(inputs.mean_e_rho, inputs.mean_e_ln_rho)
            else:
                c_new, d_new = solve_beta_pair(inputs.mean_e_ln_p, inputs.mean_e_ln_1mp)
        except MStepError:
            c_new, d_new = theta.c, theta.d
            failed = True
        if failed:
            reuse_total += 1
            consecutive_fail += 1
            flags.append(f"mstep_reuse:iter{it}")
            if consecutive_fail >= _MAX_CONSECUTIVE_MSTEP_FAILURES:
                raise NonConvergenceError(
                    f"M-step infeasible for {consecutive_fail} consecutive iterations")
        else:
            consecutive_fail = 0
        new_theta = Theta(a_new, b_new, c_new, d_new)
        delta = float(np.abs(new_theta.as_array() - theta.as_array()).max())
        window.append(delta < tol)
        theta = new_theta
        trajectory.append(theta.as_array())
        iterations = it + 1
        if len(window) == 3 and all(window):
            converged = True
            break

    # Final inference pass at the estimate, with the largest particle count.
    g_final = config.g_schedule[-1]
    summaries = [
        estep_stratum(st, theta, kind, g_final,
                      root.substream(iterations, s).generator(), config.l_ref)
        for s, st in enumerate(stats_list)
    ]
    score = _score_from_summaries(stats_list, summaries, theta, kind)
    fisher = _fisher_from_summaries(stats_list, summaries, theta, kind)
    covariance: Optional[np.ndarray] = None
    try:
        chol = np.linalg.cholesky(fisher)
        inv_chol = np.linalg.inv(chol)
        covariance = inv_chol.T @ inv_chol
    except np.linalg.LinAlgError:
        flags.append("fisher_not_pd")
    if dataset.n_strata == 1:
        flags.append("single_stratum_covariance_unreliable")
    ess = np.array([sm.ess for sm in summaries])
    trunc = np.array([sm.trunc_mass for sm in summaries])
    for s, sm in enumerate(summaries):
        if not sm.exact and sm.ess < g_final / 1000.0:
            flags.append(f"ess_degenerate:stratum{s}")
    predictors = _predictors_from_summaries(dataset, stats_list, summaries, theta, kind)
    return FitResult(
        theta_hat=theta,
        kind=kind,
        iterations=iterations,
        converged=converged,
        trajectory=np.vstack(trajectory),
        score_at_hat=score,
        fisher=fisher,
        covariance=covariance,
        predictors=predictors,
        diagnostics=FitDiagnostics(ess=ess, trunc_mass=trunc, g_final=g_final,
                                   mstep_reuse=reuse_total, flags=tuple(flags)),
    )
