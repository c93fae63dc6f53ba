"""Conditional expectations of the latent clump counts, via importance sampling.

Within one stratum the latent state reduces to the clump-count vector N
(one entry per tow, 0 exactly where y = 0).  Conditional on N the random
effects are conjugate:

    mu | N  ~ Gamma(a' + N+, b' + D+)
    rho | N ~ Gamma(c' + N+, d' + Y+)          (continuous)
    p | N   ~ Beta(c' + N+, d' + Y+ - N+)      (discrete)

so every E-step quantity is a function of the posterior of the total
N+ = sum N_i.  That posterior is approximated by self-normalized
importance sampling:

* continuous: N+ is drawn from a one-dimensional proposal pmf, the clump
  counts are split across nonzero tows by a multinomial on the
  effort-weighted biomass shares, and the weight corrects the split to
  the exact conditional;
* discrete: a gamma/beta pair drawn around a reference clump total
  proposes each tow's count on its finite range {1, ..., y_i}, and the
  weight is the exact target/proposal density ratio.

Exact enumeration over the (truncated) lattice of N vectors and an exact
convolution over allocations are provided as test oracles and for the
small-stratum Fisher/likelihood computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import _backend as K
from .errors import DomainError, EstepError, GuardError
from .model import CONTINUOUS, DISCRETE, KINDS, Stratum, Theta
from .specfun import GeneratorLike, as_generator, digamma

_LOG_TRUNC = 15.0 * math.log(10.0)  # adaptive support cutoff: 1e-15 of the max


# ---------------------------------------------------------------------------
# Per-stratum sufficient statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StratumStats:
    """Sums and nonzero records of one stratum, in canonical order.

    Canonical order sorts the nonzero (y, effort) pairs, so permuting the
    observations of a stratum yields an identical value.  Particles refer
    to observations in this order: nonzero records first, zeros after.
    """

    y_plus: float
    d_plus: float
    n_obs: int
    n_nonzero: int
    nonzero_y: np.ndarray
    nonzero_d: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "nonzero_y", np.asarray(self.nonzero_y, dtype=np.float64))
        object.__setattr__(self, "nonzero_d", np.asarray(self.nonzero_d, dtype=np.float64))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StratumStats):
            return NotImplemented
        return (
            self.y_plus == other.y_plus
            and self.d_plus == other.d_plus
            and self.n_obs == other.n_obs
            and self.n_nonzero == other.n_nonzero
            and np.array_equal(self.nonzero_y, other.nonzero_y)
            and np.array_equal(self.nonzero_d, other.nonzero_d)
        )


def stratum_stats(stratum: Stratum) -> StratumStats:
    """Exact sums of one stratum; stable under observation permutation."""
    y = stratum.y
    d = stratum.efforts
    return stratum_stats_from_arrays(y, d)


def stratum_stats_from_arrays(y: np.ndarray, efforts: np.ndarray) -> StratumStats:
    y = np.asarray(y, dtype=np.float64)
    efforts = np.asarray(efforts, dtype=np.float64)
    if y.size == 0:
        raise DomainError("stratum_stats requires at least one observation")
    nz = y > 0.0
    ynz, dnz = y[nz], efforts[nz]
    order = np.lexsort((dnz, ynz))
    return StratumStats(
        y_plus=float(y.sum()),
        d_plus=float(efforts.sum()),
        n_obs=int(y.size),
        n_nonzero=int(nz.sum()),
        nonzero_y=ynz[order],
        nonzero_d=dnz[order],
    )


# ---------------------------------------------------------------------------
# Particles and moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Particle:
    """One sampled clump-count vector with its (relative) importance weight.

    ``counts`` follows the stats' canonical observation order; zeros sit at
    the tail.  Weights are comparable within one particle set only (self-
    normalized estimators never need the missing constant).
    """

    counts: np.ndarray
    n_plus: int
    weight: float


@dataclass(frozen=True)
class StratumMoments:
    """Conditional expectations consumed by the M-step, plus diagnostics."""

    e_mu: float
    e_ln_mu: float
    e_rho: Optional[float]
    e_ln_rho: Optional[float]
    e_ln_p: Optional[float]
    e_ln_1mp: Optional[float]
    e_nplus: float
    ess: float


@dataclass(frozen=True)
class NplusSummary:
    """Weighted posterior summary of the clump total N+ for one stratum.

    ``values`` are the distinct N+ values, ``probs`` their normalized
    weights.  ``exact`` marks summaries with no Monte-Carlo error (all-zero
    strata, forced allocations, enumeration output).
    """

    values: np.ndarray
    probs: np.ndarray
    ess: float
    trunc_mass: float
    exact: bool

    @property
    def e_nplus(self) -> float:
        return float(self.probs @ self.values)

    def expect(self, table: np.ndarray) -> float:
        """Posterior expectation of a function given by its values on ``values``."""
        return float(self.probs @ np.asarray(table, dtype=np.float64))


_LFACT_CACHE = np.zeros(1, dtype=np.float64)


def log_factorial_table(nmax: int) -> np.ndarray:
    """Table with entry k = ln k!, grown (and cached) on demand."""
    global _LFACT_CACHE
    if _LFACT_CACHE.size <= nmax:
        new = np.empty(nmax + 1, dtype=np.float64)
        new[: _LFACT_CACHE.size] = _LFACT_CACHE
        for k in range(_LFACT_CACHE.size, nmax + 1):
            new[k] = math.lgamma(k + 1.0)
        _LFACT_CACHE = new
    return _LFACT_CACHE


def _theta_tuple(theta: Theta) -> Tuple[float, float, float, float]:
    return theta.a, theta.b, theta.c, theta.d


def _zero_counts(stats: StratumStats) -> np.ndarray:
    return np.zeros(stats.n_obs, dtype=np.int64)


def _summarize(nplus: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    total = weights.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise EstepError("total importance weight is zero or non-finite")
    ess = float(total * total / (weights @ weights))
    values, inverse = np.unique(nplus, return_inverse=True)
    probs = np.bincount(inverse, weights=weights, minlength=values.size) / total
    return values.astype(np.int64), probs, ess


# ---------------------------------------------------------------------------
# Continuous case
# ---------------------------------------------------------------------------


def _continuous_proposal(stats: StratumStats, theta: Theta):
    """Build the one-dimensional proposal pmf of N+ over its truncated support.

    Returns (support, probs, rowterm, shares, trunc_mass).  ``rowterm[j]``
    is sum_i lgamma(shares_i * support_j + 1), reused by the weights.
    The support starts at the nonzero-record count and stops adaptively
    where the pmf falls below 1e-15 of its maximum (hard cap beyond).
    """
    a, b, c, d = _theta_tuple(theta)
    ip = stats.n_nonzero
    z = stats.nonzero_y * stats.nonzero_d
    zsum = float(z.sum())
    shares = z / zsum
    log_geom = math.log(b + stats.d_plus) + math.log(d + stats.y_plus) - math.log(zsum)
    hard_cap = ip + 10 * math.ceil(stats.y_plus * max(c / d, 1.0))

    lfact = log_factorial_table(hard_cap)
    sup_blocks: List[np.ndarray] = []
    logf_blocks: List[np.ndarray] = []
    row_blocks: List[np.ndarray] = []
    best = -math.inf
    best_n = ip
    n0 = ip
    cut: Optional[int] = None
    while n0 <= hard_cap and cut is None:
        nb = np.arange(n0, min(n0 + 64, hard_cap + 1), dtype=np.int64)
        rt = K.continuous_rowterms(nb, shares)
        lf = (
            -nb * log_geom
            + K.lgamma_vec(a + nb)
            + K.lgamma_vec(c + nb)
            - rt
            - lfact[nb - ip]
        )
        if not np.all(np.isfinite(lf)):
            raise EstepError("proposal pmf is non-finite (pathological parameters)")
        sup_blocks.append(nb)
        logf_blocks.append(lf)
        row_blocks.append(rt)
        bi = int(np.argmax(lf))
        if lf[bi] > best:
            best = float(lf[bi])
            best_n = int(nb[bi])
        low = np.nonzero((lf < best - _LOG_TRUNC) & (nb > best_n))[0]
        if low.size:
            cut = int(nb[low[0]])
        n0 = int(nb[-1]) + 1

    support = np.concatenate(sup_blocks)
    logf = np.concatenate(logf_blocks)
    rowterm = np.concatenate(row_blocks)
    if cut is not None:
        keep = support <= cut
        support, logf, rowterm = support[keep], logf[keep], rowterm[keep]
    pmf = np.exp(logf - logf.max())
    total = float(pmf.sum())
    if support.size >= 2:
        r = min(pmf[-1] / max(pmf[-2], 1e-300), 0.999999)
        trunc_mass = float(pmf[-1] * r / (1.0 - r) / total)
    else:
        trunc_mass = 0.0
    return support, pmf / total, rowterm, shares, trunc_mass


def _continuous_sample_arrays(stats: StratumStats, theta: Theta, n_particles: int,
                              gen: np.random.Generator):
    """Draw the weighted N+ sample of one continuous stratum (array form)."""
    support, probs, rowterm, shares, trunc_mass = _continuous_proposal(stats, theta)
    idx = gen.choice(support.size, size=n_particles, p=probs)
    nplus = support[idx]
    alloc = gen.multinomial(nplus - stats.n_nonzero, shares)
    counts = alloc + 1
    lfact = log_factorial_table(int(support[-1]))
    logw = K.continuous_logweights(idx, counts, rowterm, lfact)
    return nplus, counts, logw, trunc_mass


def sample_particles_continuous(stats: StratumStats, theta_prime: Theta, G: int,
                                rng: GeneratorLike) -> List[Particle]:
    """Particle sample of the clump-count posterior of a continuous stratum.

    All-zero strata have a degenerate posterior: the single particle N = 0
    with weight 1 is returned.
    """
    if G < 1:
        raise DomainError(f"G must be >= 1, got {G}")
    if stats.n_nonzero == 0:
        return [Particle(counts=_zero_counts(stats), n_plus=0, weight=1.0)]
    gen = as_generator(rng)
    nplus, counts, logw, _ = _continuous_sample_arrays(stats, theta_prime, G, gen)
    w = np.exp(logw - logw.max())
    n_zero = stats.n_obs - stats.n_nonzero
    zeros = np.zeros(n_zero, dtype=np.int64)
    return [
        Particle(counts=np.concatenate([counts[g], zeros]), n_plus=int(nplus[g]),
                 weight=float(w[g]))
        for g in range(G)
    ]


def _moments_from_summary(values: np.ndarray, probs: np.ndarray, ess: float,
                          stats: StratumStats, theta: Theta, kind: str) -> StratumMoments:
    a, b, c, d = _theta_tuple(theta)
    vals = values.astype(np.float64)
    e_n = float(probs @ vals)
    e_mu = (a + e_n) / (b + stats.d_plus)
    e_ln_mu = float(probs @ K.digamma_vec(a + vals)) - math.log(b + stats.d_plus)
    if kind == CONTINUOUS:
        e_rho = (c + e_n) / (d + stats.y_plus)
        e_ln_rho = float(probs @ K.digamma_vec(c + vals)) - math.log(d + stats.y_plus)
        return StratumMoments(e_mu, e_ln_mu, e_rho, e_ln_rho, None, None, e_n, ess)
    psi_total = digamma(c + d + stats.y_plus)
    e_ln_p = float(probs @ K.digamma_vec(c + vals)) - psi_total
    e_ln_1mp = float(probs @ K.digamma_vec(d + stats.y_plus - vals)) - psi_total
    return StratumMoments(e_mu, e_ln_mu, None, None, e_ln_p, e_ln_1mp, e_n, ess)


def _particle_summary(particles: Sequence[Particle]):
    nplus = np.array([p.n_plus for p in particles], dtype=np.int64)
    weights = np.array([p.weight for p in particles], dtype=np.float64)
    return _summarize(nplus, weights)


def moments_continuous(particles: Sequence[Particle], stats: StratumStats,
                       theta_prime: Theta) -> StratumMoments:
    """Self-normalized conditional moments of (mu, rho) from a particle set."""
    values, probs, ess = _particle_summary(particles)
    return _moments_from_summary(values, probs, ess, stats, theta_prime, CONTINUOUS)


def moments_discrete(particles: Sequence[Particle], stats: StratumStats,
                     theta_prime: Theta) -> StratumMoments:
    """Self-normalized conditional moments of (mu, p) from a particle set."""
    values, probs, ess = _particle_summary(particles)
    return _moments_from_summary(values, probs, ess, stats, theta_prime, DISCRETE)


# ---------------------------------------------------------------------------
# Discrete case
# ---------------------------------------------------------------------------


def _discrete_ints(stats: StratumStats) -> Tuple[np.ndarray, int]:
    y_int = np.rint(stats.nonzero_y).astype(np.int64)
    if not np.allclose(y_int, stats.nonzero_y):
        raise DomainError("discrete stratum has non-integer y values")
    return y_int, int(round(stats.y_plus))


def _discrete_nplus_tail(stats: StratumStats, theta: Theta, support: np.ndarray) -> np.ndarray:
    a, b, c, d = _theta_tuple(theta)
    yp = float(stats.y_plus)
    return (
        K.lgamma_vec(a + support)
        + K.lgamma_vec(c + support)
        + K.lgamma_vec(d + yp - support)
        - support * math.log(b + stats.d_plus)
    )


def reference_nplus_discrete(stats: StratumStats, theta_prime: Theta, L: int,
                             rng: GeneratorLike) -> float:
    """Locate the clump total: mean of L draws from its record-blind posterior.

    The pmf treats the stratum as a single pooled record of size Y+ over
    effort D+, giving a cheap location estimate on {I+, ..., Y+}.
    """
    if L < 1:
        raise DomainError(f"L must be >= 1, got {L}")
    if stats.n_nonzero == 0:
        raise EstepError("reference_nplus_discrete requires a nonzero observation")
    _, yp = _discrete_ints(stats)
    ip = stats.n_nonzero
    support = np.arange(ip, yp + 1, dtype=np.int64)
    if support.size == 0:
        raise EstepError("empty support for the clump total")
    lfact = log_factorial_table(yp)
    logg = (
        _discrete_nplus_tail(stats, theta_prime, support)
        + support * math.log(stats.d_plus)
        - lfact[support - 1]
        - lfact[support]
        - lfact[yp - support]
    )
    pmf = np.exp(logg - logg.max())
    pmf /= pmf.sum()
    gen = as_generator(rng)
    draws = gen.choice(support, size=L, p=pmf)
    return float(draws.mean())


def _clamp_reference(n_ref: float, ip: int, yp: int) -> float:
    if not math.isfinite(n_ref) or n_ref <= 0.0 or n_ref > yp:
        raise EstepError(f"reference clump total {n_ref} outside (0, {yp}]")
    lo, hi = ip + 0.01, yp - 0.01
    if hi < lo:
        return 0.5 * (ip + yp)
    return min(max(n_ref, lo), hi)


def _discrete_sample_arrays(stats: StratumStats, theta: Theta, n_ref: float,
                            n_particles: int, gen: np.random.Generator):
    """Draw the weighted N+ sample of one discrete stratum (array form)."""
    a, b, c, d = _theta_tuple(theta)
    y_int, yp = _discrete_ints(stats)
    ip = stats.n_nonzero
    n_ref = _clamp_reference(n_ref, ip, yp)
    mu = gen.gamma(a + n_ref, 1.0 / (b + stats.d_plus), size=n_particles)
    p = np.clip(gen.beta(c + n_ref, d + yp - n_ref, size=n_particles), 1e-12, 1.0 - 1e-12)
    log_rate = np.log(mu) + np.log(p) - np.log1p(-p)
    lfact = log_factorial_table(yp)
    counts = np.empty((n_particles, ip), dtype=np.int64)
    logq = np.zeros(n_particles)
    logt = np.zeros(n_particles)
    for i in range(ip):
        u = gen.random(n_particles)
        ci, lq, lt = K.discrete_sample_record(int(y_int[i]), log_rate, u, lfact,
                                              math.log(stats.nonzero_d[i]))
        counts[:, i] = ci
        logq += lq
        logt += lt
    nplus = counts.sum(axis=1)
    support = np.arange(ip, yp + 1, dtype=np.int64)
    tail = _discrete_nplus_tail(stats, theta, support)
    logw = logt + tail[nplus - ip] - logq
    return nplus, counts, logw, 0.0


def sample_particles_discrete(stats: StratumStats, theta_prime: Theta, n_ref: float,
                              G: int, rng: GeneratorLike) -> List[Particle]:
    """Particle sample of the clump-count posterior of a discrete stratum.

    Each particle draws its own (mu, p) pair around the reference total and
    proposes every record's count on {1, ..., y_i}; weights are the exact
    target/proposal density ratio of the realized count vector.
    """
    if G < 1:
        raise DomainError(f"G must be >= 1, got {G}")
    if stats.n_nonzero == 0:
        return [Particle(counts=_zero_counts(stats), n_plus=0, weight=1.0)]
    gen = as_generator(rng)
    nplus, counts, logw, _ = _discrete_sample_arrays(stats, theta_prime, n_ref, G, gen)
    w = np.exp(logw - logw.max())
    zeros = np.zeros(stats.n_obs - stats.n_nonzero, dtype=np.int64)
    return [
        Particle(counts=np.concatenate([counts[g], zeros]), n_plus=int(nplus[g]),
                 weight=float(w[g]))
        for g in range(G)
    ]


# ---------------------------------------------------------------------------
# Driver-facing per-stratum E-step
# ---------------------------------------------------------------------------


def estep_stratum(stats: StratumStats, theta: Theta, kind: str, n_particles: int,
                  gen: np.random.Generator, l_ref: int = 1000) -> NplusSummary:
    """Weighted posterior summary of N+ for one stratum at the current theta."""
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if stats.n_nonzero == 0:
        one = np.array([0], dtype=np.int64)
        return NplusSummary(values=one, probs=np.array([1.0]), ess=float(n_particles),
                            trunc_mass=0.0, exact=True)
    if kind == CONTINUOUS:
        nplus, _, logw, trunc = _continuous_sample_arrays(stats, theta, n_particles, gen)
    else:
        n_ref = reference_nplus_discrete(stats, theta, l_ref, gen)
        nplus, _, logw, trunc = _discrete_sample_arrays(stats, theta, n_ref, n_particles, gen)
    w = np.exp(logw - logw.max())
    values, probs, ess = _summarize(nplus, w)
    return NplusSummary(values=values, probs=probs, ess=ess, trunc_mass=trunc,
                        exact=bool(values.size == 1))


def moments_from_summary(summary: NplusSummary, stats: StratumStats, theta: Theta,
                         kind: str) -> StratumMoments:
    return _moments_from_summary(summary.values, summary.probs, summary.ess,
                                 stats, theta, kind)


# ---------------------------------------------------------------------------
# Exact oracles: lattice enumeration and allocation convolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PosteriorTable:
    """Exact (truncated) posterior over clump-count vectors; test oracle."""

    counts: np.ndarray  # (M, I+) vectors in the stats' canonical order
    probs: np.ndarray
    stats: StratumStats
    theta_prime: Theta
    kind: str

    def nplus_pmf(self) -> Tuple[np.ndarray, np.ndarray]:
        nplus = self.counts.sum(axis=1) if self.counts.size else np.zeros(1, dtype=np.int64)
        values, inverse = np.unique(nplus, return_inverse=True)
        probs = np.bincount(inverse, weights=self.probs, minlength=values.size)
        return values.astype(np.int64), probs


def enumerate_posterior(stats: StratumStats, theta_prime: Theta, kind: str,
                        cap: int = 60) -> PosteriorTable:
    """Exact normalized posterior of the clump-count vector on a truncated lattice.

    Guards: continuous strata need at most 3 nonzero records and cap <= 80;
    discrete strata need prod(y_i) <= 1e6 (their lattice is finite).
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    a, b, c, d = _theta_tuple(theta_prime)
    ip = stats.n_nonzero
    if ip == 0:
        return PosteriorTable(counts=np.zeros((1, 0), dtype=np.int64), probs=np.array([1.0]),
                              stats=stats, theta_prime=theta_prime, kind=kind)
    if kind == CONTINUOUS:
        if ip > 3 or cap > 80:
            raise GuardError(f"continuous enumeration guarded to I+ <= 3, cap <= 80 "
                             f"(got I+={ip}, cap={cap})")
        ranges = [np.arange(1, cap + 1, dtype=np.int64)] * ip
    else:
        y_int, _ = _discrete_ints(stats)
        if np.prod(y_int.astype(np.float64)) > 1e6:
            raise GuardError("discrete enumeration guarded to prod(y_i) <= 1e6")
        ranges = [np.arange(1, yi + 1, dtype=np.int64) for yi in y_int]
    mesh = np.meshgrid(*ranges, indexing="ij")
    vectors = np.stack([m.ravel() for m in mesh], axis=1)
    nplus = vectors.sum(axis=1)
    lfact = log_factorial_table(int(nplus.max()) + int(stats.y_plus) + 1)
    logp = np.zeros(vectors.shape[0])
    if kind == CONTINUOUS:
        z = stats.nonzero_y * stats.nonzero_d
        for i in range(ip):
            ni = vectors[:, i]
            logp += ni * math.log(z[i]) - lfact[ni - 1] - lfact[ni]
        logp += (
            K.lgamma_vec(a + nplus)
            + K.lgamma_vec(c + nplus)
            - nplus * (math.log(b + stats.d_plus) + math.log(d + stats.y_plus))
        )
    else:
        y_int, yp = _discrete_ints(stats)
        for i in range(ip):
            ni = vectors[:, i]
            yi = int(y_int[i])
            logp += (
                lfact[yi - 1] - lfact[ni - 1] - lfact[yi - ni]
                + ni * math.log(stats.nonzero_d[i])
                - lfact[ni]
            )
        logp += _discrete_nplus_tail(stats, theta_prime, nplus)
    probs = np.exp(logp - logp.max())
    probs /= probs.sum()
    return PosteriorTable(counts=vectors, probs=probs, stats=stats,
                          theta_prime=theta_prime, kind=kind)


def exact_stratum_moments(table: PosteriorTable) -> StratumMoments:
    """Conditional moments computed from an exact posterior table."""
    values, probs = table.nplus_pmf()
    return _moments_from_summary(values, probs, math.inf, table.stats,
                                 table.theta_prime, table.kind)


def _allocation_logw(stats: StratumStats, kind: str, cap: int) -> np.ndarray:
    """log of W(n) = sum over allocations with total n of the per-record terms.

    Continuous records contribute y^(k-1) D^k / (Gamma(k) Gamma(k+1)) for
    k >= 1; discrete records contribute C(y-1, k-1) D^k / k! on k <= y.
    Computed by convolution with running rescaling; entries beyond ``cap``
    are dropped.  W(0) = 1 only for strata with no nonzero record.
    """
    lfact = log_factorial_table(max(cap, int(stats.y_plus) + 1) + 1)
    w = np.array([1.0])
    scale = 0.0
    for i in range(stats.n_nonzero):
        yi, di = float(stats.nonzero_y[i]), float(stats.nonzero_d[i])
        if kind == CONTINUOUS:
            ks = np.arange(1, cap + 1, dtype=np.int64)
            logt = (ks - 1) * math.log(yi) + ks * math.log(di) - lfact[ks - 1] - lfact[ks]
        else:
            yi_int = int(round(yi))
            ks = np.arange(1, yi_int + 1, dtype=np.int64)
            logt = (
                lfact[yi_int - 1] - lfact[ks - 1] - lfact[yi_int - ks]
                + ks * math.log(di) - lfact[ks]
            )
        m = float(logt.max())
        vec = np.zeros(int(ks[-1]) + 1)
        vec[1:] = np.exp(logt - m)
        w = np.convolve(w, vec)[: cap + 1]
        top = float(w.max())
        if top <= 0.0:
            raise EstepError("allocation convolution underflow")
        w /= top
        scale += m + math.log(top)
    with np.errstate(divide="ignore"):
        return np.log(w) + scale


def exact_nplus_posterior(stats: StratumStats, theta: Theta, kind: str,
                          max_cap: int = 20000) -> Tuple[np.ndarray, np.ndarray]:
    """Exact posterior pmf of the clump total N+, by allocation convolution.

    Exponentially cheaper than :func:`enumerate_posterior`; used by the
    information-matrix and likelihood oracles.  The continuous support is
    truncated adaptively so the dropped tail is below 1e-14 of the mass.
    """
    a, b, c, d = _theta_tuple(theta)
    if stats.n_nonzero == 0:
        return np.array([0], dtype=np.int64), np.array([1.0])
    if kind == DISCRETE:
        _, yp = _discrete_ints(stats)
        cap = yp
        logw = _allocation_logw(stats, kind, cap)
        support = np.arange(stats.n_nonzero, cap + 1, dtype=np.int64)
        logpost = logw[support] + _discrete_nplus_tail(stats, theta, support)
    else:
        cap = stats.n_nonzero + 32
        log_geom = math.log(b + stats.d_plus) + math.log(d + stats.y_plus)
        while True:
            logw = _allocation_logw(stats, CONTINUOUS, cap)
            support = np.arange(stats.n_nonzero, cap + 1, dtype=np.int64)
            logpost = (
                logw[support]
                + K.lgamma_vec(a + support)
                + K.lgamma_vec(c + support)
                - support * log_geom
            )
            if logpost[-1] < logpost.max() - 14.0 * math.log(10.0) - math.log(support.size):
                break
            if cap >= max_cap:
                raise GuardError(f"exact posterior needs support beyond {max_cap}")
            cap = min(2 * cap, max_cap)
    probs = np.exp(logpost - logpost.max())
    probs /= probs.sum()
    return support, probs
