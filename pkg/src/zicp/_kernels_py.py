"""Pure-numpy reference implementations of the hot numeric kernels.

``zicp._backend`` selects this module when the compiled extension is
unavailable (or when ``ZICP_BACKEND=py``).  Semantics match
``zicp._kernels`` exactly; the extension only accelerates these loops.
All randomness stays outside the kernels (callers pass pre-drawn
uniforms), so both backends consume identical RNG streams.
"""

import math

import numpy as np

from .specfun import _PSI1_TAIL, _PSI_TAIL, _SHIFT

_lgamma_ufunc = np.frompyfunc(math.lgamma, 1, 1)


def lgamma_vec(x):
    """Elementwise log-gamma of a positive float array."""
    return _lgamma_ufunc(np.asarray(x, dtype=np.float64)).astype(np.float64)


def digamma_vec(x):
    """Elementwise digamma; same recurrence + series as ``specfun.digamma``."""
    x = np.array(x, dtype=np.float64, copy=True)
    acc = np.zeros_like(x)
    mask = x < _SHIFT
    while mask.any():
        acc[mask] -= 1.0 / x[mask]
        x[mask] += 1.0
        mask = x < _SHIFT
    r = 1.0 / (x * x)
    tail = np.zeros_like(x)
    for c in reversed(_PSI_TAIL):
        tail = r * (c - tail)
    return acc + np.log(x) - 0.5 / x - tail


def trigamma_vec(x):
    """Elementwise trigamma; same recurrence + series as ``specfun.trigamma``."""
    x = np.array(x, dtype=np.float64, copy=True)
    acc = np.zeros_like(x)
    mask = x < _SHIFT
    while mask.any():
        acc[mask] += 1.0 / (x[mask] * x[mask])
        x[mask] += 1.0
        mask = x < _SHIFT
    u = 1.0 / x
    r = u * u
    tail = np.zeros_like(x)
    for c in reversed(_PSI1_TAIL):
        tail = r * (c - tail)
    return acc + u + 0.5 * r + u * tail


def continuous_rowterms(support, q):
    """rowterm[j] = sum_i lgamma(q_i * support[j] + 1) for the clump-share split."""
    support = np.asarray(support, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return lgamma_vec(np.outer(support, q) + 1.0).sum(axis=1)


def continuous_logweights(idx, counts, rowterm, lfact):
    """Log importance weights of allocated particles.

    ``idx`` indexes each particle's total into ``rowterm``; ``counts`` is the
    (G, I+) matrix of per-record clump counts; ``lfact[k]`` = ln k!.
    """
    idx = np.asarray(idx)
    counts = np.asarray(counts)
    return np.asarray(rowterm)[idx] - np.asarray(lfact)[counts].sum(axis=1)


def discrete_sample_record(y_i, log_rate, u, lfact, log_effort):
    """Sample one record's clump count for every particle (discrete model).

    The count lives on {1, ..., y_i} with log-pmf k * (log_rate + log_effort)
    minus ln Gamma(k) + ln Gamma(y_i - k + 1) + ln Gamma(k + 1); ``u`` are
    pre-drawn uniforms (one per particle).  Returns the counts, the proposal
    log-density of each realized count, and the record's contribution to the
    log target density.
    """
    y_i = int(y_i)
    log_rate = np.asarray(log_rate, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    lfact = np.asarray(lfact, dtype=np.float64)
    ks = np.arange(1, y_i + 1)
    const = lfact[ks - 1] + lfact[y_i - ks] + lfact[ks]
    logpmf = np.outer(log_rate + log_effort, ks) - const
    m = logpmf.max(axis=1)
    p = np.exp(logpmf - m[:, None])
    z = p.sum(axis=1)
    cdf = np.cumsum(p, axis=1)
    pick = (cdf < (u * z)[:, None]).sum(axis=1)
    counts = ks[pick].astype(np.int64)
    logq = logpmf[np.arange(logpmf.shape[0]), pick] - m - np.log(z)
    logt = (lfact[y_i - 1] - lfact[counts - 1] - lfact[y_i - counts]
            + counts * log_effort - lfact[counts])
    return counts, logq, logt
