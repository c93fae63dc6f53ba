"""Stationarity solvers for the hyperparameter update.

Given the averaged conditional moments from the E-step, the update of a
gamma pair (shape, rate) solves

    ln(shape) - psi(shape) = ln(mean E) - mean E[ln],   rate = shape / mean E,

by safeguarded Newton-Raphson started at 1/(2C) (the asymptotic inverse
of ln x - psi(x) ~ 1/(2x)).  The discrete beta pair (c, d) solves

    psi(c + d) - psi(c) = -mean E[ln p]
    psi(c + d) - psi(d) = -mean E[ln(1 - p)]

by a damped two-dimensional Newton iteration with trigamma Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .errors import MStepError
from .model import CONTINUOUS, DISCRETE, Theta
from .specfun import digamma, log_gamma, trigamma

_SHAPE_DIVERGENCE = 1e8


@dataclass(frozen=True)
class MStepInput:
    """Across-strata averages of the conditional moments.

    Continuous fits carry the rho moments, discrete fits the log-beta
    moments; ``mean_e_ln_mu <= ln(mean_e_mu)`` is required for the gamma
    system to be solvable (Jensen gap), and the discrete log moments must
    be strictly negative.
    """

    mean_e_mu: float
    mean_e_ln_mu: float
    mean_e_rho: Optional[float] = None
    mean_e_ln_rho: Optional[float] = None
    mean_e_ln_p: Optional[float] = None
    mean_e_ln_1mp: Optional[float] = None


def solve_gamma_pair(mean_e: float, mean_e_ln: float,
                     full_output: bool = False) -> Tuple[float, float]:
    """Invert the gamma moment equations for (shape, rate).

    Raises :class:`MStepError` when the Jensen gap is non-positive
    (degenerate moments, typically Monte-Carlo noise) or when the shape
    exceeds 1e8 (the gap is numerically zero).
    """
    if not mean_e > 0.0:
        raise MStepError(f"mean E must be positive, got {mean_e}")
    c_gap = math.log(mean_e) - mean_e_ln
    if not c_gap > 0.0:
        raise MStepError(f"infeasible gamma moments: ln(mean) - mean_ln = {c_gap} <= 0")

    def f(x: float) -> float:
        return math.log(x) - digamma(x) - c_gap

    x = 1.0 / (2.0 * c_gap)
    if x > _SHAPE_DIVERGENCE:
        raise MStepError(f"gamma shape diverged (gap {c_gap} too close to 0)")
    # f is strictly decreasing with a unique positive root: bracket it.
    lo, hi = x, x
    while f(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise MStepError("gamma solver failed to bracket the root from below")
    while f(hi) >= 0.0:
        hi *= 2.0
        if hi > _SHAPE_DIVERGENCE:
            raise MStepError(f"gamma shape diverged (gap {c_gap} too close to 0)")
    iterations = 0
    fx = f(x)
    while abs(fx) > 1e-12:
        iterations += 1
        if iterations > 200:
            raise MStepError("gamma solver did not converge in 200 iterations")
        step = fx / (1.0 / x - trigamma(x))
        cand = x - step
        if not (lo < cand < hi):
            cand = 0.5 * (lo + hi)
        fc = f(cand)
        if fc > 0.0:
            lo = cand
        else:
            hi = cand
        x, fx = cand, fc
    rate = x / mean_e
    if full_output:
        return (x, rate), {"iterations": iterations, "residual": fx}
    return x, rate


def solve_beta_pair(mean_e_ln_p: float, mean_e_ln_1mp: float,
                    full_output: bool = False) -> Tuple[float, float]:
    """Invert the beta log-moment equations for (c, d).

    Requires both log moments strictly negative and the feasibility
    condition exp(m_p) + exp(m_q) < 1 (the boundary is the degenerate
    infinite-concentration limit).
    """
    mp_, mq_ = mean_e_ln_p, mean_e_ln_1mp
    if not (mp_ < 0.0 and mq_ < 0.0):
        raise MStepError(f"beta log moments must be negative, got {(mp_, mq_)}")
    if math.exp(mp_) + math.exp(mq_) >= 1.0:
        raise MStepError(f"infeasible beta moments: exp{mp_} + exp{mq_} >= 1")

    def residual(c: float, d: float) -> Tuple[float, float]:
        s = digamma(c + d)
        return s - digamma(c) + mp_, s - digamma(d) + mq_

    m1 = math.exp(mp_)
    c, d = 5.0 * m1, 5.0 * (1.0 - m1)
    g1, g2 = residual(c, d)
    norm = max(abs(g1), abs(g2))
    iterations = 0
    while norm > 1e-12:
        iterations += 1
        if iterations > 200:
            raise MStepError("beta solver did not converge in 200 iterations")
        tcd = trigamma(c + d)
        j11 = tcd - trigamma(c)
        j22 = tcd - trigamma(d)
        det = j11 * j22 - tcd * tcd
        if det == 0.0:
            raise MStepError("singular Jacobian in beta solver")
        dc = -(j22 * g1 - tcd * g2) / det
        dd = -(j11 * g2 - tcd * g1) / det
        step = 1.0
        for _ in range(60):
            cn, dn = c + step * dc, d + step * dd
            if cn > 0.0 and dn > 0.0:
                g1n, g2n = residual(cn, dn)
                nn = max(abs(g1n), abs(g2n))
                if nn < norm:
                    c, d, g1, g2, norm = cn, dn, g1n, g2n, nn
                    break
            step *= 0.5
        else:
            # stalled at machine noise: accept if already below the contract
            if norm <= 1e-10:
                break
            raise MStepError("beta solver line search stalled")
    if full_output:
        return (c, d), {"iterations": iterations, "residual": norm}
    return c, d


def update_theta(inputs: MStepInput, kind: str) -> Theta:
    """One full M-step: solve both pairs from the averaged moments."""
    a, b = solve_gamma_pair(inputs.mean_e_mu, inputs.mean_e_ln_mu)
    if kind == CONTINUOUS:
        if inputs.mean_e_rho is None or inputs.mean_e_ln_rho is None:
            raise MStepError("continuous update requires rho moments")
        c, d = solve_gamma_pair(inputs.mean_e_rho, inputs.mean_e_ln_rho)
    else:
        if inputs.mean_e_ln_p is None or inputs.mean_e_ln_1mp is None:
            raise MStepError("discrete update requires beta log moments")
        c, d = solve_beta_pair(inputs.mean_e_ln_p, inputs.mean_e_ln_1mp)
    return Theta(a, b, c, d)


def q_value(theta: Theta, inputs: MStepInput, kind: str, n_strata: int = 1) -> float:
    """Parameter-dependent part of the EM surrogate objective.

    Evaluated from the same averaged moments the M-step consumes, scaled
    by ``n_strata``; the data-only constant is omitted.  The M-step output
    maximizes this function, which the ascent tests assert directly.
    """
    s = float(n_strata)
    val = s * (
        (theta.a - 1.0) * inputs.mean_e_ln_mu
        + theta.a * math.log(theta.b)
        - theta.b * inputs.mean_e_mu
        - log_gamma(theta.a)
    )
    if kind == CONTINUOUS:
        if inputs.mean_e_rho is None or inputs.mean_e_ln_rho is None:
            raise MStepError("continuous q_value requires rho moments")
        val += s * (
            (theta.c - 1.0) * inputs.mean_e_ln_rho
            + theta.c * math.log(theta.d)
            - theta.d * inputs.mean_e_rho
            - log_gamma(theta.c)
        )
    elif kind == DISCRETE:
        if inputs.mean_e_ln_p is None or inputs.mean_e_ln_1mp is None:
            raise MStepError("discrete q_value requires beta log moments")
        val += s * (
            log_gamma(theta.c + theta.d) - log_gamma(theta.c) - log_gamma(theta.d)
            + (theta.c - 1.0) * inputs.mean_e_ln_p
            + (theta.d - 1.0) * inputs.mean_e_ln_1mp
        )
    else:
        raise MStepError(f"unknown kind {kind!r}")
    return val
