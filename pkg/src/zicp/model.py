"""Domain types, closed-form moments and forward simulators.

The observation model is a compound Poisson sum: a tow over effort D
catches N ~ Poisson(mu * D) latent clumps, each contributing an
independent mark.  Continuous data use Exponential(rho) marks, giving

    E(Y) = mu D / rho,   Var(Y) = 2 mu D / rho^2,   P(Y = 0) = exp(-mu D).

Discrete data use geometric marks on {1, 2, ...} with P(X = k) =
p (1-p)^(k-1), giving E(Y) = mu D / p and Var(Y) = mu D (2-p) / p^2.

The hierarchy draws one (mu_s, rho_s) or (mu_s, p_s) pair per stratum:
mu_s ~ Gamma(a, b) and rho_s ~ Gamma(c, d) (continuous) or
p_s ~ Beta(c, d) (discrete), i.i.d. across strata.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import DomainError
from .specfun import GeneratorLike, as_generator

CONTINUOUS = "cont"
DISCRETE = "disc"
KINDS = (CONTINUOUS, DISCRETE)


@dataclass(frozen=True)
class Theta:
    """Hyperparameters of the random-effects layer.

    ``(a, b)`` are the gamma shape/rate for the clump intensity mu;
    ``(c, d)`` are the gamma shape/rate for rho (continuous) or the beta
    parameters for p (discrete).
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"Theta.{name} must be > 0, got {getattr(self, name)}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=np.float64)

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "Theta":
        a, b, c, d = (float(v) for v in arr)
        return cls(a, b, c, d)


@dataclass(frozen=True)
class Observation:
    """One tow: harvested amount y over catching effort (area swept)."""

    y: float
    effort: float = 1.0

    def __post_init__(self) -> None:
        if not self.y >= 0.0:
            raise DomainError(f"Observation.y must be >= 0, got {self.y}")
        if not self.effort > 0.0:
            raise DomainError(f"Observation.effort must be > 0, got {self.effort}")


@dataclass(frozen=True)
class Stratum:
    id: str
    observations: Tuple[Observation, ...]

    def __post_init__(self) -> None:
        if len(self.observations) == 0:
            raise DomainError(f"stratum {self.id!r} has no observations")
        object.__setattr__(self, "observations", tuple(self.observations))

    @property
    def y(self) -> np.ndarray:
        return np.array([o.y for o in self.observations], dtype=np.float64)

    @property
    def efforts(self) -> np.ndarray:
        return np.array([o.effort for o in self.observations], dtype=np.float64)


@dataclass(frozen=True)
class Dataset:
    kind: str
    strata: Tuple[Stratum, ...]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"Dataset.kind must be one of {KINDS}, got {self.kind!r}")
        if len(self.strata) == 0:
            raise DomainError("Dataset needs at least one stratum")
        object.__setattr__(self, "strata", tuple(self.strata))
        if self.kind == DISCRETE:
            for s in self.strata:
                for o in s.observations:
                    if o.y != math.floor(o.y):
                        raise DomainError(
                            f"discrete dataset requires integer y, got {o.y} in stratum {s.id!r}"
                        )

    @property
    def n_strata(self) -> int:
        return len(self.strata)

    @property
    def n_observations(self) -> int:
        return sum(len(s.observations) for s in self.strata)


@dataclass(frozen=True)
class LatentTruth:
    """Latent state written down by the simulator, for oracle tests.

    ``mu[s]`` and ``mark[s]`` are the per-stratum random effects (mark is
    rho for continuous data, p for discrete); ``clumps[s][i]`` is the
    clump count behind observation i of stratum s.  y = 0 exactly where
    the clump count is 0.
    """

    mu: Tuple[float, ...]
    mark: Tuple[float, ...]
    clumps: Tuple[Tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# Closed-form moments
# ---------------------------------------------------------------------------


def lol_moments(mu: float, effort: float, rho: float) -> Tuple[float, float, float]:
    """(mean, variance, P(Y=0)) of the continuous compound sum.

    ``mu`` may be 0 (degenerate at 0); effort and rho must be positive.
    """
    if mu < 0.0 or not effort > 0.0 or not rho > 0.0:
        raise DomainError(f"lol_moments requires mu >= 0, effort > 0, rho > 0, got {(mu, effort, rho)}")
    m = mu * effort
    return m / rho, 2.0 * m / (rho * rho), math.exp(-m)


def dlol_moments(mu: float, effort: float, p: float) -> Tuple[float, float, float]:
    """(mean, variance, P(Y=0)) of the discrete compound sum.

    Uses E(X) = 1/p and E(X^2) = (2-p)/p^2 for the positive geometric mark.
    """
    if mu < 0.0 or not effort > 0.0 or not 0.0 < p <= 1.0:
        raise DomainError(f"dlol_moments requires mu >= 0, effort > 0, p in (0,1], got {(mu, effort, p)}")
    m = mu * effort
    return m / p, m * (2.0 - p) / (p * p), math.exp(-m)


def lol_char_fn(omega: float, mu: float, rho: float) -> complex:
    """Characteristic function exp(-mu * i w / (rho + i w)) of the continuous sum."""
    if not mu > 0.0 or not rho > 0.0:
        raise DomainError(f"lol_char_fn requires mu, rho > 0, got {(mu, rho)}")
    iw = 1j * omega
    return cmath.exp(-mu * iw / (rho + iw))


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_lol(mu_effort: float, rho: float, rng: GeneratorLike) -> float:
    """One continuous draw: N ~ Poisson(mu_effort), then sum of N Exp(rho)."""
    if mu_effort < 0.0 or not rho > 0.0:
        raise DomainError(f"sample_lol requires mu_effort >= 0, rho > 0, got {(mu_effort, rho)}")
    gen = as_generator(rng)
    n = int(gen.poisson(mu_effort))
    if n == 0:
        return 0.0
    return float(gen.exponential(1.0 / rho, size=n).sum())


def sample_dlol(mu_effort: float, p: float, rng: GeneratorLike) -> int:
    """One discrete draw: N ~ Poisson(mu_effort), then sum of N positive geometrics."""
    if mu_effort < 0.0 or not 0.0 < p <= 1.0:
        raise DomainError(f"sample_dlol requires mu_effort >= 0, p in (0,1], got {(mu_effort, p)}")
    gen = as_generator(rng)
    n = int(gen.poisson(mu_effort))
    if n == 0:
        return 0
    return int(gen.geometric(p, size=n).sum())


def sample_lol_batch(mu_effort: float, rho: float, size: int, rng: GeneratorLike) -> np.ndarray:
    """Vectorized continuous draws via the Erlang identity sum(N exps) ~ Gamma(N, 1/rho)."""
    if mu_effort < 0.0 or not rho > 0.0:
        raise DomainError(f"sample_lol_batch requires mu_effort >= 0, rho > 0, got {(mu_effort, rho)}")
    gen = as_generator(rng)
    n = gen.poisson(mu_effort, size=size)
    return gen.gamma(n, 1.0 / rho)


def sample_dlol_batch(mu_effort: float, p: float, size: int, rng: GeneratorLike) -> np.ndarray:
    """Vectorized discrete draws: sum of N positive geometrics ~ N + NegBin(N, p)."""
    if mu_effort < 0.0 or not 0.0 < p <= 1.0:
        raise DomainError(f"sample_dlol_batch requires mu_effort >= 0, p in (0,1], got {(mu_effort, p)}")
    gen = as_generator(rng)
    n = gen.poisson(mu_effort, size=size)
    out = n.astype(np.int64)
    pos = out > 0
    if pos.any():
        out[pos] += gen.negative_binomial(out[pos], p)
    return out


def _clump_counts_and_values(kind: str, mu_s: float, mark: float, efforts: np.ndarray,
                             gen: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    counts = gen.poisson(mu_s * efforts).astype(np.int64)
    if kind == CONTINUOUS:
        y = gen.gamma(counts, 1.0 / mark)
    else:
        y = counts.astype(np.float64).copy()
        pos = counts > 0
        if pos.any():
            y[pos] += gen.negative_binomial(counts[pos], mark)
    return counts, y


def simulate_hierarchy(theta: Theta, design: Sequence[Sequence[float]], kind: str,
                       rng: GeneratorLike) -> Tuple[Dataset, LatentTruth]:
    """Simulate a full dataset and the latent state behind it.

    ``design`` gives, per stratum, the vector of per-tow efforts.  Each
    stratum draws mu_s ~ Gamma(a, b) and rho_s ~ Gamma(c, d) (continuous)
    or p_s ~ Beta(c, d) (discrete), then every tow draws its clump count
    N ~ Poisson(mu_s * effort) and its compound-sum value.
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    if len(design) == 0:
        raise DomainError("design must be non-empty")
    gen = as_generator(rng)
    strata = []
    mus, marks, clumps = [], [], []
    for s_idx, efforts in enumerate(design):
        efforts = np.asarray(efforts, dtype=np.float64)
        if efforts.ndim != 1 or efforts.size == 0 or not np.all(efforts > 0.0):
            raise DomainError(f"design entry {s_idx} must be a non-empty vector of positive efforts")
        mu_s = float(gen.gamma(theta.a, 1.0 / theta.b))
        if kind == CONTINUOUS:
            mark = float(gen.gamma(theta.c, 1.0 / theta.d))
        else:
            mark = float(gen.beta(theta.c, theta.d))
        counts, y = _clump_counts_and_values(kind, mu_s, mark, efforts, gen)
        obs = tuple(Observation(y=float(yv), effort=float(dv)) for yv, dv in zip(y, efforts))
        strata.append(Stratum(id=f"s{s_idx}", observations=obs))
        mus.append(mu_s)
        marks.append(mark)
        clumps.append(tuple(int(c) for c in counts))
    dataset = Dataset(kind=kind, strata=tuple(strata))
    truth = LatentTruth(mu=tuple(mus), mark=tuple(marks), clumps=tuple(clumps))
    return dataset, truth


def uniform_design(n_strata: int, per_stratum: int, effort: float = 1.0) -> list:
    """Design with ``n_strata`` strata of ``per_stratum`` tows at equal effort."""
    if n_strata < 1 or per_stratum < 1:
        raise DomainError("uniform_design requires n_strata >= 1 and per_stratum >= 1")
    return [[effort] * per_stratum for _ in range(n_strata)]
