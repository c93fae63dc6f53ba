"""Benchmark: compiled kernels vs pure-numpy fallback.

Times the hot E-step kernels on workloads shaped like a real fit
(per-stratum proposal build, particle weighting, discrete record
sampling) plus one end-to-end E-step iteration.  Run after building the
extension:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from zicp import _kernels_py
from zicp.estep import estep_stratum, log_factorial_table, stratum_stats_from_arrays
from zicp.model import CONTINUOUS, Theta
from zicp.specfun import RngStream

try:
    from zicp import _kernels

    BACKENDS = [("compiled", _kernels), ("python", _kernels_py)]
except ImportError:
    print("compiled extension not built; benchmarking the fallback only")
    BACKENDS = [("python", _kernels_py)]


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    support = np.arange(10, 410, dtype=np.int64)
    q = rng.dirichlet(np.ones(12))
    idx = rng.integers(0, support.size, size=100_000)
    counts = rng.integers(1, 40, size=(100_000, 12))
    lfact = log_factorial_table(2000)
    rowterm = _kernels_py.continuous_rowterms(support, q)
    log_rate = rng.normal(0.5, 0.3, size=100_000)
    u = rng.random(100_000)
    x = rng.uniform(0.5, 300.0, size=4096)

    rows = []
    for name, mod in BACKENDS:
        rows.append((name, "lgamma_vec(4096)", timeit(lambda: mod.lgamma_vec(x))))
        rows.append((name, "digamma_vec(4096)", timeit(lambda: mod.digamma_vec(x))))
        rows.append((name, "rowterms(400x12)", timeit(lambda: mod.continuous_rowterms(support, q))))
        rows.append((name, "logweights(1e5x12)",
                     timeit(lambda: mod.continuous_logweights(idx, counts, rowterm, lfact))))
        rows.append((name, "disc_record(y=25,G=1e5)",
                     timeit(lambda: mod.discrete_sample_record(25, log_rate, u, lfact, 0.0))))

    # End-to-end per-stratum E-step through the selected backend.
    import zicp._backend as backend

    stats = stratum_stats_from_arrays(
        np.concatenate([rng.gamma(2.0, 1.0, size=9), np.zeros(6)]), np.ones(15))
    theta = Theta(1.9, 1.8, 1.9, 0.9)
    for name, mod in BACKENDS:
        for fn in ("lgamma_vec", "digamma_vec", "trigamma_vec", "continuous_rowterms",
                   "continuous_logweights", "discrete_sample_record"):
            setattr(backend, fn, getattr(mod, fn))
        gen = RngStream(7).generator()
        rows.append((name, "estep_stratum(G=1e5)",
                     timeit(lambda: estep_stratum(stats, theta, CONTINUOUS, 100_000, gen))))

    width = max(len(r[1]) for r in rows)
    print(f"{'kernel':<{width}}  {'backend':<9}  best (ms)")
    for name, label, sec in rows:
        print(f"{label:<{width}}  {name:<9}  {sec * 1e3:9.3f}")


if __name__ == "__main__":
    main()
