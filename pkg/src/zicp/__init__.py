"""Zero-inflated compound Poisson models with stratum-level random effects.

Continuous (biomass) and discrete (count) observation models built from
a latent marked Poisson process, with gamma/beta random effects shared
within survey strata.  Fitting is Monte-Carlo EM with importance
sampling over the latent clump counts; asymptotic confidence regions
come from the empirical information matrix.
"""

from ._backend import BACKEND
from .errors import (DataFormatError, DomainError, EstepError, GuardError,
                     IdentifiabilityError, MStepError, NonConvergenceError,
                     StudyError, ZicpError)
from .estep import (NplusSummary, Particle, PosteriorTable, StratumMoments,
                    StratumStats, enumerate_posterior, exact_nplus_posterior,
                    exact_stratum_moments, moments_continuous, moments_discrete,
                    reference_nplus_discrete, sample_particles_continuous,
                    sample_particles_discrete, stratum_stats)
from .inference import (ConfidenceRegion, FitResult, McemConfig, StratumPredictor,
                        confidence_region, fisher_information,
                        fisher_information_exact, initial_theta, marginal_loglik,
                        mcem_fit, predict_random_effects, score_monitor)
from .model import (CONTINUOUS, DISCRETE, Dataset, LatentTruth, Observation,
                    Stratum, Theta, dlol_moments, lol_char_fn, lol_moments,
                    sample_dlol, sample_dlol_batch, sample_lol, sample_lol_batch,
                    simulate_hierarchy, uniform_design)
from .mstep import MStepInput, q_value, solve_beta_pair, solve_gamma_pair, update_theta
from .specfun import (Beta, DistSpec, Exponential, FinitePmf, Gamma,
                      GeometricOnPositives, Multinomial, Poisson, RngStream,
                      chi2_quantile_4, digamma, draw, log_gamma, normal_quantile,
                      reg_lower_gamma, trigamma)
from .studies import (BiasCell, CoverageCell, GofResult, PpplotResult, StudyGrid,
                      bias_study, coverage_study, gof_histogram, ppplot_data,
                      read_dataset_csv, write_dataset_csv)

__version__ = "0.1.0"
