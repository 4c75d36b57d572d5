"""Simulator and verification toolkit for Poisson shot-noise price processes.

Samples the log-price process driven by a Poisson random measure of
agent orders under five scaling regimes, computes the analytic limit
laws (fractional Brownian motion and stable Levy motion), and checks
convergence statistically at finite scale.
"""

from .errors import (ConfigurationError, DomainError, EstimationError,
                     NumericalError, ShotPriceError)
from .measures import (DiscreteRate, DurationLaw, GaussianRate, ParetoDuration,
                       PowerLawInfinite, RateLaw, TwoPoint, duration_moments,
                       rate_moments, sample_duration, sample_rate, scale_duration,
                       tail_probability)
from .pulses import (Pulse, custom_piecewise, linear_plateau, triangle, validate)
from .regimes import (CompensationMode, FastProbability, FastSimple, Intermediate,
                      ScalingRegime, SlowProbability, SlowSimple, Unscaled,
                      compensation_mode, expected_active_effects, intensity,
                      rate_multiplier)
from .sampler import (Atom, AtomBatch, SimulationWindow, compensator_value,
                      contributing_intensity, sample_atoms, truncation_variance)
from .process import (Component, Ensemble, PathGrid, RunSpec, evaluate_path,
                      price_path, simulate_ensemble, uniform_grid)
from .limits import (FbmModel, LimitingMeasure, QuadratureSettings, StableModel,
                     fbm_covariance, fbm_model, fbm_variance, hurst, lemma1_bound,
                     lemma1_integral, lemma2_value, prelimit_char_function,
                     sample_stable, stable_char_function, stable_model, stable_scale)
from .estimators import (EcfCurve, HurstEstimate, TailIndexEstimate, covariance_matrix,
                         empirical_cf, estimate_hurst, estimate_stable_index,
                         ks_statistic)
from .config import ExperimentConfig, config_hash, dumps_config, load_config, parse_config, resolve
from .harness import RunRecord, run_converge, run_selftest, run_simulate

__version__ = "0.1.0"
