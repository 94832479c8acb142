"""Two-phase Hawkes process with external excitation for cyber-attack counts."""

from .errors import (ConvergenceError, CyberHawkesError, DomainError,
                     ExplosionError, InfeasibleScenarioError, SchemaError,
                     SupercriticalError, UndefinedCorrelationError)
from .model import (EventStream, MarkDistribution, PhaseOneParams,
                    ReactionParams, decompose_intensity, ergodicity_ratio,
                    integrated_intensity, intensity_at, intensity_path,
                    phi_norm, phibar_norm)
from .expectation import (ConditioningState, conditioning_from_stream,
                          expected_count, expected_increments, expected_lambda)
from .simulation import (CountDistribution, Trajectory,
                         simulate_count_distribution, simulate_counts_on_grid,
                         simulate_external, simulate_two_phase)
from .optimize import OptimizerOptions, minimize
from .calibration import (CalibrationResult, confidence_intervals, fit,
                          mse_ext, mse_int, neg_log_likelihood)
from .validation import (KsReport, PredictiveBand, ks_exp1, predictive_check,
                         rescale_times, rescaled_interarrivals)
from .reaction import (CapacityScenario, ReactionSelection, diminished_capacity,
                       first_capacity_breach, is_feasible, select_reaction)

__version__ = "0.1.0"
