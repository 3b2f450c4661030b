"""SDE path simulation with random-partition Euler-Maruyama schemes."""

from .asymptotics import (
    AsymptoticConstants,
    constants,
    predicted_error_ratio,
    psi,
    reduction_ratio,
    simulate_limit_error_1d,
    simulate_limit_errors_1d,
)
from .experiments import (
    ComparisonTable,
    ExperimentConfig,
    MomentReport,
    compare_at_matched_cost,
    moment_csv,
    run_monte_carlo,
    verify_sphere_optimality,
)
from .integrator import (
    BatchPathResult,
    PathResult,
    coupled_error,
    coupled_errors_batch,
    euler_maruyama_batch,
    euler_maruyama_path,
    step_count_ratio,
)
from .models import SdeModel, builtin_model, eval_coefficients, list_models
from .rng import RngStream, StreamBatch
from .samplers import (
    MovingSphereDraw,
    sample_bessel_hitting_time,
    sample_bessel_hitting_times,
    sample_exponential,
    sample_moving_sphere,
    sample_normal_vector,
    sample_sphere_direction,
)
from .schemes import (
    ConstantG,
    SchemeSpec,
    SchemeState,
    SchemeStep,
    finish_to_horizon,
    next_step,
    theoretical_g_h,
)

__version__ = "0.1.0"
