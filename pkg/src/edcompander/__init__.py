"""Compander design and Monte Carlo validation for zero-delay transmission of
a scalar source over AWGN with orthogonal signalling and ML decoding."""

from .analysis import (
    CompanderDesign,
    DispersionReport,
    ExponentResult,
    KnoppParams,
    c_max,
    end_to_end_bound,
    exact_orthogonal_error_prob,
    knopp_analytic_bound,
    knopp_distortion_bound,
    knopp_exponent,
    knopp_optimize,
    naive_design,
    naive_design_report,
    num_levels,
    omega,
    optimize_design,
    outage_conditional_bound,
    outage_probability_bound,
    scheme_exponent,
    solve_beta_hat,
)
from .compander import (
    PointDensity,
    Quantizer,
    SourceModel,
    bennett_integral,
    build_quantizer,
    compressor,
    density_second_moment,
    expander,
    finite_n_mse,
    gaussian_source,
    naive_point_density,
    optimized_point_density,
    uniform_source,
)
from .simulator import SimConfig, SimMode, SimResult, SweepRecord, run_simulation, sweep

__version__ = "0.1.0"
