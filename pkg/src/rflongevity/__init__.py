"""Measurement-induced degradation of quantum reference frames."""

from .directional import (
    DegradationTrace,
    DirectionalKraus,
    RepresentationError,
    SpinRFState,
    analytic_success_directional,
    closed_form_populations,
    initial_slope_directional,
    kraus_directional,
    optimal_directional_state,
    simulate_directional,
    success_probability_directional,
    update_diagonal,
    update_full,
)
from .longevity import (
    Directional,
    LongevityResult,
    ScalingResult,
    decay_crossing_directional,
    longevity_analytic_directional,
    longevity_simulated,
    mrfm_estimate,
    scaling_experiment,
)
from .numerics import (
    DegenerateFitError,
    LineFit,
    TridiagonalSymmetric,
    extreme_eigenpair,
    fit_line,
    log_binomial,
)
from .phase import (
    Coherent,
    FockBandState,
    OptimalBounded,
    closed_form_band1,
    coherent_state,
    optimal_phase_state,
    phase_projectors,
    simulate_phase,
    success_probability_phase,
    update_phase,
)

__version__ = "0.1.0"
