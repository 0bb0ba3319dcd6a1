"""Risk experiments for drift and intensity estimation under fractional
Sobolev energies: process simulation, discrete energy functionals,
closed-form lower bounds, a shrinkage estimator, and a reproducible Monte
Carlo engine."""

from .bounds import (
    identity_risk_walphap,
    l2_bound_cox,
    l2_bound_gaussian,
    w_alpha2_bound_cox,
    w_alpha2_bound_gaussian,
    w_alphap_bound_gaussian,
)
from .energies import (
    EnergySpec,
    MeasureSpec,
    fractional_energy,
    gaussian_abs_moment,
    h1_energy,
    kernel_cell_weight,
    kernel_double_integral,
    l2_energy,
)
from .montecarlo import (
    DivergenceRow,
    ExperimentSpec,
    RiskReport,
    SteinReport,
    divergence_probe,
    estimate_risk,
    paired_resolution_estimates,
    super_efficiency_experiment,
)
from .processes import (
    CountingPath,
    DriftSpec,
    IntensitySpec,
    NumericalError,
    RealPath,
    TimeGrid,
    apply_drift,
    girsanov_weight_cox,
    girsanov_weight_gaussian,
    replication_stream,
    simulate_brownian,
    simulate_cox,
    uniform_grid,
)
from .stein import (
    PredictedRisk,
    SteinConfig,
    SteinOperator,
    apply_shrinkage,
    assemble_operator,
    laplacian_value,
    predicted_risk,
    quadratic_form,
    shift_at,
)

__version__ = "0.1.0"
