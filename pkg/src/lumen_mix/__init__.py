"""Statistical mixtures of multi-frequency coherent pulses that reproduce the
first-order correlation function of thermal light."""

from .constants import CONSTANTS_VERSION, SOLAR_TEMPERATURE
from .gaussian_mixture import (
    GaussianPulseSpec,
    WeightSolution,
    feasibility_sweep,
    fwhm_thz_to_sigma,
    kernel_M,
    solve_weights,
)
from .nnls import nnls
from .numerics import Dyadic3, PropagationFrame, QuadratureSpec
from .thermal_field import ThermalEnvironment, coherence_time, g1_thermal
from .thermal_pulse import (
    AngularProfile,
    FieldSample,
    MixtureSpec,
    MomentReport,
    ThermalPulseSpec,
    energy_mean,
    energy_std,
    field_components,
    g1_thermal_pulse_mixture,
    intensity_profile,
    mixture_density_constraint,
    moment_report,
    momentum_mean,
    momentum_std,
    momentum_variance,
)

__version__ = "0.1.0"
