"""Cut-and-project model sets: point generation, Fourier-Bohr coefficients,
diffraction spectra and numerical checks of the Poisson summation argument
behind their convergence."""

from .cps import (
    CutProjectScheme,
    ModelSetPoints,
    make_cps,
    model_set_points,
    physical_part,
    points_in_strip,
    preset,
    star_map,
)
from .errors import (
    AmbiguousMatch,
    Condition1Violated,
    ConfigError,
    DensenessSuspect,
    HypothesisViolated,
    LevelTooFine,
    ModelSetError,
    ProjectionNotInjective,
    RegionTooLarge,
    SingularMatrix,
    TailNotSummable,
)
from .fourier_bohr import (
    FBValue,
    FourierModulePoint,
    convergence_sweep,
    fb_coefficient_finite,
    fb_coefficient_limit,
    is_in_fourier_module,
    spectrum,
)
from .lattice import Lattice, SupNormBox, dual_lattice, enumerate_in_region, lattice_density, make_lattice
from .psf import (
    SummableTestFunction,
    TailBoundReport,
    direct_mollified_sum,
    epsilon_R_compute,
    F_R_eval,
    mollifier_gap_sweep,
    psf_identity_check,
    reciprocal_mollified_sum,
    tail_bound_report,
)
from .window import (
    AlignedBoxWindow,
    GeneralWindow,
    MollifierParams,
    PolygonWindow,
    boundary_neighborhood_volume,
    dyadic_decompose,
    ft_indicator_box,
    ft_indicator_bound,
    ft_indicator_general,
    interval,
    mollified_window_ft,
    octagon,
)

__version__ = "0.1.0"
