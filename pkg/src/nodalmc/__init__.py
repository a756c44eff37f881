"""Monte Carlo estimation of nodal lengths of random band-limited waves."""

__version__ = "0.1.0"

from .specfun import (  # noqa: E402
    DomainError,
    KernelSpec,
    bessel_j,
    gradient_variance,
    isotropic_kernel,
    kac_rice_density,
    legendre_assoc_normalized,
    legendre_row,
    unit_ball_volume,
)
from .laws import CoefficientLaw, SeedStream, draw_hermitian_pair, draw_real, parse_law  # noqa: E402
from .spectra import (  # noqa: E402
    EmptyWindowError,
    FrequencySet,
    annulus_points,
    circle_points,
    mode_count_normalizer,
    r2_divisor_formula,
    sphere_degree,
)
from .ensembles import (  # noqa: E402
    Ensemble,
    FieldSample,
    PlaneChart,
    ResolutionError,
    Sphere,
    Torus1,
    Torus2,
    empirical_covariance,
    lag_covariance,
    sample_arw,
    sample_bandlimited_torus,
    sample_function,
    sample_rwm_plane,
    sample_sphere,
)
from .nodal import (  # noqa: E402
    doubling_index,
    extract_segments,
    nodal_length,
    restricted_nodal_length,
    richardson,
    small_ball_probability,
)
from .mcstats import (  # noqa: E402
    ExperimentSpec,
    MCSummary,
    Measurement,
    distribution_compare,
    locality_check,
    mc_expectation,
    permutation_ks,
    variance_scan,
)
