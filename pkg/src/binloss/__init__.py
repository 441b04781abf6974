"""Fisher information lost by binning list-mode Poisson data."""

from .errors import (
    BinLossError,
    ConfigError,
    DomainError,
    EmptyBinError,
    EnvelopeExceededError,
    InputError,
    NonpositiveDensityError,
    OutsideSpaceError,
    PartitionError,
    ShapeError,
    ZeroPerturbationError,
)
from .model import (
    AttributeSpace,
    ParametricModel,
    affine_1d_model,
    constant_model,
    gaussian_mixture_model,
    grad_check,
    grad_mean_at,
    mean_at,
    scaled_profile_model,
    total_mean,
)
from .binning import (
    BinningScheme,
    apply_binning,
    apply_binning_adjoint,
    bin_index,
    bin_means,
    explicit_scheme,
    project_component,
    uniform_grid,
    verify_partition,
)
from .quadrature import NodeRule, build_rule, integrate, integrate_per_bin, rebin_rule
from .fisher import (
    Detectability,
    LossReport,
    auc_from_detectability,
    average_loss_isotropic,
    average_loss_trace,
    detectability_from_fim,
    fim_binned,
    fim_difference,
    fim_list_mode,
    loss_quadform,
)
from .reconstruction import (
    ObjectGrid,
    PsfSpec,
    SystemOperator,
    apply_system,
    bandlimited_psf_values,
    binned_system,
    build_convolution_operator,
    equality_residual,
    loss_object,
)
from .montecarlo import EventList, bin_counts, empirical_mean_check, sample_list

__version__ = "0.1.0"
