"""Compound-Poisson-type approximations for convolution powers of symmetric
lattice distributions, with tracked truncation-error bounds."""

from ._kernels import IMPL as kernel_impl
from .approximants import (
    ACCOMPANYING_CP,
    CONV_POWER,
    FIRST_ORDER_CP,
    HIPP_SCP,
    ApproximantKind,
    ApproximationResult,
    approximate,
    bergstrom_kind,
    bergstrom_partial,
    cp_accompanying,
    first_order_cp,
    hipp_power,
    measure_exp,
)
from .bounds import (
    BOUND_IDS,
    LEMMA_IDS,
    BoundConfig,
    BoundReport,
    KnownBoundInputs,
    LineComponent,
    LineMixture,
    decompose_line_mixture,
    delta_functional,
    delta_functional_many,
    evaluate_bound,
    fit_constant,
    g_function,
    lemma_lhs,
    lemma_lhs_with_err,
    with_sigma,
)
from .errors import (
    CoordinateOverflowError,
    DimensionMismatchError,
    NumericalRefusalError,
)
from .experiments import (
    ExampleSpec,
    ExperimentRecord,
    ScanResult,
    example_mixture,
    filter_honest,
    lemma_scan,
    make_example,
    rate_slope,
    records_to_csv,
    slope_of_values,
    sweep,
    tail_cubic,
    tail_quartic,
)
from .measure import (
    SignedLatticeMeasure,
    SymmetricDistribution,
    convolution_power,
    convolve,
    identity,
    linear_combine,
    loads_measure,
    dumps_measure,
    read_measure,
    scale,
    symmetry_check,
    truncate,
    tv_distance,
    tv_norm,
    write_measure,
)

__version__ = "0.1.0"
