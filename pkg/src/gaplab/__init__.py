"""gaplab: bounded-gap integer sequences with a prescribed iterated-logarithm
limit constant, plus the statistics to check every finite-size identity the
construction admits."""

from .construction import (
    BlockCoords,
    LevelTable,
    SelectionStream,
    SeqParams,
    block_coords,
    block_values,
    build_level_table,
    default_table,
    gap_counts,
    iter_selected,
    iter_sequence,
    level_partition_mismatches,
    partition_defect,
    selected_chunks,
    selection_count,
    sequence_chunks,
)
from .errors import (
    ParameterError,
    RangeError,
    ResourceCapError,
    SingularDenominator,
)
from .fixedpoint import UnitPoint, frac_mul, frac_mul_array
from .kernels import (
    COS_ONE,
    CenteredIndicator,
    PeriodicFunction,
    TrigPoly,
    block_sum,
    block_sum_closed,
    block_sum_direct,
    cosine_sum_closed,
    cross_term,
    dyadic_indicator,
    eval_periodic,
    eval_periodic_array,
    f_norm,
    variation_bound,
)
from .montecarlo import (
    DensityCheck,
    ExperimentConfig,
    McReport,
    VarianceCheck,
    density_check,
    run_lil_experiment,
    variance_validation,
)
from .parameters import (
    ConstantsReport,
    disc_constant,
    lil_constant,
    max_constant,
    solve_params,
)
from .statistics import (
    LilTrace,
    TraceAccumulator,
    dyadic_discrepancies,
    extremal_discrepancy,
    geometric_checkpoints,
    integer_chunks,
    koksma_check,
    lil_normalizer,
    littlewood_signs,
    star_discrepancy,
    trace_many,
    trace_partial_sums,
)

__version__ = "0.1.0"
