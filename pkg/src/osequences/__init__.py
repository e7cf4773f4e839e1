"""Exact counting of finite O-sequences and calibration of their asymptotic bounds."""

from .calibration import (
    CalibrationReport,
    FitLine,
    calibrate_lower,
    calibrate_upper,
    least_squares,
    log_of_bigcount,
    low_bound,
    predict,
    prediction_zone,
    up_bound,
)
from .combinatorics import (
    BinomialExpansion,
    EnumerationBudgetError,
    OSequence,
    binomial_expansion,
    count_opnkd_oracle,
    enumerate_o_sequences,
    is_o_sequence,
    macaulay_bound,
    partition_number,
)
from .engine import (
    CountTable,
    EngineOptions,
    Layer,
    TruncPoly,
    ad_via_closed_sums,
    init_layer_p1,
    next_layer,
    od_via_closed_sums,
    poly_mul_trunc,
    run_iterative,
)
from .properties import (
    PropertyVerdict,
    check_A_subfibonacci,
    check_ratio_decreasing,
    check_sz_sandwich,
    is_sub_fibonacci,
    roberts_diagnostic,
)

__version__ = "0.1.0"
