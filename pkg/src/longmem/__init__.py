"""Long-memory diagnostics for limit-order-book order-sign series."""

__version__ = "0.1.0"

from .acf import AcfEstimate, loglog_points, loglog_slope, mean_acf, sample_acf
from .changepoint import (
    BERKES_CRITICAL_1PCT,
    ChangePointResult,
    berkes_test,
    cusum_estimate,
    normalize_cp,
    null_ecdf,
)
from .rescaled_range import (
    LO_CRITICAL_REGION,
    LoResult,
    PoxPlot,
    andrews_bandwidth,
    andrews_q,
    ar1_mle,
    lo_test,
    newey_west_sigma,
    pox_plot,
    rescaled_range,
)
from .scaling import (
    DfaResult,
    GphResult,
    alpha_to_h,
    beta_to_h,
    dfa_estimate,
    dfa_fluctuation,
    dfa_profile,
    gph_estimate,
    periodogram,
)
from .series import (
    FlowKind,
    OrderEvent,
    SeriesLabel,
    SignSeries,
    SummaryStats,
    build_cross_day,
    build_sign_series,
    filter_session,
    parse_events,
    summary_stats,
)
from .synth import GenSpec, gen_ar1, gen_fgn, gen_iid_signs, gen_mean_shift, signs_of
