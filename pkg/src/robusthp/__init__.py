"""Robust hybrid precoding for misaligned millimeter-wave beams.

Library plus CLI simulator: array geometry and sparse channels, robust
fully-digital precoders, constant-modulus hybrid factorization, a
zero-forcing second stage, and a Monte-Carlo spectral-efficiency harness.
"""

from .cancellation import (
    CompositePrecoder,
    EffectiveChannelSet,
    bd_precoder,
    compose_hybrid,
    effective_channels,
)
from .digital import (
    AngleGrid,
    DigitalPrecoder,
    NullSpaceBasis,
    conventional_dp,
    es_precoder,
    fm_precoder,
    minmax_ball_solver,
    null_space_basis,
)
from .errors import (
    DegenerateChannelError,
    IllConditionedFactorizationError,
    InfeasibleGeometryError,
    NonConvergenceError,
    RankDeficiencyError,
    RobustPrecodingError,
    UnsupportedSolverError,
)
from .errorstats import (
    ExpectedResponseParams,
    SeriesCoefficients,
    expected_array_response,
    expected_element,
    quadrature_expected_element,
    series_coefficients,
)
from .geometry import (
    ArrayGeometry,
    ChannelRealization,
    MisalignmentModel,
    PathParams,
    channel_from_paths,
    generate_channel,
    receive_combiner,
    sample_misalignment,
    steering_vector,
)
from .hybrid import (
    CmlsProblem,
    HybridPrecoder,
    approximate_hybrid,
    digital_ls_step,
    gp_analog_step,
    lsp_analog,
)
from .metrics import (
    Beampattern,
    FlopEstimate,
    RateReport,
    beampattern,
    flops_gp,
    flops_lsp,
    flops_mo,
    per_user_rate,
    rate_report,
)
from .simulate import (
    SystemConfig,
    TrialRecord,
    emit_beampattern,
    emit_results,
    records_from_json,
    run_experiment,
    summarize,
)

__version__ = "0.1.0"
