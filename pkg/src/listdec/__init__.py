"""List-decodability toolkit for binary Hamming and rank-metric codes.

Constructs random, potential-guided and resampled codes, certifies their
(p, L)-list-decodability exactly at desk scale, and exposes the volume,
tail-statistic and second-moment calculators behind those experiments.
"""

from .counting import (
    binary_entropy,
    binomial,
    check_rank_ball_bounds,
    check_volume_bounds,
    entropy_power,
    gaussian_binomial,
    hamming_volume,
    intersection_volume,
    overlap_decay,
    rank_ball_size,
)
from .constructors import (
    CodeTable,
    LLLReport,
    MoserTardosResult,
    PotentialTrace,
    lll_condition,
    moser_tardos_construct,
    potential_guided_code,
    random_linear_code,
    uniform_random_code,
    verify_trace,
)
from .errors import (
    ConstructionError,
    InvalidParameterError,
    PrecisionError,
    ResourceLimitError,
)
from .gf2 import (
    BitMatrix,
    BitVector,
    Rng,
    enumerate_ball,
    hamming_distance,
    random_vector,
    rank_of_span,
)
from .listsize import (
    Certificate,
    DecodingParams,
    EnvelopeTrace,
    LinearCode,
    ListProfile,
    PotentialState,
    StepReport,
    certify,
    check_potential_step,
    check_sum_rule,
    check_tail_bound,
    envelope_trace,
    list_profile,
    list_profile_naive,
    list_size_table,
    max_envelope_steps,
    potential,
    tail_stats,
)
from .rankmetric import (
    RankCode,
    RankParams,
    baseline_potential_bound,
    certify_rank,
    check_rank_potential_step,
    enumerate_rank_ball,
    random_linear_rank_code,
    rank_distance,
    rank_list_profile,
    rank_list_profile_naive,
    rank_potential,
)
from .secondmoment import (
    ball_fraction,
    check_rank_rate_bound,
    cluster_variance_bound,
    expected_cluster_count,
    log2_fraction,
    lower_bound_params,
    pair_event_probability,
    separation_experiment,
)

__version__ = "0.1.0"
