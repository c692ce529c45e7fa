"""Certified lower and upper bounds for the extremal density and counting rate of
divisor-graph pattern-avoiding subsets of {1..n}, via exact truncated series
evaluation, with a brute-force oracle for small-scale validation.
"""

from .numtheory import (
    CanonicalKey,
    IntervalGraph,
    RootedComponent,
    canonical_key,
    divisor_connected_component,
    largest_prime_factor,
    primes_up_to,
    rooted_component,
    smooth_numbers,
)
from .oracle import (
    brute_count,
    brute_max_size,
    brute_size_counts,
    exact_reference_series,
    telescope_check,
)
from .patterns import (
    AdmissibleFamily,
    Pattern,
    PatternError,
    builtin_family,
    chain,
    contains_pattern,
    family_from_file,
    family_from_json,
    in_fork,
    is_admissible,
    is_admissible_with,
    r_fork,
    two_fork,
)
from .series import (
    BlockCache,
    SeriesEstimate,
    TruncationParams,
    block_weight,
    block_weight_exact,
    collect_blocks,
    enumerate_triples,
    evaluate,
    retained_pairs,
    term_weight,
    term_weight_exact,
)
from .solver import (
    COUNTING,
    DENSITY,
    BlockRecord,
    Mode,
    ResourceLimitError,
    clear_caches,
    count_admissible,
    local_increment,
    max_admissible_size,
    partition_function,
    partition_mode,
    solve_block,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleFamily",
    "BlockCache",
    "BlockRecord",
    "COUNTING",
    "CanonicalKey",
    "DENSITY",
    "IntervalGraph",
    "Mode",
    "Pattern",
    "PatternError",
    "ResourceLimitError",
    "RootedComponent",
    "SeriesEstimate",
    "TruncationParams",
    "block_weight",
    "block_weight_exact",
    "brute_count",
    "brute_max_size",
    "brute_size_counts",
    "builtin_family",
    "canonical_key",
    "chain",
    "clear_caches",
    "collect_blocks",
    "contains_pattern",
    "count_admissible",
    "divisor_connected_component",
    "enumerate_triples",
    "evaluate",
    "exact_reference_series",
    "family_from_file",
    "family_from_json",
    "in_fork",
    "is_admissible",
    "is_admissible_with",
    "largest_prime_factor",
    "local_increment",
    "max_admissible_size",
    "partition_function",
    "partition_mode",
    "primes_up_to",
    "r_fork",
    "retained_pairs",
    "rooted_component",
    "smooth_numbers",
    "solve_block",
    "telescope_check",
    "term_weight",
    "term_weight_exact",
    "two_fork",
    "__version__",
]
