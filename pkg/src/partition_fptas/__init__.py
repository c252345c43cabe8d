"""Deterministic approximation scheme for Partition.

The solver reduces Partition to a family of reduced subproblems whose
subset sums are approximated with μ-canonical sets and the approximate
sumset ⊕_μ, then recovers an explicit witness subset.
"""

__version__ = "0.1.0"

from .canonical import MuCanonicalSet, oplus_mu, recover_pair, round_to_canonical, validate, validate_complete
from .intset import IntegerSet, make_set, oplus, restrict, scale_floor, sumset
from .oracle import ApproxSpec, check_approx, exact_partition_opt, exact_subset_sums
from .pipeline import PartitionInstance, PartitionSolution, solve_partition
from .reduced import RpInstance, recover_subset, solve_rp

__all__ = [
    "ApproxSpec",
    "IntegerSet",
    "MuCanonicalSet",
    "PartitionInstance",
    "PartitionSolution",
    "RpInstance",
    "check_approx",
    "exact_partition_opt",
    "exact_subset_sums",
    "make_set",
    "oplus",
    "oplus_mu",
    "recover_pair",
    "recover_subset",
    "restrict",
    "round_to_canonical",
    "scale_floor",
    "solve_partition",
    "solve_rp",
    "sumset",
    "validate",
    "validate_complete",
]
