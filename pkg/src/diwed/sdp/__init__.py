"""Marginal + PPT semidefinite relaxation and its solvers."""
from diwed.sdp.certify import PartitionCertificate, ThetaSearch, certify_partition, lower_bound, region_settings
from diwed.sdp.linalg import partial_trace, partial_transpose, smat, svec
from diwed.sdp.problem import (
    PAIR_CAP,
    ConstraintSystem,
    SdpProblem,
    SdpSolution,
    build_relaxation,
    certified_dual,
    dump_sdpa,
    product_assignment,
    read_sdpa,
)
from diwed.sdp.solver import pick_engine, solve_sdp

__all__ = [
    "PAIR_CAP",
    "ConstraintSystem",
    "PartitionCertificate",
    "SdpProblem",
    "SdpSolution",
    "ThetaSearch",
    "build_relaxation",
    "certified_dual",
    "certify_partition",
    "dump_sdpa",
    "lower_bound",
    "partial_trace",
    "partial_transpose",
    "pick_engine",
    "product_assignment",
    "read_sdpa",
    "region_settings",
    "smat",
    "solve_sdp",
    "svec",
]
