"""Conic solver, process Choi operators and the cloning SDP."""

from .problem import ProblemBuilder, SdpProblem, SdpSolution
from .solver import SolverConfig, real_embedding, solve
from .process import (KINDS, PROCESS_TOL, ProcessChoi, ProcessError, apply_process,
                      constant_process, dummy_process, identity_process, process_from_map,
                      projector, projector_rank)
from .fidelity import (CloningSdpConfig, CloningSdpResult, build_cloning_problem,
                       evaluate_process, feasibility_sdp, worst_case_sdp)

__all__ = [
    "ProblemBuilder", "SdpProblem", "SdpSolution", "SolverConfig", "real_embedding", "solve",
    "KINDS", "PROCESS_TOL", "ProcessChoi", "ProcessError", "apply_process", "constant_process",
    "dummy_process", "identity_process", "process_from_map", "projector", "projector_rank",
    "CloningSdpConfig", "CloningSdpResult", "build_cloning_problem", "evaluate_process",
    "feasibility_sdp", "worst_case_sdp",
]
