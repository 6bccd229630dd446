"""Engine selection for standard-form SDPs."""
from __future__ import annotations

from diwed.core import InvalidInputError
from diwed.sdp.admm import solve_admm
from diwed.sdp.ipm import solve_ipm
from diwed.sdp.problem import SdpProblem, SdpSolution

IPM_MAX_CONSTRAINTS = 1000
IPM_MAX_BLOCK = 64
ENGINES = ("auto", "ipm", "admm")
ACCEPTED = ("optimal", "near-optimal")


def pick_engine(problem: SdpProblem) -> str:
    if problem.m <= IPM_MAX_CONSTRAINTS and max(problem.dims) <= IPM_MAX_BLOCK:
        return "ipm"
    return "admm"


def solve_sdp(problem: SdpProblem, tol: float = 1e-8, engine: str = "auto", max_iter: int | None = None,
              warm: dict | None = None) -> SdpSolution:
    """Solve and attach the certified dual bound.

    ``warm`` (the ``state`` of an earlier ADMM solution on the same
    constraints) is ignored by the interior-point engine.
    """
    if engine not in ENGINES:
        raise InvalidInputError(f"unknown engine {engine!r}")
    auto = engine == "auto"
    if auto:
        engine = pick_engine(problem)
    if engine == "ipm":
        sol = solve_ipm(problem, tol=tol, max_iter=max_iter or 100)
        if not auto or sol.status in ACCEPTED:
            return sol
    return solve_admm(problem, tol=tol, max_iter=max_iter or 20000, warm=warm)
