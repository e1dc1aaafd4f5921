"""
synthesize.py

FastAPI router for policy synthesis.

This endpoint:
- Accepts an MDP document (validated via Pydantic) and the method in the path.
- Runs eps-optimal, exact (MILP) or approximate (LP) synthesis.
- Returns the report with the policy, its exact reach probability and cost.
"""

from typing import Literal

from fastapi import APIRouter, HTTPException

from src.config import DEFAULT_BIG_M_FACTOR
from src.deterministic_approx import synth_approx
from src.deterministic_exact import solve_exact
from src.epsilon_synthesis import synth_eps_optimal
from src.errors import SynthesisError
from src.logger import get_logger
from src.mdp_document import MdpDocument, ReportDocument, document_to_mdp, report_document


logger = get_logger(__name__)

API_TIME_LIMIT = 10.0

router = APIRouter()


@router.post("/synthesize/{method}", tags=["synthesis"], response_model=ReportDocument)
def synthesize(method: Literal["eps", "exact", "approx"], document: MdpDocument, eps: float = 0.01,
               k: int = DEFAULT_BIG_M_FACTOR, time_limit: float = API_TIME_LIMIT, zero_out: bool = False):
    logger.info(f"Received request to /synthesize/{method} endpoint")
    if method == "eps" and eps <= 0:
        raise HTTPException(status_code=400, detail="eps must be positive")
    if k < 1 or time_limit <= 0:
        raise HTTPException(status_code=400, detail="k must be >= 1 and time_limit positive")

    try:
        mdp = document_to_mdp(document)
        if method == "eps":
            report = synth_eps_optimal(mdp, eps)
        elif method == "exact":
            report = solve_exact(mdp, k=k, time_limit=time_limit)
        else:
            report = synth_approx(mdp, k=k, zero_out=zero_out)
    except SynthesisError as e:
        raise HTTPException(status_code=422, detail=str(e))

    logger.info(f"[{method}] reach={report.reach:.6g} J={report.cost:.6g}")
    return report_document(mdp, report)
