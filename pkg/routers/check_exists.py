"""
check_exists.py

FastAPI router deciding whether an optimal policy exists for an MDP.

This endpoint:
- Accepts an MDP document (validated via Pydantic).
- Runs the existence check and, when positive, builds a witness policy.
- Returns the decision, both max reach probabilities, the optimal cost
  and the witness report.
"""

from fastapi import APIRouter, HTTPException

from src.errors import SynthesisError
from src.existence import check_existence
from src.logger import get_logger
from src.mdp_document import ExistenceDocument, MdpDocument, document_to_mdp, existence_document


logger = get_logger(__name__)

router = APIRouter()


@router.post("/check_exists", tags=["synthesis"], response_model=ExistenceDocument)
def check_exists(document: MdpDocument):
    logger.info("Received request to /check_exists endpoint")
    try:
        mdp = document_to_mdp(document)
        cert = check_existence(mdp)
    except SynthesisError as e:
        raise HTTPException(status_code=422, detail=str(e))

    logger.info(f"Existence result: {cert.summary()}")
    return existence_document(mdp, cert)
