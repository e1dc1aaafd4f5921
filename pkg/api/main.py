"""
main.py

Entry point for the FastAPI app.

Includes routers for:
- Landing page (`/`)
- Health check (`/ping`)
- Existence decision (`/check_exists`)
- Policy synthesis (`/synthesize/{method}`, method in eps | exact | approx)
"""

from fastapi import FastAPI
from routers import check_exists, landing, ping, synthesize

# Create FastAPI app with metadata
app = FastAPI(
    title="MDP Policy Synthesis API",
    description="Synthesizes policies that reach a target set with maximum probability "
                "and, among those, minimize the expected discounted cost.",
    version="1.0.0"
)

# Register available routes
app.include_router(landing.router)          # Root landing page
app.include_router(ping.router)             # Health check endpoint
app.include_router(check_exists.router)     # Optimal-policy existence decision
app.include_router(synthesize.router)       # eps-optimal, exact and approximate synthesis
