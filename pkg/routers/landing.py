"""
landing.py

Defines the root endpoint (`/`) that serves an HTML landing page
explaining the purpose of the API and how to use it.
"""

from fastapi import APIRouter
from fastapi.responses import HTMLResponse

router = APIRouter()

@router.get("/", response_class=HTMLResponse)
async def landing_page():
    return """
    <html>
        <head>
            <title>MDP Policy Synthesis API</title>
            <style>
                body { font-family: Arial, sans-serif; max-width: 800px; margin: auto; padding: 2em; line-height: 1.6; }
                h1 { color: #2c3e50; }
                h2 { color: #34495e; margin-top: 2em; }
                code { background-color: #f4f4f4; padding: 0.2em 0.4em; border-radius: 4px; }
                pre { background-color: #f8f8f8; padding: 1em; border-radius: 6px; overflow-x: auto; }
                ul { padding-left: 1.2em; }
                li { margin-bottom: 0.5em; }
                a { color: #1f6feb; text-decoration: none; }
                a:hover { text-decoration: underline; }
            </style>
        </head>
        <body>
            <h1>MDP Policy Synthesis API</h1>

            <p>
                Given a finite Markov decision process with a set of absorbing target states,
                this API finds policies that reach the targets with maximum probability and,
                among those, keep the expected discounted cost as low as possible.
            </p>

            <h2>Available Endpoints</h2>
            <ul>
                <li>
                    <code>POST /check_exists</code> – Decides whether an optimal policy exists
                    and returns one when it does. Otherwise only the infimum is reported.
                </li>
                <li>
                    <code>POST /synthesize/eps?eps=0.01</code> – Stationary policy within
                    <code>eps</code> of the optimal cost (randomized in general)
                </li>
                <li>
                    <code>POST /synthesize/exact?k=100&amp;time_limit=10</code> – Optimal deterministic
                    policy by mixed-integer programming (small models)
                </li>
                <li>
                    <code>POST /synthesize/approx?k=100</code> – Deterministic policy from two linear
                    programs, with suboptimality bounds
                </li>
            </ul>

            <h2>How to Use the API</h2>
            <p>
                ➡️ <a href="/docs"><strong>Go to Swagger UI (Interactive API Docs)</strong></a>
            </p>

            <p><strong>Example MDP document:</strong></p>
            <pre>
{
    "schema_version": 1,
    "states": ["s1", "s2"],
    "actions": {"s1": ["a1", "a2"], "s2": ["a1"]},
    "transitions": [
        {"state": "s1", "action": "a1", "next": "s1", "prob": 1.0},
        {"state": "s1", "action": "a2", "next": "s2", "prob": 1.0},
        {"state": "s2", "action": "a1", "next": "s2", "prob": 1.0}
    ],
    "costs": [{"state": "s1", "action": "a2", "cost": 1.0}],
    "discount": 0.5,
    "initial": "s1",
    "targets": ["s2"]
}
            </pre>

            <h2>Notes</h2>
            <ul>
                <li>Unknown fields are rejected; probabilities of each state-action pair must sum to 1.</li>
                <li>Reports always carry the exact reach probability and discounted cost of the returned policy.</li>
                <li>A lightweight <code>/ping</code> endpoint is available for uptime and health checks.</li>
            </ul>
        </body>
    </html>
    """
