"""
errors.py

Exception types raised by the synthesis modules.

Solver outcomes (infeasible, unbounded, timeout) are statuses on the
solution records, not exceptions; these classes cover invalid inputs and
broken internal invariants.
"""


class SynthesisError(Exception):
    """Base class for every error raised by this project."""


class MdpValidationError(SynthesisError):
    """Raised when an MDP violates its invariants. Holds the violation list."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PolicyMismatchError(SynthesisError):
    """A policy puts mass on actions that the MDP does not enable."""


class NumericalError(SynthesisError):
    """A linear solve or LP failed where the theory guarantees success."""


class CostAssumptionError(SynthesisError):
    """Nonzero cost on a target or zero-probability state."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        shown = ", ".join(f"({s}, {a})" for s, a in self.pairs[:10])
        super().__init__(f"cost must be 0 on targets and zero-reach states; offending pairs: {shown}")


class OracleSizeError(SynthesisError):
    """The brute-force policy enumeration would exceed its size guard."""


class DocumentError(SynthesisError):
    """Malformed MDP/policy/layout document. Holds field-located diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
