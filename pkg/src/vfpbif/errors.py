"""Exception vocabulary shared by all modules.

The CLI maps these onto fixed exit codes (see cli.EXIT_CODES).
"""


class VfpError(Exception):
    """Base class for all package errors."""


class DomainError(VfpError):
    """Arguments outside the mathematical domain of an operation."""


class PrecisionError(VfpError):
    """Requested tolerance could not be certified."""


class DegenerateInput(VfpError):
    """Structurally degenerate input (e.g. zero coupling where an instability is required)."""


class NoSignChange(VfpError):
    """Root bracket does not straddle a sign change (stable configuration)."""


class ComplexBranch(VfpError):
    """No real root in the physical range; the root has left the real axis."""


class NotARoot(VfpError):
    """A growth rate was supplied that is not a root of the dispersion relation."""


class SingularSystem(VfpError):
    """Linear system singular or numerically unsolvable at the working precision."""


class DenominatorNearZero(VfpError):
    """Self-consistency denominator (second-harmonic dispersion factor) vanishes."""


class CFLViolation(VfpError):
    """Per-step growth indicates the time step is too large for the advection coupling."""


class SimulationError(VfpError):
    """Base for simulator run failures; carries the partial report when available."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NoSaturation(SimulationError):
    """Run ended without a first local maximum of the mode-1 amplitude."""


class UnderResolved(SimulationError):
    """Hermite tail grew beyond the resolution guard during a run."""
