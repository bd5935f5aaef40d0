"""Exception hierarchy for the package.

Two families matter to callers (and to the command-line tool, which maps
them to distinct exit codes):

* :class:`InvalidArgumentError` and subclasses -- the caller handed us
  something that violates a documented precondition.  These are
  ``ValueError`` subclasses.
* :class:`NumericalError` and subclasses -- the inputs were legal but a
  numerical procedure failed (step-size underflow, no convergence,
  missing branch).  These are ``RuntimeError`` subclasses.
"""

from __future__ import annotations


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class SingularParameterError(InvalidArgumentError):
    """A closed-form expression is singular at these exact parameters."""


class OutOfDomainError(InvalidArgumentError):
    """A time outside the interpolable domain of a trajectory."""


class NumericalError(RuntimeError):
    """A numerical procedure failed on legal inputs."""


class StiffnessError(NumericalError):
    """Adaptive step size underflowed; the problem is locally too stiff.

    Attributes
    ----------
    time : float
        Integration time at which the step size underflowed.
    """

    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"step size underflow at t = {time:.6g}")


class NoBranchError(NumericalError):
    """A continuation run could not establish its starting solution."""
