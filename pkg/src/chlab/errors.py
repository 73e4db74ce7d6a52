"""Exception hierarchy shared by all chlab modules.

Every failure mode that callers are expected to handle has its own class so
that drivers (and the command-line front end) can map errors onto exit codes
without string matching.  All exceptions derive from :class:`ChlabError`.
"""

from __future__ import annotations


class ChlabError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatch(ChlabError):
    """Two fields (or a field and a grid) do not live on the same grid."""


class NonZeroMean(ChlabError):
    """An operation that requires mean-zero data received data with a mean.

    The inverse Neumann Laplacian is only defined on the mean-zero
    complement; callers must subtract the mean first.
    """


class OutOfDomain(ChlabError):
    """A phase-field value left the admissible range of the potential.

    The logarithmic potential derivatives are singular at +-1; evaluating
    them outside (-1, 1) means an upstream barrier safeguard failed.
    """


class KappaZero(ChlabError):
    """A regularized-potential routine was called with kappa = 0.

    kappa = 0 selects the exact logarithmic potential, which has no
    extension outside [-1, 1].
    """


class NoConvergence(ChlabError):
    """An iterative scalar solve exhausted its iteration budget."""


class NewtonDiverged(ChlabError):
    """The implicit field solve stagnated before reaching its tolerance."""


class BarrierBreach(ChlabError):
    """Backtracking could not keep the Newton iterate strictly inside (-1, 1)."""


class EpsZero(ChlabError):
    """A diagnostic that needs a positive viscosity coefficient got eps = 0."""


class ParseError(ChlabError):
    """A configuration file could not be parsed; message carries line info."""


class ValidationError(ChlabError):
    """A configuration violated one or more parameter rules.

    Attributes
    ----------
    violations : list[str]
        Every violated rule, each prefixed with its rule-group name
        ("H1" for potential parameters, "H2" for model constants, or the
        section name for plumbing keys).  All violations are collected
        before raising so a bad file is diagnosed in one pass.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CorruptSnapshot(ChlabError):
    """A snapshot file failed its magic, shape, or size checks."""


class CheckFailed(ChlabError):
    """A strict-mode verification (sandwich, monotonicity, rate match) failed."""
