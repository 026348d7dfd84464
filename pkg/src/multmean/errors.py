"""Shared exception types.

Exit-code mapping used by the command line front end:
config problems -> 2, capacity refusals -> 3, numeric trouble -> 4.
"""


class CapacityError(ValueError):
    """Requested size exceeds a configured memory/size cap."""


class EvaluationError(ValueError):
    """A rule or series produced a non-finite or divergent value."""


class MembershipError(ValueError):
    """An error-function candidate fails the admissibility conditions."""
