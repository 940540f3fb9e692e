"""Exception types shared across the package."""


class LwekitError(Exception):
    """Base class for package-specific failures."""


class ParameterError(LwekitError, ValueError):
    """A parameter is outside its documented domain."""


class CapacityError(LwekitError):
    """A size cap (qubit register, enumeration dimension) was exceeded."""


class RankError(LwekitError):
    """Input vectors do not span the required dimension."""


class MembershipError(LwekitError, ValueError):
    """A vector does not belong to the lattice."""


class NotFoundError(LwekitError):
    """No vector satisfied the search constraints."""


class DegenerateDataError(LwekitError):
    """A statistical routine received data it cannot calibrate on."""
