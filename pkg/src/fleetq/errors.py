"""Exception types raised by fleetq."""


class FleetqError(Exception):
    """Base class for all fleetq errors."""


class InvalidInputError(FleetqError, ValueError):
    pass


class UnstableRegimeError(FleetqError, ValueError):
    """Fleet is no larger than mean daily demand, so the waiting bound diverges."""


class InfeasibleError(FleetqError):
    """No fleet size in the admissible range meets the QoS target."""


class OracleSizeError(FleetqError, ValueError):
    pass


class TripFormatError(FleetqError, ValueError):
    pass


class InsufficientDataError(FleetqError, ValueError):
    pass


class InvalidTargetError(FleetqError, ValueError):
    pass


class UndefinedRatioError(FleetqError, ValueError):
    pass
