"""Exception types raised across the package."""


class RelayCellError(Exception):
    """Base class for domain errors."""


class InvalidArgument(RelayCellError, ValueError):
    pass


class InvalidConfig(RelayCellError, ValueError):
    pass


class InvalidRole(InvalidConfig):
    pass


class TopologyCycle(InvalidConfig):
    pass


class MultiAttach(InvalidConfig):
    pass


class AddressCollision(InvalidConfig):
    pass


class NoCoverage(RelayCellError):
    """The cell never reaches the threshold, not even at the minimum distance."""


class Unreachable(RelayCellError):
    """The two nodes live in different trees of the cell forest."""


class EmptyInput(RelayCellError, ValueError):
    pass


class DegenerateFit(RelayCellError, ValueError):
    pass


class NoBaseline(RelayCellError):
    """The reference map has no covered tile to measure an extension from."""
