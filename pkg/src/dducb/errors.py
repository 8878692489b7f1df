"""Exception types raised across the package."""


class DDUCBError(Exception):
    """Base class for all package errors."""


class NonSquareGridError(DDUCBError, ValueError):
    pass


class DisconnectedGraphError(DDUCBError, ValueError):
    pass


class NonSymmetricMatrixError(DDUCBError, ValueError):
    pass


class MissingNeighborValueError(DDUCBError, KeyError):
    pass


class StaleNeighborIterateError(DDUCBError, ValueError):
    pass


class ArmOutOfRangeError(DDUCBError, IndexError):
    pass


class ZeroCountError(DDUCBError, ZeroDivisionError):
    pass


class ZeroMixedValueError(DDUCBError, ZeroDivisionError):
    pass


class LengthMismatchError(DDUCBError, ValueError):
    pass


class UnitEigenvalueError(DDUCBError, ValueError):
    """A gossip spectrum has |lambda_j| >= 1 for some j >= 2."""


class UnknownPresetError(DDUCBError, KeyError):
    pass


class ConfigError(DDUCBError, ValueError):
    """Invalid or unknown configuration key; the message names the key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")
