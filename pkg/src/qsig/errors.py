"""Exception hierarchy shared by all qsig modules."""


class QsigError(Exception):
    """Base class for every error raised by the simulator."""


class SizeError(QsigError, ValueError):
    """An operation was asked for a system size it does not support."""


class KeyLengthError(QsigError, ValueError):
    """Key material is shorter than (or not equal to) what an operation needs."""


class KeyReuseError(QsigError):
    """A one-time key segment was used a second time in the same direction."""


class FormatError(QsigError, ValueError):
    """An envelope or transcript does not have the expected field layout."""


class UnderflowError(QsigError):
    """A QKD session produced no usable key bits after sampling."""


class ProvisioningError(QsigError):
    """Key provisioning gave up after too many aborted QKD sessions."""
