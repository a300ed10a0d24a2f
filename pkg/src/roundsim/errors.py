class RoundSimError(Exception):
    """Base class for simulator errors."""


class InvalidParameterError(RoundSimError, ValueError):
    pass


class NotFoundError(RoundSimError, KeyError):
    pass


class ContractViolation(RoundSimError):
    """An operation was called outside its allowed schedule."""


class EncodeError(RoundSimError, ValueError):
    pass


class DecodeError(RoundSimError, ValueError):
    pass


class NoQuorum(RoundSimError):
    """Fewer than two distinct participants for a detection round."""


class NoEligibleGuard(RoundSimError):
    pass


class ConfigError(RoundSimError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
