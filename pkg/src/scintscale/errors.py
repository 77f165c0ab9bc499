"""Exception hierarchy shared by every module."""


class ScintError(Exception):
    """Base class for all errors raised by scintscale."""


class EmptyWindow(ScintError, ValueError):
    pass


class ZeroMeanIntensity(ScintError, ValueError):
    pass


class NonPositiveFrequency(ScintError, ValueError):
    pass


class EqualFrequencies(ScintError, ValueError):
    pass


class NonPositiveS4(ScintError, ValueError):
    pass


class UnknownBand(ScintError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnsortedInput(ScintError, ValueError):
    pass


class DegenerateDesign(ScintError, ValueError):
    pass


class EmptyInput(ScintError, ValueError):
    pass


class ZeroVariance(ScintError, ValueError):
    pass


class ConfigError(ScintError, ValueError):
    pass


class HeaderMismatch(ScintError, ValueError):
    pass


class ZeroReference(ScintError, ZeroDivisionError):
    pass


class MissingAzimuth(ScintError, ValueError):
    pass


class InvalidTarget(ScintError, ValueError):
    pass
