"""Exception types raised across the engine."""


class CrossedHomError(Exception):
    """Base class for every error raised by this package."""


class CompositionNonzero(CrossedHomError):
    """d_out . d_in is not zero, so the matrices do not form a complex."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotFinite(CrossedHomError):
    def __init__(self, cap):
        super().__init__(f"group closure exceeded cap of {cap} elements")
        self.cap = cap


class NotHomomorphism(CrossedHomError):
    pass


class ActionInvalid(CrossedHomError):
    pass


class BadWindow(CrossedHomError):
    pass


class NotElliptic(CrossedHomError):
    pass


class NotCommutative(CrossedHomError):
    pass


class WrongComponent(CrossedHomError):
    pass


class DegeneratePairing(CrossedHomError):
    pass


class NotSymplecticFixedSpace(CrossedHomError):
    pass


class E1MismatchError(CrossedHomError):
    pass


class SBIViolation(CrossedHomError):
    pass


class UnsupportedModel(CrossedHomError):
    pass


class ConfigError(CrossedHomError):
    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        text = f"{message} ({', '.join(where)})" if where else message
        super().__init__(text)
        self.message = message
        self.field = field
        self.line = line


class CacheCorrupt(CrossedHomError):
    pass
