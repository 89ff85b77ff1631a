"""Exception hierarchy shared by every module."""


class TdquadError(Exception):
    """Base class; the CLI maps subclasses of ConfigError to exit status 2."""


class ConfigError(TdquadError):
    """Invalid input parameters (bad sizes, mismatched objects, unknown keys)."""


class RuntimeFailure(TdquadError):
    """A valid request that could not be completed (budgets, exhausted hosts)."""


# map-core
class MapError(ConfigError):
    pass


class BrokenInvolution(MapError):
    pass


class BrokenRotation(MapError):
    pass


class Disconnected(MapError):
    pass


class NonPlanar(MapError):
    pass


class EmptySourceSet(ConfigError):
    pass


# tree-kit
class InvalidDyckPath(ConfigError):
    pass


class IndexOutOfRange(ConfigError):
    pass


class InadmissibleMarkedTree(ConfigError):
    pass


# quad-sampler
class InadmissibleParameters(ConfigError):
    pass


class DegenerateCore(RuntimeFailure):
    pass


class AcceptanceTooLow(RuntimeFailure):
    pass


class TooLarge(ConfigError):
    pass


class ArcTooLarge(ConfigError):
    pass


class EmptyLeftover(RuntimeFailure):
    pass


# gluing
class SizeMismatch(ConfigError):
    pass


class DecorationNotATree(ConfigError):
    pass


class WindowTooShort(ConfigError):
    pass


# peeling
class SpineTooShort(ConfigError):
    pass


class Exhausted(RuntimeFailure):
    pass


class TooFewSamples(ConfigError):
    pass


# experiments
class DegenerateSamples(ConfigError):
    pass
