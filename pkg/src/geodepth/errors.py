"""Exception hierarchy. The CLI maps each family to an exit code."""


class GeodepthError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(GeodepthError):
    exit_code = 2


class FormatError(GeodepthError):
    """Malformed file header or payload."""

    exit_code = 3


class DataError(GeodepthError):
    """Non-finite or otherwise unusable raster values."""

    exit_code = 3


class MetadataError(GeodepthError):
    """Missing or invalid georeferencing sidecar."""

    exit_code = 3


class ContractError(GeodepthError, ValueError):
    """A precondition of an operation was violated."""

    exit_code = 4


class EmptySelectionError(ContractError):
    """No pixel survived the validity rule."""


class CalibrationError(ContractError):
    pass


class DegenerateOriginError(ContractError):
    """The camera origin lies inside an occupied voxel."""


class RegistrationError(ContractError):
    pass


class SceneSpecError(ContractError):
    pass
