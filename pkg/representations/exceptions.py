class TRepError(Exception):
    """Base error. ``exit_code`` is what a management command exits with."""

    exit_code = 1


class ConfigError(TRepError):
    exit_code = 2


class CheckpointError(TRepError):
    exit_code = 2


class DatasetError(TRepError):
    exit_code = 3


class DatasetFormatError(DatasetError):
    pass


class NumericError(TRepError):
    exit_code = 4


class DimensionError(NumericError):
    pass


class ContractError(NumericError):
    pass
