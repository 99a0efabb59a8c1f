""" Exceptions raised by lenslesspy. """


class LenslessError(Exception):
    """ Base class for all lenslesspy errors. """


class DimensionError(LenslessError, ValueError):
    """ Array shapes do not chain (mask larger than image, batch size mismatch, ...). """


class InvariantError(LenslessError, ValueError):
    """ A value violates a data-model invariant (non-binary mask cells, pixels outside [0, 1], non-finite logits). """


class DatasetError(LenslessError, ValueError):
    """ A dataset is empty, degenerate or unreadable. """


class ConfigError(LenslessError, ValueError):
    """ A configuration value or combination of values is invalid. """


class TrainingDivergedError(LenslessError, RuntimeError):
    """ Training produced a non-finite loss. """

    def __init__(self, message, state=None, dump_path=None):
        super().__init__(message)
        self.state = state or {}
        self.dump_path = dump_path
