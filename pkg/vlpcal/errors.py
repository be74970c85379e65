"""Exceptions raised by vlpcal.

Everything derives from VLPError so callers (the CLI, the trial runner) can
separate domain failures from programming errors.
"""


class VLPError(Exception):
    pass


class DegenerateGeometry(VLPError, ValueError):
    """The configuration of points makes the requested quantity undefined."""
    pass


class InconsistentAnchors(VLPError):
    """Visible LEDs do not share a common ceiling height."""
    pass


class UnknownUid(VLPError, KeyError):
    def __init__(self, uid):
        super(UnknownUid, self).__init__(uid)
        self.uid = uid

    def __str__(self):
        return 'Unknown LED uid: {}'.format(self.uid)


class TooFewAnchors(VLPError):
    pass


class NoVisibleAnchors(VLPError):
    pass


class InsufficientSamples(VLPError):
    pass


class EmptyInput(VLPError):
    pass


class RowError(VLPError):
    """A malformed row in a CSV input file."""

    def __init__(self, path, row, message):
        self.path = path
        self.row = row
        where = path if row is None else '{}, row {}'.format(path, row)
        super(RowError, self).__init__('{}: {}'.format(where, message))


class AnchorFileError(RowError):
    pass


class FrameFileError(RowError):
    pass


class CalibrationFileError(VLPError):
    """Unreadable calibration file.

    Args:
        path (str)
        message (str)
        field (str): name of the missing or malformed field, if known
        line (int): 1-based line of a syntax error, if known
        col (int): 1-based column of a syntax error, if known
    """

    def __init__(self, path, message, field=None, line=None, col=None):
        self.path = path
        self.field = field
        self.line = line
        self.col = col
        where = ''
        if line is not None:
            where = ' (line {}, col {})'.format(line, col)
        super(CalibrationFileError, self).__init__('{}{}: {}'.format(path, where, message))


class ConfigValidationError(VLPError):
    def __init__(self, key, message):
        self.key = key
        super(ConfigValidationError, self).__init__('{}: {}'.format(key, message))


class InsufficientSweep(UserWarning):
    """The yaw sweep covers less than half a turn, so the circle fit is poorly conditioned."""
    pass


class UsageError(VLPError):
    """Bad command-line arguments."""
    pass
