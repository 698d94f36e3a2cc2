"""Exception types shared across the package."""


class GaitlabError(Exception):
    """Base class for errors raised by gaitlab."""


class FormatError(GaitlabError):
    """A file or stream does not conform to its expected format."""


class DegenerateDataError(GaitlabError):
    """Input data is numerically degenerate for the requested operation."""
