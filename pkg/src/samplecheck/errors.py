"""Common exception base for the package.

Every domain error raised by samplecheck derives from :class:`SampleCheckError`
so callers (notably the CLI) can distinguish expected failure modes from bugs.
"""


class SampleCheckError(Exception):
    """Base class for all samplecheck domain errors."""
