"""Exception hierarchy.

Everything raised on bad input derives from :class:`XCacheSimError`.  The CLI
maps :class:`ValidationError` subclasses to exit code 1; I/O failures surface
as :class:`OSError` and map to exit code 2.
"""


class XCacheSimError(Exception):
    pass


class ValidationError(XCacheSimError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DuplicateKeyError(ValidationError):
    pass


class FormatError(ValidationError):
    pass


class UnknownFileError(ValidationError, KeyError):
    def __init__(self, lfn):
        self.lfn = lfn
        super().__init__(f"unknown file: {lfn}")

    def __str__(self):
        return self.args[0]


class TopologyError(ValidationError):
    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class UsageError(ValidationError):
    pass


class UnknownNodeError(ValidationError, KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node: {node}")

    def __str__(self):
        return self.args[0]


# cache

class UnstorableFileError(ValidationError):
    pass


class NoDiskError(XCacheSimError):
    """Every disk of a cache node has failed."""


class DuplicateAdmissionError(ValidationError):
    pass


class FailedDiskError(XCacheSimError):
    pass


class UnknownDiskError(ValidationError, IndexError):
    pass


class DoubleFailureError(ValidationError):
    pass


# simulation / aggregation

class OrderError(ValidationError):
    """A stream that must be time-sorted is not."""


class ConfigError(ValidationError):
    pass


class ComparisonUndefinedError(ValidationError):
    pass
