"""Exception hierarchy shared by the library and the command line front end.

Two fatal families matter to callers: configuration problems (bad flag
values, impossible thresholds) and data problems (unreadable or malformed
input files, unknown keys).  The CLI maps them to distinct exit codes.
"""

from __future__ import annotations


class OodbenchError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(OodbenchError):
    """A parameter or flag value is out of range or inconsistent."""


class DataError(OodbenchError):
    """An input file or in-memory structure violates the documented format."""


class CorpusFormatError(DataError):
    """Fatal structural problem in a corpus or prediction file.

    Carries the file path and the absolute byte offset where scanning
    stopped, so the broken spot can be located in very large files.
    """

    def __init__(self, path: str, offset: int, message: str):
        self.path = str(path)
        self.offset = offset
        self.message = message
        super().__init__(f"{self.path}: byte offset {offset}: {message}")


class UnknownGroupError(DataError, LookupError):
    """A group key was requested that the corpus does not contain."""

    def __init__(self, group_key: str, where: str = "corpus"):
        self.group_key = group_key
        super().__init__(f"unknown group key {group_key!r} (not present in {where})")


class UndefinedEntropyError(OodbenchError, ValueError):
    """Normalized entropy is undefined for a single-answer group (log 1 = 0)."""
