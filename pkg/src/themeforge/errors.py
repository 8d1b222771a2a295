"""Exception hierarchy shared by all pipeline modules."""

from __future__ import annotations


class ThemeforgeError(Exception):
    """Base class for every error raised by this package."""


class IngestError(ThemeforgeError):
    """Malformed input file or broken referential integrity."""


class UsageError(ThemeforgeError):
    """A caller violated an operation's precondition."""


class ParseError(ThemeforgeError):
    """A model completion could not be parsed.

    Carries the raw completion so failures can be audited.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class TransportError(ThemeforgeError):
    """A remote backend call failed after exhausting the retry budget."""


class InfeasibleError(ThemeforgeError):
    """Requested clustering cannot exist (k exceeds distinct vectors)."""


class DegenerateSeparationError(ThemeforgeError):
    """Cluster-quality denominator vanished (orthogonal outside world)."""


class AlignmentError(ThemeforgeError):
    """Prediction and gold record sets do not align by (doc_id, target_id)."""


class ClassificationError(ThemeforgeError):
    """Stance completion unparseable after the retry."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class DependencyError(ThemeforgeError):
    """A pipeline stage ran before its upstream stages were valid."""


class CorruptStoreError(ThemeforgeError):
    """A stored stage output no longer matches its manifest hash."""


class ConflictError(ThemeforgeError):
    """Optimistic-version mismatch on a curation mutation."""

    def __init__(self, message: str, current_version: int):
        super().__init__(message)
        self.current_version = current_version
