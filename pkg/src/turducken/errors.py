"""Exception hierarchy for the toolkit.

Every toolkit-raised error derives from :class:`TurduckenError` so callers
(and the CLI) can distinguish operational failures from bugs.
"""

from __future__ import annotations


class TurduckenError(Exception):
    """Base class for all toolkit errors."""


class TreeFormatError(TurduckenError):
    """A tree interchange document is malformed (wrong type, missing field)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class TreeStructureError(TurduckenError):
    """A tree document violates a structural invariant (e.g. leaf with children)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SatStructureError(TurduckenError):
    """Tag sequence is not properly nested (dangling or mismatched tag)."""


class SatConsistencyError(TurduckenError):
    """Placeholder count disagrees with the string side-table."""


class GrammarNotFoundError(TurduckenError):
    """Requested grammar id is not registered."""


class ScorerContractError(TurduckenError):
    """A scorer returned an unnormalized or malformed distribution."""


class CheckerUnavailableError(TurduckenError):
    """The checker command could not be spawned at all.

    Deliberately distinct from a failed check: environments without the
    compiler should skip, never silently report executable=False.
    """


class SequenceLengthError(TurduckenError):
    """An input or target sequence exceeds the configured maximum length."""


class TrainingError(TurduckenError):
    """Training produced a non-finite loss or otherwise cannot proceed."""


class CorpusFormatError(TurduckenError):
    """A dataset file is malformed."""

    def __init__(self, message: str, *, line_no: int | None = None, path: str | None = None):
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line_no is not None:
            prefix += f":{line_no}"
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line_no = line_no
        self.file_path = path


class BridgeProtocolError(TurduckenError):
    """The remote scorer bridge violated the wire protocol."""
