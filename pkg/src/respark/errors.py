"""Exception types shared across the package."""

from __future__ import annotations


class ResparkError(Exception):
    """Base class for all errors raised by this package."""


# --- dependency graph ---

class InvalidGraph(ResparkError):
    """Graph failed validation; carries the violation report."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"invalid dependency graph: {report.describe()}")


class UnknownAnchor(ResparkError):
    pass


class UnknownSegment(ResparkError):
    pass


# --- ingest ---

class ParseError(ResparkError):
    pass


class EmptyInput(ResparkError):
    pass


# --- report parsing ---

class MarkupError(ResparkError):
    pass


# --- ranking ---

class DimensionMismatch(ResparkError):
    pass


class ZeroVector(ResparkError):
    pass


# --- gateway ---

class LlmError(ResparkError):
    """Provider failure after retries were exhausted."""


class MalformedLlmOutput(LlmError):
    """Structured output never satisfied its schema within the retry budget."""


class MissingTranscript(LlmError):
    """Mock provider had no scripted reply for (template id, ordinal)."""


# --- sandbox ---

class SandboxUnavailable(ResparkError):
    pass


# --- adapt engine ---

class UnknownField(ResparkError):
    pass


class TransformationFailed(ResparkError):
    """Code generation never produced a successful execution.

    Carries the full attempt log so callers can surface every script and
    error to the user.
    """

    def __init__(self, attempt_log):
        self.attempt_log = attempt_log
        super().__init__(
            f"transformation failed after {len(attempt_log)} attempt(s)"
        )


class DependencyOrderError(ResparkError):
    """A segment was generated before its parent."""


# --- organize ---

class CoverageError(ResparkError):
    pass


class IoError(ResparkError):
    pass
