"""Exception hierarchy shared across the package.

Every domain failure derives from :class:`SopflowError` so callers (CLI,
HTTP layer) can map whole families of errors to exit codes / status codes.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .model import Violation


class SopflowError(Exception):
    """Base class for all domain errors raised by this package."""


# ---------------------------------------------------------------------------
# Workflow text parsing


class ParseError(SopflowError):
    """A line of workflow text could not be parsed.

    ``line`` is the 1-based line number in the input, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLine(ParseError):
    """Line is not a well-formed ``STEP <label>: [...]...`` statement."""


class UnbalancedBrackets(ParseError):
    """Square brackets on the line do not balance."""


class FieldCountError(ParseError):
    """Line does not carry the expected number of bracket fields."""


class OrphanChild(ParseError):
    """A sub-step appears without its parent step."""


class DuplicateLabelError(ParseError):
    """The same step label occurs on more than one line."""


# ---------------------------------------------------------------------------
# Validation


class InvalidWorkflow(SopflowError):
    """Operation requires a workflow with zero validation violations."""

    def __init__(self, violations: list["Violation"], message: str = "workflow is invalid"):
        self.violations = violations
        detail = "; ".join(v.message for v in violations)
        super().__init__(f"{message}: {detail}" if detail else message)


# ---------------------------------------------------------------------------
# Flow graph


class GraphError(SopflowError):
    """Base class for flow graph conversion failures."""


class BrokenPath(GraphError):
    """Sequential edges do not form a single start-to-end path over all leaves."""


class DanglingEdge(GraphError):
    """An edge references a node that is not part of the graph."""


# ---------------------------------------------------------------------------
# Edit operations


class EditError(SopflowError):
    """Base class for rejected workflow edits."""


class UnknownUid(EditError):
    """Referenced step uid does not exist in the workflow."""


class WouldOrphanJump(EditError):
    """Removing the step would leave jump rules pointing at nothing."""


class IndexOutOfRange(EditError):
    """Positional argument falls outside the valid range."""


class SelfJumpRejected(EditError):
    """A step may not jump to itself."""


class DepthExceeded(EditError):
    """Nesting steps any deeper would exceed the configured maximum."""


class LabelMismatch(EditError):
    """Spliced sub-steps are not labelled ``parent.1 ... parent.k``."""


class AlreadyExtended(EditError):
    """Target step already has sub-steps."""


# ---------------------------------------------------------------------------
# LLM gateway


class GatewayError(SopflowError):
    """Base class for LLM gateway failures."""


class EmptyTask(GatewayError):
    """Task prompt is empty."""


class UnknownTarget(GatewayError):
    """Step label does not resolve within the workflow."""


class TransportError(GatewayError):
    """Could not reach the chat-completion endpoint (after retries)."""


class AuthError(GatewayError):
    """Endpoint rejected the credentials."""


class EndpointError(GatewayError):
    """Endpoint answered with a non-success status."""

    def __init__(self, message: str, status: int | None = None, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(message)


class PlanningFailed(GatewayError):
    """Planner output could not be turned into a valid workflow."""

    def __init__(self, message: str, raw: str = "", violations: list["Violation"] | None = None):
        self.raw = raw
        self.violations = violations or []
        super().__init__(message)


# ---------------------------------------------------------------------------
# Session service


class SessionError(SopflowError):
    """Base class for session layer failures."""


class UnknownSession(SessionError):
    """No session exists for the given id."""


class WrongState(SessionError):
    """Request is not allowed in the session's current state."""


class CorruptLog(SessionError):
    """Event log is damaged beyond the tolerated trailing truncation."""
