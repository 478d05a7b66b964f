"""Canonical one-line-per-step serialization of a workflow.

Output is deterministic: equal workflows serialize to identical bytes.
Only valid workflows (zero violations) may be serialized.
"""

from __future__ import annotations

from .errors import InvalidWorkflow
from .model import (
    DEFAULT_MAX_DEPTH,
    Step,
    Workflow,
    iter_steps,
    labels_by_uid,
    rendered_target,
    validate_workflow,
)


def _jump_field(step: Step, labels) -> str:
    return ", ".join(
        f"[[if {rule.condition}][Jump to STEP {rendered_target(rule, labels)}]]"
        for rule in step.jumps
    )


def serialize_workflow(w: Workflow, max_depth: int = DEFAULT_MAX_DEPTH) -> str:
    """Render ``w`` as canonical workflow text (LF separated, no trailing newline)."""
    violations = validate_workflow(w, max_depth)
    if violations:
        raise InvalidWorkflow(violations, "cannot serialize an invalid workflow")
    labels = labels_by_uid(w)
    lines = [
        f"STEP {step.label}: [{step.name}][{step.description}][{_jump_field(step, labels)}]"
        for step in iter_steps(w)
    ]
    return "\n".join(lines)
