"""Message assembly for the planner and executor roles, and the two
LLM-driven workflow operations: planning a workflow from a task and
extending one step into sub-steps.

Message shapes are fixed contracts:

* planning:   ``[system: planning_prefix + NL + planning_suffix, user: task]``
* extension:  ``[system: planning_prefix + NL + extend_prefix + NL +
  planning_suffix, user: task, assistant: current workflow text,
  user: "Extend STEP <label>."]`` (the assistant turn replays the prior
  generation so the model sees its own dialogue history)
* executing:  ``[system: executing_prefix + NL + "Overall task: " + task +
  NL + "SOP:" + NL + workflow text + NL + executing_suffix] ++ history``
"""

from __future__ import annotations

from dataclasses import replace

from .editops import SpliceExtension, apply_edit
from .errors import (
    AlreadyExtended,
    EmptyTask,
    InvalidWorkflow,
    LabelMismatch,
    ParseError,
    PlanningFailed,
    UnknownTarget,
)
from .llm import ChatClient, ChatMessage, Role
from .model import (
    DEFAULT_MAX_DEPTH,
    StepLabel,
    Violation,
    Workflow,
    label_map,
    validate_workflow,
)
from .parser import parse_substeps, parse_workflow, repair_raw_output
from .prompts import PromptBundle, default_bundle
from .serializer import serialize_workflow


def build_planning_messages(task: str, bundle: PromptBundle | None = None) -> list[ChatMessage]:
    """Messages that ask the planner for a fresh workflow."""
    if not task.strip():
        raise EmptyTask("task prompt must not be empty")
    b = bundle or default_bundle()
    return [
        ChatMessage(Role.SYSTEM, b.planning_prefix + "\n" + b.planning_suffix),
        ChatMessage(Role.USER, task),
    ]


def build_extend_messages(
    task: str,
    prior_workflow_text: str,
    target: StepLabel,
    bundle: PromptBundle | None = None,
) -> list[ChatMessage]:
    """Messages that ask the planner for a sub-workflow of one step."""
    if not task.strip():
        raise EmptyTask("task prompt must not be empty")
    prior = parse_workflow(prior_workflow_text)
    if target not in label_map(prior):
        raise UnknownTarget(f"no STEP {target} in the workflow")
    b = bundle or default_bundle()
    return [
        ChatMessage(Role.SYSTEM, b.planning_prefix + "\n" + b.extend_prefix + "\n" + b.planning_suffix),
        ChatMessage(Role.USER, task),
        ChatMessage(Role.ASSISTANT, prior_workflow_text),
        ChatMessage(Role.USER, f"Extend STEP {target}."),
    ]


def build_executing_messages(
    task: str,
    workflow_text: str,
    history: list[ChatMessage],
    bundle: PromptBundle | None = None,
) -> list[ChatMessage]:
    """System message binding the executor to the confirmed workflow,
    followed by the conversation so far."""
    b = bundle or default_bundle()
    system = (
        b.executing_prefix
        + "\nOverall task: "
        + task
        + "\nSOP:\n"
        + workflow_text
        + "\n"
        + b.executing_suffix
    )
    return [ChatMessage(Role.SYSTEM, system), *history]


def _try_parse(raw: str, max_depth: int) -> tuple[Workflow | None, str, list[Violation]]:
    try:
        workflow = parse_workflow(repair_raw_output(raw))
    except ParseError as exc:
        return None, str(exc), []
    violations = validate_workflow(workflow, max_depth)
    if violations:
        return None, "; ".join(v.message for v in violations), violations
    return workflow, "", []


def plan_workflow(
    client: ChatClient,
    task: str,
    bundle: PromptBundle | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Workflow:
    """Ask the planner for a workflow and return it validated, task attached.

    A completion that does not survive repair + parse + validate earns one
    corrective retry with the problems quoted back; after that the failure
    surfaces as :class:`PlanningFailed` carrying the raw completion.
    """
    messages = build_planning_messages(task, bundle)
    raw = client.complete(messages)
    workflow, problems, _ = _try_parse(raw, max_depth)
    if workflow is not None:
        return replace(workflow, task=task)

    correction = (
        "That workflow has problems: "
        + problems
        + "\nReply again with the full corrected workflow, in the required STEP format only."
    )
    retry = messages + [
        ChatMessage(Role.ASSISTANT, raw if raw.strip() else "(empty reply)"),
        ChatMessage(Role.USER, correction),
    ]
    raw2 = client.complete(retry)
    workflow, problems2, violations = _try_parse(raw2, max_depth)
    if workflow is not None:
        return replace(workflow, task=task)
    raise PlanningFailed(
        f"planner did not produce a valid workflow: {problems2}", raw=raw2, violations=violations
    )


def extend_step(
    client: ChatClient,
    w: Workflow,
    target: StepLabel,
    bundle: PromptBundle | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Workflow:
    """Extend one leaf step into LLM-generated sub-steps.

    Changes exactly that step's children; everything else is untouched.
    """
    steps = label_map(w)
    if target not in steps:
        raise UnknownTarget(f"no STEP {target} in the workflow")
    step = steps[target]
    if step.children:
        raise AlreadyExtended(f"STEP {target} already has sub-steps")

    prior_text = serialize_workflow(w, max_depth)
    messages = build_extend_messages(w.task, prior_text, target, bundle)
    raw = client.complete(messages)
    try:
        substeps = parse_substeps(repair_raw_output(raw), target)
    except LabelMismatch:
        raise
    except ParseError as exc:
        raise PlanningFailed(f"extension reply is not parseable: {exc}", raw=raw)
    try:
        return apply_edit(w, SpliceExtension(step.uid, tuple(substeps)), max_depth)
    except InvalidWorkflow as exc:
        raise PlanningFailed(
            f"extension produced an invalid workflow: {exc}", raw=raw, violations=exc.violations
        )
