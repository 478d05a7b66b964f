"""Parsing of workflow text, plus rule-based repair of raw LLM output.

The canonical grammar (the serializer emits exactly this; the parser is
deliberately more tolerant):

    workflow    = step-line (NL step-line)*
    step-line   = "STEP " label ": [" name "][" description "][" jump-list? "]"
    label       = INT ("." INT)*
    jump-list   = jump-rule (", " jump-rule)*
    jump-rule   = "[[if " condition "][Jump to STEP " label "]]"

Tolerances on input: the ``STEP`` keyword is case-insensitive, the third
bracket field may be missing, jump rules may be juxtaposed instead of
comma-separated, conditions may carry a leading ``if`` (any case) and
surrounding single quotes. Names, descriptions and conditions must not
contain square brackets; nesting is only legal inside the jump field.
"""

from __future__ import annotations

import re

from .errors import (
    DuplicateLabelError,
    FieldCountError,
    LabelMismatch,
    MalformedLine,
    OrphanChild,
    UnbalancedBrackets,
)
from .model import JumpRule, Step, StepLabel, Workflow, resolve_jump_targets

_STEP_PREFIX = re.compile(r"^\s*STEP\s*(\d+(?:\.\d+)*)\s*:\s*(.*?)\s*$", re.IGNORECASE)
_JUMP_ACTION = re.compile(r"^\s*jump\s+to\s+step\s+(\d+(?:\.\d+)*)\s*\.?\s*$", re.IGNORECASE)


def _top_level_fields(text: str, line_no: int, allow_commas: bool = False) -> list[str]:
    """Split ``[a][b][c]`` into its top-level bracket groups.

    Between groups only whitespace is allowed (plus commas when splitting a
    jump list). Nested brackets stay inside their group.
    """
    fields: list[str] = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch == "[":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "]":
            if depth == 0:
                raise UnbalancedBrackets(f"unexpected ']' in {text!r}", line_no)
            depth -= 1
            if depth == 0:
                fields.append(text[start + 1 : i])
        elif depth == 0 and not ch.isspace() and not (allow_commas and ch == ","):
            raise MalformedLine(f"unexpected text outside brackets: {text[i:].strip()!r}", line_no)
    if depth != 0:
        raise UnbalancedBrackets(f"unclosed '[' in {text!r}", line_no)
    return fields


def _clean_condition(raw: str, line_no: int) -> str:
    cond = raw.strip()
    keyword = re.match(r"^if(\s+|$)", cond, re.IGNORECASE)
    if keyword:
        cond = cond[keyword.end() :].strip()
    if len(cond) >= 2 and cond.startswith("'") and cond.endswith("'"):
        cond = cond[1:-1].strip()
    if not cond:
        raise MalformedLine("jump rule has an empty condition", line_no)
    if "[" in cond or "]" in cond:
        raise MalformedLine(f"condition must not contain brackets: {cond!r}", line_no)
    return cond


def _parse_jump_field(text: str, line_no: int) -> tuple[JumpRule, ...]:
    if not text.strip():
        return ()
    rules = []
    for entry in _top_level_fields(text, line_no, allow_commas=True):
        parts = _top_level_fields(entry, line_no)
        if len(parts) != 2:
            raise MalformedLine(
                f"jump rule must be [[if condition][Jump to STEP n]], got {entry!r}", line_no
            )
        condition = _clean_condition(parts[0], line_no)
        action = _JUMP_ACTION.match(parts[1])
        if not action:
            raise MalformedLine(f"jump action must be 'Jump to STEP <label>', got {parts[1]!r}", line_no)
        target = StepLabel.parse(action.group(1))
        rules.append(JumpRule(condition=condition, target_label=target))
    return tuple(rules)


def _plain_field(raw: str, what: str, line_no: int) -> str:
    if "[" in raw or "]" in raw:
        raise MalformedLine(f"{what} must not contain brackets: {raw!r}", line_no)
    return raw.strip()


def _parse_line(line: str, line_no: int, uid: str) -> Step:
    m = _STEP_PREFIX.match(line)
    if not m:
        raise MalformedLine(f"expected 'STEP <label>: ...', got {line.strip()!r}", line_no)
    try:
        label = StepLabel.parse(m.group(1))
    except ValueError as exc:
        raise MalformedLine(str(exc), line_no) from None
    fields = _top_level_fields(m.group(2), line_no)
    if len(fields) < 2:
        raise FieldCountError(
            f"step line needs [name][description][jumps], found {len(fields)} field(s)", line_no
        )
    if len(fields) > 3:
        raise FieldCountError(f"step line carries {len(fields)} bracket fields, at most 3 allowed", line_no)
    name = _plain_field(fields[0], "step name", line_no)
    description = _plain_field(fields[1], "step description", line_no)
    jumps = _parse_jump_field(fields[2], line_no) if len(fields) == 3 else ()
    return Step(uid=uid, label=label, name=name, description=description, jumps=jumps)


def _parse_lines(text: str, uid_prefix: str = "s") -> list[tuple[int, Step]]:
    """Parse every non-blank line into a (line number, childless step) pair."""
    parsed: list[tuple[int, Step]] = []
    n = 0
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        n += 1
        parsed.append((line_no, _parse_line(line, line_no, f"{uid_prefix}{n}")))
    if not parsed:
        raise MalformedLine("no STEP lines found", 1)
    return parsed


def _attach(parsed: list[tuple[int, Step]], roots_at_depth: int) -> list[Step]:
    """Attach steps to their parents by label prefix; return the roots.

    ``roots_at_depth`` is the label depth treated as top level (1 for a whole
    workflow, deeper for an extension fragment).
    """
    children: dict[StepLabel, list[Step]] = {}
    order: list[StepLabel] = []
    by_label: dict[StepLabel, int] = {}
    roots: list[StepLabel] = []

    for line_no, step in parsed:
        if step.label in by_label:
            raise DuplicateLabelError(f"STEP {step.label} already defined", line_no)
        by_label[step.label] = line_no
        order.append(step.label)
        children[step.label] = []
        if step.label.depth <= roots_at_depth:
            roots.append(step.label)
        else:
            parent = step.label.parent
            assert parent is not None
            if parent not in children:
                raise OrphanChild(f"STEP {step.label} has no parent STEP {parent}", line_no)
            children[parent].append(step)

    steps = {step.label: step for _, step in parsed}

    def build(lbl: StepLabel) -> Step:
        kids = tuple(build(c.label) for c in children[lbl])
        step = steps[lbl]
        return Step(
            uid=step.uid,
            label=step.label,
            name=step.name,
            description=step.description,
            jumps=step.jumps,
            children=kids,
        )

    return [build(lbl) for lbl in roots]


def parse_workflow(text: str) -> Workflow:
    """Parse workflow text into a :class:`Workflow` (task is left unset).

    Accepts the tolerant grammar described in the module docstring. Jump
    targets are resolved to uids only after the whole text is read, so
    forward references are fine; targets that never resolve are kept by
    label and flagged later by validation.
    """
    roots = _attach(_parse_lines(text), roots_at_depth=1)
    return resolve_jump_targets(Workflow(task="", steps=tuple(roots)))


def parse_substeps(text: str, parent: StepLabel) -> list[Step]:
    """Parse an extension fragment: the ``STEP <parent>.k`` lines for one step.

    Jump targets are left unresolved; they are bound when the fragment is
    spliced into a workflow. Raises :class:`LabelMismatch` when any line is
    not labelled under ``parent``.
    """
    parsed = _parse_lines(text, uid_prefix="tmp")
    for line_no, step in parsed:
        top = StepLabel(step.label.segments[: parent.depth])
        if top != parent:
            raise LabelMismatch(
                f"line {line_no}: expected sub-steps of STEP {parent}, got STEP {step.label}"
            )
    return _attach(parsed, roots_at_depth=parent.depth + 1)


# ---------------------------------------------------------------------------
# Repair of raw LLM completions


_ANY_STEP_PREFIX = re.compile(r"^\s*step\s*(\d+(?:\.\d+)*)\s*:\s*", re.IGNORECASE)


def _normalise_prefix(line: str) -> str:
    m = _ANY_STEP_PREFIX.match(line)
    if not m:
        return line
    return f"STEP {m.group(1)}: " + line[m.end() :]


def _complete_field_spans(line: str) -> list[tuple[int, int]]:
    """(start, end) index pairs of the balanced top-level bracket groups."""
    spans = []
    depth = 0
    start = 0
    for i, ch in enumerate(line):
        if ch == "[":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "]":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    spans.append((start, i + 1))
    return spans


def _repair_pass(text: str) -> str:
    lines = text.split("\n")

    # (1) drop everything before the first STEP line
    first = next((i for i, ln in enumerate(lines) if _ANY_STEP_PREFIX.match(ln)), None)
    if first is None:
        return ""
    lines = lines[first:]

    # (2) normalise the 'step'/'Step' prefix to 'STEP <label>: '
    lines = [_normalise_prefix(ln) for ln in lines]

    # (3) a line with exactly two complete bracket fields gets an empty third
    padded = []
    for ln in lines:
        spans = _complete_field_spans(ln)
        if len(spans) == 2 and not ln[spans[-1][1] :].strip():
            ln = ln[: spans[-1][1]] + "[]" + ln[spans[-1][1] :]
        padded.append(ln)

    # (4) join wrapped continuations onto their step line
    joined: list[str] = []
    for ln in padded:
        if _ANY_STEP_PREFIX.match(ln) or not joined:
            joined.append(ln)
        elif ln.strip():
            joined[-1] = joined[-1].rstrip() + " " + ln.strip()

    # (5) trim trailing prose after the final balanced bracket
    trimmed = []
    for ln in joined:
        spans = _complete_field_spans(ln)
        if spans and ln[spans[-1][1] :].strip():
            ln = ln[: spans[-1][1]]
        trimmed.append(ln.rstrip())

    return "\n".join(trimmed)


def repair_raw_output(text: str) -> str:
    """Normalise a raw planner completion into parseable workflow text.

    Applies, in order: drop preamble prose, uppercase the STEP prefix, pad a
    missing third bracket field, join wrapped lines, and trim trailing prose
    after the last balanced bracket. The passes run until the text stops
    changing, which makes the whole repair idempotent. Never raises; the
    worst case is an empty string, which the parser then rejects.
    """
    current = text
    for _ in range(20):
        repaired = _repair_pass(current)
        if repaired == current:
            return repaired
        current = repaired
    return current
