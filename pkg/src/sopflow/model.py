"""Workflow data model: steps, jump rules, labels, and validation.

A workflow is an ordered tree of steps. Each step has a stable ``uid``
(never reused, survives edits), a display label such as ``3.2`` that is
recomputed whenever the tree changes, a name, a description, and an
ordered list of jump rules. Jump rules are stored against uids so that
reordering or renumbering steps never silently retargets them; the label
is kept alongside purely for display and for targets that never resolved.

All types are immutable values; every function here is pure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator

DEFAULT_MAX_DEPTH = 3

_UID_RE = re.compile(r"^s(\d+)$")
_TEXT_FORBIDDEN = ("[", "]", "\n", "\r")


def _check_text(value: str, what: str) -> None:
    for ch in _TEXT_FORBIDDEN:
        if ch in value:
            shown = ch if ch not in ("\n", "\r") else "newline"
            raise ValueError(f"{what} must not contain {shown!r}: {value!r}")


@dataclass(frozen=True, order=True)
class StepLabel:
    """Hierarchical step number, e.g. ``3.2`` is ``(3, 2)``."""

    segments: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("step label needs at least one segment")
        if any(s < 1 for s in self.segments):
            raise ValueError(f"step label segments must be >= 1, got {self.segments}")

    @classmethod
    def parse(cls, text: str) -> "StepLabel":
        parts = text.strip().split(".")
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError:
            raise ValueError(f"not a step label: {text!r}") from None

    @classmethod
    def of(cls, *segments: int) -> "StepLabel":
        return cls(tuple(segments))

    @property
    def depth(self) -> int:
        return len(self.segments)

    @property
    def parent(self) -> "StepLabel | None":
        if len(self.segments) == 1:
            return None
        return StepLabel(self.segments[:-1])

    def child(self, index: int) -> "StepLabel":
        """Label of the ``index``-th (1-based) child."""
        return StepLabel(self.segments + (index,))

    def is_ancestor_of(self, other: "StepLabel") -> bool:
        return (
            len(other.segments) > len(self.segments)
            and other.segments[: len(self.segments)] == self.segments
        )

    def __str__(self) -> str:
        return ".".join(str(s) for s in self.segments)


@dataclass(frozen=True)
class JumpRule:
    """Conditional transfer: when ``condition`` holds, continue at the target step.

    ``target_uid`` is the authoritative reference; it is ``None`` only when
    the target label never resolved (flagged by validation as dangling).
    ``target_label`` is the display form, recomputed from the uid whenever
    the workflow is renumbered.
    """

    condition: str
    target_label: StepLabel
    target_uid: str | None = None

    def __post_init__(self) -> None:
        if self.condition != self.condition.strip() or not self.condition:
            raise ValueError(f"condition must be non-empty and stripped: {self.condition!r}")
        _check_text(self.condition, "condition")


@dataclass(frozen=True)
class Step:
    """One SOP step: name + description, optional jump rules and sub-steps."""

    uid: str
    label: StepLabel
    name: str
    description: str
    jumps: tuple[JumpRule, ...] = ()
    children: tuple["Step", ...] = ()

    def __post_init__(self) -> None:
        _check_text(self.name, "step name")
        _check_text(self.description, "step description")

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class Workflow:
    """An ordered tree of steps plus the task it was planned for."""

    task: str = ""
    steps: tuple[Step, ...] = ()

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("a workflow must contain at least one step")
        seen: set[str] = set()
        for step in iter_steps(self):
            if step.uid in seen:
                raise ValueError(f"duplicate step uid {step.uid!r}")
            seen.add(step.uid)


class ViolationCode(str, Enum):
    DANGLING_JUMP_TARGET = "DanglingJumpTarget"
    DUPLICATE_LABEL = "DuplicateLabel"
    NON_CONTIGUOUS_LABELS = "NonContiguousLabels"
    EMPTY_NAME = "EmptyName"
    SELF_JUMP = "SelfJump"
    DEPTH_EXCEEDED = "DepthExceeded"


@dataclass(frozen=True)
class Violation:
    """One validation finding. ``location`` names the offending step when one exists."""

    code: ViolationCode
    location: StepLabel | None
    message: str


# ---------------------------------------------------------------------------
# Traversal helpers


def iter_steps(w: Workflow) -> Iterator[Step]:
    """All steps in depth-first pre-order (document order)."""

    def walk(step: Step) -> Iterator[Step]:
        yield step
        for child in step.children:
            yield from walk(child)

    for top in w.steps:
        yield from walk(top)


def uid_map(w: Workflow) -> dict[str, Step]:
    return {s.uid: s for s in iter_steps(w)}


def label_map(w: Workflow) -> dict[StepLabel, Step]:
    out: dict[StepLabel, Step] = {}
    for s in iter_steps(w):
        out.setdefault(s.label, s)
    return out


def labels_by_uid(w: Workflow) -> dict[str, StepLabel]:
    return {s.uid: s.label for s in iter_steps(w)}


def next_uid(w: Workflow | None, offset: int = 0) -> str:
    """Next free uid in the ``s<n>`` scheme, deterministic for a given workflow."""
    highest = 0
    if w is not None:
        for step in iter_steps(w):
            m = _UID_RE.match(step.uid)
            if m:
                highest = max(highest, int(m.group(1)))
    return f"s{highest + 1 + offset}"


def rendered_target(rule: JumpRule, labels: dict[str, StepLabel]) -> StepLabel:
    """Display label of a rule's target given a uid -> label map."""
    if rule.target_uid is not None and rule.target_uid in labels:
        return labels[rule.target_uid]
    return rule.target_label


# ---------------------------------------------------------------------------
# Renumbering and target resolution


def rebind(w: Workflow) -> Workflow:
    """Recompute display labels from tree positions and refresh jump labels."""

    def fix(step: Step, lbl: StepLabel) -> Step:
        children = tuple(fix(c, lbl.child(i + 1)) for i, c in enumerate(step.children))
        return replace(step, label=lbl, children=children)

    steps = tuple(fix(s, StepLabel.of(i + 1)) for i, s in enumerate(w.steps))
    relabelled = replace(w, steps=steps)
    labels = labels_by_uid(relabelled)

    def fix_rules(step: Step) -> Step:
        jumps = tuple(
            replace(r, target_label=rendered_target(r, labels)) for r in step.jumps
        )
        children = tuple(fix_rules(c) for c in step.children)
        return replace(step, jumps=jumps, children=children)

    return replace(relabelled, steps=tuple(fix_rules(s) for s in relabelled.steps))


def resolve_jump_targets(w: Workflow) -> Workflow:
    """Bind unresolved jump targets to uids by their stored label, when possible."""
    by_label = label_map(w)

    def fix(step: Step) -> Step:
        jumps = []
        for r in step.jumps:
            if r.target_uid is None and r.target_label in by_label:
                r = replace(r, target_uid=by_label[r.target_label].uid)
            jumps.append(r)
        return replace(step, jumps=tuple(jumps), children=tuple(fix(c) for c in step.children))

    return replace(w, steps=tuple(fix(s) for s in w.steps))


# ---------------------------------------------------------------------------
# Validation


def validate_workflow(w: Workflow, max_depth: int = DEFAULT_MAX_DEPTH) -> list[Violation]:
    """All violations in ``w``; an empty list means the workflow is valid.

    Violations are data, not errors: callers decide whether to reject.
    """
    violations: list[Violation] = []
    labels = labels_by_uid(w)
    all_labels: list[StepLabel] = [s.label for s in iter_steps(w)]
    label_set = set(all_labels)

    seen: set[StepLabel] = set()
    reported_dupes: set[StepLabel] = set()
    for lbl in all_labels:
        if lbl in seen and lbl not in reported_dupes:
            reported_dupes.add(lbl)
            violations.append(
                Violation(
                    ViolationCode.DUPLICATE_LABEL,
                    lbl,
                    f"label {lbl} is used by more than one step",
                )
            )
        seen.add(lbl)

    def check_group(parent: Step | None, group: tuple[Step, ...]) -> None:
        base = parent.label if parent is not None else None
        expected = [
            base.child(i + 1) if base is not None else StepLabel.of(i + 1)
            for i in range(len(group))
        ]
        actual = [s.label for s in group]
        if actual != expected:
            where = f"under step {base}" if base is not None else "at the top level"
            violations.append(
                Violation(
                    ViolationCode.NON_CONTIGUOUS_LABELS,
                    base,
                    f"labels {where} must be {', '.join(map(str, expected))} "
                    f"in order, got {', '.join(map(str, actual))}",
                )
            )
        for s in group:
            check_group(s, s.children)

    check_group(None, w.steps)

    for step in iter_steps(w):
        if not step.name.strip():
            violations.append(
                Violation(ViolationCode.EMPTY_NAME, step.label, f"step {step.label} has no name")
            )
        if step.label.depth > max_depth:
            violations.append(
                Violation(
                    ViolationCode.DEPTH_EXCEEDED,
                    step.label,
                    f"step {step.label} exceeds the maximum depth of {max_depth}",
                )
            )
        for rule in step.jumps:
            target = rendered_target(rule, labels)
            resolves = rule.target_uid in labels if rule.target_uid else target in label_set
            if not resolves:
                violations.append(
                    Violation(
                        ViolationCode.DANGLING_JUMP_TARGET,
                        step.label,
                        f"step {step.label} jumps to STEP {target}, which does not exist",
                    )
                )
            elif rule.target_uid == step.uid or (rule.target_uid is None and target == step.label):
                violations.append(
                    Violation(
                        ViolationCode.SELF_JUMP,
                        step.label,
                        f"step {step.label} jumps to itself",
                    )
                )
    return violations


# ---------------------------------------------------------------------------
# Structural equality (uid-independent)


def _step_shape(step: Step, labels: dict[str, StepLabel]):
    return (
        str(step.label),
        step.name,
        step.description,
        tuple((r.condition, str(rendered_target(r, labels))) for r in step.jumps),
        tuple(_step_shape(c, labels) for c in step.children),
    )


def workflow_shape(w: Workflow):
    """Uid-free structural fingerprint: labels, texts, and rendered jump targets."""
    labels = labels_by_uid(w)
    return (w.task, tuple(_step_shape(s, labels) for s in w.steps))


def structurally_equal(a: Workflow, b: Workflow) -> bool:
    """True when the workflows differ at most in uid assignment."""
    return workflow_shape(a) == workflow_shape(b)


# ---------------------------------------------------------------------------
# JSON codec (used by the event log, the HTTP API, and edit payloads)


def step_to_dict(step: Step) -> dict:
    return {
        "uid": step.uid,
        "label": str(step.label),
        "name": step.name,
        "description": step.description,
        "jumps": [
            {
                "condition": r.condition,
                "target": str(r.target_label),
                "target_uid": r.target_uid,
            }
            for r in step.jumps
        ],
        "children": [step_to_dict(c) for c in step.children],
    }


def step_from_dict(data: dict, _counter: list[int] | None = None) -> Step:
    """Rebuild a step from its JSON form. Missing uids get placeholders."""
    counter = _counter if _counter is not None else [0]
    uid = data.get("uid")
    if not uid:
        counter[0] += 1
        uid = f"tmp{counter[0]}"
    jumps = tuple(
        JumpRule(
            condition=j["condition"],
            target_label=StepLabel.parse(j["target"]),
            target_uid=j.get("target_uid"),
        )
        for j in data.get("jumps", [])
    )
    children = tuple(step_from_dict(c, counter) for c in data.get("children", []))
    return Step(
        uid=uid,
        label=StepLabel.parse(data["label"]),
        name=data.get("name", ""),
        description=data.get("description", ""),
        jumps=jumps,
        children=children,
    )


def workflow_to_dict(w: Workflow) -> dict:
    return {"task": w.task, "steps": [step_to_dict(s) for s in w.steps]}


def workflow_from_dict(data: dict) -> Workflow:
    counter = [0]
    steps = tuple(step_from_dict(s, counter) for s in data.get("steps", []))
    return Workflow(task=data.get("task", ""), steps=steps)
