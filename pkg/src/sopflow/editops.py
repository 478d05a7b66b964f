"""The six flowchart edit operations, applied as validated pure transformations.

Every operation takes a valid workflow and returns a new one with display
labels renumbered; a rejected edit raises and leaves the input untouched.
Jump rules follow step uids, so renumbering never retargets them.

``diff_workflows`` derives an edit sequence that transforms one workflow
into another; the service uses it to turn whole-document saves from the
editor into granular events.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from .errors import (
    AlreadyExtended,
    DepthExceeded,
    IndexOutOfRange,
    InvalidWorkflow,
    LabelMismatch,
    SelfJumpRejected,
    UnknownUid,
    WouldOrphanJump,
)
from .model import (
    DEFAULT_MAX_DEPTH,
    JumpRule,
    Step,
    StepLabel,
    Workflow,
    iter_steps,
    labels_by_uid,
    next_uid,
    rebind,
    resolve_jump_targets,
    step_from_dict,
    step_to_dict,
    uid_map,
    validate_workflow,
)


@dataclass(frozen=True)
class AddStep:
    """Insert a new step after the sibling ``after``; ``None`` means the
    front of the top level."""

    after: str | None
    name: str
    description: str


@dataclass(frozen=True)
class RemoveStep:
    """Remove a step and its subtree. With ``cascade`` the jump rules of
    other steps pointing into the subtree are deleted too; without it such
    rules make the removal fail."""

    uid: str
    cascade: bool = False


@dataclass(frozen=True)
class ModifyStep:
    uid: str
    new_name: str | None = None
    new_description: str | None = None


@dataclass(frozen=True)
class AddJump:
    uid: str
    condition: str
    target_uid: str


@dataclass(frozen=True)
class RemoveJump:
    uid: str
    index: int


@dataclass(frozen=True)
class Reorder:
    """Move a step to ``new_position`` (0-based) among its siblings."""

    uid: str
    new_position: int


@dataclass(frozen=True)
class SpliceExtension:
    """Attach sub-steps (labelled ``parent.1 ... parent.k``) to a step that
    has none yet. Incoming uids are ignored; fresh ones are assigned."""

    parent_uid: str
    substeps: tuple[Step, ...]


EditOp = Union[AddStep, RemoveStep, ModifyStep, AddJump, RemoveJump, Reorder, SpliceExtension]


# ---------------------------------------------------------------------------
# Tree helpers


def _replace_group(
    w: Workflow, parent_uid: str | None, group: tuple[Step, ...]
) -> Workflow:
    """Return ``w`` with the sibling group under ``parent_uid`` replaced."""
    if parent_uid is None:
        return replace(w, steps=group)

    def fix(step: Step) -> Step:
        if step.uid == parent_uid:
            return replace(step, children=group)
        return replace(step, children=tuple(fix(c) for c in step.children))

    return replace(w, steps=tuple(fix(s) for s in w.steps))


def _sibling_group(w: Workflow, uid: str) -> tuple[str | None, tuple[Step, ...], int]:
    """(parent uid, sibling group, index of ``uid`` in it)."""

    def search(parent_uid: str | None, group: tuple[Step, ...]):
        for i, step in enumerate(group):
            if step.uid == uid:
                return parent_uid, group, i
            found = search(step.uid, step.children)
            if found is not None:
                return found
        return None

    found = search(None, w.steps)
    if found is None:
        raise UnknownUid(f"no step with uid {uid!r}")
    return found


def _subtree_uids(step: Step) -> set[str]:
    uids = {step.uid}
    for child in step.children:
        uids |= _subtree_uids(child)
    return uids


def _strip_rules_into(w: Workflow, removed: set[str]) -> Workflow:
    def fix(step: Step) -> Step:
        jumps = tuple(r for r in step.jumps if r.target_uid not in removed)
        return replace(step, jumps=jumps, children=tuple(fix(c) for c in step.children))

    return replace(w, steps=tuple(fix(s) for s in w.steps))


def _subtree_depth(step: Step) -> int:
    return 1 + max((_subtree_depth(c) for c in step.children), default=0)


def _reassign_uids(steps: tuple[Step, ...], base: Workflow) -> tuple[Step, ...]:
    counter = [0]

    def renew(step: Step) -> Step:
        uid = next_uid(base, offset=counter[0])
        counter[0] += 1
        return replace(step, uid=uid, children=tuple(renew(c) for c in step.children))

    return tuple(renew(s) for s in steps)


def _finish(w: Workflow, max_depth: int) -> Workflow:
    result = resolve_jump_targets(rebind(w))
    violations = validate_workflow(result, max_depth)
    if violations:
        raise InvalidWorkflow(violations, "edit rejected")
    return result


# ---------------------------------------------------------------------------
# apply_edit


def apply_edit(w: Workflow, op: EditOp, max_depth: int = DEFAULT_MAX_DEPTH) -> Workflow:
    """Apply one edit, returning a renumbered, validated workflow.

    Rejected edits raise (the input value is never touched): unknown uids,
    jump rules that would dangle, indices out of range, self jumps, depth
    overruns, mislabelled splices, or any edit whose result fails
    validation.
    """
    if isinstance(op, AddStep):
        return _add_step(w, op, max_depth)
    if isinstance(op, RemoveStep):
        return _remove_step(w, op, max_depth)
    if isinstance(op, ModifyStep):
        return _modify_step(w, op, max_depth)
    if isinstance(op, AddJump):
        return _add_jump(w, op, max_depth)
    if isinstance(op, RemoveJump):
        return _remove_jump(w, op, max_depth)
    if isinstance(op, Reorder):
        return _reorder(w, op, max_depth)
    if isinstance(op, SpliceExtension):
        return _splice(w, op, max_depth)
    raise TypeError(f"not an edit operation: {op!r}")


def _new_step(w: Workflow, name: str, description: str) -> Step:
    try:
        return Step(
            uid=next_uid(w),
            label=StepLabel.of(1),
            name=name,
            description=description,
        )
    except ValueError as exc:
        raise InvalidWorkflow([], str(exc)) from None


def _add_step(w: Workflow, op: AddStep, max_depth: int) -> Workflow:
    step = _new_step(w, op.name, op.description)
    if op.after is None:
        return _finish(_replace_group(w, None, (step,) + w.steps), max_depth)
    parent_uid, group, i = _sibling_group(w, op.after)
    group = group[: i + 1] + (step,) + group[i + 1 :]
    return _finish(_replace_group(w, parent_uid, group), max_depth)


def _remove_step(w: Workflow, op: RemoveStep, max_depth: int) -> Workflow:
    parent_uid, group, i = _sibling_group(w, op.uid)
    removed = _subtree_uids(group[i])
    if not op.cascade:
        for step in iter_steps(w):
            if step.uid in removed:
                continue
            for rule in step.jumps:
                if rule.target_uid in removed:
                    raise WouldOrphanJump(
                        f"step {step.label} jumps into the subtree of {group[i].label}; "
                        "remove the rule first or use cascade"
                    )
    if parent_uid is None and len(w.steps) == 1:
        raise InvalidWorkflow([], "cannot remove the last step of a workflow")
    out = _replace_group(w, parent_uid, group[:i] + group[i + 1 :])
    if op.cascade:
        out = _strip_rules_into(out, removed)
    return _finish(out, max_depth)


def _modify_step(w: Workflow, op: ModifyStep, max_depth: int) -> Workflow:
    target = uid_map(w).get(op.uid)
    if target is None:
        raise UnknownUid(f"no step with uid {op.uid!r}")

    def fix(step: Step) -> Step:
        if step.uid == op.uid:
            try:
                return replace(
                    step,
                    name=op.new_name if op.new_name is not None else step.name,
                    description=(
                        op.new_description
                        if op.new_description is not None
                        else step.description
                    ),
                )
            except ValueError as exc:
                raise InvalidWorkflow([], str(exc)) from None
        return replace(step, children=tuple(fix(c) for c in step.children))

    return _finish(replace(w, steps=tuple(fix(s) for s in w.steps)), max_depth)


def _add_jump(w: Workflow, op: AddJump, max_depth: int) -> Workflow:
    steps = uid_map(w)
    if op.uid not in steps:
        raise UnknownUid(f"no step with uid {op.uid!r}")
    if op.target_uid not in steps:
        raise UnknownUid(f"no step with uid {op.target_uid!r}")
    if op.uid == op.target_uid:
        raise SelfJumpRejected(f"step {steps[op.uid].label} cannot jump to itself")
    try:
        rule = JumpRule(
            condition=op.condition.strip(),
            target_label=labels_by_uid(w)[op.target_uid],
            target_uid=op.target_uid,
        )
    except ValueError as exc:
        raise InvalidWorkflow([], str(exc)) from None

    def fix(step: Step) -> Step:
        if step.uid == op.uid:
            return replace(step, jumps=step.jumps + (rule,))
        return replace(step, children=tuple(fix(c) for c in step.children))

    return _finish(replace(w, steps=tuple(fix(s) for s in w.steps)), max_depth)


def _remove_jump(w: Workflow, op: RemoveJump, max_depth: int) -> Workflow:
    target = uid_map(w).get(op.uid)
    if target is None:
        raise UnknownUid(f"no step with uid {op.uid!r}")
    if not 0 <= op.index < len(target.jumps):
        raise IndexOutOfRange(
            f"step {target.label} has {len(target.jumps)} jump rule(s), index {op.index} is out of range"
        )

    def fix(step: Step) -> Step:
        if step.uid == op.uid:
            jumps = step.jumps[: op.index] + step.jumps[op.index + 1 :]
            return replace(step, jumps=jumps)
        return replace(step, children=tuple(fix(c) for c in step.children))

    return _finish(replace(w, steps=tuple(fix(s) for s in w.steps)), max_depth)


def _reorder(w: Workflow, op: Reorder, max_depth: int) -> Workflow:
    parent_uid, group, i = _sibling_group(w, op.uid)
    if not 0 <= op.new_position < len(group):
        raise IndexOutOfRange(
            f"position {op.new_position} is out of range for {len(group)} sibling(s)"
        )
    moved = list(group)
    step = moved.pop(i)
    moved.insert(op.new_position, step)
    return _finish(_replace_group(w, parent_uid, tuple(moved)), max_depth)


def _splice(w: Workflow, op: SpliceExtension, max_depth: int) -> Workflow:
    parent = uid_map(w).get(op.parent_uid)
    if parent is None:
        raise UnknownUid(f"no step with uid {op.parent_uid!r}")
    if parent.children:
        raise AlreadyExtended(f"step {parent.label} already has sub-steps")
    if not op.substeps:
        raise InvalidWorkflow([], "an extension must contain at least one sub-step")

    expected = [parent.label.child(i + 1) for i in range(len(op.substeps))]
    actual = [s.label for s in op.substeps]
    if actual != expected:
        raise LabelMismatch(
            f"sub-steps of STEP {parent.label} must be labelled "
            f"{', '.join(map(str, expected))}, got {', '.join(map(str, actual))}"
        )
    deepest = parent.label.depth + max(_subtree_depth(s) for s in op.substeps)
    if deepest > max_depth:
        raise DepthExceeded(
            f"extending step {parent.label} would nest {deepest} levels deep "
            f"(maximum is {max_depth})"
        )

    substeps = _reassign_uids(op.substeps, w)

    def fix(step: Step) -> Step:
        if step.uid == op.parent_uid:
            return replace(step, children=substeps)
        return replace(step, children=tuple(fix(c) for c in step.children))

    return _finish(replace(w, steps=tuple(fix(s) for s in w.steps)), max_depth)


# ---------------------------------------------------------------------------
# Wire encoding (JSON, shared by the HTTP API and the editor)


def edit_op_to_dict(op: EditOp) -> dict:
    if isinstance(op, AddStep):
        return {"kind": "add_step", "after": op.after, "name": op.name, "description": op.description}
    if isinstance(op, RemoveStep):
        return {"kind": "remove_step", "uid": op.uid, "cascade": op.cascade}
    if isinstance(op, ModifyStep):
        return {
            "kind": "modify_step",
            "uid": op.uid,
            "new_name": op.new_name,
            "new_description": op.new_description,
        }
    if isinstance(op, AddJump):
        return {"kind": "add_jump", "uid": op.uid, "condition": op.condition, "target_uid": op.target_uid}
    if isinstance(op, RemoveJump):
        return {"kind": "remove_jump", "uid": op.uid, "index": op.index}
    if isinstance(op, Reorder):
        return {"kind": "reorder", "uid": op.uid, "new_position": op.new_position}
    if isinstance(op, SpliceExtension):
        return {
            "kind": "splice_extension",
            "parent_uid": op.parent_uid,
            "substeps": [step_to_dict(s) for s in op.substeps],
        }
    raise TypeError(f"not an edit operation: {op!r}")


def edit_op_from_dict(data: dict) -> EditOp:
    try:
        kind = data["kind"]
        if kind == "add_step":
            return AddStep(after=data.get("after"), name=data["name"], description=data["description"])
        if kind == "remove_step":
            return RemoveStep(uid=data["uid"], cascade=bool(data.get("cascade", False)))
        if kind == "modify_step":
            return ModifyStep(
                uid=data["uid"],
                new_name=data.get("new_name"),
                new_description=data.get("new_description"),
            )
        if kind == "add_jump":
            return AddJump(uid=data["uid"], condition=data["condition"], target_uid=data["target_uid"])
        if kind == "remove_jump":
            return RemoveJump(uid=data["uid"], index=int(data["index"]))
        if kind == "reorder":
            return Reorder(uid=data["uid"], new_position=int(data["new_position"]))
        if kind == "splice_extension":
            return SpliceExtension(
                parent_uid=data["parent_uid"],
                substeps=tuple(step_from_dict(s) for s in data.get("substeps", [])),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed edit operation: {exc}") from exc
    raise ValueError(f"unknown edit operation kind {data.get('kind')!r}")


# ---------------------------------------------------------------------------
# Diffing


def _lis_keep(indices: list[int]) -> set[int]:
    """Values forming a longest increasing subsequence of ``indices``."""
    if not indices:
        return set()
    best_len = [1] * len(indices)
    prev = [-1] * len(indices)
    for i in range(len(indices)):
        for j in range(i):
            if indices[j] < indices[i] and best_len[j] + 1 > best_len[i]:
                best_len[i] = best_len[j] + 1
                prev[i] = j
    i = max(range(len(indices)), key=lambda k: best_len[k])
    keep: set[int] = set()
    while i != -1:
        keep.add(indices[i])
        i = prev[i]
    return keep


def _strip_jumps(step: Step) -> Step:
    return replace(step, jumps=(), children=tuple(_strip_jumps(c) for c in step.children))


class _Differ:
    """Derives an edit sequence by simulating each emitted op on a copy.

    Because uid assignment is deterministic, the simulation predicts the
    uids of added steps, which lets later ops (jumps, nested splices)
    reference them. Steps are matched by uid only when their parents match
    too; the edit vocabulary cannot re-parent a step, so a uid that moved
    to a different parent is treated as removed and re-added.
    """

    def __init__(self, before: Workflow, after: Workflow, max_depth: int):
        self.after = after
        self.max_depth = max_depth
        self.sim = before
        self.ops: list[EditOp] = []
        self.translate: dict[str, str] = {}  # after uid -> sim uid

    def emit(self, op: EditOp) -> None:
        self.ops.append(op)
        self.sim = apply_edit(self.sim, op, self.max_depth)

    def run(self) -> list[EditOp]:
        self._match_shared()
        self._remove_unmatched()
        self._reconcile_group(None, self.after.steps)
        self._modify_texts()
        self._reconcile_jumps()
        return self.ops

    # -- phases -------------------------------------------------------------

    def _match_shared(self) -> None:
        before_parent: dict[str, str | None] = {}

        def walk_before(group: tuple[Step, ...], parent: str | None) -> None:
            for s in group:
                before_parent[s.uid] = parent
                walk_before(s.children, s.uid)

        walk_before(self.sim.steps, None)

        def walk_after(group: tuple[Step, ...], parent: str | None, parent_ok: bool) -> None:
            for s in group:
                ok = (
                    parent_ok
                    and s.uid in before_parent
                    and before_parent[s.uid] == parent
                )
                if ok:
                    self.translate[s.uid] = s.uid
                walk_after(s.children, s.uid, ok)

        walk_after(self.after.steps, None, True)

    def _remove_unmatched(self) -> None:
        def walk(group: tuple[Step, ...]) -> None:
            for step in group:
                if step.uid not in self.translate:
                    if len(self.sim.steps) == 1 and self.sim.steps[0].uid == step.uid:
                        # removing the last step is illegal; bring in the
                        # first new top-level step before dropping it
                        self._materialize_top()
                    self.emit(RemoveStep(uid=step.uid, cascade=True))
                else:
                    walk(step.children)

        walk(self.sim.steps)

    def _materialize_top(self) -> None:
        first_new = next(s for s in self.after.steps if s.uid not in self.translate)
        predicted = next_uid(self.sim)
        self.emit(AddStep(after=None, name=first_new.name, description=first_new.description))
        self.translate[first_new.uid] = predicted
        if first_new.children:
            self._splice_new(predicted, first_new.children)

    def _sim_group(self, sim_parent: str | None) -> tuple[Step, ...]:
        if sim_parent is None:
            return self.sim.steps
        return uid_map(self.sim)[sim_parent].children

    def _reconcile_group(self, after_parent: Step | None, after_group: tuple[Step, ...]) -> None:
        sim_parent = None if after_parent is None else self.translate[after_parent.uid]
        materialized = [s.uid for s in after_group if s.uid in self.translate]

        if not materialized and after_group and sim_parent is not None:
            # a childless step gains all-new children: one splice does it
            self._splice_new(sim_parent, after_group)
            return

        self._move_present(sim_parent, after_group)
        self._insert_new(sim_parent, after_group)
        for child in after_group:
            if child.children:
                self._reconcile_group(child, child.children)

    def _move_present(self, sim_parent: str | None, after_group: tuple[Step, ...]) -> None:
        present = {s.uid for s in self._sim_group(sim_parent)}
        desired = [
            self.translate[s.uid]
            for s in after_group
            if self.translate.get(s.uid) in present
        ]
        target_index = {uid: i for i, uid in enumerate(desired)}
        current = [s.uid for s in self._sim_group(sim_parent)]
        keep = _lis_keep([target_index[u] for u in current])
        for uid in desired:
            if target_index[uid] not in keep:
                self.emit(Reorder(uid=uid, new_position=target_index[uid]))

    def _insert_new(self, sim_parent: str | None, after_group: tuple[Step, ...]) -> None:
        for i, step in enumerate(after_group):
            if step.uid in self.translate:
                continue
            predicted = next_uid(self.sim)
            if i > 0:
                self.emit(AddStep(after=self.translate[after_group[i - 1].uid],
                                  name=step.name, description=step.description))
            elif sim_parent is None:
                self.emit(AddStep(after=None, name=step.name, description=step.description))
            else:
                anchor = self._sim_group(sim_parent)[0].uid
                self.emit(AddStep(after=anchor, name=step.name, description=step.description))
                self.emit(Reorder(uid=predicted, new_position=0))
            self.translate[step.uid] = predicted
            if step.children:
                self._splice_new(predicted, step.children)

    def _splice_new(self, sim_parent_uid: str, substeps: tuple[Step, ...]) -> None:
        start = int(next_uid(self.sim)[1:])
        order: list[str] = []

        def collect(group: tuple[Step, ...]) -> None:
            for s in group:
                order.append(s.uid)
                collect(s.children)

        collect(substeps)
        for offset, after_uid in enumerate(order):
            self.translate[after_uid] = f"s{start + offset}"
        self.emit(SpliceExtension(
            parent_uid=sim_parent_uid,
            substeps=tuple(_strip_jumps(s) for s in substeps),
        ))

    def _modify_texts(self) -> None:
        sim_steps = uid_map(self.sim)
        for step in iter_steps(self.after):
            sim_step = sim_steps[self.translate[step.uid]]
            new_name = step.name if step.name != sim_step.name else None
            new_desc = step.description if step.description != sim_step.description else None
            if new_name is not None or new_desc is not None:
                self.emit(ModifyStep(uid=sim_step.uid, new_name=new_name, new_description=new_desc))

    def _desired_rules(self, step: Step) -> list[tuple[str, str]]:
        by_label = {s.label: s.uid for s in iter_steps(self.after)}
        out = []
        for rule in step.jumps:
            target = rule.target_uid if rule.target_uid else by_label[rule.target_label]
            out.append((rule.condition, self.translate[target]))
        return out

    def _reconcile_jumps(self) -> None:
        for step in iter_steps(self.after):
            sim_uid = self.translate[step.uid]
            sim_step = uid_map(self.sim)[sim_uid]
            current = [(r.condition, r.target_uid) for r in sim_step.jumps]
            desired = self._desired_rules(step)
            if current == desired:
                continue
            if desired[: len(current)] == current:
                extra = desired[len(current) :]
            elif current[: len(desired)] == desired:
                for index in range(len(current) - 1, len(desired) - 1, -1):
                    self.emit(RemoveJump(uid=sim_uid, index=index))
                extra = []
            else:
                for index in range(len(current) - 1, -1, -1):
                    self.emit(RemoveJump(uid=sim_uid, index=index))
                extra = desired
            for condition, target in extra:
                self.emit(AddJump(uid=sim_uid, condition=condition, target_uid=target))


def diff_workflows(before: Workflow, after: Workflow,
                   max_depth: int = DEFAULT_MAX_DEPTH) -> list[EditOp]:
    """Edit operations that turn ``before`` into ``after`` when applied in order.

    Steps are matched by uid: unmatched uids become removals or additions,
    sibling moves are expressed as the fewest reorders, and jump rules are
    reconciled last so every target already exists. Identical workflows
    yield an empty list.
    """
    return _Differ(before, after, max_depth).run()
