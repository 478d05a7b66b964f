"""Seeded random generators used by the property and fuzz tests."""

from __future__ import annotations

import random
from dataclasses import replace

from sopflow.editops import (
    AddJump,
    AddStep,
    EditOp,
    ModifyStep,
    RemoveJump,
    RemoveStep,
    Reorder,
    SpliceExtension,
)
from sopflow.model import (
    JumpRule,
    Step,
    StepLabel,
    Workflow,
    iter_steps,
    resolve_jump_targets,
)

# no brackets, no newlines, no leading "if", no edge quotes
_WORDS = (
    "gather sort draft review material outline budget idea check source "
    "notes topic plan detail result client pending missing extra scope "
    "ready blocked approved weak it's done, almost (maybe) issue: found"
).split(" ")


def phrase(rng: random.Random, low: int, high: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(low, high)))


def random_workflow(
    rng: random.Random,
    max_steps: int = 20,
    max_depth: int = 3,
    max_jumps: int = 3,
) -> Workflow:
    """A valid workflow: <= max_steps steps, nesting <= max_depth,
    <= max_jumps rules per step, zero violations by construction."""
    remaining = [rng.randint(1, max_steps)]
    uid_n = [0]

    def new_step(label: StepLabel, depth: int) -> Step:
        uid_n[0] += 1
        remaining[0] -= 1
        step_uid = f"s{uid_n[0]}"
        children: list[Step] = []
        if depth < max_depth and remaining[0] > 0 and rng.random() < 0.35:
            for i in range(rng.randint(1, 3)):
                if remaining[0] <= 0:
                    break
                children.append(new_step(label.child(i + 1), depth + 1))
        return Step(
            uid=step_uid,
            label=label,
            name=phrase(rng, 1, 3),
            description=phrase(rng, 0, 6),
            children=tuple(children),
        )

    tops: list[Step] = []
    while remaining[0] > 0 and (not tops or rng.random() < 0.8):
        tops.append(new_step(StepLabel.of(len(tops) + 1), 1))
    w = Workflow(task="", steps=tuple(tops))

    labels = [s.label for s in iter_steps(w)]

    def add_jumps(step: Step) -> Step:
        jumps = []
        weights = [70, 20, 7, 3][: max_jumps + 1]
        for _ in range(rng.choices(range(len(weights)), weights=weights)[0]):
            target = rng.choice(labels)
            if target == step.label:
                continue
            jumps.append(JumpRule(condition=phrase(rng, 1, 4), target_label=target))
        return replace(
            step, jumps=tuple(jumps), children=tuple(add_jumps(c) for c in step.children)
        )

    return resolve_jump_targets(replace(w, steps=tuple(add_jumps(s) for s in w.steps)))


def random_substeps(rng: random.Random, parent: StepLabel, k: int | None = None) -> tuple[Step, ...]:
    k = k or rng.randint(1, 3)
    return tuple(
        Step(
            uid=f"x{i}",
            label=parent.child(i + 1),
            name=phrase(rng, 1, 2),
            description=phrase(rng, 1, 4),
        )
        for i in range(k)
    )


def random_edit(rng: random.Random, w: Workflow) -> EditOp:
    """One random edit; mostly well-formed, occasionally rejectable."""
    steps = list(iter_steps(w))
    uids = [s.uid for s in steps]
    pick = rng.choice(uids)
    kind = rng.choices(
        ("add", "remove", "modify", "add_jump", "remove_jump", "reorder", "splice"),
        weights=(22, 12, 18, 16, 8, 14, 10),
    )[0]
    if kind == "add":
        return AddStep(
            after=rng.choice([None] + uids),
            name=phrase(rng, 1, 3),
            description=phrase(rng, 0, 5),
        )
    if kind == "remove":
        return RemoveStep(uid=pick, cascade=rng.random() < 0.8)
    if kind == "modify":
        return ModifyStep(
            uid=pick,
            new_name=phrase(rng, 1, 3) if rng.random() < 0.7 else None,
            new_description=phrase(rng, 0, 5) if rng.random() < 0.7 else None,
        )
    if kind == "add_jump":
        return AddJump(uid=pick, condition=phrase(rng, 1, 4), target_uid=rng.choice(uids))
    if kind == "remove_jump":
        return RemoveJump(uid=pick, index=rng.randint(0, 3))
    if kind == "reorder":
        return Reorder(uid=pick, new_position=rng.randint(0, 5))
    leaves = [s for s in steps if s.is_leaf]
    parent = rng.choice(leaves) if leaves else steps[0]
    return SpliceExtension(parent_uid=parent.uid, substeps=random_substeps(rng, parent.label))
