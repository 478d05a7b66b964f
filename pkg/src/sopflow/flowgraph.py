"""Workflow <-> flowchart conversion and graph export.

The graph is the editable visual form of a workflow: leaf steps become
boxes on a single sequential path from a start sentinel to an end
sentinel, steps with sub-steps become composite containers, and jump
rules become conditional edges.

A conditional edge is rendered between concrete leaves (it departs from
the owning step's last leaf and arrives at the target's first leaf), but
it also records the owning and target step uids so the conversion back to
a workflow is exact even when composites carry jump rules.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import BrokenPath, DanglingEdge, InvalidWorkflow
from .model import (
    DEFAULT_MAX_DEPTH,
    JumpRule,
    Step,
    StepLabel,
    Workflow,
    iter_steps,
    rebind,
    resolve_jump_targets,
    validate_workflow,
)

START_UID = "start"
END_UID = "end"


class NodeKind(str, Enum):
    START = "start"
    END = "end"
    LEAF = "leaf"
    COMPOSITE = "composite"


class EdgeKind(str, Enum):
    SEQUENTIAL = "sequential"
    CONDITIONAL = "conditional"


@dataclass(frozen=True)
class FlowNode:
    uid: str
    kind: NodeKind
    label: StepLabel | None = None
    name: str | None = None
    description: str | None = None
    parent: str | None = None


@dataclass(frozen=True)
class FlowEdge:
    """Directed edge. ``src``/``dst`` are concrete drawing endpoints.

    Conditional edges additionally carry ``owner`` (the step holding the
    jump rule) and ``target`` (the step the rule names); for leaf-owned
    rules these coincide with ``src``/``dst``.
    """

    src: str
    dst: str
    kind: EdgeKind
    condition: str | None = None
    owner: str | None = None
    target: str | None = None


@dataclass(frozen=True)
class FlowGraph:
    task: str
    nodes: tuple[FlowNode, ...]
    edges: tuple[FlowEdge, ...]


def _first_leaf(step: Step) -> Step:
    return step if step.is_leaf else _first_leaf(step.children[0])


def _last_leaf(step: Step) -> Step:
    return step if step.is_leaf else _last_leaf(step.children[-1])


def to_flowgraph(w: Workflow, max_depth: int = DEFAULT_MAX_DEPTH) -> FlowGraph:
    """Convert a valid workflow into its flowchart graph."""
    violations = validate_workflow(w, max_depth)
    if violations:
        raise InvalidWorkflow(violations, "cannot build a flowchart for an invalid workflow")
    w = resolve_jump_targets(w)

    nodes: list[FlowNode] = [FlowNode(uid=START_UID, kind=NodeKind.START)]

    def add_nodes(step: Step, parent: str | None) -> None:
        kind = NodeKind.LEAF if step.is_leaf else NodeKind.COMPOSITE
        nodes.append(
            FlowNode(
                uid=step.uid,
                kind=kind,
                label=step.label,
                name=step.name,
                description=step.description,
                parent=parent,
            )
        )
        for child in step.children:
            add_nodes(child, step.uid)

    for top in w.steps:
        add_nodes(top, None)
    nodes.append(FlowNode(uid=END_UID, kind=NodeKind.END))

    leaves = [s for s in iter_steps(w) if s.is_leaf]
    chain = [START_UID] + [s.uid for s in leaves] + [END_UID]
    edges: list[FlowEdge] = [
        FlowEdge(src=a, dst=b, kind=EdgeKind.SEQUENTIAL)
        for a, b in zip(chain, chain[1:])
    ]

    by_uid = {s.uid: s for s in iter_steps(w)}
    for step in iter_steps(w):
        for rule in step.jumps:
            target = by_uid[rule.target_uid]  # resolved: the workflow is valid
            edges.append(
                FlowEdge(
                    src=_last_leaf(step).uid,
                    dst=_first_leaf(target).uid,
                    kind=EdgeKind.CONDITIONAL,
                    condition=rule.condition,
                    owner=step.uid,
                    target=target.uid,
                )
            )
    return FlowGraph(task=w.task, nodes=tuple(nodes), edges=tuple(edges))


def from_flowgraph(g: FlowGraph) -> Workflow:
    """Rebuild the workflow a graph encodes; exact inverse of :func:`to_flowgraph`.

    Labels are recomputed from the sequential path and composite membership,
    conditional edges become jump rules on their owning steps, and uids are
    preserved.
    """
    by_uid = {n.uid: n for n in g.nodes}
    starts = [n for n in g.nodes if n.kind == NodeKind.START]
    ends = [n for n in g.nodes if n.kind == NodeKind.END]
    if len(starts) != 1 or len(ends) != 1:
        raise BrokenPath("graph needs exactly one start node and one end node")

    for e in g.edges:
        if e.src not in by_uid or e.dst not in by_uid:
            raise DanglingEdge(f"edge {e.src} -> {e.dst} references a missing node")

    succ: dict[str, str] = {}
    seq_count = 0
    for e in g.edges:
        if e.kind != EdgeKind.SEQUENTIAL:
            continue
        seq_count += 1
        if e.src in succ:
            raise BrokenPath(f"node {e.src} has more than one sequential successor")
        succ[e.src] = e.dst

    path: list[str] = []
    seen: set[str] = set()
    cur = starts[0].uid
    while True:
        if cur not in succ:
            raise BrokenPath(f"sequential path stops at {cur} before reaching the end")
        cur = succ[cur]
        if cur == ends[0].uid:
            break
        node = by_uid[cur]
        if node.kind != NodeKind.LEAF:
            raise BrokenPath(f"sequential path runs through non-leaf node {cur}")
        if cur in seen:
            raise BrokenPath(f"sequential path visits {cur} twice")
        seen.add(cur)
        path.append(cur)

    leaf_uids = {n.uid for n in g.nodes if n.kind == NodeKind.LEAF}
    if seen != leaf_uids:
        missing = sorted(leaf_uids - seen)
        raise BrokenPath(f"leaves not on the sequential path: {', '.join(missing)}")
    if seq_count != len(path) + 1:
        raise BrokenPath("graph has sequential edges outside the start-to-end path")
    if not path:
        raise BrokenPath("graph encodes an empty workflow")

    composites = {n.uid for n in g.nodes if n.kind == NodeKind.COMPOSITE}
    members: dict[str | None, list[str]] = {}
    for n in g.nodes:
        if n.kind not in (NodeKind.LEAF, NodeKind.COMPOSITE):
            continue
        if n.parent is not None and n.parent not in composites:
            raise BrokenPath(f"node {n.uid} has unknown parent {n.parent}")
        members.setdefault(n.parent, []).append(n.uid)

    pos = {uid: i for i, uid in enumerate(path)}

    def first_pos(uid: str, trail: tuple[str, ...] = ()) -> int:
        if uid in trail:
            raise BrokenPath(f"containment cycle at {uid}")
        if uid in pos:
            return pos[uid]
        inside = members.get(uid, [])
        if not inside:
            raise BrokenPath(f"composite {uid} has no members")
        return min(first_pos(m, trail + (uid,)) for m in inside)

    rules: dict[str, list[JumpRule]] = {}
    for e in g.edges:
        if e.kind != EdgeKind.CONDITIONAL:
            continue
        if not e.owner or not e.target:
            raise DanglingEdge("conditional edge is missing its owner or target step")
        if e.owner not in by_uid or e.target not in by_uid:
            raise DanglingEdge(f"conditional edge {e.owner} -> {e.target} names a missing step")
        if not e.condition or not e.condition.strip():
            raise DanglingEdge("conditional edge has no condition")
        rules.setdefault(e.owner, []).append(
            JumpRule(
                condition=e.condition.strip(),
                target_label=StepLabel.of(1),
                target_uid=e.target,
            )
        )

    def build(uid: str) -> Step:
        node = by_uid[uid]
        kids = tuple(
            build(m) for m in sorted(members.get(uid, []), key=first_pos)
        ) if uid in composites else ()
        return Step(
            uid=uid,
            label=StepLabel.of(1),  # recomputed below
            name=node.name or "",
            description=node.description or "",
            jumps=tuple(rules.get(uid, ())),
            children=kids,
        )

    tops = sorted(members.get(None, []), key=first_pos)
    return rebind(Workflow(task=g.task, steps=tuple(build(uid) for uid in tops)))


# ---------------------------------------------------------------------------
# Export


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def graph_to_dot(g: FlowGraph) -> str:
    """Graphviz rendering: boxes for leaves, clusters for composites,
    solid sequential edges, dashed conditional edges labelled with their
    condition. Deterministic for equal graphs."""
    by_uid = {n.uid: n for n in g.nodes}
    children: dict[str | None, list[FlowNode]] = {}
    for n in g.nodes:
        if n.kind in (NodeKind.LEAF, NodeKind.COMPOSITE):
            children.setdefault(n.parent, []).append(n)

    def node_id(uid: str) -> str:
        node = by_uid[uid]
        return str(node.label) if node.label is not None else node.uid

    lines = ["digraph workflow {", "  rankdir=TB;"]
    lines.append('  "start" [shape=oval, label="Start"];')

    def emit(node: FlowNode, indent: str) -> None:
        title = _dot_escape(f"{node.label}: {node.name}")
        if node.kind == NodeKind.COMPOSITE:
            cluster = str(node.label).replace(".", "_")
            lines.append(f'{indent}subgraph cluster_{cluster} {{')
            lines.append(f'{indent}  label="{title}";')
            for child in children.get(node.uid, []):
                emit(child, indent + "  ")
            lines.append(f"{indent}}}")
        else:
            lines.append(f'{indent}"{node.label}" [shape=box, label="{title}"];')

    for top in children.get(None, []):
        emit(top, "  ")
    lines.append('  "end" [shape=oval, label="End"];')

    for e in g.edges:
        if e.kind == EdgeKind.SEQUENTIAL:
            lines.append(f'  "{node_id(e.src)}" -> "{node_id(e.dst)}";')
        else:
            cond = _dot_escape(e.condition or "")
            lines.append(
                f'  "{node_id(e.src)}" -> "{node_id(e.dst)}" [style=dashed, label="{cond}"];'
            )
    lines.append("}")
    return "\n".join(lines)


def graph_to_json(g: FlowGraph) -> str:
    """Stable JSON form: ``{task, nodes:[{uid,kind,label,name,description,parent}],
    edges:[{from,to,kind,condition,owner,target}]}``."""
    obj = {
        "task": g.task,
        "nodes": [
            {
                "uid": n.uid,
                "kind": n.kind.value,
                "label": str(n.label) if n.label is not None else None,
                "name": n.name,
                "description": n.description,
                "parent": n.parent,
            }
            for n in g.nodes
        ],
        "edges": [
            {
                "from": e.src,
                "to": e.dst,
                "kind": e.kind.value,
                "condition": e.condition,
                "owner": e.owner,
                "target": e.target,
            }
            for e in g.edges
        ],
    }
    return json.dumps(obj, indent=2, ensure_ascii=False)


def graph_from_json(text: str) -> FlowGraph:
    obj = json.loads(text)
    nodes = tuple(
        FlowNode(
            uid=n["uid"],
            kind=NodeKind(n["kind"]),
            label=StepLabel.parse(n["label"]) if n.get("label") else None,
            name=n.get("name"),
            description=n.get("description"),
            parent=n.get("parent"),
        )
        for n in obj.get("nodes", [])
    )
    edges = tuple(
        FlowEdge(
            src=e["from"],
            dst=e["to"],
            kind=EdgeKind(e["kind"]),
            condition=e.get("condition"),
            owner=e.get("owner"),
            target=e.get("target"),
        )
        for e in obj.get("edges", [])
    )
    return FlowGraph(task=obj.get("task", ""), nodes=nodes, edges=edges)


def export_graph(g: FlowGraph, format: str) -> str:
    """Export as ``dot`` or ``json``."""
    if format == "dot":
        return graph_to_dot(g)
    if format == "json":
        return graph_to_json(g)
    raise ValueError(f"unknown export format {format!r} (expected 'dot' or 'json')")
