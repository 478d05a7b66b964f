import json
import random
from pathlib import Path

import pytest

from support import random_workflow

from sopflow.errors import BrokenPath, DanglingEdge, InvalidWorkflow
from sopflow.flowgraph import (
    EdgeKind,
    FlowEdge,
    FlowGraph,
    FlowNode,
    NodeKind,
    export_graph,
    from_flowgraph,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    to_flowgraph,
)
from sopflow.model import StepLabel
from sopflow.parser import parse_workflow

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture()
def essay():
    return parse_workflow((FIXTURES / "table2.sop").read_text())


def test_essay_graph_shape(essay):
    g = to_flowgraph(essay)
    kinds = {}
    for n in g.nodes:
        kinds.setdefault(n.kind, []).append(n)
    assert len(kinds[NodeKind.START]) == 1
    assert len(kinds[NodeKind.END]) == 1
    assert sorted(str(n.label) for n in kinds[NodeKind.LEAF]) == ["1", "2", "3.1", "3.2", "3.3", "4"]
    assert [str(n.label) for n in kinds[NodeKind.COMPOSITE]] == ["3"]
    assert len(g.nodes) == 9

    sequential = [e for e in g.edges if e.kind == EdgeKind.SEQUENTIAL]
    conditional = [e for e in g.edges if e.kind == EdgeKind.CONDITIONAL]
    assert len(sequential) == 7
    assert len(conditional) == 1
    by_uid = {n.uid: n for n in g.nodes}
    path = [str(by_uid[e.dst].label) if by_uid[e.dst].label else by_uid[e.dst].uid for e in sequential]
    assert path == ["1", "2", "3.1", "3.2", "3.3", "4", "end"]
    (edge,) = conditional
    assert str(by_uid[edge.src].label) == "2"
    assert str(by_uid[edge.dst].label) == "1"
    assert edge.condition == "lack of materials"


def test_single_step_chain():
    g = to_flowgraph(parse_workflow("STEP 1: [A][B][]"))
    assert [(e.src, e.dst) for e in g.edges] == [("start", "s1"), ("s1", "end")]


def test_composite_membership_is_recorded(essay):
    g = to_flowgraph(essay)
    composite = next(n for n in g.nodes if n.kind == NodeKind.COMPOSITE)
    members = [n for n in g.nodes if n.parent == composite.uid]
    assert [str(n.label) for n in members] == ["3.1", "3.2", "3.3"]


def test_invalid_workflow_is_refused():
    w = parse_workflow("STEP 1: [A][B][[[if x][Jump to STEP 9]]]")
    with pytest.raises(InvalidWorkflow):
        to_flowgraph(w)


def test_composite_jump_uses_last_and_first_leaf():
    text = "\n".join(
        [
            "STEP 1: [A][B][[[if x][Jump to STEP 2]]]",
            "STEP 1.1: [C][D][]",
            "STEP 1.2: [E][F][]",
            "STEP 2: [G][H][]",
            "STEP 2.1: [I][J][]",
            "STEP 2.2: [K][L][]",
        ]
    )
    w = parse_workflow(text)
    g = to_flowgraph(w)
    (edge,) = [e for e in g.edges if e.kind == EdgeKind.CONDITIONAL]
    by_uid = {n.uid: n for n in g.nodes}
    assert str(by_uid[edge.src].label) == "1.2"  # last leaf of the owner
    assert str(by_uid[edge.dst].label) == "2.1"  # first leaf of the target
    assert str(by_uid[edge.owner].label) == "1"
    assert str(by_uid[edge.target].label) == "2"
    # and the rule comes back to the composite on the way in
    assert from_flowgraph(g) == w


def test_from_flowgraph_restores_essay(essay):
    assert from_flowgraph(to_flowgraph(essay)) == essay


def test_empty_graph_is_broken_path():
    g = FlowGraph(
        task="",
        nodes=(FlowNode("start", NodeKind.START), FlowNode("end", NodeKind.END)),
        edges=(FlowEdge("start", "end", EdgeKind.SEQUENTIAL),),
    )
    with pytest.raises(BrokenPath):
        from_flowgraph(g)


def _leaf(uid, label, name="N"):
    return FlowNode(uid, NodeKind.LEAF, StepLabel.parse(label), name, "")


def test_broken_path_variants():
    start, end = FlowNode("start", NodeKind.START), FlowNode("end", NodeKind.END)
    a, b = _leaf("s1", "1"), _leaf("s2", "2")

    unreachable = FlowGraph(
        task="",
        nodes=(start, a, b, end),
        edges=(
            FlowEdge("start", "s1", EdgeKind.SEQUENTIAL),
            FlowEdge("s1", "end", EdgeKind.SEQUENTIAL),
        ),
    )
    with pytest.raises(BrokenPath):
        from_flowgraph(unreachable)

    forked = FlowGraph(
        task="",
        nodes=(start, a, b, end),
        edges=(
            FlowEdge("start", "s1", EdgeKind.SEQUENTIAL),
            FlowEdge("s1", "end", EdgeKind.SEQUENTIAL),
            FlowEdge("s1", "s2", EdgeKind.SEQUENTIAL),
            FlowEdge("s2", "end", EdgeKind.SEQUENTIAL),
        ),
    )
    with pytest.raises(BrokenPath):
        from_flowgraph(forked)


def test_dangling_edge_is_detected():
    start, end = FlowNode("start", NodeKind.START), FlowNode("end", NodeKind.END)
    a = _leaf("s1", "1")
    g = FlowGraph(
        task="",
        nodes=(start, a, end),
        edges=(
            FlowEdge("start", "s1", EdgeKind.SEQUENTIAL),
            FlowEdge("s1", "ghost", EdgeKind.SEQUENTIAL),
        ),
    )
    with pytest.raises(DanglingEdge):
        from_flowgraph(g)


def test_dot_contains_dashed_conditional_edge(essay):
    dot = graph_to_dot(to_flowgraph(essay))
    assert '"2" -> "1" [style=dashed, label="lack of materials"]' in dot
    assert 'subgraph cluster_3' in dot
    assert '"3.1" [shape=box, label="3.1: Write the introduction"];' in dot


def test_dot_single_step_has_two_edges():
    dot = graph_to_dot(to_flowgraph(parse_workflow("STEP 1: [A][B][]")))
    assert dot.count("->") == 2


def test_json_reexport_is_byte_identical(essay):
    g = to_flowgraph(essay)
    text = graph_to_json(g)
    assert graph_to_json(graph_from_json(text)) == text
    parsed = json.loads(text)
    assert set(parsed) == {"task", "nodes", "edges"}
    assert set(parsed["nodes"][0]) == {"uid", "kind", "label", "name", "description", "parent"}
    assert set(parsed["edges"][0]) == {"from", "to", "kind", "condition", "owner", "target"}


def test_task_survives_the_graph_roundtrip():
    from dataclasses import replace

    w = replace(parse_workflow("STEP 1: [A][B][]"), task="write a memo")
    assert from_flowgraph(to_flowgraph(w)).task == "write a memo"


def test_export_format_dispatch(essay):
    g = to_flowgraph(essay)
    assert export_graph(g, "dot") == graph_to_dot(g)
    assert export_graph(g, "json") == graph_to_json(g)
    with pytest.raises(ValueError):
        export_graph(g, "svg")


def test_random_graphs_roundtrip_via_json():
    rng = random.Random(31)
    for _ in range(100):
        g = to_flowgraph(random_workflow(rng))
        assert graph_from_json(graph_to_json(g)) == g
        assert from_flowgraph(graph_from_json(graph_to_json(g))) == from_flowgraph(g)
