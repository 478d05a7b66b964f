"""Generator-driven properties of the text grammar and the graph conversion."""

import random

from support import random_workflow

from sopflow.flowgraph import EdgeKind, NodeKind, from_flowgraph, to_flowgraph
from sopflow.model import (
    iter_steps,
    structurally_equal,
    validate_workflow,
    workflow_from_dict,
    workflow_to_dict,
)
from sopflow.parser import parse_workflow
from sopflow.serializer import serialize_workflow

N = 300  # the acceptance suite runs the full 1000


def test_generator_only_emits_valid_workflows():
    rng = random.Random(7)
    for _ in range(N):
        w = random_workflow(rng)
        assert validate_workflow(w) == []
        assert sum(1 for _ in iter_steps(w)) <= 20


def test_parse_serialize_identity():
    rng = random.Random(11)
    for _ in range(N):
        w = random_workflow(rng)
        assert structurally_equal(parse_workflow(serialize_workflow(w)), w)


def test_serialize_parse_serialize_is_serialize():
    rng = random.Random(13)
    for _ in range(N):
        w = random_workflow(rng)
        text = serialize_workflow(w)
        assert serialize_workflow(parse_workflow(text)) == text


def test_pre_order_labels_strictly_increase():
    rng = random.Random(17)
    for _ in range(50):
        w = random_workflow(rng)
        labels = [s.label.segments for s in iter_steps(w)]
        assert labels == sorted(labels)
        assert len(set(labels)) == len(labels)


def test_graph_roundtrip_preserves_uids():
    rng = random.Random(19)
    for _ in range(N):
        w = random_workflow(rng)
        assert from_flowgraph(to_flowgraph(w)) == w


def test_graph_counting_invariants():
    rng = random.Random(23)
    for _ in range(N):
        w = random_workflow(rng)
        g = to_flowgraph(w)
        leaves = [n for n in g.nodes if n.kind == NodeKind.LEAF]
        sequential = [e for e in g.edges if e.kind == EdgeKind.SEQUENTIAL]
        conditional = [e for e in g.edges if e.kind == EdgeKind.CONDITIONAL]
        assert len(leaves) == len(sequential) - 1
        assert len(conditional) == sum(len(s.jumps) for s in iter_steps(w))
        # the conditional edge multiset mirrors the rule multiset
        rules = sorted(
            (s.uid, r.target_uid, r.condition) for s in iter_steps(w) for r in s.jumps
        )
        edges = sorted((e.owner, e.target, e.condition) for e in conditional)
        assert rules == edges


def test_json_codec_roundtrip():
    rng = random.Random(29)
    for _ in range(100):
        w = random_workflow(rng)
        assert workflow_from_dict(workflow_to_dict(w)) == w
