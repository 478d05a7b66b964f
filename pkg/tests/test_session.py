import json
from itertools import count

import pytest

from sopflow.editops import AddJump, ModifyStep, RemoveStep
from sopflow.errors import (
    CorruptLog,
    EmptyTask,
    EndpointError,
    InvalidWorkflow,
    UnknownSession,
    WouldOrphanJump,
    WrongState,
)
from sopflow.llm import MockChatClient, Role
from sopflow.model import StepLabel, label_map
from sopflow.serializer import serialize_workflow
from sopflow.session import (
    EventKind,
    EventStore,
    SessionService,
    SessionState,
    load_session,
)

PLAN_REPLY = (
    "STEP 1: [Brainstorming][Choose a topic or prompt, and generate ideas and organize them "
    "into an outline][]\n"
    "STEP 2: [Research][Gather information, take notes and organize them into the outline]"
    "[[[lack of ideas][Jump to STEP 1]]]"
)

EXTEND_REPLY = "\n".join(
    [
        "STEP 2.1: [Find sources][look for credible sources][]",
        "STEP 2.2: [Take notes][summarize each source][]",
    ]
)


def make_service(tmp_path, replies):
    ids = count(1)
    clock = count(1)
    return SessionService(
        EventStore(tmp_path / "sessions"),
        MockChatClient(replies=list(replies)),
        clock=lambda: f"2024-01-01T00:00:{next(clock):02d}+00:00",
        id_factory=lambda: f"sess{next(ids)}",
    )


def test_create_with_deferred_plan_stays_drafting(tmp_path):
    service = make_service(tmp_path, [])
    session = service.create_session("book a hotel", defer_plan=True)
    assert session.state == SessionState.DRAFTING
    assert session.workflow is None
    assert [e.kind for e in service.events(session.id)] == [EventKind.CREATED]


def test_create_triggers_plan_by_default(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("write an essay")
    assert session.state == SessionState.PLANNED
    assert session.workflow is not None
    assert [e.kind for e in service.events(session.id)] == [
        EventKind.CREATED,
        EventKind.PLAN_GENERATED,
    ]


def test_session_ids_are_unique(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, PLAN_REPLY])
    assert service.create_session("a").id != service.create_session("b").id


def test_empty_task_is_rejected(tmp_path):
    with pytest.raises(EmptyTask):
        make_service(tmp_path, []).create_session("  ")


def test_replan_records_regenerated_and_keeps_history(tmp_path):
    second = "STEP 1: [Plan][plan it all][]"
    service = make_service(tmp_path, [PLAN_REPLY, second])
    session = service.create_session("write an essay")
    session = service.generate_plan(session.id)
    assert session.state == SessionState.PLANNED
    assert [s.name for s in session.workflow.steps] == ["Plan"]
    kinds = [e.kind for e in service.events(session.id)]
    assert kinds == [EventKind.CREATED, EventKind.PLAN_GENERATED, EventKind.REGENERATED]
    snapshots = [e for e in service.events(session.id) if e.kind != EventKind.CREATED]
    assert len(snapshots[0].payload["workflow"]["steps"]) == 2  # prior plan retained


def test_failed_plan_keeps_prior_state(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, "garbage", "more garbage"])
    session = service.create_session("write an essay")
    with pytest.raises(Exception):
        service.generate_plan(session.id)
    after = service.get_session(session.id)
    assert after.state == SessionState.PLANNED
    assert [s.name for s in after.workflow.steps] == ["Brainstorming", "Research"]
    assert [e.kind for e in service.events(session.id)] == [
        EventKind.CREATED,
        EventKind.PLAN_GENERATED,
    ]


def test_edit_in_planned_state(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("write an essay")
    uid = session.workflow.steps[0].uid
    session = service.apply_session_edit(session.id, ModifyStep(uid=uid, new_name="Ideate"))
    assert session.workflow.steps[0].name == "Ideate"
    last = service.events(session.id)[-1]
    assert last.kind == EventKind.EDIT_APPLIED
    assert last.payload["op"]["kind"] == "modify_step"


def test_rejected_edit_appends_no_event(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("write an essay")
    before = [e.seq for e in service.events(session.id)]
    uid = session.workflow.steps[0].uid  # step 2 jumps to it
    with pytest.raises(WouldOrphanJump):
        service.apply_session_edit(session.id, RemoveStep(uid=uid, cascade=False))
    assert [e.seq for e in service.events(session.id)] == before
    assert service.get_session(session.id).workflow == session.workflow


def test_edit_outside_planned_is_wrong_state(tmp_path):
    service = make_service(tmp_path, [])
    session = service.create_session("task", defer_plan=True)
    with pytest.raises(WrongState):
        service.apply_session_edit(session.id, ModifyStep(uid="s1", new_name="X"))


def test_extension_applies_and_failed_extension_changes_nothing(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, EXTEND_REPLY, "STEP 9.1: [X][Y][]"])
    session = service.create_session("write an essay")
    session = service.request_extension(session.id, StepLabel.of(2))
    children = label_map(session.workflow)[StepLabel.of(2)].children
    assert [str(c.label) for c in children] == ["2.1", "2.2"]
    assert service.events(session.id)[-1].kind == EventKind.EXTENSION_APPLIED

    before = session.workflow
    with pytest.raises(Exception):
        service.request_extension(session.id, StepLabel.of(1))
    assert service.get_session(session.id).workflow == before


def test_extension_requires_planned_state(tmp_path):
    service = make_service(tmp_path, [])
    session = service.create_session("task", defer_plan=True)
    with pytest.raises(WrongState):
        service.request_extension(session.id, StepLabel.of(1))


def test_confirm_freezes_canonical_text(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("write an essay")
    confirmed = service.confirm_workflow(session.id)
    assert confirmed.state == SessionState.CONFIRMED
    assert confirmed.confirmed_text == serialize_workflow(session.workflow)
    event = service.events(session.id)[-1]
    assert event.kind == EventKind.CONFIRMED
    assert event.payload["workflow_text"] == confirmed.confirmed_text


def test_confirm_rejects_wrong_state_and_double_confirm(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("write an essay")
    service.confirm_workflow(session.id)
    with pytest.raises(WrongState):
        service.confirm_workflow(session.id)


def test_chat_turns_and_executor_receives_frozen_text(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, "Hello! How can I help?"])
    session = service.create_session("virtual hotel service")
    frozen = service.confirm_workflow(session.id).confirmed_text
    session = service.chat_turn(session.id, "hi there")
    assert session.state == SessionState.EXECUTING
    assert [(m.role, m.content) for m in session.chat] == [
        (Role.USER, "hi there"),
        (Role.ASSISTANT, "Hello! How can I help?"),
    ]
    executing_request = service.client.requests[-1]
    assert f"\nSOP:\n{frozen}\n" in executing_request[0].content
    kinds = [e.kind for e in service.events(session.id)]
    assert kinds[-2:] == [EventKind.CHAT_MESSAGE_ADDED, EventKind.CHAT_MESSAGE_ADDED]


def test_chat_in_planned_is_wrong_state(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("task")
    with pytest.raises(WrongState):
        service.chat_turn(session.id, "hello?")


def test_failed_chat_persists_unanswered_user_message(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, {"error": "endpoint"}])
    session = service.create_session("task")
    service.confirm_workflow(session.id)
    with pytest.raises(EndpointError):
        service.chat_turn(session.id, "are you there?")
    after = service.get_session(session.id)
    assert [m.content for m in after.chat] == ["are you there?"]
    last = service.events(session.id)[-1]
    assert last.payload == {"role": "user", "content": "are you there?", "answered": False}


def test_reopen_clears_chat_but_log_keeps_it(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, "sure thing"])
    session = service.create_session("task")
    service.confirm_workflow(session.id)
    service.chat_turn(session.id, "hello")
    reopened = service.reopen_workflow(session.id)
    assert reopened.state == SessionState.PLANNED
    assert reopened.chat == ()
    assert reopened.confirmed_text is None
    chat_events = [e for e in service.events(session.id) if e.kind == EventKind.CHAT_MESSAGE_ADDED]
    assert len(chat_events) == 2


def test_reopen_from_drafting_is_wrong_state(tmp_path):
    service = make_service(tmp_path, [])
    session = service.create_session("task", defer_plan=True)
    with pytest.raises(WrongState):
        service.reopen_workflow(session.id)


# -- persistence ------------------------------------------------------------


def full_loop(tmp_path):
    service = make_service(tmp_path, [PLAN_REPLY, EXTEND_REPLY, "reply one", "reply two"])
    session = service.create_session("write an essay")
    uid = session.workflow.steps[0].uid
    service.apply_session_edit(session.id, ModifyStep(uid=uid, new_name="Ideate"))
    target_uid = service.get_session(session.id).workflow.steps[1].uid
    service.apply_session_edit(
        session.id, AddJump(uid=uid, condition="need data", target_uid=target_uid)
    )
    service.request_extension(session.id, StepLabel.of(2))
    service.confirm_workflow(session.id)
    service.chat_turn(session.id, "first question")
    service.chat_turn(session.id, "second question")
    return service, session.id


def test_replay_reconstructs_the_session_exactly(tmp_path):
    service, session_id = full_loop(tmp_path)
    live = service.get_session(session_id)
    replayed = load_session(service.store, session_id)
    assert replayed == live

    fresh_store = EventStore(tmp_path / "sessions")  # same directory, new process
    assert load_session(fresh_store, session_id) == live


def test_event_seq_is_dense_from_one(tmp_path):
    service, session_id = full_loop(tmp_path)
    events = service.events(session_id)
    assert [e.seq for e in events] == list(range(1, len(events) + 1))
    assert service.events(session_id, since=3) == events[3:]


def test_unknown_session(tmp_path):
    service = make_service(tmp_path, [])
    with pytest.raises(UnknownSession):
        service.get_session("ghost")
    with pytest.raises(UnknownSession):
        service.events("ghost")


def test_truncated_final_line_is_tolerated(tmp_path):
    service, session_id = full_loop(tmp_path)
    live = service.get_session(session_id)
    path = tmp_path / "sessions" / f"{session_id}.jsonl"
    path.write_text(path.read_text(encoding="utf-8") + '{"seq": 99, "kind": "chat', "utf-8")
    recovered = load_session(EventStore(tmp_path / "sessions"), session_id)
    assert recovered == live


def test_mid_file_corruption_raises(tmp_path):
    service, session_id = full_loop(tmp_path)
    path = tmp_path / "sessions" / f"{session_id}.jsonl"
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[1] = "definitely not json"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(CorruptLog):
        load_session(EventStore(tmp_path / "sessions"), session_id)


def test_seq_gap_raises(tmp_path):
    service, session_id = full_loop(tmp_path)
    path = tmp_path / "sessions" / f"{session_id}.jsonl"
    lines = path.read_text(encoding="utf-8").splitlines()
    del lines[2]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(CorruptLog):
        load_session(EventStore(tmp_path / "sessions"), session_id)


def test_confirm_with_violations_is_rejected(tmp_path):
    # a dangling jump can only enter via a hand-crafted snapshot; simulate by
    # planning a workflow and then removing the jump target with cascade off
    service = make_service(tmp_path, [PLAN_REPLY])
    session = service.create_session("task")
    # force a violation through the event layer: append a snapshot with a bad jump
    bad = json.loads(json.dumps({
        "task": "task",
        "steps": [
            {"uid": "s1", "label": "1", "name": "A", "description": "", "jumps": [
                {"condition": "x", "target": "9", "target_uid": None}
            ], "children": []},
        ],
    }))
    from sopflow.session import SessionEvent

    service.store.append(session.id, SessionEvent(
        seq=session.last_seq + 1, kind=EventKind.REGENERATED,
        timestamp="2024-01-01T00:10:00+00:00", payload={"workflow": bad},
    ))
    service._sessions.pop(session.id)  # drop the cache, force replay
    with pytest.raises(InvalidWorkflow):
        service.confirm_workflow(session.id)


def test_empty_log_file_is_unknown_session(tmp_path):
    store = EventStore(tmp_path / "sessions")
    (tmp_path / "sessions" / "hollow.jsonl").write_text("", encoding="utf-8")
    with pytest.raises(UnknownSession):
        load_session(store, "hollow")


def test_fresh_service_instance_picks_up_persisted_sessions(tmp_path):
    service, session_id = full_loop(tmp_path)
    live = service.get_session(session_id)

    restarted = SessionService(EventStore(tmp_path / "sessions"), MockChatClient())
    assert restarted.get_session(session_id) == live
    assert restarted.store.session_ids() == [session_id]
    # and the restarted instance can keep going where the old one stopped
    reopened = restarted.reopen_workflow(session_id)
    assert reopened.state == SessionState.PLANNED
    assert reopened.last_seq == live.last_seq + 1
