"""Event-sourced sessions driving the plan, edit, confirm, chat loop.

A session moves through four states:

    drafting --plan--> planned --confirm--> confirmed --chat--> executing
                 ^        | edits / extension / re-plan             |
                 |        v                                         |
                 +----- planned <----------- reopen ----------------+

Every change is an append-only event in a per-session JSON-lines file;
replaying the log reconstructs the session exactly, including after a
process restart. Confirmation freezes the serialized workflow text, and
the executor only ever sees that frozen snapshot.
"""

from __future__ import annotations

import logging
import threading
import uuid
from collections import defaultdict
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable
import json

from .editops import EditOp, apply_edit, edit_op_from_dict, edit_op_to_dict, SpliceExtension
from .errors import (
    CorruptLog,
    EmptyTask,
    GatewayError,
    InvalidWorkflow,
    UnknownSession,
    WrongState,
)
from .llm import ChatClient, ChatMessage, Role
from .model import (
    DEFAULT_MAX_DEPTH,
    StepLabel,
    Workflow,
    step_from_dict,
    step_to_dict,
    uid_map,
    validate_workflow,
    workflow_from_dict,
    workflow_to_dict,
)
from .planner import build_executing_messages, extend_step, plan_workflow
from .prompts import PromptBundle
from .serializer import serialize_workflow

logger = logging.getLogger(__name__)


class SessionState(str, Enum):
    DRAFTING = "drafting"
    PLANNED = "planned"
    CONFIRMED = "confirmed"
    EXECUTING = "executing"


class EventKind(str, Enum):
    CREATED = "created"
    PLAN_GENERATED = "plan_generated"
    EDIT_APPLIED = "edit_applied"
    EXTENSION_APPLIED = "extension_applied"
    REGENERATED = "regenerated"
    CONFIRMED = "confirmed"
    CHAT_MESSAGE_ADDED = "chat_message_added"
    REOPENED = "reopened"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: EventKind
    timestamp: str
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind.value,
            "timestamp": self.timestamp,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionEvent":
        return cls(
            seq=int(data["seq"]),
            kind=EventKind(data["kind"]),
            timestamp=data["timestamp"],
            payload=data.get("payload", {}),
        )


@dataclass(frozen=True)
class Session:
    id: str
    task: str
    state: SessionState
    workflow: Workflow | None = None
    confirmed_text: str | None = None
    chat: tuple[ChatMessage, ...] = ()
    created_at: str = ""
    updated_at: str = ""
    last_seq: int = 0


def apply_event(session: Session | None, session_id: str, event: SessionEvent) -> Session:
    """Left-fold step: the session after one more event."""
    p = event.payload
    if event.kind == EventKind.CREATED:
        return Session(
            id=session_id,
            task=p["task"],
            state=SessionState.DRAFTING,
            created_at=event.timestamp,
            updated_at=event.timestamp,
            last_seq=event.seq,
        )
    if session is None:
        raise CorruptLog(f"event log for {session_id} does not start with a created event")

    session = replace(session, updated_at=event.timestamp, last_seq=event.seq)
    if event.kind in (EventKind.PLAN_GENERATED, EventKind.REGENERATED):
        return replace(
            session, state=SessionState.PLANNED, workflow=workflow_from_dict(p["workflow"])
        )
    if event.kind == EventKind.EDIT_APPLIED:
        assert session.workflow is not None
        return replace(session, workflow=apply_edit(session.workflow, edit_op_from_dict(p["op"])))
    if event.kind == EventKind.EXTENSION_APPLIED:
        assert session.workflow is not None
        parent_uid = p["parent_uid"]
        substeps = tuple(step_from_dict(s) for s in p["substeps"])
        return replace(
            session, workflow=apply_edit(session.workflow, SpliceExtension(parent_uid, substeps))
        )
    if event.kind == EventKind.CONFIRMED:
        return replace(session, state=SessionState.CONFIRMED, confirmed_text=p["workflow_text"])
    if event.kind == EventKind.CHAT_MESSAGE_ADDED:
        message = ChatMessage(Role(p["role"]), p["content"])
        return replace(session, state=SessionState.EXECUTING, chat=session.chat + (message,))
    if event.kind == EventKind.REOPENED:
        return replace(session, state=SessionState.PLANNED, chat=(), confirmed_text=None)
    raise CorruptLog(f"unknown event kind {event.kind!r}")


def replay(session_id: str, events: Iterable[SessionEvent]) -> Session:
    session: Session | None = None
    for event in events:
        session = apply_event(session, session_id, event)
    if session is None:
        raise UnknownSession(f"no events for session {session_id}")
    return session


class EventStore:
    """One append-only JSON-lines file per session under ``root``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).is_file()

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def append(self, session_id: str, event: SessionEvent) -> None:
        line = json.dumps(event.to_dict(), ensure_ascii=False)
        with open(self._path(session_id), "a", encoding="utf-8") as f:
            f.write(line + "\n")

    def read(self, session_id: str) -> list[SessionEvent]:
        """Events in seq order. A corrupt final line (torn write) is dropped
        with a warning; corruption anywhere else raises :class:`CorruptLog`."""
        path = self._path(session_id)
        if not path.is_file():
            raise UnknownSession(f"no session {session_id!r}")
        raw_lines = path.read_text(encoding="utf-8").splitlines()
        events: list[SessionEvent] = []
        for i, line in enumerate(raw_lines):
            if not line.strip():
                continue
            try:
                events.append(SessionEvent.from_dict(json.loads(line)))
            except (ValueError, KeyError) as exc:
                if i == len(raw_lines) - 1:
                    logger.warning(
                        "session %s: dropping corrupt trailing event line (%s)", session_id, exc
                    )
                    break
                raise CorruptLog(f"session {session_id}: bad event at line {i + 1}: {exc}")
        if not events:
            raise UnknownSession(f"session {session_id!r} has an empty log")
        for expected, event in enumerate(events, start=1):
            if event.seq != expected:
                raise CorruptLog(
                    f"session {session_id}: event seq {event.seq} where {expected} was expected"
                )
        return events


def load_session(store: EventStore, session_id: str) -> Session:
    """Rebuild a session from its persisted event log."""
    return replay(session_id, store.read(session_id))


class SessionService:
    """Coordinates sessions: state checks, event persistence, LLM calls.

    Each session has a lock; at most one mutating request (including its
    LLM call) runs per session at a time. Reads hand out the latest
    immutable snapshot without blocking.
    """

    def __init__(
        self,
        store: EventStore,
        client: ChatClient,
        bundle: PromptBundle | None = None,
        max_depth: int = DEFAULT_MAX_DEPTH,
        clock: Callable[[], str] | None = None,
        id_factory: Callable[[], str] | None = None,
    ):
        self.store = store
        self.client = client
        self.bundle = bundle
        self.max_depth = max_depth
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat())
        self._id_factory = id_factory or (lambda: uuid.uuid4().hex[:12])
        self._sessions: dict[str, Session] = {}
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._registry_lock = threading.Lock()

    # -- plumbing -----------------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks[session_id]

    def _current(self, session_id: str) -> Session:
        if session_id not in self._sessions:
            self._sessions[session_id] = load_session(self.store, session_id)
        return self._sessions[session_id]

    def _record(self, session_id: str, kind: EventKind, payload: dict) -> Session:
        current = self._sessions.get(session_id)
        event = SessionEvent(
            seq=(current.last_seq if current else 0) + 1,
            kind=kind,
            timestamp=self._clock(),
            payload=payload,
        )
        updated = apply_event(current, session_id, event)
        self.store.append(session_id, event)
        self._sessions[session_id] = updated
        return updated

    def _require(self, session: Session, *states: SessionState) -> None:
        if session.state not in states:
            allowed = ", ".join(s.value for s in states)
            raise WrongState(
                f"session {session.id} is {session.state.value}; this request needs {allowed}"
            )

    # -- reads --------------------------------------------------------------

    def get_session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is not None:
            return session
        with self._lock(session_id):
            return self._current(session_id)

    def events(self, session_id: str, since: int = 0) -> list[SessionEvent]:
        if not self.store.exists(session_id):
            raise UnknownSession(f"no session {session_id!r}")
        return [e for e in self.store.read(session_id) if e.seq > since]

    # -- the interaction loop -----------------------------------------------

    def create_session(self, task: str, defer_plan: bool = False) -> Session:
        if not task.strip():
            raise EmptyTask("task prompt must not be empty")
        session_id = self._id_factory()
        with self._lock(session_id):
            self._record(session_id, EventKind.CREATED, {"task": task})
        if defer_plan:
            return self.get_session(session_id)
        return self.generate_plan(session_id)

    def generate_plan(self, session_id: str) -> Session:
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.DRAFTING, SessionState.PLANNED)
            workflow = plan_workflow(self.client, session.task, self.bundle, self.max_depth)
            kind = (
                EventKind.PLAN_GENERATED
                if session.state == SessionState.DRAFTING
                else EventKind.REGENERATED
            )
            return self._record(session_id, kind, {"workflow": workflow_to_dict(workflow)})

    def apply_session_edit(self, session_id: str, op: EditOp) -> Session:
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.PLANNED)
            assert session.workflow is not None
            apply_edit(session.workflow, op, self.max_depth)  # reject before recording
            return self._record(session_id, EventKind.EDIT_APPLIED, {"op": edit_op_to_dict(op)})

    def request_extension(self, session_id: str, target: StepLabel) -> Session:
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.PLANNED)
            assert session.workflow is not None
            extended = extend_step(self.client, session.workflow, target, self.bundle, self.max_depth)
            parent_uid = next(
                s.uid for s in uid_map(extended).values() if s.label == target
            )
            substeps = [step_to_dict(c) for c in uid_map(extended)[parent_uid].children]
            return self._record(
                session_id,
                EventKind.EXTENSION_APPLIED,
                {"target": str(target), "parent_uid": parent_uid, "substeps": substeps},
            )

    def confirm_workflow(self, session_id: str) -> Session:
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.PLANNED)
            assert session.workflow is not None
            violations = validate_workflow(session.workflow, self.max_depth)
            if violations:
                raise InvalidWorkflow(violations, "cannot confirm an invalid workflow")
            text = serialize_workflow(session.workflow, self.max_depth)
            return self._record(session_id, EventKind.CONFIRMED, {"workflow_text": text})

    def chat_turn(self, session_id: str, user_message: str) -> Session:
        if not user_message.strip():
            raise EmptyTask("chat message must not be empty")
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.CONFIRMED, SessionState.EXECUTING)
            assert session.confirmed_text is not None
            history = list(session.chat) + [ChatMessage(Role.USER, user_message)]
            messages = build_executing_messages(
                session.task, session.confirmed_text, history, self.bundle
            )
            try:
                reply = self.client.complete(messages)
            except GatewayError:
                self._record(
                    session_id,
                    EventKind.CHAT_MESSAGE_ADDED,
                    {"role": "user", "content": user_message, "answered": False},
                )
                raise
            self._record(
                session_id,
                EventKind.CHAT_MESSAGE_ADDED,
                {"role": "user", "content": user_message, "answered": True},
            )
            return self._record(
                session_id,
                EventKind.CHAT_MESSAGE_ADDED,
                {"role": "assistant", "content": reply},
            )

    def reopen_workflow(self, session_id: str) -> Session:
        with self._lock(session_id):
            session = self._current(session_id)
            self._require(session, SessionState.CONFIRMED, SessionState.EXECUTING)
            return self._record(session_id, EventKind.REOPENED, {})
