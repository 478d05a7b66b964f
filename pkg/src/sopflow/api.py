"""HTTP + JSON surface over the session service.

Routes:

    POST /sessions                         {task, defer_plan?}
    GET  /sessions/{id}
    GET  /sessions/{id}/flowgraph?format=dot|json
    POST /sessions/{id}/plan
    POST /sessions/{id}/edits              {EditOp}
    POST /sessions/{id}/extend             {target}
    POST /sessions/{id}/confirm
    POST /sessions/{id}/chat               {message}
    POST /sessions/{id}/reopen
    GET  /sessions/{id}/events?since=seq

Error mapping: 404 unknown session, 409 wrong state, 422 invalid
edit/workflow/label, 502 upstream LLM failure.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from .editops import edit_op_from_dict
from .errors import (
    AlreadyExtended,
    AuthError,
    EditError,
    EmptyTask,
    EndpointError,
    InvalidWorkflow,
    PlanningFailed,
    SopflowError,
    TransportError,
    UnknownSession,
    UnknownTarget,
    WrongState,
)
from .flowgraph import export_graph, to_flowgraph
from .model import StepLabel, workflow_to_dict
from .session import Session, SessionService

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (UnknownSession, 404),
    (WrongState, 409),
    (EditError, 422),  # includes AlreadyExtended, LabelMismatch, DepthExceeded ...
    (InvalidWorkflow, 422),
    (UnknownTarget, 422),
    (EmptyTask, 422),
    (PlanningFailed, 502),
    (TransportError, 502),
    (AuthError, 502),
    (EndpointError, 502),
]


def _status_for(exc: SopflowError) -> int:
    for kind, status in _STATUS_BY_ERROR:
        if isinstance(exc, kind):
            return status
    return 500


def session_to_dict(session: Session) -> dict:
    return {
        "id": session.id,
        "task": session.task,
        "state": session.state.value,
        "workflow": workflow_to_dict(session.workflow) if session.workflow else None,
        "confirmed_text": session.confirmed_text,
        "chat": [{"role": m.role.value, "content": m.content} for m in session.chat],
        "created_at": session.created_at,
        "updated_at": session.updated_at,
        "last_seq": session.last_seq,
    }


class CreateSessionBody(BaseModel):
    task: str
    defer_plan: bool = False


class ExtendBody(BaseModel):
    target: str


class ChatBody(BaseModel):
    message: str


def create_app(service: SessionService) -> FastAPI:
    app = FastAPI(title="sopflow", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SopflowError)
    async def domain_error(request: Request, exc: SopflowError) -> JSONResponse:
        body: dict = {"detail": str(exc), "error": type(exc).__name__}
        if isinstance(exc, (InvalidWorkflow, PlanningFailed)) and exc.violations:
            body["violations"] = [
                {
                    "code": v.code.value,
                    "location": str(v.location) if v.location else None,
                    "message": v.message,
                }
                for v in exc.violations
            ]
        return JSONResponse(status_code=_status_for(exc), content=body)

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> Response:
        session = service.create_session(body.task, defer_plan=True)
        if not body.defer_plan:
            try:
                session = service.generate_plan(session.id)
            except SopflowError as exc:
                # the session exists; hand its id back so the client can retry
                return JSONResponse(
                    status_code=_status_for(exc),
                    content={
                        "detail": str(exc),
                        "error": type(exc).__name__,
                        "session": session_to_dict(session),
                    },
                )
        return JSONResponse(status_code=201, content=session_to_dict(session))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return session_to_dict(service.get_session(session_id))

    @app.get("/sessions/{session_id}/flowgraph")
    def get_flowgraph(session_id: str, format: str = "json") -> Response:
        session = service.get_session(session_id)
        if session.workflow is None:
            raise WrongState(f"session {session_id} has no workflow yet")
        if format not in ("dot", "json"):
            raise InvalidWorkflow([], f"unknown flowgraph format {format!r}")
        text = export_graph(to_flowgraph(session.workflow, service.max_depth), format)
        if format == "dot":
            return PlainTextResponse(text)
        return JSONResponse(content=json.loads(text))

    @app.post("/sessions/{session_id}/plan")
    def plan(session_id: str) -> dict:
        return session_to_dict(service.generate_plan(session_id))

    @app.post("/sessions/{session_id}/edits")
    async def edits(session_id: str, request: Request) -> dict:
        try:
            op = edit_op_from_dict(await request.json())
        except ValueError as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return session_to_dict(service.apply_session_edit(session_id, op))

    @app.post("/sessions/{session_id}/extend")
    def extend(session_id: str, body: ExtendBody) -> dict:
        try:
            target = StepLabel.parse(body.target)
        except ValueError as exc:
            raise UnknownTarget(str(exc))
        return session_to_dict(service.request_extension(session_id, target))

    @app.post("/sessions/{session_id}/confirm")
    def confirm(session_id: str) -> dict:
        return session_to_dict(service.confirm_workflow(session_id))

    @app.post("/sessions/{session_id}/chat")
    def chat(session_id: str, body: ChatBody) -> dict:
        return session_to_dict(service.chat_turn(session_id, body.message))

    @app.post("/sessions/{session_id}/reopen")
    def reopen(session_id: str) -> dict:
        return session_to_dict(service.reopen_workflow(session_id))

    @app.get("/sessions/{session_id}/events")
    def events(session_id: str, since: int = 0) -> list[dict]:
        return [e.to_dict() for e in service.events(session_id, since)]

    return app
