"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (parse or validation), 2 usage
error, 3 transport failure. Every subcommand is a thin composition of the
library operations; no business logic lives here.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import (
    AuthError,
    EndpointError,
    ParseError,
    SopflowError,
    TransportError,
)
from .figures import save_flowchart
from .flowgraph import export_graph, to_flowgraph
from .llm import ChatClient, HttpChatClient, LlmClientConfig, MockChatClient, ChatMessage, Role
from .model import StepLabel, validate_workflow
from .parser import parse_workflow, repair_raw_output
from .planner import build_executing_messages, extend_step, plan_workflow
from .prompts import PromptBundle
from .serializer import serialize_workflow

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_workflow(path: str):
    return parse_workflow(_read(path))


def _client(args: argparse.Namespace, parser: argparse.ArgumentParser) -> ChatClient:
    if getattr(args, "mock", None):
        return MockChatClient.from_script(args.mock)
    if not os.environ.get("LLM_API_KEY"):
        parser.error("set LLM_API_KEY (plus LLM_ENDPOINT/LLM_MODEL) or pass --mock SCRIPT.json")
    return HttpChatClient(LlmClientConfig.from_env())


def _bundle(args: argparse.Namespace) -> PromptBundle | None:
    prompt_dir = getattr(args, "prompt_dir", None)
    return PromptBundle.load(prompt_dir) if prompt_dir else None


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_parse(args, parser) -> int:
    print(serialize_workflow(_load_workflow(args.file)))
    return EXIT_OK


def _cmd_validate(args, parser) -> int:
    violations = validate_workflow(_load_workflow(args.file))
    for v in violations:
        where = f" (at STEP {v.location})" if v.location else ""
        print(f"{v.code.value}{where}: {v.message}")
    if violations:
        return EXIT_DOMAIN
    print("OK")
    return EXIT_OK


def _cmd_render(args, parser) -> int:
    graph = to_flowgraph(_load_workflow(args.file))
    _write_output(export_graph(graph, args.format), args.output)
    if args.figure:
        save_flowchart(graph, args.figure)
        print(f"figure written to {args.figure}", file=sys.stderr)
    return EXIT_OK


def _cmd_repair(args, parser) -> int:
    sys.stdout.write(repair_raw_output(_read(args.file)))
    sys.stdout.write("\n")
    return EXIT_OK


def _cmd_plan(args, parser) -> int:
    workflow = plan_workflow(_client(args, parser), args.task, _bundle(args))
    text = serialize_workflow(workflow)
    Path(args.output).write_text(text + "\n", encoding="utf-8")
    print(text)
    print(f"workflow written to {args.output}", file=sys.stderr)
    return EXIT_OK


def _cmd_extend(args, parser) -> int:
    from dataclasses import replace

    workflow = replace(_load_workflow(args.file), task=args.task)
    extended = extend_step(
        _client(args, parser), workflow, StepLabel.parse(args.step), _bundle(args)
    )
    text = serialize_workflow(extended)
    Path(args.file).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_run(args, parser) -> int:
    workflow = _load_workflow(args.file)
    violations = validate_workflow(workflow)
    if violations:
        for v in violations:
            print(v.message, file=sys.stderr)
        return EXIT_DOMAIN
    text = serialize_workflow(workflow)
    client = _client(args, parser)
    bundle = _bundle(args)
    history: list[ChatMessage] = []
    print("workflow confirmed; chat away (empty line or EOF quits)", file=sys.stderr)
    while True:
        try:
            line = input("you> ")
        except EOFError:
            break
        if not line.strip():
            break
        history.append(ChatMessage(Role.USER, line))
        reply = client.complete(build_executing_messages(args.task, text, history, bundle))
        history.append(ChatMessage(Role.ASSISTANT, reply))
        print(f"assistant> {reply}")
    return EXIT_OK


def _cmd_serve(args, parser) -> int:
    import uvicorn

    from .api import create_app
    from .session import EventStore, SessionService

    client = _client(args, parser)
    data_dir = args.data_dir or os.environ.get("DATA_DIR", "./sessions")
    bind = args.bind or os.environ.get("BIND_ADDR", "127.0.0.1:8000")
    host, _, port = bind.partition(":")
    service = SessionService(EventStore(data_dir), client, _bundle(args))
    uvicorn.run(create_app(service), host=host or "127.0.0.1", port=int(port or "8000"))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sopflow",
        description="Plan a stepwise workflow with an LLM, edit it, and execute it in chat.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo the canonical form of a .sop file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("validate", help="report violations; exit 0 only when clean")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("render", help="export the flowchart as DOT or JSON")
    p.add_argument("file")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("-o", "--output", default=None, help="write to a file instead of stdout")
    p.add_argument("--figure", default=None, metavar="PNG", help="also draw the flowchart to an image")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("repair", help="normalise raw LLM output into workflow text")
    p.add_argument("file")
    p.set_defaults(func=_cmd_repair)

    p = sub.add_parser("plan", help="ask the planner LLM for a workflow")
    p.add_argument("task")
    p.add_argument("--mock", default=None, metavar="SCRIPT", help="scripted replies JSON file")
    p.add_argument("-o", "--output", default="workflow.sop")
    p.add_argument("--prompt-dir", default=None)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("extend", help="extend one step into sub-steps (rewrites the file)")
    p.add_argument("file")
    p.add_argument("--step", required=True, metavar="LABEL")
    p.add_argument("--task", required=True, help="the task the workflow was planned for")
    p.add_argument("--mock", default=None, metavar="SCRIPT")
    p.add_argument("--prompt-dir", default=None)
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("run", help="chat against a confirmed workflow")
    p.add_argument("file")
    p.add_argument("task")
    p.add_argument("--mock", default=None, metavar="SCRIPT")
    p.add_argument("--prompt-dir", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("serve", help="start the HTTP session service")
    p.add_argument("--bind", default=None, help="host:port (default BIND_ADDR or 127.0.0.1:8000)")
    p.add_argument("--data-dir", default=None, help="event log directory (default DATA_DIR or ./sessions)")
    p.add_argument("--mock", default=None, metavar="SCRIPT")
    p.add_argument("--prompt-dir", default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (TransportError, AuthError, EndpointError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (ParseError, SopflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
