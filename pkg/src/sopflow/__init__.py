"""sopflow: plan a stepwise workflow with an LLM, edit it as a flowchart,
and have an executing LLM follow the confirmed version in chat."""

from .editops import (
    AddJump,
    AddStep,
    EditOp,
    ModifyStep,
    RemoveJump,
    RemoveStep,
    Reorder,
    SpliceExtension,
    apply_edit,
    diff_workflows,
    edit_op_from_dict,
    edit_op_to_dict,
)
from .errors import (
    InvalidWorkflow,
    ParseError,
    PlanningFailed,
    SopflowError,
)
from .flowgraph import (
    FlowEdge,
    FlowGraph,
    FlowNode,
    export_graph,
    from_flowgraph,
    graph_from_json,
    graph_to_dot,
    graph_to_json,
    to_flowgraph,
)
from .llm import (
    ChatClient,
    ChatMessage,
    HttpChatClient,
    LlmClientConfig,
    MockChatClient,
    Role,
    complete_chat,
)
from .model import (
    JumpRule,
    Step,
    StepLabel,
    Violation,
    ViolationCode,
    Workflow,
    structurally_equal,
    validate_workflow,
    workflow_from_dict,
    workflow_to_dict,
)
from .parser import parse_substeps, parse_workflow, repair_raw_output
from .planner import (
    build_executing_messages,
    build_extend_messages,
    build_planning_messages,
    extend_step,
    plan_workflow,
)
from .prompts import PromptBundle, default_bundle
from .serializer import serialize_workflow
from .session import EventStore, Session, SessionEvent, SessionService, load_session

__version__ = "0.1.0"
