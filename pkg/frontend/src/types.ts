/** Wire types mirroring the session service JSON schemas. */

export type SessionPhase = "drafting" | "planned" | "confirmed" | "executing";

export interface JumpRuleDto {
  condition: string;
  target: string;
  target_uid: string | null;
}

export interface StepDto {
  uid: string;
  label: string;
  name: string;
  description: string;
  jumps: JumpRuleDto[];
  children: StepDto[];
}

export interface WorkflowDto {
  task: string;
  steps: StepDto[];
}

export interface ChatMessageDto {
  role: "system" | "user" | "assistant";
  content: string;
}

export interface SessionDto {
  id: string;
  task: string;
  state: SessionPhase;
  workflow: WorkflowDto | null;
  confirmed_text: string | null;
  chat: ChatMessageDto[];
  created_at: string;
  updated_at: string;
  last_seq: number;
}

export type NodeKind = "start" | "end" | "leaf" | "composite";
export type EdgeKind = "sequential" | "conditional";

export interface GraphNodeDto {
  uid: string;
  kind: NodeKind;
  label: string | null;
  name: string | null;
  description: string | null;
  parent: string | null;
}

export interface GraphEdgeDto {
  from: string;
  to: string;
  kind: EdgeKind;
  condition: string | null;
  owner: string | null;
  target: string | null;
}

export interface GraphDto {
  task: string;
  nodes: GraphNodeDto[];
  edges: GraphEdgeDto[];
}

export interface SessionEventDto {
  seq: number;
  kind: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

/** Edit operations exactly as the /edits endpoint expects them. */
export type EditOp =
  | { kind: "add_step"; after: string | null; name: string; description: string }
  | { kind: "remove_step"; uid: string; cascade: boolean }
  | { kind: "modify_step"; uid: string; new_name: string | null; new_description: string | null }
  | { kind: "add_jump"; uid: string; condition: string; target_uid: string }
  | { kind: "remove_jump"; uid: string; index: number }
  | { kind: "reorder"; uid: string; new_position: number };

export interface ViolationDto {
  code: string;
  location: string | null;
  message: string;
}

export interface ApiErrorBody {
  detail: string;
  error?: string;
  violations?: ViolationDto[];
}
