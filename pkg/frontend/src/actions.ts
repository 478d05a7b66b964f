/** Mapping from editor gestures to the documented edit-op payloads.
 *
 * The six flowchart operations and where they land:
 *   extend button          -> POST /extend            (not an EditOp)
 *   plus / minus buttons   -> add_step / remove_step
 *   text commit            -> modify_step
 *   jump handle / delete   -> add_jump / remove_jump
 *   drag among siblings    -> reorder
 *   regenerate / confirm   -> POST /plan, POST /confirm
 */

import type { EditOp } from "./types.js";

export type EditAction =
  | { kind: "rename"; uid: string; name: string }
  | { kind: "edit-description"; uid: string; description: string }
  | { kind: "add-after"; after: string | null; name?: string; description?: string }
  | { kind: "delete"; uid: string; cascade?: boolean }
  | { kind: "drag-reorder"; uid: string; position: number }
  | { kind: "jump-connect"; from: string; to: string; condition: string }
  | { kind: "jump-delete"; uid: string; index: number };

export function toEditOp(action: EditAction): EditOp {
  switch (action.kind) {
    case "rename":
      return { kind: "modify_step", uid: action.uid, new_name: action.name, new_description: null };
    case "edit-description":
      return {
        kind: "modify_step",
        uid: action.uid,
        new_name: null,
        new_description: action.description,
      };
    case "add-after":
      return {
        kind: "add_step",
        after: action.after,
        name: action.name ?? "New step",
        description: action.description ?? "",
      };
    case "delete":
      return { kind: "remove_step", uid: action.uid, cascade: action.cascade ?? false };
    case "drag-reorder":
      return { kind: "reorder", uid: action.uid, new_position: action.position };
    case "jump-connect":
      return {
        kind: "add_jump",
        uid: action.from,
        condition: action.condition,
        target_uid: action.to,
      };
    case "jump-delete":
      return { kind: "remove_jump", uid: action.uid, index: action.index };
  }
}

/** Position a dragged node would take among its siblings.
 *
 * `siblings` is the current uid order, `dropIndex` the slot the user dropped
 * onto (0 = before the first sibling). The server's reorder removes the step
 * first, so dropping below its own position shifts the index back by one.
 */
export function dropPosition(siblings: string[], uid: string, dropIndex: number): number {
  const from = siblings.indexOf(uid);
  let position = dropIndex;
  if (from >= 0 && from < dropIndex) {
    position -= 1;
  }
  return Math.max(0, Math.min(position, siblings.length - 1));
}
