/** Pure layout: derive drawable geometry from the server's graph JSON.
 *
 * The view is a single top-to-bottom column following the sequential path;
 * composite steps become containers around their members, and conditional
 * edges become arcs beside the column. Nothing here invents nodes or edges:
 * every drawable element comes straight from the fetched graph.
 */

import type { EdgeKind, GraphDto, GraphNodeDto, NodeKind } from "./types.js";

export const BOX_WIDTH = 300;
export const BOX_HEIGHT = 64;
export const ROW_GAP = 36;
export const COLUMN_X = 180;

export interface ViewNode {
  uid: string;
  kind: NodeKind;
  label: string | null;
  name: string;
  description: string;
  parent: string | null;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface ViewEdge {
  from: string;
  to: string;
  kind: EdgeKind;
  condition: string | null;
  owner: string | null;
  target: string | null;
  /** lane index for conditional arcs so they do not overlap */
  lane: number;
}

export interface ViewGraph {
  task: string;
  /** row nodes in sequential-path order: start, leaves, end */
  rows: ViewNode[];
  /** composite containers, outermost first */
  containers: ViewNode[];
  edges: ViewEdge[];
  /** leaf/composite uids in drawing order, for sibling lookups */
  sequence: string[];
}

export function sequentialOrder(graph: GraphDto): string[] {
  const next = new Map<string, string>();
  for (const edge of graph.edges) {
    if (edge.kind === "sequential") {
      next.set(edge.from, edge.to);
    }
  }
  const order: string[] = [];
  let cursor = "start";
  const guard = graph.nodes.length + 2;
  for (let i = 0; i < guard && cursor !== undefined; i++) {
    order.push(cursor);
    if (cursor === "end") break;
    const following = next.get(cursor);
    if (following === undefined) break;
    cursor = following;
  }
  return order;
}

/** Sibling uid order under one parent (null = top level), by path position. */
export function siblingOrder(graph: GraphDto, parent: string | null): string[] {
  const position = new Map<string, number>();
  sequentialOrder(graph).forEach((uid, i) => position.set(uid, i));
  const members = new Map<string | null, GraphNodeDto[]>();
  for (const node of graph.nodes) {
    if (node.kind === "leaf" || node.kind === "composite") {
      const group = members.get(node.parent) ?? [];
      group.push(node);
      members.set(node.parent, group);
    }
  }
  const firstLeaf = (node: GraphNodeDto): number => {
    if (node.kind === "leaf") return position.get(node.uid) ?? Number.MAX_SAFE_INTEGER;
    const inside = (members.get(node.uid) ?? []).map(firstLeaf);
    return inside.length ? Math.min(...inside) : Number.MAX_SAFE_INTEGER;
  };
  return (members.get(parent) ?? [])
    .slice()
    .sort((a, b) => firstLeaf(a) - firstLeaf(b))
    .map((n) => n.uid);
}

export function buildViewGraph(graph: GraphDto): ViewGraph {
  const byUid = new Map(graph.nodes.map((n) => [n.uid, n]));
  const order = sequentialOrder(graph);
  const rows: ViewNode[] = [];
  const rowY = new Map<string, number>();

  order.forEach((uid, i) => {
    const node = byUid.get(uid);
    if (!node) return;
    const y = 40 + i * (BOX_HEIGHT + ROW_GAP);
    rowY.set(uid, y);
    rows.push({
      uid: node.uid,
      kind: node.kind,
      label: node.label,
      name: node.name ?? "",
      description: node.description ?? "",
      parent: node.parent,
      x: COLUMN_X,
      y,
      width: node.kind === "start" || node.kind === "end" ? 120 : BOX_WIDTH,
      height: node.kind === "start" || node.kind === "end" ? 40 : BOX_HEIGHT,
    });
  });

  const depth = (node: GraphNodeDto): number => {
    let d = 0;
    let parent = node.parent;
    while (parent) {
      d += 1;
      parent = byUid.get(parent)?.parent ?? null;
    }
    return d;
  };

  const containers: ViewNode[] = [];
  for (const node of graph.nodes) {
    if (node.kind !== "composite") continue;
    const memberYs = graph.nodes
      .filter((n) => n.kind === "leaf")
      .filter((n) => {
        let parent = n.parent;
        while (parent) {
          if (parent === node.uid) return true;
          parent = byUid.get(parent)?.parent ?? null;
        }
        return false;
      })
      .map((n) => rowY.get(n.uid))
      .filter((y): y is number => y !== undefined);
    if (!memberYs.length) continue;
    const pad = 14 + depth(node) * 6;
    const top = Math.min(...memberYs) - pad - 20;
    const bottom = Math.max(...memberYs) + BOX_HEIGHT + pad;
    containers.push({
      uid: node.uid,
      kind: node.kind,
      label: node.label,
      name: node.name ?? "",
      description: node.description ?? "",
      parent: node.parent,
      x: COLUMN_X - pad,
      y: top,
      width: BOX_WIDTH + pad * 2,
      height: bottom - top,
    });
  }
  containers.sort((a, b) => a.y - b.y || b.height - a.height);

  let lane = 0;
  const edges: ViewEdge[] = graph.edges.map((edge) => ({
    from: edge.from,
    to: edge.to,
    kind: edge.kind,
    condition: edge.condition,
    owner: edge.owner,
    target: edge.target,
    lane: edge.kind === "conditional" ? lane++ : 0,
  }));

  return {
    task: graph.task,
    rows,
    containers,
    edges,
    sequence: order.filter((uid) => uid !== "start" && uid !== "end"),
  };
}
