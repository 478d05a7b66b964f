/** SVG flowchart rendering plus the point-and-click edit affordances.
 *
 * Per step box: text editing, add-sibling, delete, extend, and a jump
 * handle; dragging a box vertically reorders it among its siblings.
 * Everything dispatches through the handlers; this module never mutates
 * workflow state itself.
 */

import { dropPosition, type EditAction } from "./actions.js";
import {
  BOX_HEIGHT,
  COLUMN_X,
  type ViewGraph,
  type ViewNode,
} from "./layout.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphHandlers {
  onEdit(action: EditAction): void;
  onExtend(target: string): void;
  siblingsOf(uid: string): string[];
  labelOf(uid: string): string | null;
}

interface DragState {
  uid: string;
  startY: number;
  pointerId: number;
  moved: boolean;
  ghost: SVGGElement;
}

interface JumpDragState {
  fromUid: string;
  line: SVGLineElement;
  pointerId: number;
}

function svg<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, String(value));
  }
  return el;
}

function truncate(text: string, max: number): string {
  return text.length > max ? text.slice(0, max - 1) + "…" : text;
}

export class GraphView {
  private drag: DragState | null = null;
  private jumpDrag: JumpDragState | null = null;
  private selected: string | null = null;

  constructor(
    private readonly root: SVGSVGElement,
    private readonly editor: HTMLElement,
    private readonly handlers: GraphHandlers,
  ) {}

  render(view: ViewGraph | null, editable: boolean): void {
    this.root.replaceChildren();
    this.editor.hidden = true;
    if (!view) return;

    const height = Math.max(...view.rows.map((r) => r.y + r.height), 200) + 60;
    this.root.setAttribute("viewBox", `0 0 760 ${height}`);
    this.root.setAttribute("height", String(height));

    const defs = svg("defs");
    defs.innerHTML =
      '<marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" markerWidth="7" ' +
      'markerHeight="7" orient="auto-start-reverse"><path d="M0,0 L8,4 L0,8 z" /></marker>';
    this.root.append(defs);

    for (const container of view.containers) {
      const group = svg("g", { class: "container" });
      group.append(
        svg("rect", {
          x: container.x,
          y: container.y,
          width: container.width,
          height: container.height,
          rx: 10,
        }),
      );
      const title = svg("text", { x: container.x + 8, y: container.y + 16, class: "container-title" });
      title.textContent = `${container.label}: ${truncate(container.name, 40)}`;
      group.append(title);
      if (editable) {
        group.append(this.nodeButtons(container, true));
      }
      this.root.append(group);
    }

    const rowCenter = new Map<string, { x: number; y: number }>();
    for (const row of view.rows) {
      rowCenter.set(row.uid, { x: row.x + row.width / 2, y: row.y + row.height / 2 });
    }

    for (const edge of view.edges) {
      const from = rowCenter.get(edge.from);
      const to = rowCenter.get(edge.to);
      if (!from || !to) continue;
      if (edge.kind === "sequential") {
        this.root.append(
          svg("line", {
            x1: from.x,
            y1: from.y + BOX_HEIGHT / 2 - 10,
            x2: to.x,
            y2: to.y - BOX_HEIGHT / 2 + 10,
            class: "edge-seq",
            "marker-end": "url(#arrow)",
          }),
        );
      } else {
        const sideX = COLUMN_X + 320 + edge.lane * 46;
        const path = svg("path", {
          d:
            `M ${from.x + 150} ${from.y} C ${sideX} ${from.y}, ` +
            `${sideX} ${to.y}, ${to.x + 155} ${to.y}`,
          class: "edge-cond",
          "marker-end": "url(#arrow)",
        });
        this.root.append(path);
        const label = svg("text", {
          x: sideX - 20,
          y: (from.y + to.y) / 2 - 6,
          class: "edge-label",
        });
        label.textContent = truncate(edge.condition ?? "", 28);
        this.root.append(label);
        if (editable && edge.owner) {
          const owner = edge.owner;
          const index = view.edges
            .filter((e) => e.kind === "conditional" && e.owner === owner)
            .indexOf(edge);
          const remove = svg("text", {
            x: sideX - 34,
            y: (from.y + to.y) / 2 + 10,
            class: "edge-delete",
          });
          remove.textContent = "×";
          remove.addEventListener("click", () =>
            this.handlers.onEdit({ kind: "jump-delete", uid: owner, index }),
          );
          this.root.append(remove);
        }
      }
    }

    for (const row of view.rows) {
      this.root.append(this.renderRow(row, editable));
    }
  }

  private renderRow(row: ViewNode, editable: boolean): SVGGElement {
    const group = svg("g", { class: `node node-${row.kind}`, "data-uid": row.uid });
    if (row.kind === "start" || row.kind === "end") {
      group.append(
        svg("ellipse", {
          cx: row.x + row.width / 2,
          cy: row.y + row.height / 2,
          rx: row.width / 2,
          ry: row.height / 2,
        }),
      );
      const text = svg("text", {
        x: row.x + row.width / 2,
        y: row.y + row.height / 2 + 4,
        class: "sentinel-label",
      });
      text.textContent = row.kind === "start" ? "Start" : "End";
      group.append(text);
      return group;
    }

    const box = svg("rect", { x: row.x, y: row.y, width: row.width, height: row.height, rx: 8 });
    if (this.selected === row.uid) box.classList.add("selected");
    group.append(box);

    const title = svg("text", { x: row.x + 10, y: row.y + 22, class: "node-title" });
    title.textContent = `${row.label}: ${truncate(row.name, 30)}`;
    group.append(title);
    const desc = svg("text", { x: row.x + 10, y: row.y + 42, class: "node-desc" });
    desc.textContent = truncate(row.description, 42);
    group.append(desc);

    if (editable) {
      group.append(this.nodeButtons(row, false));
      this.attachDrag(group, box, row);
      box.addEventListener("dblclick", () => this.openEditor(row));
    }
    return group;
  }

  private nodeButtons(node: ViewNode, isContainer: boolean): SVGGElement {
    const group = svg("g", { class: "node-buttons" });
    const baseX = node.x + node.width - (isContainer ? 24 : 98);
    const y = isContainer ? node.y + 12 : node.y + 12;
    const buttons: Array<[string, string, () => void]> = [];

    if (!isContainer) {
      buttons.push([
        "+",
        "add a step after this one",
        () => this.handlers.onEdit({ kind: "add-after", after: node.uid }),
      ]);
      if (node.kind === "leaf" && node.label) {
        const label = node.label;
        buttons.push(["↳", "extend into sub-steps", () => this.handlers.onExtend(label)]);
      }
      buttons.push([
        "✎",
        "edit name and description",
        () => this.openEditor(node),
      ]);
      buttons.push(["−", "delete this step", () => this.confirmDelete(node)]);
    } else {
      buttons.push(["−", "delete this step", () => this.confirmDelete(node)]);
    }

    buttons.forEach(([glyph, tooltip, onClick], i) => {
      const button = svg("g", { class: "icon-button", transform: `translate(${baseX + i * 22}, ${y})` });
      button.append(svg("circle", { r: 9 }));
      const text = svg("text", { y: 4, class: "icon-glyph" });
      text.textContent = glyph;
      button.append(text);
      const help = svg("title");
      help.textContent = tooltip;
      button.append(help);
      button.addEventListener("click", (event) => {
        event.stopPropagation();
        onClick();
      });
      group.append(button);
    });

    if (!isContainer) {
      const handle = svg("g", {
        class: "jump-handle",
        transform: `translate(${node.x + node.width - 10}, ${node.y + node.height - 12})`,
      });
      handle.append(svg("circle", { r: 7 }));
      const glyph = svg("text", { y: 3, class: "icon-glyph" });
      glyph.textContent = "↪";
      handle.append(glyph);
      const help = svg("title");
      help.textContent = "drag onto another step to add a jump";
      handle.append(help);
      handle.addEventListener("pointerdown", (event) => this.startJumpDrag(event, node));
      group.append(handle);
    }
    return group;
  }

  private confirmDelete(node: ViewNode): void {
    this.handlers.onEdit({ kind: "delete", uid: node.uid, cascade: false });
  }

  private openEditor(node: ViewNode): void {
    this.editor.hidden = false;
    this.editor.innerHTML = "";
    const heading = document.createElement("h3");
    heading.textContent = `STEP ${node.label}`;
    const nameInput = document.createElement("input");
    nameInput.value = node.name;
    nameInput.placeholder = "step name";
    const descInput = document.createElement("textarea");
    descInput.value = node.description;
    descInput.placeholder = "step description";
    const save = document.createElement("button");
    save.textContent = "Save";
    save.addEventListener("click", () => {
      if (nameInput.value !== node.name) {
        this.handlers.onEdit({ kind: "rename", uid: node.uid, name: nameInput.value });
      }
      if (descInput.value !== node.description) {
        this.handlers.onEdit({
          kind: "edit-description",
          uid: node.uid,
          description: descInput.value,
        });
      }
      this.editor.hidden = true;
    });
    const cancel = document.createElement("button");
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => (this.editor.hidden = true));
    this.editor.append(heading, nameInput, descInput, save, cancel);
    nameInput.focus();
  }

  // -- drag to reorder ------------------------------------------------------

  private attachDrag(group: SVGGElement, box: SVGRectElement, row: ViewNode): void {
    box.addEventListener("pointerdown", (event) => {
      if (this.jumpDrag) return;
      event.preventDefault();
      this.drag = {
        uid: row.uid,
        startY: event.clientY,
        pointerId: event.pointerId,
        moved: false,
        ghost: group,
      };
      box.setPointerCapture(event.pointerId);
    });
    box.addEventListener("pointermove", (event) => {
      if (!this.drag || this.drag.pointerId !== event.pointerId) return;
      const dy = event.clientY - this.drag.startY;
      if (Math.abs(dy) > 4) this.drag.moved = true;
      this.drag.ghost.setAttribute("transform", `translate(0, ${dy})`);
    });
    box.addEventListener("pointerup", (event) => {
      if (!this.drag || this.drag.pointerId !== event.pointerId) return;
      const drag = this.drag;
      this.drag = null;
      drag.ghost.removeAttribute("transform");
      if (!drag.moved) {
        this.selected = row.uid;
        return;
      }
      const dy = event.clientY - drag.startY;
      const siblings = this.handlers.siblingsOf(row.uid);
      const fromIndex = siblings.indexOf(row.uid);
      const slots = Math.round(dy / (BOX_HEIGHT + 36));
      if (slots === 0) return;
      const dropIndex = Math.max(0, Math.min(siblings.length, fromIndex + slots + (slots > 0 ? 1 : 0)));
      const position = dropPosition(siblings, row.uid, dropIndex);
      if (position !== fromIndex) {
        this.handlers.onEdit({ kind: "drag-reorder", uid: row.uid, position });
      }
    });
  }

  // -- drag to connect a jump ----------------------------------------------

  private startJumpDrag(event: PointerEvent, node: ViewNode): void {
    event.preventDefault();
    event.stopPropagation();
    const point = this.toSvgPoint(event);
    const line = svg("line", {
      x1: point.x,
      y1: point.y,
      x2: point.x,
      y2: point.y,
      class: "edge-cond edge-preview",
    });
    this.root.append(line);
    this.jumpDrag = { fromUid: node.uid, line, pointerId: event.pointerId };

    const move = (ev: PointerEvent) => {
      if (!this.jumpDrag) return;
      const p = this.toSvgPoint(ev);
      this.jumpDrag.line.setAttribute("x2", String(p.x));
      this.jumpDrag.line.setAttribute("y2", String(p.y));
    };
    const up = (ev: PointerEvent) => {
      window.removeEventListener("pointermove", move);
      window.removeEventListener("pointerup", up);
      if (!this.jumpDrag) return;
      const drag = this.jumpDrag;
      this.jumpDrag = null;
      drag.line.remove();
      const target = (ev.target as Element | null)?.closest?.("[data-uid]");
      const targetUid = target?.getAttribute("data-uid");
      if (!targetUid || targetUid === drag.fromUid) return; // self-target disallowed
      const condition = window.prompt("Jump when which condition holds?", "");
      if (!condition || !condition.trim()) return;
      this.handlers.onEdit({
        kind: "jump-connect",
        from: drag.fromUid,
        to: targetUid,
        condition: condition.trim(),
      });
    };
    window.addEventListener("pointermove", move);
    window.addEventListener("pointerup", up);
  }

  private toSvgPoint(event: PointerEvent): { x: number; y: number } {
    const rect = this.root.getBoundingClientRect();
    const viewBox = this.root.viewBox.baseVal;
    const scale = viewBox.height / rect.height;
    return {
      x: (event.clientX - rect.left) * scale,
      y: (event.clientY - rect.top) * scale,
    };
  }
}
