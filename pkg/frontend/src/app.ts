/** Wires the pieces together against a running session service. */

import { ServiceClient } from "./api.js";
import { ChatPanel } from "./chat.js";
import { GraphView } from "./graphview.js";
import { siblingOrder } from "./layout.js";
import { UiSession } from "./state.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("service") ?? "http://127.0.0.1:8000";

const ui = new UiSession(new ServiceClient(baseUrl));

const taskForm = document.getElementById("task-form") as HTMLFormElement;
const taskInput = document.getElementById("task-input") as HTMLInputElement;
const phaseBadge = document.getElementById("phase")!;
const toast = document.getElementById("toast")!;
const editorPane = document.getElementById("editor-pane")!;
const stepEditor = document.getElementById("step-editor")!;
const svgRoot = document.getElementById("flowchart") as unknown as SVGSVGElement;
const regenerateButton = document.getElementById("regenerate") as HTMLButtonElement;
const confirmButton = document.getElementById("confirm") as HTMLButtonElement;
const addTopButton = document.getElementById("add-top") as HTMLButtonElement;

const graphView = new GraphView(svgRoot, stepEditor, {
  onEdit: (action) => void ui.dispatchEdit(action),
  onExtend: (target) => void ui.extend(target),
  siblingsOf: (uid) => {
    if (!ui.graph) return [];
    const node = ui.graph.nodes.find((n) => n.uid === uid);
    return siblingOrder(ui.graph, node?.parent ?? null);
  },
  labelOf: (uid) => ui.graph?.nodes.find((n) => n.uid === uid)?.label ?? null,
});

const chatPanel = new ChatPanel(document.getElementById("chat-pane")!, ui);

function render(): void {
  const phase = ui.phase;
  phaseBadge.textContent = phase ?? "no session";
  phaseBadge.dataset.phase = phase ?? "none";

  const editable = phase === "planned";
  editorPane.hidden = phase === null || phase === "executing";
  regenerateButton.disabled = !editable || ui.pending;
  confirmButton.disabled = !editable || ui.pending;
  addTopButton.disabled = !editable || ui.pending;
  graphView.render(ui.view, editable);
  chatPanel.render();

  if (ui.lastError) {
    toast.hidden = false;
    toast.replaceChildren(
      ...ui.lastError.lines.map((line) => {
        const p = document.createElement("p");
        p.textContent = line;
        return p;
      }),
    );
  } else {
    toast.hidden = true;
  }
}

ui.onChange(render);

taskForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const task = taskInput.value.trim();
  if (task) void ui.start(task);
});
regenerateButton.addEventListener("click", () => void ui.regenerate());
confirmButton.addEventListener("click", () => void ui.confirm());
addTopButton.addEventListener("click", () =>
  void ui.dispatchEdit({ kind: "add-after", after: null }),
);

const existing = params.get("session");
if (existing) {
  void ui.load(existing);
}
render();
