/** Conversation panel for the executing phase. */

import type { UiSession } from "./state.js";

export class ChatPanel {
  private readonly transcript: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly send: HTMLButtonElement;
  private readonly reopen: HTMLButtonElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly ui: UiSession,
  ) {
    this.transcript = root.querySelector(".transcript")!;
    this.input = root.querySelector("input")!;
    this.send = root.querySelector(".send")!;
    this.reopen = root.querySelector(".reopen")!;

    this.send.addEventListener("click", () => void this.submit());
    this.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.submit();
    });
    this.reopen.addEventListener("click", () => void this.ui.reopen());
  }

  private async submit(): Promise<void> {
    const message = this.input.value.trim();
    if (!message || this.ui.pending) return;
    this.input.value = "";
    await this.ui.chat(message);
  }

  render(): void {
    const phase = this.ui.phase;
    this.root.hidden = phase !== "confirmed" && phase !== "executing";
    if (this.root.hidden) return;

    this.transcript.replaceChildren();
    for (const message of this.ui.session?.chat ?? []) {
      const bubble = document.createElement("div");
      bubble.className = `bubble bubble-${message.role}`;
      bubble.textContent = message.content;
      this.transcript.append(bubble);
    }
    this.transcript.scrollTop = this.transcript.scrollHeight;
    this.input.disabled = this.ui.pending;
    this.send.disabled = this.ui.pending;
  }
}
