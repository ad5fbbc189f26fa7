/** Chat panel with a plain-LLM / graph-grounded mode toggle. */
import type { ApiClient } from "./api";
import type { ChatResponse, RecommendedEntity } from "./types";

export class ChatPanel {
  mode: "llm" | "rag" = "llm";
  private transcript: { role: string; text: string }[] = [];

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private dataset: string,
    private sessionId?: string,
  ) {}

  setMode(mode: "llm" | "rag"): void {
    this.mode = mode;
  }

  async send(message: string): Promise<ChatResponse> {
    this.transcript.push({ role: "user", text: message });
    const resp = await this.client.chat(
      this.dataset,
      message,
      this.mode,
      this.sessionId,
    );
    this.transcript.push({ role: "assistant", text: this.formatPayload(resp) });
    this.render(resp);
    return resp;
  }

  private formatPayload(resp: ChatResponse): string {
    if (resp.mode === "rag" && Array.isArray(resp.payload)) {
      return (resp.payload as RecommendedEntity[])
        .map((e) => `${e.entity_name} [${e.category}]: ${e.reason}`)
        .join("\n");
    }
    const payload = resp.payload as { text?: string };
    return payload?.text ?? resp.raw;
  }

  private render(last: ChatResponse): void {
    const panel = document.createElement("div");
    panel.className = "chat-panel";
    panel.dataset.mode = this.mode;
    for (const turn of this.transcript) {
      const msg = document.createElement("div");
      msg.className = `message ${turn.role}`;
      msg.textContent = turn.text;
      panel.appendChild(msg);
    }
    if (last.cited_triplets.length > 0) {
      const cites = document.createElement("ul");
      cites.className = "citations";
      for (const [h, r, t] of last.cited_triplets) {
        const li = document.createElement("li");
        li.textContent = `${h} —${r}→ ${t}`;
        cites.appendChild(li);
      }
      panel.appendChild(cites);
    }
    this.root.replaceChildren(panel);
  }
}
