/** 2-D embedding scatter with lasso selection resolved on the server. */
import type { ApiClient } from "./api";
import type { EmbeddingPoint } from "./types";

export class EmbeddingView {
  private points: EmbeddingPoint[] = [];
  private selected = new Set<string>();
  onSelection: (selected: string[]) => void = () => {};

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private dataset: string,
    private sessionId?: string,
  ) {}

  async load(): Promise<void> {
    const resp = await this.client.getEmbedding(this.dataset);
    this.points = resp.points;
    this.render();
  }

  /** Send a closed lasso polygon to the server; highlight what it selects. */
  async lasso(polygon: number[][]): Promise<string[]> {
    const resp = await this.client.lasso(this.dataset, polygon, this.sessionId);
    this.selected = new Set(resp.selected);
    this.render();
    this.onSelection(resp.selected);
    return resp.selected;
  }

  selectedIds(): string[] {
    return [...this.selected].sort();
  }

  private render(): void {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("class", "embedding-view");
    svg.setAttribute("viewBox", "0 0 1 1");
    for (const p of this.points) {
      const c = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      c.setAttribute("cx", String(p.x));
      c.setAttribute("cy", String(p.y));
      c.setAttribute("r", "0.006");
      c.dataset.entityId = p.entity_id;
      c.setAttribute(
        "class",
        this.selected.has(p.entity_id) ? "point selected" : "point",
      );
      svg.appendChild(c);
    }
    this.root.replaceChildren(svg);
  }
}
