/** UpSet-style bar panel over hypothesis-match subsets; bars are clickable. */
import type { ApiClient } from "./api";
import type { UpsetBar, UpsetResponse } from "./types";

export class UpsetView {
  private bars: UpsetBar[] = [];
  private perHypothesis: number[] = [];
  onSlice: (recordIds: number[], subset: number[]) => void = () => {};

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    private chainId: string,
  ) {}

  setData(data: UpsetResponse): void {
    this.bars = data.bars;
    this.perHypothesis = data.per_hypothesis;
    this.render();
  }

  async load(): Promise<void> {
    this.setData(await this.client.getUpset(this.chainId));
  }

  /** Fetch the exclusive record slice for a subset and hand it to onSlice. */
  async clickBar(subset: number[]): Promise<number[]> {
    const resp = await this.client.getUpsetSlice(this.chainId, subset, true);
    this.onSlice(resp.record_ids, resp.subset);
    return resp.record_ids;
  }

  private render(): void {
    const panel = document.createElement("div");
    panel.className = "upset-view";
    const totals = document.createElement("div");
    totals.className = "per-hypothesis";
    totals.textContent = this.perHypothesis
      .map((n, i) => `H${i + 1}: ${n}`)
      .join("  ");
    panel.appendChild(totals);
    for (const bar of this.bars) {
      const el = document.createElement("button");
      el.className = "upset-bar";
      el.dataset.subset = bar.subset.join(",");
      el.textContent = `{${bar.subset.map((i) => `H${i}`).join(",")}} : ${bar.count}`;
      el.style.width = `${bar.count * 4}px`;
      el.addEventListener("click", () => void this.clickBar(bar.subset));
      panel.appendChild(el);
    }
    this.root.replaceChildren(panel);
  }
}
