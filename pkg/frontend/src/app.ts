/** Wires panels together against a live API instance. */
import { ApiClient } from "./api";
import { ChainView } from "./chainView";
import { ChatPanel } from "./chatPanel";
import { EmbeddingView } from "./embeddingView";
import { PredictionTable } from "./predictionTable";
import { TreemapView } from "./treemapView";
import { UpsetView } from "./upsetView";

export interface AppOptions {
  baseUrl: string;
  dataset: string;
  sessionId?: string;
}

export function mountApp(root: HTMLElement, opts: AppOptions) {
  const client = new ApiClient(opts.baseUrl);
  const section = (cls: string) => {
    const el = document.createElement("section");
    el.className = cls;
    root.appendChild(el);
    return el;
  };
  const table = new PredictionTable(section("panel-table"));
  const embedding = new EmbeddingView(
    section("panel-embedding"),
    client,
    opts.dataset,
    opts.sessionId,
  );
  const chat = new ChatPanel(
    section("panel-chat"),
    client,
    opts.dataset,
    opts.sessionId,
  );
  const chainView = new ChainView(section("panel-chain"));
  const treemap = new TreemapView(section("panel-treemap"));

  const wireUpset = (chainId: string) => {
    const upset = new UpsetView(section("panel-upset"), client, chainId);
    upset.onSlice = (recordIds) => table.filterToRecords(recordIds);
    return upset;
  };

  return { client, table, embedding, chat, chainView, treemap, wireUpset };
}
