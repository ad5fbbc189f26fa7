/** Read-only display of a hypothesis chain: positions, status, critique. */
import type { ChainWire } from "./types";

export class ChainView {
  constructor(private root: HTMLElement) {}

  render(chain: ChainWire): void {
    const panel = document.createElement("div");
    panel.className = "chain-view";
    panel.dataset.chainId = chain.id;
    panel.dataset.status = chain.status;

    chain.positions.forEach((pos, i) => {
      const box = document.createElement("div");
      box.className = "chain-position";
      const title = document.createElement("h4");
      title.textContent = `H${i + 1}: ${pos.description}`;
      box.appendChild(title);
      if (pos.relation) {
        const rel = document.createElement("div");
        rel.className = "relation";
        rel.textContent = pos.relation;
        box.appendChild(rel);
      }
      const list = document.createElement("ul");
      for (const ent of pos.entities) {
        const li = document.createElement("li");
        li.dataset.entityId = ent.entity_id;
        li.textContent = `${ent.entity_name} (${ent.category})`;
        li.title = ent.justification;
        list.appendChild(li);
      }
      box.appendChild(list);
      panel.appendChild(box);
    });

    if (chain.critique) {
      const critique = document.createElement("p");
      critique.className = "critique";
      critique.textContent = chain.critique;
      panel.appendChild(critique);
    }
    this.root.replaceChildren(panel);
  }
}
