/** Tabular view over prediction rows: rank, tail, score, path and star badge. */
import type { PredictionRow } from "./types";

export class PredictionTable {
  private rows: PredictionRow[] = [];

  constructor(private root: HTMLElement) {}

  setRows(rows: PredictionRow[]): void {
    this.rows = rows;
    this.render();
  }

  /** Keep only rows whose record_id is in `recordIds`, preserving order. */
  filterToRecords(recordIds: number[]): void {
    const keep = new Set(recordIds);
    this.rows = this.rows.filter((r) => keep.has(r.record_id));
    this.render();
  }

  visibleRecordIds(): number[] {
    return this.rows.map((r) => r.record_id);
  }

  private render(): void {
    const table = document.createElement("table");
    table.className = "prediction-table";
    const head = table.createTHead().insertRow();
    for (const label of ["rank", "tail", "score", "path", ""]) {
      const th = document.createElement("th");
      th.textContent = label;
      head.appendChild(th);
    }
    const body = table.createTBody();
    for (const row of this.rows) {
      const tr = body.insertRow();
      tr.dataset.recordId = String(row.record_id);
      tr.insertCell().textContent = String(row.display_rank ?? row.rank);
      tr.insertCell().textContent = row.tail_name;
      tr.insertCell().textContent = row.score.toFixed(4);
      tr.insertCell().textContent = row.path.hops
        .map((h) => `—${h.relation}→ ${h.entity_name}`)
        .join(" ");
      const badge = tr.insertCell();
      if (row.starred) {
        const star = document.createElement("span");
        star.className = "star-badge";
        star.textContent = "⭐";
        badge.appendChild(star);
      }
    }
    this.root.replaceChildren(table);
  }
}
