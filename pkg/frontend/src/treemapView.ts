/**
 * Stacked treemap layers rendered verbatim from server-computed polygons.
 * This module does no geometry of its own: every <polygon> points attribute
 * is the server vertex list serialized as-is.
 */
import type { LayoutResponse } from "./types";

export function verticesToPoints(vertices: number[][]): string {
  return vertices.map(([x, y]) => `${x},${y}`).join(" ");
}

export class TreemapView {
  constructor(private root: HTMLElement) {}

  render(layout: LayoutResponse): void {
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("class", "treemap-view");
    let maxX = 0;
    let maxY = 0;
    for (const layer of layout.layers) {
      maxX = Math.max(maxX, layer.container.x + layer.container.width);
      maxY = Math.max(maxY, layer.container.y + layer.container.height);
    }
    svg.setAttribute("viewBox", `0 0 ${maxX} ${maxY}`);

    layout.layers.forEach((layer, idx) => {
      const group = document.createElementNS("http://www.w3.org/2000/svg", "g");
      group.setAttribute("class", `layer ${layer.layer_kind}`);
      group.dataset.layerIndex = String(idx);
      for (const cell of layer.cells) {
        const poly = document.createElementNS(
          "http://www.w3.org/2000/svg",
          "polygon",
        );
        poly.setAttribute("points", verticesToPoints(cell.vertices));
        poly.dataset.entityId = cell.entity_id;
        group.appendChild(poly);
      }
      svg.appendChild(group);
    });

    for (const edge of layout.cross_edges) {
      const line = document.createElementNS("http://www.w3.org/2000/svg", "line");
      line.setAttribute("class", "cross-edge");
      line.dataset.pair = `${edge.a}|${edge.b}`;
      line.dataset.relation = edge.relation;
      svg.appendChild(line);
    }
    this.root.replaceChildren(svg);
  }
}
