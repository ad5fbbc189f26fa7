"""Geometry for the hypothesis view: stacked Voronoi treemaps and lasso.

Each layer is partitioned by an additively weighted Voronoi (power)
diagram, iterated with Lloyd centroid moves and multiplicative weight
adaptation until every cell's area share is within tolerance of its weight
share.  Level 1 splits the container among categories, level 2 splits each
category region among its entities.

Polygons are kept as plain lists of (x, y) tuples internally; for the cell
counts involved here that is several times faster than numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ContractViolation, UnknownEntityError
from .kg import KnowledgeGraph

AREA_TOLERANCE = 0.05
MAX_ITERATIONS = 500
WEIGHT_SUBSTEPS = 3
RESTARTS = 4  # weight-only adaptations per site move
LAYER_GUTTER = 24.0

Point = tuple[float, float]
Polygon = list[Point]


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    width: float
    height: float

    def polygon(self) -> Polygon:
        return [
            (self.x, self.y),
            (self.x + self.width, self.y),
            (self.x + self.width, self.y + self.height),
            (self.x, self.y + self.height),
        ]

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class LayerSpec:
    layer_kind: str  # "one_hop" | "hypothesis_aligned"
    members: list[str]
    weights: dict[str, float]
    position: Optional[int] = None  # chain position for hypothesis_aligned
    empty: bool = False

    def validate(self):
        if self.empty:
            return
        if not self.members:
            raise ContractViolation("layer has no members and is not empty-flagged")
        for m in self.members:
            w = self.weights.get(m, 0.0)
            if not (w > 0.0):
                raise ContractViolation(f"member {m!r} has non-positive weight")


@dataclass
class Cell:
    entity_id: str
    polygon: Polygon
    site: Point
    area_share: float


@dataclass
class LayerLayout:
    container: Rect
    layer_kind: str
    cells: dict[str, Cell]
    category_regions: dict[str, Polygon]
    converged: bool
    iterations: int
    max_relative_error: float

    def to_json(self) -> dict:
        return {
            "container": {
                "x": self.container.x,
                "y": self.container.y,
                "width": self.container.width,
                "height": self.container.height,
            },
            "layer_kind": self.layer_kind,
            "converged": self.converged,
            "iterations": self.iterations,
            "max_relative_error": self.max_relative_error,
            "cells": [
                {
                    "entity_id": eid,
                    "vertices": [list(v) for v in cell.polygon],
                    "site": list(cell.site),
                    "area_share": cell.area_share,
                }
                for eid, cell in self.cells.items()
            ],
            "category_regions": {
                cat: [list(v) for v in poly]
                for cat, poly in self.category_regions.items()
            },
        }


# -- polygon primitives ------------------------------------------------------

def polygon_area(poly: Polygon) -> float:
    """Shoelace area of a simple polygon (vertices in order)."""
    n = len(poly)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) * 0.5


def polygon_centroid(poly: Polygon) -> Point:
    n = len(poly)
    a = 0.0
    cx = 0.0
    cy = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cross = x1 * y2 - x2 * y1
        a += cross
        cx += (x1 + x2) * cross
        cy += (y1 + y2) * cross
    if abs(a) < 1e-12:
        return (
            sum(p[0] for p in poly) / n,
            sum(p[1] for p in poly) / n,
        )
    return cx / (3.0 * a), cy / (3.0 * a)


def _clip_halfplane(poly: Polygon, a0: float, a1: float, b: float) -> Polygon:
    """Clip a convex polygon to the half-plane a.x <= b (Sutherland-Hodgman)."""
    n = len(poly)
    if n == 0:
        return poly
    vals = [a0 * p[0] + a1 * p[1] - b for p in poly]
    eps = 1e-10 * (abs(b) + 1.0)
    all_in = True
    any_in = False
    for v in vals:
        if v > eps:
            all_in = False
        else:
            any_in = True
    if all_in:
        return poly
    if not any_in:
        return []
    out: Polygon = []
    for i in range(n):
        j = (i + 1) % n
        vi, vj = vals[i], vals[j]
        in_i = vi <= eps
        in_j = vj <= eps
        if in_i:
            out.append(poly[i])
        if in_i != in_j:
            t = vi / (vi - vj)
            pi, pj = poly[i], poly[j]
            out.append((pi[0] + t * (pj[0] - pi[0]), pi[1] + t * (pj[1] - pi[1])))
    return out


def _point_in_convex(poly: Polygon, x: float, y: float) -> bool:
    n = len(poly)
    sign = 0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if cross > 1e-12:
            if sign < 0:
                return False
            sign = 1
        elif cross < -1e-12:
            if sign > 0:
                return False
            sign = -1
    return True


# -- power diagram -----------------------------------------------------------

def _neighbor_pairs(sites: np.ndarray, weights: np.ndarray):
    """Per-site candidate neighbor lists via the regular triangulation.

    Sites absent from the lower hull have empty power cells; they get an
    empty neighbor list and the caller treats their cell as empty.  Falls
    back to all-pairs for small or degenerate inputs.
    """
    n = len(sites)
    if n <= 8:
        return [[j for j in range(n) if j != i] for i in range(n)], set()
    lifted = np.column_stack([sites, (sites**2).sum(axis=1) - weights])
    try:
        hull = ConvexHull(lifted)
    except QhullError:
        try:
            hull = ConvexHull(lifted, qhull_options="QJ")
        except QhullError:
            return [[j for j in range(n) if j != i] for i in range(n)], set()
    lower = hull.equations[:, 2] < -1e-12
    neighbors = [set() for _ in range(n)]
    on_lower = set()
    for simplex, is_lower in zip(hull.simplices, lower):
        if not is_lower:
            continue
        for v in simplex:
            on_lower.add(int(v))
        for i in range(3):
            a, b = int(simplex[i]), int(simplex[(i + 1) % 3])
            neighbors[a].add(b)
            neighbors[b].add(a)
    hidden = set(range(n)) - on_lower
    return [sorted(s) for s in neighbors], hidden


def _power_cells(container: Polygon, sites: np.ndarray, weights: np.ndarray):
    n = len(sites)
    if n == 1:
        return [list(container)]
    neighbors, hidden = _neighbor_pairs(sites, weights)
    norm2 = (sites**2).sum(axis=1).tolist()
    site_list = sites.tolist()
    weight_list = weights.tolist()
    cells = []
    for i in range(n):
        if i in hidden or not neighbors[i]:
            cells.append([])
            continue
        poly = container
        six, siy = site_list[i]
        for j in neighbors[i]:
            a0 = 2.0 * (site_list[j][0] - six)
            a1 = 2.0 * (site_list[j][1] - siy)
            b = norm2[j] - norm2[i] - weight_list[j] + weight_list[i]
            poly = _clip_halfplane(poly, a0, a1, b)
            if len(poly) < 3:
                poly = []
                break
        cells.append(poly)
    return cells


def _init_sites(container: Polygon, n: int, rng: np.random.Generator) -> np.ndarray:
    """Deterministic seeded jittered grid inside a convex container."""
    xs = [p[0] for p in container]
    ys = [p[1] for p in container]
    minx, maxx = min(xs), max(xs)
    miny, maxy = min(ys), max(ys)
    width, height = maxx - minx, maxy - miny
    aspect = width / height if height > 0 else 1.0
    cols = max(1, int(math.ceil(math.sqrt(n * aspect))))
    rows = max(1, int(math.ceil(n / cols)))
    dx, dy = width / cols, height / rows
    sites = []
    for r in range(rows):
        for c in range(cols):
            x = minx + (c + 0.5) * dx + (rng.random() - 0.5) * 0.5 * dx
            y = miny + (r + 0.5) * dy + (rng.random() - 0.5) * 0.5 * dy
            if _point_in_convex(container, x, y):
                sites.append((x, y))
    while len(sites) < n:
        x = minx + rng.random() * width
        y = miny + rng.random() * height
        if _point_in_convex(container, x, y):
            sites.append((x, y))
    return np.array(sites[:n])


def _partition(
    container: Polygon,
    names: list[str],
    weights: np.ndarray,
    rng: np.random.Generator,
    tolerance: float = AREA_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
):
    """Partition a convex polygon into weighted power cells.

    Per iteration: up to WEIGHT_SUBSTEPS multiplicative weight adaptations
    (w <- w * clamp(target/actual, 0.5, 2), capped below the squared
    nearest-site distance so every site keeps a non-empty cell), then one
    Lloyd move of every site to its cell centroid.  Some initial site
    placements oscillate instead of converging, so up to RESTARTS fresh
    (still seed-deterministic) initializations are tried; the best attempt
    wins.

    Returns (cells by name, converged, iterations, max relative error).
    """
    n = len(names)
    total_area = polygon_area(container)
    if total_area <= 0:
        raise ContractViolation("zero-area container")
    target = weights / weights.sum()
    if n == 1:
        return {names[0]: list(container)}, True, 0, 0.0
    best = None
    for _attempt in range(RESTARTS):
        sites = _init_sites(container, n, rng)
        w = target * total_area / math.pi
        cells = None
        err = math.inf
        for iteration in range(1, max_iterations + 1):
            diff = sites[:, None, :] - sites[None, :, :]
            d2 = (diff**2).sum(axis=2)
            np.fill_diagonal(d2, np.inf)
            nn2 = d2.min(axis=1)
            for _ in range(WEIGHT_SUBSTEPS):
                cells = _power_cells(container, sites, w)
                areas = np.array([polygon_area(c) for c in cells])
                shares = areas / total_area
                err = float(np.max(np.abs(shares - target) / target))
                if err < tolerance:
                    return (
                        {name: cells[i] for i, name in enumerate(names)},
                        True,
                        iteration,
                        err,
                    )
                ratio = np.clip(target / np.maximum(shares, 1e-12), 0.5, 2.0)
                w = np.minimum(np.maximum(w * ratio, 1e-9 * total_area), 0.98 * nn2)
            for i, cell in enumerate(cells):
                if len(cell) >= 3:
                    sites[i] = polygon_centroid(cell)
        if best is None or err < best[1]:
            best = (cells, err)
    cells, err = best
    return (
        {name: cells[i] for i, name in enumerate(names)},
        False,
        max_iterations,
        err,
    )


def compute_treemap(
    layer: LayerSpec,
    container: Rect,
    seed: int = 0,
    categories: Optional[dict[str, str]] = None,
    tolerance: float = AREA_TOLERANCE,
    max_iterations: int = MAX_ITERATIONS,
) -> LayerLayout:
    """Two-level weighted Voronoi treemap for one layer.

    Level 1 splits the container among categories by member-weight sums;
    level 2 splits each category region among its entities.  Deterministic
    for a fixed (layer, container, seed).  When the iteration cap is hit
    the layout is still returned with converged=False.
    """
    layer.validate()
    if container.area <= 0:
        raise ContractViolation("zero-area container")
    if layer.empty or not layer.members:
        return LayerLayout(container, layer.layer_kind, {}, {}, True, 0, 0.0)
    if categories is None:
        categories = {}
    rng = np.random.default_rng(seed)
    by_category: dict[str, list[str]] = {}
    for m in layer.members:
        by_category.setdefault(categories.get(m, ""), []).append(m)

    outer = container.polygon()
    total_weight = sum(layer.weights[m] for m in layer.members)
    category_regions: dict[str, Polygon] = {}
    if len(by_category) == 1:
        cat = next(iter(by_category))
        category_regions[cat] = outer
        converged1 = True
    else:
        cats = sorted(by_category)
        cat_weights = np.array(
            [sum(layer.weights[m] for m in by_category[c]) for c in cats]
        )
        # tight level-1 tolerance so per-entity error stays inside the
        # overall budget once composed with level 2
        category_regions, converged1, _, _ = _partition(
            outer, cats, cat_weights, rng, tolerance=min(tolerance, 0.01),
            max_iterations=max_iterations,
        )

    cells: dict[str, Cell] = {}
    converged = converged1
    worst = 0.0
    iterations = 0
    for cat in sorted(by_category):
        members = sorted(by_category[cat])
        region = category_regions[cat]
        member_weights = np.array([layer.weights[m] for m in members])
        polys, ok, iters, _ = _partition(
            region, members, member_weights, rng,
            tolerance=tolerance * 0.8, max_iterations=max_iterations,
        )
        converged = converged and ok
        iterations = max(iterations, iters)
        for m in members:
            poly = polys[m]
            share = polygon_area(poly) / container.area
            target = layer.weights[m] / total_weight
            worst = max(worst, abs(share - target) / target)
            site = polygon_centroid(poly) if len(poly) >= 3 else (0.0, 0.0)
            cells[m] = Cell(m, poly, site, share)
    return LayerLayout(
        container=container,
        layer_kind=layer.layer_kind,
        cells=cells,
        category_regions=category_regions,
        converged=converged,
        iterations=iterations,
        max_relative_error=worst,
    )


# -- layer construction --------------------------------------------------------

def build_layers(path, chain, g: KnowledgeGraph, merge_one_hop: bool = True):
    """Layer specs for one interpretative path plus a chain's resolved sets.

    One one_hop layer holds the union of 1-hop neighbors of the path
    entities (or one layer per path entity when merge_one_hop is False);
    one hypothesis_aligned layer per chain position that has resolved
    entities.  Weights are degrees restricted to the displayed subgraph,
    floored at 1.
    """
    path_entities = [path.origin] + [h.entity for h in path.hops]
    for eid in path_entities:
        if not g.has_entity(eid):
            raise UnknownEntityError(eid, "build_layers")
    neighbor_sets = []
    for eid in path_entities:
        neighbor_sets.append({nb.id for _, nb in g.neighbors(eid, "both")})
    if merge_one_hop:
        groups = [sorted(set().union(*neighbor_sets))]
    else:
        groups = [sorted(s) for s in neighbor_sets]

    displayed = set(path_entities)
    for group in groups:
        displayed.update(group)
    if chain is not None:
        for node in chain.nodes:
            displayed.update(node.resolved_ids())

    def restricted_degree(eid: str) -> float:
        deg = sum(1 for _, nb in g.neighbors(eid, "both") if nb.id in displayed)
        return float(max(deg, 1))

    layers: list[LayerSpec] = []
    for group in groups:
        if not group:
            layers.append(LayerSpec("one_hop", [], {}, empty=True))
            continue
        layers.append(
            LayerSpec(
                "one_hop",
                group,
                {eid: restricted_degree(eid) for eid in group},
            )
        )
    if chain is not None:
        for pos, node in enumerate(chain.nodes, start=1):
            ids = sorted(node.resolved_ids())
            if not ids:
                continue
            layers.append(
                LayerSpec(
                    "hypothesis_aligned",
                    ids,
                    {eid: restricted_degree(eid) for eid in ids},
                    position=pos,
                )
            )
    return layers


def derive_cross_edges(layers: list[LayerSpec], g: KnowledgeGraph):
    """KG edges between members of adjacent layers, deduplicated and sorted.

    Each entry is (entity_a, entity_b, relation, (layer_i, layer_i+1)).
    """
    edges = []
    seen = set()
    for i in range(len(layers) - 1):
        upper = [m for m in layers[i].members if g.has_entity(m)]
        lower = [m for m in layers[i + 1].members if g.has_entity(m)]
        for a in sorted(upper):
            for b in sorted(lower):
                if a == b:
                    continue
                found = g.edge_exists(a, b)
                if found is None:
                    continue
                key = (i, a, b)
                if key in seen:
                    continue
                seen.add(key)
                edges.append((a, b, found[0], (i, i + 1)))
    return edges


def stack_containers(
    count: int, width: float = 1000.0, layer_height: float = 320.0,
    gutter: float = LAYER_GUTTER,
) -> list[Rect]:
    """Vertically stacked layer containers with a fixed gutter."""
    return [
        Rect(0.0, i * (layer_height + gutter), width, layer_height)
        for i in range(count)
    ]


# -- lasso selection -----------------------------------------------------------

def _on_segment(p, a, b, eps=1e-12) -> bool:
    cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
    if abs(cross) > eps * (1.0 + abs(b[0] - a[0]) + abs(b[1] - a[1])):
        return False
    dot = (p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])
    if dot < -eps:
        return False
    sq = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    return dot <= sq + eps


def point_in_polygon(pt, polygon) -> bool:
    """Ray casting; points on the boundary count as inside."""
    n = len(polygon)
    inside = False
    x, y = pt
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        if _on_segment(pt, a, b):
            return True
        if (a[1] > y) != (b[1] > y):
            t = (y - a[1]) / (b[1] - a[1])
            xi = a[0] + t * (b[0] - a[0])
            if x < xi:
                inside = not inside
    return inside


def lasso_select(points: dict[str, tuple[float, float]], polygon) -> list[str]:
    """Entity ids whose embedding coordinates fall inside the lasso polygon."""
    polygon = [tuple(map(float, v)) for v in polygon]
    if len(polygon) < 3:
        raise ContractViolation("lasso polygon needs at least 3 vertices")
    return sorted(
        eid for eid, xy in points.items() if point_in_polygon(tuple(xy), polygon)
    )


def load_embedding(path) -> dict[str, tuple[float, float]]:
    """CSV with header entity_id,x,y."""
    import csv

    from .errors import FormatError

    points = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["entity_id", "x", "y"]:
            raise FormatError(f"bad embedding header {header!r}", line=1, path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError("expected 3 columns", line=lineno, path=path)
            try:
                points[row[0]] = (float(row[1]), float(row[2]))
            except ValueError as exc:
                raise FormatError(f"bad coordinate: {exc}", line=lineno, path=path)
    return points
