/** Wire types mirroring the kgchains HTTP API. */

export interface Envelope {
  revision: number;
  dataset_id?: string;
}

export interface DatasetDescriptor extends Envelope {
  id: string;
  status: "unloaded" | "loading" | "ready" | "failed";
  counts?: Record<string, number>;
  error?: string;
}

export interface PathHop {
  relation: string;
  weight: number;
  entity: string;
  entity_name: string;
}

export interface PredictionRow {
  record_id: number;
  head: string;
  head_name: string;
  tail: string;
  tail_name: string;
  score: number;
  rank: number;
  starred: boolean;
  display_rank?: number;
  path: { origin: string; hops: PathHop[] };
}

export interface SearchResponse extends Envelope {
  head: string;
  rows: PredictionRow[];
}

export interface FilterResponse extends Envelope {
  rows: PredictionRow[];
}

export interface EmbeddingPoint {
  entity_id: string;
  x: number;
  y: number;
}

export interface EmbeddingResponse extends Envelope {
  points: EmbeddingPoint[];
}

export interface LassoResponse extends Envelope {
  selected: string[];
}

export interface ChainPositionWire {
  description: string;
  relation: string;
  entities: {
    entity_id: string;
    entity_name: string;
    category: string;
    justification: string;
    alignment_rank: number;
  }[];
  relation_labels: string[];
}

export interface ChainWire {
  id: string;
  positions: ChainPositionWire[];
  status: "draft" | "analyzed" | "retrieved";
  critique: string;
}

export interface ChainResponse extends Envelope {
  chain: ChainWire;
}

export interface MatchReportWire {
  chain_id: string;
  dataset_id: string;
  bitmasks: Record<string, number>;
  per_hypothesis: number[];
  exclusive_counts: Record<string, number>;
}

export interface RetrieveResponse extends Envelope {
  report: MatchReportWire;
}

export interface UpsetBar {
  subset: number[];
  count: number;
}

export interface UpsetResponse extends Envelope {
  per_hypothesis: number[];
  bars: UpsetBar[];
}

export interface UpsetSliceResponse extends Envelope {
  subset: number[];
  exclusive: boolean;
  record_ids: number[];
  count: number;
}

export interface LayoutCell {
  entity_id: string;
  vertices: number[][];
  site: number[];
  area_share: number;
}

export interface LayerLayoutWire {
  container: { x: number; y: number; width: number; height: number };
  layer_kind: "one_hop" | "hypothesis_aligned";
  converged: boolean;
  iterations: number;
  max_relative_error: number;
  cells: LayoutCell[];
  category_regions: Record<string, number[][]>;
}

export interface LayoutResponse extends Envelope {
  layers: LayerLayoutWire[];
  cross_edges: { a: string; b: string; relation: string; layers: number[] }[];
}

export interface ChatResponse extends Envelope {
  mode: "llm" | "rag";
  payload: unknown;
  raw: string;
  suggestions: string[];
  cited_triplets: string[][];
  backend: string;
}

export interface RecommendedEntity {
  entity_name: string;
  category: string;
  reason: string;
}

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}
