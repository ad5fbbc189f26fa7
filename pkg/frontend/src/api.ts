/** Thin typed client for the kgchains HTTP API — the UI's only data source. */
import type {
  ChainResponse,
  ChatResponse,
  DatasetDescriptor,
  EmbeddingResponse,
  FilterResponse,
  LassoResponse,
  LayoutResponse,
  RetrieveResponse,
  SearchResponse,
  UpsetResponse,
  UpsetSliceResponse,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClientError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public detail: unknown = null,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await resp.json();
    if (!resp.ok) {
      throw new ApiClientError(
        resp.status,
        payload.code ?? "unknown",
        payload.message ?? resp.statusText,
        payload.detail,
      );
    }
    return payload as T;
  }

  getDataset(id: string): Promise<DatasetDescriptor> {
    return this.request("GET", `/datasets/${encodeURIComponent(id)}`);
  }

  registerDataset(body: Record<string, string>): Promise<DatasetDescriptor> {
    return this.request("POST", "/datasets", body);
  }

  search(dataset: string, head: string, n = 50, category?: string): Promise<SearchResponse> {
    const params = new URLSearchParams({ dataset, head, n: String(n) });
    if (category) params.set("category", category);
    return this.request("GET", `/search?${params}`);
  }

  filterPredictions(dataset: string, filter: unknown, sort?: unknown): Promise<FilterResponse> {
    return this.request("POST", "/predictions/filter", { dataset, filter, sort });
  }

  getEmbedding(dataset: string): Promise<EmbeddingResponse> {
    return this.request("GET", `/embedding/${encodeURIComponent(dataset)}`);
  }

  lasso(dataset: string, polygon: number[][], sessionId?: string): Promise<LassoResponse> {
    return this.request("POST", "/lasso", {
      dataset,
      polygon,
      session_id: sessionId,
    });
  }

  createChain(
    dataset: string,
    positions: { description: string; relation?: string }[],
    sessionId?: string,
  ): Promise<ChainResponse> {
    return this.request("POST", "/chains", { dataset, positions, session_id: sessionId });
  }

  previewChain(chainId: string, position: number, k = 20): Promise<ChainResponse> {
    return this.request("POST", `/chains/${chainId}/preview`, { position, k });
  }

  analyzeChain(chainId: string): Promise<ChainResponse & { critique: string }> {
    return this.request("POST", `/chains/${chainId}/analyze`, {});
  }

  retrieveChain(chainId: string): Promise<RetrieveResponse> {
    return this.request("POST", `/chains/${chainId}/retrieve`, {});
  }

  getChain(chainId: string): Promise<ChainResponse> {
    return this.request("GET", `/chains/${chainId}`);
  }

  getUpset(chainId: string): Promise<UpsetResponse> {
    return this.request("GET", `/chains/${chainId}/upset`);
  }

  getUpsetSlice(
    chainId: string,
    subset: number[],
    exclusive = true,
  ): Promise<UpsetSliceResponse> {
    const params = new URLSearchParams({
      subset: subset.join(","),
      exclusive: String(exclusive),
    });
    return this.request("GET", `/chains/${chainId}/upset?${params}`);
  }

  layout(
    dataset: string,
    recordId: number,
    chainId?: string,
    seed = 0,
  ): Promise<LayoutResponse> {
    return this.request("POST", "/layout", {
      dataset,
      record_id: recordId,
      chain_id: chainId,
      seed,
    });
  }

  chat(
    dataset: string,
    message: string,
    mode: "llm" | "rag",
    sessionId?: string,
  ): Promise<ChatResponse> {
    return this.request("POST", "/chat", {
      dataset,
      message,
      mode,
      session_id: sessionId,
    });
  }
}
