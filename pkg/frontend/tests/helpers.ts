import type { FetchLike } from "../src/api";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/**
 * Fetch stub that answers from an ordered route table and records every call,
 * so tests can assert both what was requested and that nothing else was.
 */
export function makeFetchStub(
  routes: { match: (url: string, method: string) => boolean; payload: unknown; status?: number }[],
): { fetch: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ url, method, body });
    const route = routes.find((r) => r.match(url, method));
    if (!route) {
      throw new Error(`unexpected request: ${method} ${url}`);
    }
    return new Response(JSON.stringify(route.payload), {
      status: route.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchImpl, calls };
}

export function mount(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}
