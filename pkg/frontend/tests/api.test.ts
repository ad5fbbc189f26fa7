import { describe, expect, it } from "vitest";
import { ApiClient, ApiClientError } from "../src/api";
import { makeFetchStub } from "./helpers";
import dataset from "./fixtures/dataset.json";
import searchFixture from "./fixtures/search.json";

const BASE = "http://api.test";

describe("ApiClient", () => {
  it("builds search URLs with query parameters", async () => {
    const { fetch, calls } = makeFetchStub([
      { match: (u) => u.includes("/search"), payload: searchFixture },
    ]);
    const client = new ApiClient(BASE, fetch);
    const resp = await client.search("demo", "e0028", 50);
    expect(calls[0].url).toBe(`${BASE}/search?dataset=demo&head=e0028&n=50`);
    expect(resp.rows).toHaveLength(50);
  });

  it("builds exclusive upset slice URLs", async () => {
    const { fetch, calls } = makeFetchStub([
      { match: () => true, payload: { subset: [2, 3], record_ids: [] } },
    ]);
    const client = new ApiClient(BASE, fetch);
    await client.getUpsetSlice("c1", [2, 3]);
    expect(calls[0].url).toBe(`${BASE}/chains/c1/upset?subset=2%2C3&exclusive=true`);
  });

  it("returns typed dataset descriptors", async () => {
    const { fetch } = makeFetchStub([{ match: () => true, payload: dataset }]);
    const client = new ApiClient(BASE, fetch);
    const d = await client.getDataset("demo");
    expect(d.status).toBe("ready");
    expect(d.counts?.predictions).toBe(200);
  });

  it("maps API errors onto ApiClientError with code and detail", async () => {
    const { fetch } = makeFetchStub([
      {
        match: () => true,
        status: 404,
        payload: { code: "unknown_entity", message: "no such head", detail: "zzz" },
      },
    ]);
    const client = new ApiClient(BASE, fetch);
    const err = await client.search("demo", "zzz").catch((e) => e);
    expect(err).toBeInstanceOf(ApiClientError);
    expect(err.status).toBe(404);
    expect(err.code).toBe("unknown_entity");
    expect(err.detail).toBe("zzz");
  });

  it("posts JSON bodies for chain creation", async () => {
    const { fetch, calls } = makeFetchStub([
      { match: () => true, payload: { chain: { id: "c1" } } },
    ]);
    const client = new ApiClient(BASE, fetch);
    await client.createChain("demo", [{ description: "upstream regulator" }], "s1");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].body).toEqual({
      dataset: "demo",
      positions: [{ description: "upstream regulator" }],
      session_id: "s1",
    });
  });
});
