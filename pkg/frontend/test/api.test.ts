import { describe, expect, it } from "vitest";

import { Client, ServiceError } from "../src/api.js";

type Call = { url: string; init?: RequestInit };

function fakeFetch(handler: (url: string, body: unknown) => { status: number; body: unknown }) {
  const calls: Call[] = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    const out = handler(url, body);
    return new Response(JSON.stringify(out.body), {
      status: out.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { impl, calls };
}

describe("Client", () => {
  it("posts JSON bodies to the versioned paths", async () => {
    const { impl, calls } = fakeFetch(() => ({ status: 200, body: { tokens: ["a"], gamma: [0.5] } }));
    const c = new Client("http://svc", impl);
    const r = await c.encode("a");
    expect(r.tokens).toEqual(["a"]);
    expect(calls[0]!.url).toBe("http://svc/v1/encode");
    expect(calls[0]!.init?.method).toBe("POST");
    expect(JSON.parse(calls[0]!.init?.body as string)).toEqual({ source: "a" });
  });

  it("passes generate requests through unchanged", async () => {
    const { impl, calls } = fakeFetch(() => ({
      status: 200,
      body: { texts: ["x"], scores: [-1], mask: [1, 0] },
    }));
    const req = { source: "a b", mask: [1, 0], mode: "greedy" as const, samples: 1, seed: 3 };
    await new Client("http://svc", impl).generate(req);
    expect(JSON.parse(calls[0]!.init?.body as string)).toEqual(req);
  });

  it("hits health with GET", async () => {
    const { impl, calls } = fakeFetch(() => ({
      status: 200,
      body: { status: "ok", "checkpoint-id": "abc" },
    }));
    const r = await new Client("http://svc", impl).health();
    expect(r["checkpoint-id"]).toBe("abc");
    expect(calls[0]!.init?.method).toBe("GET");
    expect(calls[0]!.init?.body).toBeUndefined();
  });

  it("surfaces the service's error code and message", async () => {
    const { impl } = fakeFetch(() => ({
      status: 422,
      body: { error: { code: "all_masked", message: "mask selects no tokens" } },
    }));
    const err = await new Client("http://svc", impl)
      .generate({ source: "a", mask: [0], mode: "greedy", samples: 1, seed: 0 })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(422);
    expect(err.code).toBe("all_masked");
    expect(err.message).toBe("mask selects no tokens");
  });

  it("queues calls: at most one in flight", async () => {
    const order: string[] = [];
    let releaseFirst!: () => void;
    const gate = new Promise<void>((res) => {
      releaseFirst = res;
    });
    const impl = async (url: string) => {
      order.push(`start ${url.split("/").pop()}`);
      if (order.length === 1) await gate;
      order.push(`end ${url.split("/").pop()}`);
      return new Response(JSON.stringify({ tokens: [], gamma: [] }), { status: 200 });
    };
    const c = new Client("http://svc", impl);
    const first = c.encode("one");
    const second = c.encode("two");
    await new Promise((r) => setTimeout(r, 10));
    expect(order).toEqual(["start encode"]); // second call not issued yet
    releaseFirst();
    await Promise.all([first, second]);
    expect(order).toEqual(["start encode", "end encode", "start encode", "end encode"]);
  });

  it("keeps the queue alive after a failure", async () => {
    let n = 0;
    const impl = async () => {
      n += 1;
      return n === 1
        ? new Response(JSON.stringify({ error: { code: "bad_request", message: "no" } }), { status: 400 })
        : new Response(JSON.stringify({ tokens: ["a"], gamma: [0.5] }), { status: 200 });
    };
    const c = new Client("http://svc", impl);
    await expect(c.encode("x")).rejects.toBeInstanceOf(ServiceError);
    await expect(c.encode("y")).resolves.toEqual({ tokens: ["a"], gamma: [0.5] });
  });
});
