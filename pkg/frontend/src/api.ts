/** Typed client for the /v1 HTTP JSON API.
 *
 * Single-user studio rule: at most one in-flight call; later actions queue
 * behind the current one.  Every response is returned verbatim so callers
 * can store the exact (request, response) pair for replay.
 */

export interface EncodeResponse {
  tokens: string[];
  gamma: number[];
}

export interface GenerateRequest {
  source: string;
  mask: number[];
  mode: "greedy" | "beam" | "sample";
  samples: number;
  seed: number;
}

export interface GenerateResponse {
  texts: string[];
  scores: number[];
  mask: number[];
}

export interface SampleMasksResponse {
  masks: number[][];
}

export interface PosteriorResponse {
  q: number[];
  best_mask: number[];
}

export interface HealthResponse {
  status: string;
  "checkpoint-id": string;
}

/** A non-2xx reply; carries the service's own code and message. */
export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private enqueue<T>(job: () => Promise<T>): Promise<T> {
    const next = this.queue.then(job, job);
    // keep the chain alive after failures so later actions still run
    this.queue = next.catch(() => undefined);
    return next;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    return this.enqueue(async () => {
      const init: RequestInit = { method, headers: { "content-type": "application/json" } };
      if (body !== undefined) init.body = JSON.stringify(body);
      const resp = await this.fetchImpl(this.baseUrl + path, init);
      const doc = await resp.json();
      if (!resp.ok) {
        const err = (doc as { error?: { code?: string; message?: string } }).error;
        throw new ServiceError(resp.status, err?.code ?? "unknown", err?.message ?? resp.statusText);
      }
      return doc as T;
    });
  }

  health(): Promise<HealthResponse> {
    return this.call("GET", "/v1/health");
  }

  encode(source: string): Promise<EncodeResponse> {
    return this.call("POST", "/v1/encode", { source });
  }

  generate(req: GenerateRequest): Promise<GenerateResponse> {
    return this.call("POST", "/v1/generate", req);
  }

  sampleMasks(source: string, k: number, seed: number): Promise<SampleMasksResponse> {
    return this.call("POST", "/v1/sample-masks", { source, k, seed });
  }

  posterior(source: string, target: string): Promise<PosteriorResponse> {
    return this.call("POST", "/v1/posterior", { source, target });
  }
}
