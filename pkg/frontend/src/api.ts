/** Thin fetch client for the reconstruction service. */

import type { ModelCard, ReconstructRequest, ReconstructResponse, ServiceErrorBody } from "./types.js";

export class ServiceError extends Error {
  constructor(
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ServiceError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private timeoutMs = 30_000,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async call(path: string, init?: RequestInit): Promise<unknown> {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, { ...init, signal: controller.signal });
    } catch (err) {
      if (controller.signal.aborted) {
        throw new ServiceError("timeout", `no response after ${this.timeoutMs / 1000} s`);
      }
      throw new ServiceError("unreachable", err instanceof Error ? err.message : String(err));
    } finally {
      clearTimeout(timer);
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // fall through to the status check with an empty body
    }
    if (!response.ok) {
      const e = (body ?? {}) as Partial<ServiceErrorBody>;
      throw new ServiceError(e.error ?? `http_${response.status}`, e.detail ?? response.statusText);
    }
    return body;
  }

  async modelCard(): Promise<ModelCard> {
    return (await this.call("/v1/model")) as ModelCard;
  }

  async health(): Promise<{ status: string }> {
    return (await this.call("/v1/health")) as { status: string };
  }

  async reconstruct(req: ReconstructRequest): Promise<ReconstructResponse> {
    return (await this.call("/v1/reconstruct", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    })) as ReconstructResponse;
  }
}
