/**
 * Thin client over the registry REST API.
 *
 * Searches are latest-wins: starting a new one aborts any in-flight request,
 * so a slow response can never clobber the results of a newer query.
 */

import type {
  ApiErrorBody,
  RelatedTool,
  SearchResponse,
  ToolCard,
} from "./types.js";
import { toApiParams, type UiQueryState } from "./state.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class Superseded extends Error {
  constructor() {
    super("request superseded by a newer one");
  }
}

type Fetcher = (url: string, init?: { signal?: AbortSignal }) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

async function parseError(status: number, payload: unknown): Promise<never> {
  const body = payload as Partial<ApiErrorBody> | null;
  const error = body?.error;
  throw new ApiError(status, error?.code ?? "unknown", error?.message ?? `HTTP ${status}`);
}

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetcher: Fetcher = fetch.bind(globalThis) as Fetcher,
  ) {}

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    let response;
    try {
      response = await this.fetcher(`${this.baseUrl}${path}`, { signal });
    } catch (cause) {
      if ((cause as { name?: string })?.name === "AbortError") throw new Superseded();
      throw cause;
    }
    if (!response.ok) {
      let payload: unknown = null;
      try {
        payload = await response.json();
      } catch {
        /* non-JSON error body */
      }
      await parseError(response.status, payload);
    }
    return (await response.json()) as T;
  }

  /** Latest-wins search: aborts the previous in-flight search, if any. */
  async search(state: UiQueryState): Promise<SearchResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      return await this.get<SearchResponse>(
        `/api/v1/search?${toApiParams(state).toString()}`,
        controller.signal,
      );
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  tool(accession: string): Promise<ToolCard> {
    return this.get<ToolCard>(`/api/v1/tools/${encodeURIComponent(accession)}`);
  }

  async related(accession: string, k = 6): Promise<RelatedTool[]> {
    const body = await this.get<{ related: RelatedTool[] }>(
      `/api/v1/tools/${encodeURIComponent(accession)}/related?k=${k}`,
    );
    return body.related;
  }
}
