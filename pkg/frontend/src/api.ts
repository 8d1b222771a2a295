/** Thin typed client over the service's JSON HTTP API. */

import type {
  ClustersPayload,
  CurationOutcome,
  CurationRequest,
  HistoryEntry,
  LayoutPoint,
  ThemesPayload,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceUnavailableError extends Error {}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}${path}`);
    } catch (err) {
      throw new ServiceUnavailableError(`service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      throw new Error(`GET ${path} -> ${response.status}`);
    }
    return (await response.json()) as T;
  }

  getClusters(): Promise<ClustersPayload> {
    return this.getJson("/api/clusters");
  }

  getClusterDetail(clusterId: number): Promise<Record<string, unknown>> {
    return this.getJson(`/api/clusters/${clusterId}`);
  }

  getThemes(): Promise<ThemesPayload> {
    return this.getJson("/api/themes");
  }

  async getHistory(): Promise<HistoryEntry[]> {
    const payload = await this.getJson<{ history: HistoryEntry[] }>("/api/history");
    return payload.history;
  }

  async getLayout(): Promise<LayoutPoint[] | null> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/api/layout`);
    } catch (err) {
      throw new ServiceUnavailableError(`service unreachable: ${String(err)}`);
    }
    if (response.status === 404) {
      return null; // viz stage not run yet: empty-state
    }
    if (!response.ok) {
      throw new Error(`GET /api/layout -> ${response.status}`);
    }
    const payload = (await response.json()) as { points: LayoutPoint[] };
    return payload.points;
  }

  async postCuration(request: CurationRequest): Promise<CurationOutcome> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/api/curation`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(request),
      });
    } catch (err) {
      throw new ServiceUnavailableError(`service unreachable: ${String(err)}`);
    }
    if (response.status === 200) {
      const body = (await response.json()) as { version: number };
      return { status: "applied", version: body.version };
    }
    if (response.status === 409) {
      const body = (await response.json()) as {
        detail: { error: string; current_version: number };
      };
      return {
        status: "conflict",
        currentVersion: body.detail.current_version,
        message: body.detail.error,
      };
    }
    const body = (await response.json()) as { detail: string };
    return { status: "invalid", message: String(body.detail) };
  }
}
