// Thin typed client over the service endpoints. Every user action maps to
// exactly one call here; nothing is computed client-side.

import type {
  DataSummary,
  ExportPayload,
  GeneratedSegment,
  Graph,
  Outline,
  RankedReport,
  ReportDetail,
  SessionEvent,
  SessionView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`HTTP ${status}: ${JSON.stringify(detail)}`);
  }
}

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      throw new ApiError(response.status, payload?.detail ?? payload);
    }
    return payload as T;
  }

  async uploadDataset(name: string, csv: string | Blob): Promise<{ dataset_id: string; summary: DataSummary }> {
    const response = await this.fetchFn(
      `${this.base}/datasets?name=${encodeURIComponent(name)}`,
      { method: "POST", headers: { "Content-Type": "text/csv" }, body: csv },
    );
    const payload = await response.json();
    if (!response.ok) throw new ApiError(response.status, payload?.detail);
    return payload;
  }

  getDataset(id: string) {
    return this.request<{ dataset_id: string; summary: DataSummary }>(
      "GET", `/datasets/${id}`,
    );
  }

  rankedReports(datasetId: string) {
    return this.request<{ reports: RankedReport[] }>(
      "GET", `/reports?dataset=${encodeURIComponent(datasetId)}`,
    );
  }

  getReport(id: string) {
    return this.request<ReportDetail>("GET", `/reports/${id}`);
  }

  createSession(datasetId: string, reportId: string) {
    return this.request<SessionView>("POST", "/sessions", {
      dataset_id: datasetId,
      report_id: reportId,
    });
  }

  getSession(id: string) {
    return this.request<SessionView>("GET", `/sessions/${id}`);
  }

  generate(sessionId: string, segmentId: string) {
    return this.request<GeneratedSegment>(
      "POST", `/sessions/${sessionId}/segments/${segmentId}/generate`,
    );
  }

  regenerate(sessionId: string, segmentId: string) {
    return this.request<GeneratedSegment>(
      "POST", `/sessions/${sessionId}/segments/${segmentId}/regenerate`,
    );
  }

  apply(sessionId: string, segmentId: string) {
    return this.request<{ segment: string; status: string }>(
      "POST", `/sessions/${sessionId}/segments/${segmentId}/apply`,
    );
  }

  edit(
    sessionId: string,
    segmentId: string,
    edit: { objective?: string; script?: string; narrative?: string },
  ) {
    return this.request<{ segment: string; generated: GeneratedSegment | null }>(
      "POST", `/sessions/${sessionId}/segments/${segmentId}/edit`, edit,
    );
  }

  insertSegment(sessionId: string, fields: string[], relation: string, anchor: string) {
    return this.request<{ segment_id: string; objective: string; graph: Graph }>(
      "POST", `/sessions/${sessionId}/segments`,
      { fields, relation, anchor },
    );
  }

  removeSegment(sessionId: string, segmentId: string) {
    return this.request<{ removed: string; graph: Graph }>(
      "DELETE", `/sessions/${sessionId}/segments/${segmentId}`,
    );
  }

  getGraph(sessionId: string) {
    return this.request<Graph>("GET", `/sessions/${sessionId}/graph`);
  }

  fieldUsage(sessionId: string) {
    return this.request<{ counts: Record<string, number> }>(
      "GET", `/sessions/${sessionId}/field-usage`,
    );
  }

  getOutline(sessionId: string) {
    return this.request<Outline>("GET", `/sessions/${sessionId}/outline`);
  }

  regroup(sessionId: string, sections: { heading: string; segment_ids: string[] }[]) {
    return this.request<Outline>(
      "POST", `/sessions/${sessionId}/outline/regroup`, { sections },
    );
  }

  regenerateTitles(sessionId: string, scope: string) {
    return this.request<Outline>(
      "POST", `/sessions/${sessionId}/outline/titles`, { scope },
    );
  }

  setTitle(sessionId: string, title: string) {
    return this.request<Outline>(
      "POST", `/sessions/${sessionId}/outline/title`, { title },
    );
  }

  exportReport(sessionId: string, format: string, selfContained = true) {
    return this.request<ExportPayload>(
      "GET",
      `/sessions/${sessionId}/export?format=${format}&self_contained=${selfContained}`,
    );
  }

  eventLog(sessionId: string, after = 0) {
    return this.request<{ events: SessionEvent[] }>(
      "GET", `/sessions/${sessionId}/events/log?after=${after}`,
    );
  }

  segmentChartUrl(sessionId: string, segmentId: string): string {
    return `${this.base}/sessions/${sessionId}/segments/${segmentId}/chart`;
  }

  reportAssetUrl(reportId: string, path: string): string {
    return `${this.base}/reports/${reportId}/assets/${path}`;
  }

  eventStreamUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/events`;
  }
}
