// Wiring: fetch snapshots, subscribe to the event stream, delegate clicks.
// All state lives on the server; this file only decides when to re-fetch
// and which view to re-render.

import { ApiClient } from "./api.js";
import {
  applyEvent,
  applySnapshot,
  initialState,
  type SessionState,
} from "./state.js";
import type { DataSummary, ReportDetail, SessionEvent } from "./types.js";
import {
  contentView,
  dataView,
  dependencyView,
  errorToast,
  generationView,
  insertDialog,
  organizePanel,
  reportPicker,
} from "./views.js";

const api = new ApiClient("");

interface UiState {
  session: SessionState;
  datasetId: string | null;
  summary: DataSummary | null;
  usage: Record<string, number>;
  report: ReportDetail | null;
  selectedSegment: string | null;
  highlight: boolean;
  busy: boolean;
}

const ui: UiState = {
  session: initialState(),
  datasetId: null,
  summary: null,
  usage: {},
  report: null,
  selectedSegment: null,
  highlight: true,
  busy: false,
};

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing container #${id}`);
  return node;
}

function specIndexFor(segmentId: string | null): number | null {
  const session = ui.session.session;
  if (!session || !segmentId) return null;
  const segment = session.graph.segments.find((s) => s.id === segmentId);
  if (!segment || segment.reference_blocks.length === 0) return null;
  const index = Number(segmentId) - 1;
  return Number.isInteger(index) && index >= 0 ? index : null;
}

function render(): void {
  const session = ui.session.session;
  if (ui.summary) {
    el("data-view").innerHTML = dataView(ui.summary, ui.usage);
  }
  if (session) {
    el("dependency-view").innerHTML = dependencyView(session.graph, ui.selectedSegment);
    const segment =
      session.graph.segments.find((s) => s.id === ui.selectedSegment) ?? null;
    const generated = ui.selectedSegment
      ? session.generated[ui.selectedSegment] ?? null
      : null;
    el("generation-view").innerHTML = generationView({
      segmentId: ui.selectedSegment,
      segment,
      generated,
      phases: ui.selectedSegment ? ui.session.phases[ui.selectedSegment] : undefined,
      chartUrl:
        generated?.record?.chart && ui.selectedSegment
          ? api.segmentChartUrl(session.id, ui.selectedSegment)
          : null,
      highlight: ui.highlight,
      busy: ui.busy,
    });
    el("insert-dialog").innerHTML = insertDialog(
      ui.summary?.fields.map((f) => f.name) ?? [],
      session.graph.segments.map((s) => s.id),
    );
    el("organize-panel").innerHTML = organizePanel(session.outline, ui.highlight);
  }
  if (ui.report) {
    el("content-view").innerHTML = contentView(
      ui.report,
      specIndexFor(ui.selectedSegment),
      (path) => api.reportAssetUrl(ui.report!.report_id, path),
    );
  }
}

async function refreshSession(): Promise<void> {
  const session = ui.session.session;
  if (!session) return;
  const view = await api.getSession(session.id);
  ui.session = applySnapshot(ui.session, view);
  ui.usage = (await api.fieldUsage(session.id)).counts;
  render();
}

function subscribe(sessionId: string): void {
  const source = new EventSource(api.eventStreamUrl(sessionId));
  source.onmessage = (message) => {
    const event = JSON.parse(message.data) as SessionEvent;
    ui.session = applyEvent(ui.session, event);
    if (ui.session.needsRefresh) {
      void refreshSession();
    } else {
      render();
    }
  };
}

async function startSession(datasetId: string, reportId: string): Promise<void> {
  const view = await api.createSession(datasetId, reportId);
  ui.session = applySnapshot(initialState(), view);
  ui.report = await api.getReport(reportId);
  ui.usage = (await api.fieldUsage(view.id)).counts;
  subscribe(view.id);
  window.location.hash = `#session=${view.id}`;
  render();
}

async function resumeSession(sessionId: string): Promise<void> {
  const view = await api.getSession(sessionId);
  ui.session = applySnapshot(initialState(), view);
  ui.datasetId = view.dataset_id;
  ui.summary = (await api.getDataset(view.dataset_id)).summary;
  ui.report = await api.getReport(view.report_id);
  ui.usage = (await api.fieldUsage(sessionId)).counts;
  subscribe(sessionId);
  render();
}

function download(filename: string, text: string): void {
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(new Blob([text]));
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

async function handleAction(target: HTMLElement): Promise<void> {
  const session = ui.session.session;
  const action = target.dataset.action;
  const segment = target.dataset.segment ?? null;
  if (!action) return;

  if (action === "upload-dataset") {
    const input = el("dataset-file") as HTMLInputElement;
    const name = (el("dataset-name") as HTMLInputElement).value || "dataset";
    const file = input.files?.[0];
    if (!file) return;
    const uploaded = await api.uploadDataset(name, file);
    ui.datasetId = uploaded.dataset_id;
    ui.summary = uploaded.summary;
    const ranked = await api.rankedReports(uploaded.dataset_id);
    el("report-picker").innerHTML = reportPicker(ranked.reports);
    render();
    return;
  }
  if (action === "select" && target.dataset.report && ui.datasetId) {
    await startSession(ui.datasetId, target.dataset.report);
    return;
  }
  if (action === "preview" && target.dataset.report) {
    const report = await api.getReport(target.dataset.report);
    el("content-view").innerHTML = contentView(report, 0, (path) =>
      api.reportAssetUrl(report.report_id, path),
    );
    return;
  }
  if (!session) return;

  if (action === "select-segment" && segment) {
    ui.selectedSegment = segment;
    render();
    return;
  }
  if ((action === "generate" || action === "regenerate") && segment) {
    ui.busy = true;
    render();
    try {
      if (action === "generate") await api.generate(session.id, segment);
      else await api.regenerate(session.id, segment);
    } finally {
      ui.busy = false;
      await refreshSession();
    }
    return;
  }
  if (action === "apply" && segment) {
    await api.apply(session.id, segment);
    await refreshSession();
    return;
  }
  if (action === "remove" && segment) {
    await api.removeSegment(session.id, segment);
    if (ui.selectedSegment === segment) ui.selectedSegment = null;
    await refreshSession();
    return;
  }
  if (action === "save-edits" && segment) {
    const panel = el("generation-view");
    const read = (field: string) =>
      (panel.querySelector(`[data-field="${field}"]`) as HTMLTextAreaElement | null)?.value;
    await api.edit(session.id, segment, {
      objective: read("objective"),
      script: read("script"),
      narrative: read("narrative"),
    });
    await refreshSession();
    return;
  }
  if (action === "edit-regenerate" && segment) {
    const objective = (
      el("generation-view").querySelector('[data-field="objective"]') as HTMLTextAreaElement
    ).value;
    await api.edit(session.id, segment, { objective });
    await api.regenerate(session.id, segment);
    await refreshSession();
    return;
  }
  if (action === "insert") {
    const dialog = el("insert-dialog");
    const fields = Array.from(
      dialog.querySelectorAll<HTMLInputElement>('input[name="insert-field"]:checked'),
    ).map((input) => input.value);
    const relation = (dialog.querySelector('[name="insert-relation"]') as HTMLSelectElement).value;
    const anchor = (dialog.querySelector('[name="insert-anchor"]') as HTMLSelectElement).value;
    const inserted = await api.insertSegment(session.id, fields, relation, anchor);
    ui.selectedSegment = inserted.segment_id;
    await refreshSession();
    return;
  }
  if (action === "load-outline") {
    await api.getOutline(session.id);
    await refreshSession();
    return;
  }
  if (action === "save-title") {
    const title = (el("organize-panel").querySelector("#outline-title") as HTMLInputElement).value;
    await api.setTitle(session.id, title);
    await refreshSession();
    return;
  }
  if (action === "retitle-report") {
    await api.regenerateTitles(session.id, "report");
    await refreshSession();
    return;
  }
  if (action === "retitle-section" && target.dataset.section) {
    await api.regenerateTitles(session.id, target.dataset.section);
    await refreshSession();
    return;
  }
  if (action === "export-md" || action === "export-html") {
    const format = action === "export-md" ? "markdown" : "html";
    const payload = await api.exportReport(session.id, format, true);
    download(payload.filename, payload.document);
    return;
  }
}

function toast(message: string): void {
  const node = document.getElementById("toast");
  if (!node) return;
  node.textContent = message;
  node.classList.add("toast--visible");
  setTimeout(() => node.classList.remove("toast--visible"), 6000);
}

document.addEventListener("click", (event) => {
  const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
  if (target) {
    handleAction(target).catch((error) => toast(errorToast(error)));
  }
});

document.addEventListener("change", (event) => {
  const target = event.target as HTMLInputElement;
  if (target.id === "highlight-toggle") {
    ui.highlight = target.checked;
    render();
  }
});

const hash = new URLSearchParams(window.location.hash.slice(1));
const existing = hash.get("session");
if (existing) {
  void resumeSession(existing);
}
