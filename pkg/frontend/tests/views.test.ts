import { describe, expect, it } from "vitest";

import {
  applyEvent,
  applySnapshot,
  initialState,
} from "../src/state.js";
import { RELATIONS } from "../src/types.js";
import {
  dataView,
  dependencyView,
  generationView,
  insertDialog,
  organizePanel,
  renderNarrative,
} from "../src/views.js";
import {
  generated,
  generationEvents,
  segment,
  walkthroughGraph,
  walkthroughView,
} from "./fixtures.js";


describe("dependency view", () => {
  it("renders failed segments red with the failure styling", () => {
    const html = dependencyView(walkthroughGraph(), null);
    expect(html).toContain("node--failed");
    expect(html).toMatch(/node--failed[^>]*data-segment="6"/);
  });

  it("nests children under their parents with relations", () => {
    const html = dependencyView(walkthroughGraph(), "2");
    expect(html).toContain("cause_effect of #1");
    expect(html).toContain("node--selected");
  });
});

describe("generation view", () => {
  it("offers only remove/edit for a failed segment, never apply", () => {
    const html = generationView({
      segmentId: "6",
      segment: segment("6", "failed"),
      generated: walkthroughView().generated["6"],
      phases: undefined,
      chartUrl: null,
      highlight: true,
      busy: false,
    });
    expect(html).toContain("data covers 2020-2023 only");
    expect(html).toContain('data-action="remove"');
    expect(html).toContain('data-action="edit-regenerate"');
    expect(html).not.toContain('data-action="apply"');
  });

  it("reveals the four stages progressively from the event stream", () => {
    let state = initialState();
    const stagesSeen: number[] = [];
    for (const event of generationEvents("1", 1).slice(0, 4)) {
      state = applyEvent(state, event);
      const html = generationView({
        segmentId: "1",
        segment: segment("1", "pending"),
        generated: null,
        phases: state.phases["1"],
        chartUrl: null,
        highlight: true,
        busy: true,
      });
      stagesSeen.push((html.match(/class="stage /g) ?? []).length);
    }
    expect(stagesSeen).toEqual([1, 2, 3, 4]);
    const finalHtml = generationView({
      segmentId: "1",
      segment: segment("1", "pending"),
      generated: null,
      phases: state.phases["1"],
      chartUrl: null,
      highlight: true,
      busy: true,
    });
    const order = ["stage-objective", "stage-code", "stage-artifacts", "stage-narrative"];
    const positions = order.map((cls) => finalHtml.indexOf(cls));
    expect([...positions].sort((a, b) => a - b)).toEqual(positions);
  });

  it("enables apply only once the segment is generated", () => {
    const html = generationView({
      segmentId: "1",
      segment: segment("1", "generated"),
      generated: generated("1"),
      phases: undefined,
      chartUrl: "/chart.png",
      highlight: true,
      busy: false,
    });
    const applyButton = html.match(/<button data-action="apply"[^>]*>/)![0];
    expect(applyButton).not.toContain("disabled");
  });
});

describe("narrative highlighting", () => {
  it("wraps spans in marks when the toggle is on", () => {
    const text = "Grounded. Speculative aside.";
    const html = renderNarrative(text, [[10, 28]], true);
    expect(html).toBe(
      'Grounded. <mark class="highlight-nonanalytical">Speculative aside.</mark>',
    );
    expect(renderNarrative(text, [[10, 28]], false)).toBe(text);
  });

  it("escapes html inside and outside spans", () => {
    const html = renderNarrative("<b>bold</b> claim.", [[0, 11]], true);
    expect(html).toContain("&lt;b&gt;bold&lt;/b&gt;");
    expect(html).not.toContain("<b>");
  });
});

describe("insert dialog", () => {
  it("lists exactly the six shared relations", () => {
    const html = insertDialog(["Time Occ", "AREA"], ["1", "5"]);
    for (const relation of RELATIONS) {
      expect(html).toContain(`<option value="${relation}">`);
    }
    expect((html.match(/<option value="/g) ?? []).length).toBe(
      RELATIONS.length + 3, // six relations + root + two anchors
    );
    expect(html).toContain('value="Time Occ"');
  });
});

describe("data view", () => {
  it("shows the usage count column per field", () => {
    const view = walkthroughView();
    const summary = {
      dataset_name: "LA Crime",
      dataset_description: "demo",
      row_count: 57,
      fields: [
        { name: "Time Occ", inferred_type: "numeric", unique_count: 8,
          null_count: 0, range: null, samples: [], description: "time" },
      ],
    };
    const html = dataView(summary as never, { "Time Occ": 2 });
    expect(html).toContain('<td class="usage-count">2</td>');
    expect(view.graph.segments.length).toBe(6);
  });
});

describe("organization panel", () => {
  it("renders sections, title controls, highlight toggle and export", () => {
    const html = organizePanel(walkthroughView().outline, true);
    expect(html).toContain('data-action="retitle-report"');
    expect(html).toContain('data-action="export-md"');
    expect(html).toContain("highlight-toggle");
    expect((html.match(/data-action="retitle-section"/g) ?? []).length).toBe(3);
  });
});

describe("statelessness", () => {
  it("a fresh snapshot reproduces the view built from live events", () => {
    // live path: events stream in, then the refresh snapshot lands
    let live = initialState();
    for (const event of generationEvents("1", 1)) {
      live = applyEvent(live, event);
    }
    live = applySnapshot(live, walkthroughView());

    // reload path: only the snapshot
    const reloaded = applySnapshot(initialState(), walkthroughView());

    const render = (state: typeof live) =>
      dependencyView(state.session!.graph, null) +
      generationView({
        segmentId: "1",
        segment: state.session!.graph.segments[0],
        generated: state.session!.generated["1"],
        phases: undefined, // transient phases are not part of server state
        chartUrl: "/c.png",
        highlight: true,
        busy: false,
      }) +
      organizePanel(state.session!.outline, true);
    expect(render(live)).toBe(render(reloaded));
  });
});

describe("error toast", () => {
  it("includes status, detail, and the audit reference", async () => {
    const { ApiError } = await import("../src/api.js");
    const { errorToast } = await import("../src/views.js");
    const withAudit = new ApiError(502, { error: "no scripted reply", audit_ref: "sess-1:12" });
    expect(errorToast(withAudit)).toBe("HTTP 502: no scripted reply (audit sess-1:12)");
    const plain = new ApiError(409, "segment 2 depends on 1");
    expect(errorToast(plain)).toBe("HTTP 409: segment 2 depends on 1");
    expect(errorToast(new Error("boom"))).toContain("boom");
  });
});
