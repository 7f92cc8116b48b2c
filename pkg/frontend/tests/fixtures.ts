// Shared miniature session shaped like the bundled walkthrough.

import type {
  GeneratedSegment,
  Graph,
  GraphSegment,
  SessionEvent,
  SessionView,
} from "../src/types.js";

export function segment(
  id: string,
  status: GraphSegment["status"],
  objective = `objective ${id}`,
  source: GraphSegment["source"] = "from_reference",
): GraphSegment {
  return {
    id,
    objective,
    transformation: null,
    insight: null,
    source,
    status,
    reference_blocks: source === "from_reference" ? [Number(id)] : [],
  };
}

export function walkthroughGraph(): Graph {
  return {
    root: "root",
    next_id: 7,
    segments: [
      segment("1", "generated", "How has total crime changed?"),
      segment("2", "generated", "Which types drove the increase?"),
      segment("3", "generated", "Which types decreased?"),
      segment("4", "generated", "How did decreasing types change recently?"),
      segment("5", "generated", "How has arson changed?"),
      segment("6", "failed", "Generalize the trend since 2000"),
    ],
    edges: [
      { from: "root", to: "1", relation: "elaboration" },
      { from: "1", to: "2", relation: "cause_effect" },
      { from: "1", to: "3", relation: "contrast" },
      { from: "3", to: "4", relation: "elaboration" },
      { from: "root", to: "5", relation: "elaboration" },
      { from: "5", to: "6", relation: "generalization" },
    ],
    blocked: [],
    failure_reasons: { "6": "data covers 2020-2023 only" },
  };
}

export function generated(id: string, narrative = `narrative ${id}.`): GeneratedSegment {
  return {
    segment_id: id,
    adapted_objective: `adapted objective ${id}`,
    record: {
      script: `# script ${id}`,
      transformed_table: { columns: ["k", "v"], rows: [["a", "1"]] },
      chart: `objects/${id}.png`,
      attempts: 1,
      attempt_log: [{ script: `# script ${id}`, error: null }],
    },
    narrative,
    non_analytical_spans: [],
    status: "generated",
    failure_reason: null,
  };
}

export function walkthroughView(): SessionView {
  const generatedMap: Record<string, GeneratedSegment> = {};
  for (const id of ["1", "2", "3", "4", "5"]) {
    generatedMap[id] = generated(id);
  }
  generatedMap["6"] = {
    segment_id: "6",
    adapted_objective: "",
    record: null,
    narrative: "",
    non_analytical_spans: [],
    status: "failed",
    failure_reason: "data covers 2020-2023 only",
  };
  return {
    id: "sess-1",
    dataset_id: "ds-1",
    report_id: "rep-1",
    graph: walkthroughGraph(),
    generated: generatedMap,
    outline: {
      title: "Crime in Los Angeles",
      sections: [
        { heading: "Overall", segment_ids: ["1", "2"], callouts: [] },
        { heading: "What fell", segment_ids: ["3", "4"], callouts: [] },
        { heading: "Arson", segment_ids: ["5"], callouts: [] },
      ],
      orphans: [],
      preamble_callouts: ["Background context."],
    },
    event_seq: 40,
  };
}

export function generationEvents(segmentId: string, startSeq: number): SessionEvent[] {
  return [
    { seq: startSeq, kind: "generation.objective",
      payload: { segment: segmentId, objective: `adapted objective ${segmentId}` } },
    { seq: startSeq + 1, kind: "generation.code",
      payload: { segment: segmentId, script: `# script ${segmentId}`, attempts: 1 } },
    { seq: startSeq + 2, kind: "generation.artifacts",
      payload: { segment: segmentId, table: { columns: ["k", "v"], rows: [["a", "1"]] } } },
    { seq: startSeq + 3, kind: "generation.narrative",
      payload: { segment: segmentId, narrative: `narrative ${segmentId}.`, spans: [] } },
    { seq: startSeq + 4, kind: "segment.updated",
      payload: { segment: segmentId, status: "generated", failure_reason: null } },
  ];
}
