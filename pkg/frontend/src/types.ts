// Mirrors of the service wire schemas (docs/schemas/, v1).
// The UI holds no domain logic of its own: everything here is a projection
// of what the server sends.

export type Relation =
  | "similarity"
  | "contrast"
  | "cause_effect"
  | "elaboration"
  | "generalization"
  | "temporal";

// The relation picker renders from this list so labels cannot drift from
// the shared enum.
export const RELATIONS: Relation[] = [
  "similarity",
  "contrast",
  "cause_effect",
  "elaboration",
  "generalization",
  "temporal",
];

export type SegmentStatus = "pending" | "generated" | "applied" | "failed";

export interface SmallTable {
  columns: string[];
  rows: string[][];
}

export interface AttemptEntry {
  script: string;
  error: string | null;
}

export interface TransformationRecord {
  script: string;
  transformed_table: SmallTable | null;
  chart: string | null;
  attempts: number;
  attempt_log: AttemptEntry[];
}

export interface GraphSegment {
  id: string;
  objective: string;
  transformation: TransformationRecord | null;
  insight: string | null;
  source: "from_reference" | "inserted";
  status: SegmentStatus;
  reference_blocks: number[];
}

export interface GraphEdge {
  from: string;
  to: string;
  relation: Relation;
}

export interface Graph {
  root: string;
  segments: GraphSegment[];
  edges: GraphEdge[];
  next_id: number;
  blocked: string[];
  failure_reasons: Record<string, string>;
}

export interface GeneratedSegment {
  segment_id: string;
  adapted_objective: string;
  record: TransformationRecord | null;
  narrative: string;
  non_analytical_spans: [number, number][];
  status: SegmentStatus;
  failure_reason: string | null;
}

export interface FieldProfile {
  name: string;
  inferred_type: string;
  unique_count: number;
  null_count: number;
  range: [string, string] | null;
  samples: string[];
  description: string;
}

export interface DataSummary {
  dataset_name: string;
  dataset_description: string;
  fields: FieldProfile[];
  row_count: number;
}

export interface RankedReport {
  report_id: string;
  title: string;
  topic_score: number;
  field_score: number;
  total: number;
  predicted_fields: [string, string][];
}

export interface OutlineSection {
  heading: string;
  segment_ids: string[];
  callouts: string[];
}

export interface Outline {
  title: string;
  sections: OutlineSection[];
  orphans: string[];
  preamble_callouts: string[];
}

export interface SessionView {
  id: string;
  dataset_id: string;
  report_id: string;
  graph: Graph;
  generated: Record<string, GeneratedSegment>;
  outline: Outline | null;
  event_seq: number;
}

export interface SessionEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface ReportBlock {
  id: number;
  kind: "heading" | "paragraph" | "chart";
  text: string;
  image: string | null;
  level: number | null;
  callout: boolean;
}

export interface ReportDetail {
  report_id: string;
  doc: { title: string; blocks: ReportBlock[] };
  segments: {
    block_ids: number[];
    objective: string;
    depends_on: number | null;
    relation: Relation;
  }[];
  non_analytical: number[];
  index: Record<string, unknown>;
}

export interface ExportPayload {
  format: string;
  filename: string;
  document: string;
  assets: Record<string, string>;
}
