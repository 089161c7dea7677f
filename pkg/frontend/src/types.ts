// Payload shapes of the /api/v1 endpoints the UI consumes.

export type SectionStatusName = "NotStarted" | "InProgress" | "Completed" | "NotApplicable";
export type Glyph = "NS" | "IP" | "C" | "X";
export type VersionStateName = "Wip" | "UnderAudit" | "Approved" | "Live" | "Archived";

export interface MatrixColumn {
  section_id: string;
  name: string;
}

export interface MatrixRow {
  cost_centre_id: string;
  code: string;
  name: string;
  label: string;
  department_id: string;
  dormant: boolean;
  statuses: Record<string, SectionStatusName>;
}

export interface MatrixPayload {
  round_id: string;
  data_version: number;
  columns: MatrixColumn[];
  rows: MatrixRow[];
}

export interface RoundInfo {
  id: string;
  label: string;
  state: string;
  cycle_number: number;
}

export interface CostCentreInfo {
  id: string;
  code: string;
  name: string;
  department_id: string;
  dormant: boolean;
}

export interface SectionInfo {
  id: string;
  name: string;
}

export interface DepartmentInfo {
  id: string;
  name: string;
  parent_manager: string | null;
}

export interface VocabularyPayload {
  round_id: string;
  template_version_id: string;
  slots: [string, string][];
}

export interface CellKey {
  round_id: string;
  data_version: number;
  cost_centre_id: string;
  section_id: string;
  line_item: string;
  period: number;
}

export interface CellPayload {
  key: CellKey;
  amount_cents: number;
  entered_by: string;
  entered_at: string;
}

export interface CellWrite {
  cost_centre_id: string;
  section_id: string;
  line_item: string;
  period: number;
  amount_cents: number;
}

export interface CellWriteResult {
  key: CellKey;
  ok: boolean;
  amount_cents?: number;
  error?: string;
  message?: string;
}

export interface VersionTransition {
  state: VersionStateName;
  at: string;
  by: string;
}

export interface TemplateVersionPayload {
  id: string;
  template_id: string;
  version_number: number;
  state: VersionStateName;
  document: unknown;
  checksum: string;
  created_by: string;
  edited_by: string[];
  audited_by: string | null;
  released_by: string | null;
  audit_note: string | null;
  transitions: VersionTransition[];
  lint_violations: number;
}

export interface TemplateSummary {
  template: { id: string; name: string };
  live_version_id: string | null;
  versions: TemplateVersionPayload[];
}

export interface TotalsEntry {
  section_id: string;
  line_item: string;
  period: number;
  amount_cents: number;
}

export interface ConsolidationReportPayload {
  id: string;
  round_id: string;
  data_version: number;
  scope: string[];
  scope_hash: string;
  provisional: boolean;
  totals: TotalsEntry[];
  by_cost_centre: Record<string, TotalsEntry[]>;
  generated_at: string;
  verification_stamp: string;
}

export interface KpiLinePayload {
  section_id: string;
  section_name: string;
  line_item: string;
  current_cents: number;
  comparator_cents: number;
  variance_cents: number;
  variance_pct: number | null;
}

export interface KpiReportPayload {
  round_id: string;
  data_version: number;
  scope: string[];
  comparator: string;
  fiscal_label: string | null;
  lines: KpiLinePayload[];
}

export interface AuditRecordPayload {
  seq: number;
  timestamp: string;
  actor: string;
  action: string;
  target: string;
  outcome: "Ok" | "Denied" | "Error";
  detail: string;
  prev_hash: string;
  this_hash: string;
}

export interface ChainVerdictPayload {
  intact: boolean;
  first_bad_seq: number | null;
}
