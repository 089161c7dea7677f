// Typed client over the documented /api/v1 endpoints. The client carries no
// authority: it forwards the bearer token and surfaces the server's decision,
// including denial reason codes, verbatim.

import type {
  AuditRecordPayload,
  CellPayload,
  CellWrite,
  CellWriteResult,
  ChainVerdictPayload,
  ConsolidationReportPayload,
  CostCentreInfo,
  DepartmentInfo,
  KpiReportPayload,
  MatrixPayload,
  RoundInfo,
  SectionInfo,
  TemplateSummary,
  TemplateVersionPayload,
  VocabularyPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public payload: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

export const SESSION_EXPIRED = "UNAUTHENTICATED";

export class ApiClient {
  constructor(
    private baseUrl: string,
    private token: string,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}/api/v1${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const text = await response.text();
    if (!response.ok) {
      let code = `HTTP_${response.status}`;
      let message = text;
      let payload: Record<string, unknown> = {};
      try {
        payload = JSON.parse(text);
        code = String(payload.error ?? code);
        message = String(payload.message ?? message);
      } catch {
        // non-JSON error body; keep the raw text
      }
      throw new ApiError(response.status, code, message, payload);
    }
    const contentType = response.headers.get("content-type") ?? "";
    return (contentType.includes("application/json") ? JSON.parse(text) : text) as T;
  }

  // registry / session
  mintToken(principalId: string, ttlSeconds = 86_400) {
    return this.request<{ token: string; principal_id: string; expires_at: string | null }>(
      "POST",
      "/auth/token",
      { principal_id: principalId, ttl_seconds: ttlSeconds },
    );
  }

  async rounds(): Promise<RoundInfo[]> {
    return (await this.request<{ rounds: RoundInfo[] }>("GET", "/rounds")).rounds;
  }

  async costCentres(): Promise<CostCentreInfo[]> {
    return (await this.request<{ cost_centres: CostCentreInfo[] }>("GET", "/registry/cost-centres")).cost_centres;
  }

  async sections(): Promise<SectionInfo[]> {
    return (await this.request<{ sections: SectionInfo[] }>("GET", "/registry/sections")).sections;
  }

  async departments(): Promise<DepartmentInfo[]> {
    return (await this.request<{ departments: DepartmentInfo[] }>("GET", "/registry/departments")).departments;
  }

  // readiness
  matrix(roundId: string, dataVersion: number): Promise<MatrixPayload> {
    return this.request("GET", `/status/matrix?round_id=${roundId}&data_version=${dataVersion}`);
  }

  setStatus(body: {
    round_id: string;
    data_version: number;
    cost_centre_id: string;
    section_id: string;
    status: string;
  }) {
    return this.request<{ status: unknown }>("PUT", "/status", body);
  }

  // budget data
  vocabulary(roundId: string): Promise<VocabularyPayload> {
    return this.request("GET", `/budget/vocabulary?round_id=${roundId}`);
  }

  async cells(
    roundId: string,
    dataVersion: number,
    filters: { costCentres?: string[]; sections?: string[] } = {},
  ): Promise<CellPayload[]> {
    const params = new URLSearchParams({ round_id: roundId, data_version: String(dataVersion) });
    if (filters.costCentres?.length) params.set("cost_centres", filters.costCentres.join(","));
    if (filters.sections?.length) params.set("sections", filters.sections.join(","));
    return (await this.request<{ cells: CellPayload[] }>("GET", `/budget/cells?${params}`)).cells;
  }

  async putCells(roundId: string, dataVersion: number, cells: CellWrite[]): Promise<CellWriteResult[]> {
    const body = { round_id: roundId, data_version: dataVersion, cells };
    return (await this.request<{ results: CellWriteResult[] }>("PUT", "/budget/cells", body)).results;
  }

  // change control
  async templates(): Promise<TemplateSummary[]> {
    return (await this.request<{ templates: TemplateSummary[] }>("GET", "/templates")).templates;
  }

  async auditDecision(versionId: string, verdict: "Pass" | "Refer", note: string): Promise<TemplateVersionPayload> {
    return (
      await this.request<{ version: TemplateVersionPayload }>("POST", `/versions/${versionId}/audit`, {
        verdict,
        note,
      })
    ).version;
  }

  async releaseVersion(versionId: string): Promise<TemplateVersionPayload> {
    return (await this.request<{ version: TemplateVersionPayload }>("POST", `/versions/${versionId}/release`)).version;
  }

  // consolidation
  async consolidate(body: {
    round_id: string;
    data_version: number;
    scope?: string[] | null;
    allow_provisional?: boolean;
  }): Promise<ConsolidationReportPayload> {
    return (
      await this.request<{ report: ConsolidationReportPayload }>("POST", "/consolidate", {
        scope: null,
        allow_provisional: false,
        ...body,
      })
    ).report;
  }

  reportExportCsv(reportId: string): Promise<string> {
    return this.request("GET", `/reports/${reportId}/export.csv`);
  }

  async kpi(body: {
    round_id: string;
    data_version: number;
    comparator: string;
    fiscal_label?: string | null;
    scope?: string[] | null;
  }): Promise<KpiReportPayload> {
    return (await this.request<{ report: KpiReportPayload }>("POST", "/kpi", { scope: null, ...body })).report;
  }

  // audit trail
  async auditRecords(
    filters: { actor?: string; action?: string; target_prefix?: string } = {},
  ): Promise<AuditRecordPayload[]> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filters)) {
      if (value) params.set(key, value);
    }
    const query = params.size ? `?${params}` : "";
    return (await this.request<{ records: AuditRecordPayload[] }>("GET", `/audit${query}`)).records;
  }

  auditVerify(): Promise<ChainVerdictPayload> {
    return this.request("GET", "/audit/verify");
  }

  demoSeed(): Promise<{ summary: Record<string, unknown> }> {
    return this.request("POST", "/demo/seed");
  }
}
