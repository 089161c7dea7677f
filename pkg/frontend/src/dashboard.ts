// Consolidation / KPI view models. Provisional reports are watermarked, and
// the export stamp is re-verified client-side so the dashboard can prove the
// figures it shows match the stamped CSV.

import type { ConsolidationReportPayload, KpiReportPayload } from "./types.js";

export interface ConsolidationRow {
  sectionId: string;
  lineItem: string;
  period: number;
  amountCents: number;
}

export interface ConsolidationView {
  reportId: string;
  provisional: boolean;
  watermark: string | null;
  stamp: string;
  grandTotalCents: number;
  rows: ConsolidationRow[];
}

export function buildConsolidationView(report: ConsolidationReportPayload): ConsolidationView {
  const rows = report.totals.map((entry) => ({
    sectionId: entry.section_id,
    lineItem: entry.line_item,
    period: entry.period,
    amountCents: entry.amount_cents,
  }));
  return {
    reportId: report.id,
    provisional: report.provisional,
    watermark: report.provisional ? "PROVISIONAL" : null,
    stamp: report.verification_stamp,
    grandTotalCents: rows.reduce((sum, row) => sum + row.amountCents, 0),
    rows,
  };
}

export interface StampCheck {
  stampInFile: string | null;
  recomputed: string;
  match: boolean;
  totalCents: number;
}

async function sha256Hex(text: string): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", new TextEncoder().encode(text));
  return Array.from(new Uint8Array(digest))
    .map((byte) => byte.toString(16).padStart(2, "0"))
    .join("");
}

/** Recompute the export's verification stamp from its payload rows. */
export async function verifyExportStamp(csvText: string): Promise<StampCheck> {
  const lines = csvText.replace(/\n$/, "").split("\n");
  const trailer = lines[lines.length - 1] ?? "";
  const stampInFile = trailer.startsWith("#stamp,") ? trailer.slice("#stamp,".length) : null;
  const payloadRows = lines.slice(1, -1);
  const recomputed = await sha256Hex(payloadRows.join("\n"));
  const totalCents = payloadRows.reduce((sum, row) => sum + Number(row.split(",")[4] ?? 0), 0);
  return { stampInFile, recomputed, match: stampInFile === recomputed, totalCents };
}

export interface KpiBar {
  label: string;
  currentCents: number;
  comparatorCents: number;
  varianceCents: number;
  variancePct: number | null;
  barWidthPct: number;
  favourable: boolean;
}

export function buildKpiBars(report: KpiReportPayload): KpiBar[] {
  const maxAbs = Math.max(1, ...report.lines.map((line) => Math.abs(line.variance_cents)));
  return report.lines.map((line) => ({
    label: `${line.section_name} / ${line.line_item}`,
    currentCents: line.current_cents,
    comparatorCents: line.comparator_cents,
    varianceCents: line.variance_cents,
    variancePct: line.variance_pct,
    barWidthPct: Math.round((Math.abs(line.variance_cents) / maxAbs) * 100),
    favourable: line.variance_cents >= 0,
  }));
}
