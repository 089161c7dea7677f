// Status board view model: a 1:1 rendering of the server matrix. No status
// is ever derived client-side; the board shows exactly what the server said,
// and goes stale (keeping the last payload visible) when polling fails.

import type { Glyph, MatrixPayload, SectionStatusName } from "./types.js";

export const STATUS_GLYPH: Record<SectionStatusName, Glyph> = {
  NotStarted: "NS",
  InProgress: "IP",
  Completed: "C",
  NotApplicable: "X",
};

export const GLYPH_CLASS: Record<Glyph, string> = {
  NS: "glyph-ns",
  IP: "glyph-ip",
  C: "glyph-c",
  X: "glyph-x",
};

export interface BoardCell {
  sectionId: string;
  glyph: Glyph;
  cssClass: string;
}

export interface BoardRow {
  costCentreId: string;
  label: string;
  dormant: boolean;
  cells: BoardCell[];
}

export interface StatusBoardView {
  roundId: string;
  dataVersion: number;
  columns: string[];
  rows: BoardRow[];
  lastRefreshed: string;
  stale: boolean;
}

export function buildStatusBoard(payload: MatrixPayload, refreshedAt: Date): StatusBoardView {
  return {
    roundId: payload.round_id,
    dataVersion: payload.data_version,
    columns: payload.columns.map((column) => column.name),
    rows: payload.rows.map((row) => ({
      costCentreId: row.cost_centre_id,
      label: row.label,
      dormant: row.dormant,
      cells: payload.columns.map((column) => {
        const glyph = STATUS_GLYPH[row.statuses[column.section_id] ?? "NotStarted"];
        return { sectionId: column.section_id, glyph, cssClass: GLYPH_CLASS[glyph] };
      }),
    })),
    lastRefreshed: refreshedAt.toISOString(),
    stale: false,
  };
}

export function markBoardStale(board: StatusBoardView): StatusBoardView {
  return { ...board, stale: true };
}
