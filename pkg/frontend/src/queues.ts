// Approval queues: versions awaiting an auditor's verdict and approved
// versions awaiting an owner's release. Queue membership mirrors the server
// state field; submitted_at comes from the recorded transition trail.

import type { TemplateSummary, TemplateVersionPayload } from "./types.js";

export interface ApprovalQueueItem {
  templateId: string;
  templateLabel: string;
  versionId: string;
  versionNumber: number;
  state: string;
  editors: string[];
  submittedAt: string | null;
  lintViolations: number;
  auditNote: string | null;
}

export interface ApprovalQueues {
  audit: ApprovalQueueItem[];
  release: ApprovalQueueItem[];
}

function lastTransitionTo(version: TemplateVersionPayload, state: string): string | null {
  for (let i = version.transitions.length - 1; i >= 0; i--) {
    if (version.transitions[i].state === state) {
      return version.transitions[i].at;
    }
  }
  return null;
}

function toItem(summary: TemplateSummary, version: TemplateVersionPayload): ApprovalQueueItem {
  return {
    templateId: summary.template.id,
    templateLabel: summary.template.name,
    versionId: version.id,
    versionNumber: version.version_number,
    state: version.state,
    editors: version.edited_by,
    submittedAt: lastTransitionTo(version, "UnderAudit"),
    lintViolations: version.lint_violations,
    auditNote: version.audit_note,
  };
}

export function buildApprovalQueues(templates: TemplateSummary[]): ApprovalQueues {
  const audit: ApprovalQueueItem[] = [];
  const release: ApprovalQueueItem[] = [];
  for (const summary of templates) {
    for (const version of summary.versions) {
      if (version.state === "UnderAudit") {
        audit.push(toItem(summary, version));
      } else if (version.state === "Approved") {
        release.push(toItem(summary, version));
      }
    }
  }
  return { audit, release };
}
