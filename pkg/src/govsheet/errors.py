"""Exception types raised by engine operations.

Every error carries a stable machine-readable ``code`` (used in audit
records and API error payloads) and the HTTP status the service layer
maps it to.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine-level failures."""

    code = "ENGINE_ERROR"
    http_status = 409

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    @property
    def audit_detail(self) -> str:
        return f"{self.code}: {self.message}" if self.message else self.code


class PermissionDenied(EngineError):
    """Authorization failure; ``code`` is the denial reason code."""

    http_status = 403

    def __init__(self, reason_code: str, message: str = ""):
        super().__init__(message)
        self.code = reason_code


class SegregationViolation(PermissionDenied):
    """The same person attempted two segregated roles on one version."""

    def __init__(self, message: str = ""):
        super().__init__("SEGREGATION_VIOLATION", message)


class AuthenticationFailed(EngineError):
    code = "UNAUTHENTICATED"
    http_status = 401


class UnknownPrincipal(EngineError):
    code = "UNKNOWN_PRINCIPAL"
    http_status = 404


class InvalidScope(EngineError):
    code = "INVALID_SCOPE"
    http_status = 422


class UnknownGrant(EngineError):
    code = "UNKNOWN_GRANT"
    http_status = 404


class DuplicateCode(EngineError):
    code = "DUPLICATE_CODE"


class DuplicateName(EngineError):
    code = "DUPLICATE_NAME"


class UnknownDepartment(EngineError):
    code = "UNKNOWN_DEPARTMENT"
    http_status = 404


class RoundAlreadyOpen(EngineError):
    code = "ROUND_ALREADY_OPEN"


class InvalidState(EngineError):
    code = "INVALID_STATE"


class UnknownRound(EngineError):
    code = "UNKNOWN_ROUND"
    http_status = 404


class UnknownTemplate(EngineError):
    code = "UNKNOWN_TEMPLATE"
    http_status = 404


class UnknownVersion(EngineError):
    code = "UNKNOWN_VERSION"
    http_status = 404


class InFlightExists(EngineError):
    code = "IN_FLIGHT_EXISTS"


class NoLiveVersion(EngineError):
    code = "NO_LIVE_VERSION"


class NoLiveTemplate(EngineError):
    code = "NO_LIVE_TEMPLATE"


class VersionFrozen(EngineError):
    code = "VERSION_FROZEN"


class RoundNotOpen(EngineError):
    code = "ROUND_NOT_OPEN"


class UnknownKeyComponent(EngineError):
    code = "UNKNOWN_KEY_COMPONENT"
    http_status = 422


class MalformedRow(EngineError):
    """A rejected actuals CSV row; ``line_no`` is 1-based including header."""

    code = "MALFORMED_ROW"
    http_status = 422

    def __init__(self, line_no: int, message: str = ""):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class UnknownCostCentre(MalformedRow):
    code = "UNKNOWN_COST_CENTRE"


class GateBlocked(EngineError):
    """Consolidation refused: readiness gate not satisfied.

    ``blocking`` holds (cost_centre_id, section_id, status) entries.
    """

    code = "GATE_BLOCKED"

    def __init__(self, blocking, message: str = ""):
        super().__init__(message or f"{len(blocking)} section(s) not complete")
        self.blocking = list(blocking)


class UnknownComparator(EngineError):
    code = "UNKNOWN_COMPARATOR"
    http_status = 422


class UnknownReport(EngineError):
    code = "UNKNOWN_REPORT"
    http_status = 404


class StoreCorrupt(EngineError):
    code = "STORE_CORRUPT"
    http_status = 500

    def __init__(self, first_bad_seq: int, message: str = ""):
        super().__init__(message or f"audit chain broken at seq {first_bad_seq}")
        self.first_bad_seq = first_bad_seq


class BindFailure(EngineError):
    code = "BIND_FAILURE"
    http_status = 500
