"""Governance engine for multi-user budgeting systems.

Separates budget data from template structure, enforces role-segregated
change control and department-scoped access, gates consolidation on
readiness, and records every action in a tamper-evident audit log.
"""

from .engine import Engine
from .store import Store

__version__ = "0.1.0"

__all__ = ["Engine", "Store", "__version__"]
