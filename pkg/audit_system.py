# audit_system.py

import json
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional


class AuditLogger:
    """
    JSON audit trail, one file per CLI run under audit_dir.
    Records the command, its parameters, one event per stage and the
    final status.
    """

    def __init__(self, audit_dir: str = "audit_logs"):
        self.audit_dir = Path(audit_dir)
        self.audit_dir.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------------
    # PUBLIC API
    # ------------------------------------------------------------------

    def start_session(self, command: str, params: Optional[Dict[str, Any]] = None) -> str:
        session_id = str(uuid.uuid4())
        self._write(session_id, {
            "session_id": session_id,
            "command": command,
            "params": {k: _plain(v) for k, v in (params or {}).items()},
            "started_at": self._now(),
            "events": []
        })
        return session_id

    def log_event(self, session_id: str, stage: str, data: Optional[Dict[str, Any]] = None):
        audit = self._read(session_id)
        audit["events"].append({
            "timestamp": self._now(),
            "stage": stage,
            "data": {k: _plain(v) for k, v in (data or {}).items()}
        })
        self._write(session_id, audit)

    def log_trace(self, session_id: str, trace: List[dict]):
        """Attach a construction trace (case taken per recursion level)."""
        audit = self._read(session_id)
        audit["trace"] = [dict(entry) for entry in trace]
        self._write(session_id, audit)

    def close_session(self, session_id: str, status: str = "completed"):
        audit = self._read(session_id)
        audit["completed_at"] = self._now()
        audit["status"] = status
        self._write(session_id, audit)

    def get_audit_log(self, session_id: str) -> Dict[str, Any]:
        return self._read(session_id)

    # ------------------------------------------------------------------
    # INTERNAL HELPERS
    # ------------------------------------------------------------------

    def _audit_file(self, session_id: str) -> Path:
        return self.audit_dir / f"{session_id}.json"

    def _write(self, session_id: str, data: Dict[str, Any]):
        self._audit_file(session_id).write_text(json.dumps(data, indent=2))

    def _read(self, session_id: str) -> Dict[str, Any]:
        file = self._audit_file(session_id)
        if not file.exists():
            raise FileNotFoundError(f"Audit session not found: {file}")
        return json.loads(file.read_text())

    def _now(self) -> str:
        return datetime.now(timezone.utc).isoformat()


def _plain(value: Any) -> Any:
    # Fractions and paths are stored as strings
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return str(value)
