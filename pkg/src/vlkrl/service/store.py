"""Append-only session persistence under a data directory.

Each session gets one JSONL record file; an index file carries current
status and rating. No external database.
"""

from __future__ import annotations

import json
from pathlib import Path


class SessionStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.sessions_dir = self.root / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"

    def _session_file(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def append(self, session_id: str, record: dict) -> None:
        with open(self._session_file(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    def read(self, session_id: str) -> list[dict]:
        path = self._session_file(session_id)
        if not path.exists():
            return []
        records = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def read_index(self) -> dict:
        if not self.index_path.exists():
            return {}
        return json.loads(self.index_path.read_text(encoding="utf-8"))

    def update_index(self, session_id: str, meta: dict) -> None:
        index = self.read_index()
        index[session_id] = meta
        self.index_path.write_text(
            json.dumps(index, sort_keys=True, indent=1), encoding="utf-8"
        )

    def report_path(self, run: str) -> Path:
        return self.root / "reports" / run / "report.json"
