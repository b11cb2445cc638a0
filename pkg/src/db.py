"""SQLite ledger of experiment runs using aiosqlite."""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from typing import Any, Iterable

import aiosqlite

import config

logger = logging.getLogger(__name__)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp TEXT NOT NULL,
    command TEXT NOT NULL,                -- recon / sweep / mismatch
    params TEXT NOT NULL DEFAULT '{}',    -- JSON
    status TEXT NOT NULL DEFAULT 'running',  -- running / ok / failed
    summary TEXT NOT NULL DEFAULT ''
);

CREATE TABLE IF NOT EXISTS sweep_points (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER NOT NULL REFERENCES runs(id),
    parameter TEXT NOT NULL,              -- 'lambda' or 'mu'
    value REAL NOT NULL,
    error REAL NOT NULL
);

CREATE TABLE IF NOT EXISTS activity_log (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp TEXT NOT NULL,
    level TEXT NOT NULL DEFAULT 'info',   -- info / success / warning / error
    message TEXT NOT NULL
);
"""

RUN_STATUSES = ("running", "ok", "failed")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Database:
    def __init__(self, path: str = config.DB_PATH) -> None:
        self._path = path
        self._db: aiosqlite.Connection | None = None

    async def connect(self) -> None:
        self._db = await aiosqlite.connect(self._path)
        self._db.row_factory = aiosqlite.Row
        await self._db.executescript(_SCHEMA)
        await self._db.commit()
        logger.info("Run ledger connected: %s", self._path)

    async def close(self) -> None:
        if self._db:
            await self._db.close()
            self._db = None

    async def __aenter__(self) -> "Database":
        await self.connect()
        return self

    async def __aexit__(self, *exc: object) -> None:
        await self.close()

    @property
    def db(self) -> aiosqlite.Connection:
        assert self._db is not None, "Database not connected"
        return self._db

    # ---- runs ----

    async def insert_run(self, command: str, params: dict[str, Any]) -> int:
        cur = await self.db.execute(
            "INSERT INTO runs (timestamp, command, params, status) VALUES (?, ?, ?, 'running')",
            (_now(), command, json.dumps(params, sort_keys=True)),
        )
        await self.db.commit()
        return cur.lastrowid  # type: ignore[return-value]

    async def finish_run(self, run_id: int, status: str, summary: str = "") -> None:
        if status not in RUN_STATUSES:
            raise ValueError(f"unknown run status {status!r}")
        await self.db.execute(
            "UPDATE runs SET status = ?, summary = ? WHERE id = ?",
            (status, summary, run_id),
        )
        await self.db.commit()

    async def get_runs(self, limit: int = 50) -> list[dict[str, Any]]:
        cur = await self.db.execute(
            "SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,)
        )
        rows = [dict(r) for r in await cur.fetchall()]
        for row in rows:
            row["params"] = json.loads(row["params"])
        return rows

    # ---- sweep points ----

    async def insert_sweep_points(
        self, run_id: int, parameter: str, points: Iterable[tuple[float, float]]
    ) -> int:
        rows = [(run_id, parameter, float(v), float(e)) for v, e in points]
        await self.db.executemany(
            "INSERT INTO sweep_points (run_id, parameter, value, error) VALUES (?, ?, ?, ?)",
            rows,
        )
        await self.db.commit()
        return len(rows)

    async def get_sweep_points(self, run_id: int) -> list[dict[str, Any]]:
        cur = await self.db.execute(
            "SELECT parameter, value, error FROM sweep_points WHERE run_id = ? ORDER BY id",
            (run_id,),
        )
        return [dict(r) for r in await cur.fetchall()]

    async def best_point(self, run_id: int) -> dict[str, Any] | None:
        """Sweep point with the smallest error for a run, if any."""
        cur = await self.db.execute(
            """SELECT parameter, value, error FROM sweep_points
               WHERE run_id = ? ORDER BY error ASC, id ASC LIMIT 1""",
            (run_id,),
        )
        row = await cur.fetchone()
        return dict(row) if row else None

    # ---- activity log ----

    async def log_activity(self, message: str, level: str = "info") -> None:
        await self.db.execute(
            "INSERT INTO activity_log (timestamp, level, message) VALUES (?, ?, ?)",
            (_now(), level, message),
        )
        await self.db.commit()

    async def get_activity_log(self, limit: int = 50) -> list[dict[str, Any]]:
        cur = await self.db.execute(
            "SELECT * FROM activity_log ORDER BY id DESC LIMIT ?", (limit,)
        )
        return [dict(r) for r in await cur.fetchall()]
