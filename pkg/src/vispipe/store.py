"""Single-file embedded persistence: a key -> JSON/text blob table.

SQLite keeps deployment at zero ops; the schema is one table (key, value), so
any KV store can substitute.  Writes are serialized by an internal lock and
the connection tolerates multi-threaded handlers.
"""

from __future__ import annotations

import sqlite3
import threading
from typing import Iterator, Optional


class BlobStore:
    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS blobs (key TEXT PRIMARY KEY, "
                "value TEXT NOT NULL)")
            self._conn.commit()

    def put(self, key: str, value: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO blobs (key, value) VALUES (?, ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (key, value))
            self._conn.commit()

    def get(self, key: str) -> Optional[str]:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM blobs WHERE key = ?", (key,)).fetchone()
        return row[0] if row else None

    def delete(self, key: str) -> bool:
        with self._lock:
            cur = self._conn.execute("DELETE FROM blobs WHERE key = ?", (key,))
            self._conn.commit()
        return cur.rowcount > 0

    def keys(self, prefix: str = "") -> Iterator[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT key FROM blobs WHERE key LIKE ? ORDER BY key",
                (prefix + "%",)).fetchall()
        return iter(r[0] for r in rows)

    def close(self) -> None:
        with self._lock:
            self._conn.close()
