"""File-backed catalog of classified workloads.

The store is a JSON-lines file; each put appends one record and the last
record for an id wins. The file is compacted in place once stale records
outnumber live ones. Writers serialize through an exclusive lock file next
to the store (``<path>.lock``); a writer that cannot take the lock
immediately gets KbLockError instead of waiting.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from filelock import FileLock, Timeout

from memadvisor.classifier import ClassificationResult

__all__ = ["KbEntry", "KbError", "KbLockError", "KnowledgeBase", "PutResult", "default_kb_path"]

logger = logging.getLogger(__name__)

ENV_VAR = "MEMADVISOR_KB"


class KbError(RuntimeError):
    pass


class KbLockError(KbError):
    """Another writer holds the store lock."""


@dataclass(frozen=True)
class KbEntry:
    workload_id: str
    classification: ClassificationResult
    profile_digest: str
    created_at: str

    def __post_init__(self) -> None:
        if not self.workload_id:
            raise ValueError("workload_id must be non-empty")

    @classmethod
    def create(cls, workload_id: str, classification: ClassificationResult, profile_digest: str) -> "KbEntry":
        now = datetime.now(timezone.utc).isoformat(timespec="microseconds")
        return cls(workload_id, classification, profile_digest, now)

    def to_dict(self) -> dict:
        return {
            "workload_id": self.workload_id,
            "classification": self.classification.to_dict(),
            "profile_digest": self.profile_digest,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KbEntry":
        return cls(
            workload_id=d["workload_id"],
            classification=ClassificationResult.from_dict(d["classification"]),
            profile_digest=d["profile_digest"],
            created_at=d["created_at"],
        )


@dataclass(frozen=True)
class PutResult:
    entry: KbEntry
    replaced: bool


def default_kb_path() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".memadvisor" / "kb.jsonl"


class KnowledgeBase:
    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else default_kb_path()
        self._lock = FileLock(str(self.path) + ".lock", timeout=0)

    def _read_lines(self) -> list[dict]:
        try:
            text = self.path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return []
        except OSError as exc:
            raise KbError(f"cannot read {self.path}: {exc}") from exc
        lines = text.splitlines()
        if lines and not text.endswith("\n"):
            # a concurrent append may be mid-write; its record is not yet acknowledged
            lines.pop()
        records = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise KbError(f"{self.path}:{lineno}: corrupt record ({exc.msg})") from exc
        return records

    def _load(self) -> tuple[dict[str, KbEntry], int]:
        entries: dict[str, KbEntry] = {}
        records = self._read_lines()
        for rec in records:
            try:
                entry = KbEntry.from_dict(rec)
            except (KeyError, ValueError, TypeError) as exc:
                raise KbError(f"{self.path}: invalid entry {rec!r}: {exc}") from exc
            entries[entry.workload_id] = entry
        return entries, len(records)

    @contextmanager
    def writing(self) -> Iterator[None]:
        """Hold the exclusive writer lock for the duration of the block."""
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._lock.acquire()
        except Timeout:
            raise KbLockError(f"knowledge base {self.path} is locked by another writer") from None
        try:
            yield
        finally:
            self._lock.release()

    def put(self, entry: KbEntry) -> PutResult:
        # re-validate: a hand-built entry must still respect the factor map
        ClassificationResult.from_dict(entry.classification.to_dict())
        with self.writing():
            entries, n_records = self._load()
            replaced = entry.workload_id in entries
            line = json.dumps(entry.to_dict(), sort_keys=True) + "\n"
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise KbError(f"cannot write {self.path}: {exc}") from exc
            entries[entry.workload_id] = entry
            if n_records + 1 > 2 * len(entries):
                self._compact(entries)
        return PutResult(entry, replaced)

    def _compact(self, entries: dict[str, KbEntry]) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for key in sorted(entries):
                    fh.write(json.dumps(entries[key].to_dict(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        logger.debug("compacted %s to %d entries", self.path, len(entries))

    def get(self, workload_id: str) -> KbEntry | None:
        return self._load()[0].get(workload_id)

    def list(self) -> list[KbEntry]:
        entries = self._load()[0]
        return [entries[k] for k in sorted(entries)]
