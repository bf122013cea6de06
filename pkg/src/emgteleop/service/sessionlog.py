"""Hash-chained JSONL session logs.

Every record carries the SHA-256 of its predecessor, so any edit breaks the
chain from that point on.  Timestamps are simulation milliseconds — logs
contain no wall-clock values, which keeps replayed runs byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

GENESIS = "0" * 64


class LogError(Exception):
    pass


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def record_hash(prev: str, index: int, t_ms: int, kind: str, payload: dict) -> str:
    material = f"{prev}|{index}|{t_ms}|{kind}|{_canonical(payload)}"
    return hashlib.sha256(material.encode()).hexdigest()


class SessionLog:
    """Append-only event log with an optional JSONL file sink."""

    def __init__(self, path=None):
        self.records: list[dict] = []
        self._fh = open(path, "w") if path is not None else None
        self._last_t = 0

    def append(self, t_ms: int, kind: str, payload: dict | None = None) -> dict:
        t_ms = int(t_ms)
        if t_ms < self._last_t:
            raise LogError(f"timestamp regressed: {t_ms} < {self._last_t}")
        self._last_t = t_ms
        payload = payload or {}
        prev = self.records[-1]["hash"] if self.records else GENESIS
        index = len(self.records)
        rec = {
            "i": index,
            "t_ms": t_ms,
            "kind": kind,
            "payload": payload,
            "prev": prev,
            "hash": record_hash(prev, index, t_ms, kind, payload),
        }
        self.records.append(rec)
        if self._fh is not None:
            self._fh.write(json.dumps(rec, sort_keys=True,
                                      separators=(",", ":")) + "\n")
            self._fh.flush()
        return rec

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def tail_hash(self) -> str:
        return self.records[-1]["hash"] if self.records else GENESIS

    def of_kind(self, kind: str) -> list[dict]:
        return [r for r in self.records if r["kind"] == kind]


def verify_chain(records: list[dict]) -> int | None:
    """Index of the first record whose hash linkage fails, or None if intact."""
    prev = GENESIS
    for i, rec in enumerate(records):
        expect = record_hash(prev, rec["i"], rec["t_ms"], rec["kind"],
                             rec["payload"])
        if rec["i"] != i or rec["prev"] != prev or rec["hash"] != expect:
            return i
        prev = rec["hash"]
    return None


def load_log(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line_no, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise LogError(f"{path}:{line_no + 1}: {err}") from err
    return records


@dataclass
class TamperReport:
    ok: bool
    first_bad: int | None = None

    def __bool__(self):
        return self.ok


def audit_log(records: list[dict]) -> TamperReport:
    bad = verify_chain(records)
    return TamperReport(ok=bad is None, first_bad=bad)
