"""Append-only annotation store serving pair review queues.

Pairs are built from manifest records that share an identical first frame
(byte hash), mirroring the protocol where compared sequences start from the
same input view. Judgments append to a JSONL file, fsynced before the call
returns, and at most one judgment is kept per (pair, dimension, annotator);
duplicates are rejected. Corrections go through supersede(), which appends a
tombstone followed by the replacement."""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import DataError
from ..pipeline import Manifest
from ..preference import Dimension, Judgment

DIMENSIONS = (Dimension.VQ, Dimension.MQ, Dimension.CA)


class StoreError(DataError):
    pass


class NotInitializedError(StoreError):
    pass


class UnknownPairError(StoreError):
    pass


class ConflictError(StoreError):
    pass


class BadOutcomeError(StoreError):
    pass


@dataclass(frozen=True)
class PairSpec:
    pair_id: str
    seq_a: str
    seq_b: str
    frames_a: int
    frames_b: int


@dataclass
class PairTask:
    pair_id: str
    seq_a: str
    seq_b: str
    dimensions_pending: list[str]
    frame_counts: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "seq_a": self.seq_a,
            "seq_b": self.seq_b,
            "dimensions_pending": list(self.dimensions_pending),
            "frame_counts": list(self.frame_counts),
        }


def build_pairs(manifest: Manifest, frames_root: str | Path) -> list[PairSpec]:
    """All within-group pairs of manifest records grouped by first-frame hash;
    only sequences sharing a byte-identical input view get paired."""
    root = Path(frames_root)
    groups: dict[str, list] = {}
    counts: dict[str, int] = {}
    for rec in manifest.records:
        rec_dir = root / rec.frame_dir
        frames = sorted(rec_dir.glob("[0-9]*.png"))
        if not frames:
            continue
        digest = hashlib.sha256(frames[0].read_bytes()).hexdigest()
        groups.setdefault(digest, []).append(rec.id)
        counts[rec.id] = len(frames)
    pairs = []
    for digest, ids in sorted(groups.items()):
        ids = sorted(ids)
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                pairs.append(
                    PairSpec(
                        pair_id=f"{ids[i]}__vs__{ids[j]}",
                        seq_a=ids[i],
                        seq_b=ids[j],
                        frames_a=counts[ids[i]],
                        frames_b=counts[ids[j]],
                    )
                )
    return pairs


class AnnotationStore:
    """Single-writer JSONL store; every append is durable before it is
    acknowledged, so the file is valid after any prefix of appends."""

    def __init__(self, path: str | Path, pairs: list[PairSpec]):
        if not pairs:
            raise NotInitializedError("store needs at least one pair")
        self.path = Path(path)
        self.pairs = {p.pair_id: p for p in pairs}
        self._lock = threading.Lock()
        self._live: dict[tuple[str, str, str], Judgment] = {}
        if self.path.exists():
            self._replay()
        self._file = open(self.path, "a", encoding="utf-8")

    def _replay(self) -> None:
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if obj.get("tombstone"):
                    self._live.pop(
                        (obj["pair_id"], obj["dimension"], obj["annotator_id"]), None
                    )
                else:
                    j = Judgment.from_dict(obj)
                    self._live[(j.pair_id, j.dimension.value, j.annotator_id)] = j

    def close(self) -> None:
        self._file.close()

    def _append(self, obj: dict) -> None:
        self._file.write(json.dumps(obj) + "\n")
        self._file.flush()
        os.fsync(self._file.fileno())

    def submit_judgment(self, judgment: Judgment) -> None:
        """Durably append one judgment. Raises UnknownPairError for pairs the
        store does not know, ConflictError on (pair, dimension, annotator)
        duplicates."""
        if judgment.pair_id not in self.pairs:
            raise UnknownPairError(f"unknown pair {judgment.pair_id!r}")
        key = (judgment.pair_id, judgment.dimension.value, judgment.annotator_id)
        with self._lock:
            if key in self._live:
                raise ConflictError(
                    f"{judgment.annotator_id} already judged {judgment.pair_id} "
                    f"on {judgment.dimension.value}"
                )
            self._append(judgment.to_dict())
            self._live[key] = judgment

    def supersede(self, judgment: Judgment) -> None:
        """Replace an existing judgment: appends a tombstone for the old entry
        then the replacement, preserving the audit trail."""
        key = (judgment.pair_id, judgment.dimension.value, judgment.annotator_id)
        with self._lock:
            if key not in self._live:
                raise UnknownPairError(f"nothing to supersede for {key}")
            self._append(
                {
                    "tombstone": True,
                    "pair_id": judgment.pair_id,
                    "dimension": judgment.dimension.value,
                    "annotator_id": judgment.annotator_id,
                    "timestamp": judgment.timestamp,
                }
            )
            self._append(judgment.to_dict())
            self._live[key] = judgment

    def next_pair(self, dimension: Dimension, annotator_id: str) -> PairTask | None:
        """Least-judged unjudged pair for this annotator and dimension (ties
        broken by pair_id); None when the queue is exhausted."""
        dim = Dimension(dimension)
        with self._lock:
            counts = {pid: 0 for pid in self.pairs}
            for pid, d, _ in self._live:
                if d == dim.value:
                    counts[pid] += 1
            candidates = [
                pid
                for pid in self.pairs
                if (pid, dim.value, annotator_id) not in self._live
            ]
            if not candidates:
                return None
            pid = min(candidates, key=lambda p: (counts[p], p))
            spec = self.pairs[pid]
            pending = [
                d.value
                for d in DIMENSIONS
                if (pid, d.value, annotator_id) not in self._live
            ]
            return PairTask(
                pair_id=pid,
                seq_a=spec.seq_a,
                seq_b=spec.seq_b,
                dimensions_pending=pending,
                frame_counts=(spec.frames_a, spec.frames_b),
            )

    def progress(self) -> dict:
        """Per-dimension counts: judged pairs, total pairs, and the outcome
        histogram over all stored judgments."""
        with self._lock:
            out = {}
            for dim in DIMENSIONS:
                judged_pairs = {
                    pid for (pid, d, _) in self._live if d == dim.value
                }
                hist = {"A_WINS": 0, "TIE": 0, "B_WINS": 0}
                for (pid, d, _), j in self._live.items():
                    if d == dim.value:
                        hist[j.outcome.value] += 1
                out[dim.value] = {
                    "judged": len(judged_pairs),
                    "total": len(self.pairs),
                    "histogram": hist,
                }
            return out

    def export_judgments(self) -> list[Judgment]:
        """The effective (non-superseded) judgments in deterministic order."""
        with self._lock:
            return [self._live[k] for k in sorted(self._live)]

    def export_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for j in self.export_judgments():
                f.write(json.dumps(j.to_dict()) + "\n")
