"""Append-only, resumable dataset manifests.

One JSONL file per dataset stage; every append is flushed so a killed
run can resume by reloading the file and skipping known ids.  Entries
deduplicate by id and by canonical code hash (image hash for code-less
candidate entries).  A sibling ``.meta.json`` records the stage name,
parent manifests, and the fully-resolved config snapshot.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from ..errors import MissingParentManifest
from ..records import InstructRecord, SamplePair


def utc_clock() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def fixed_clock(stamp: str = "1970-01-01T00:00:00+00:00") -> Callable[[], str]:
    """Deterministic stand-in clock for reproducible dry runs."""
    return lambda: stamp


class DatasetManifest:
    def __init__(
        self,
        name: str,
        path: str | Path,
        parent_refs: Iterable[str] = (),
        config_snapshot: dict | None = None,
        clock: Callable[[], str] | None = None,
    ):
        self.name = name
        self.path = Path(path)
        self.parent_refs = list(parent_refs)
        self.config_snapshot = dict(config_snapshot or {})
        self.clock = clock or utc_clock
        self.entries: list[SamplePair] = []
        self._ids: set[str] = set()
        self._dedup_keys: set[str] = set()
        self._fh = None

    # -- persistence

    @property
    def meta_path(self) -> Path:
        return self.path.with_suffix(".meta.json")

    def open(self) -> "DatasetManifest":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists():
            self._load_existing()
        if not self.meta_path.exists():
            self.meta_path.write_text(
                json.dumps(
                    {
                        "name": self.name,
                        "parent_refs": self.parent_refs,
                        "config_snapshot": self.config_snapshot,
                    },
                    indent=2,
                    sort_keys=True,
                ),
                encoding="utf-8",
            )
        self._fh = open(self.path, "a", encoding="utf-8")
        return self

    def _load_existing(self) -> None:
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue  # partial trailing line from a killed run
                entry = (
                    InstructRecord.from_dict(rec)
                    if "instruction" in rec
                    else SamplePair.from_dict(rec)
                )
                if entry.id in self._ids:
                    continue
                self.entries.append(entry)
                self._ids.add(entry.id)
                self._dedup_keys.add(_dedup_key(entry))

    @classmethod
    def load(cls, path: str | Path, clock: Callable[[], str] | None = None) -> "DatasetManifest":
        path = Path(path)
        if not path.exists():
            raise MissingParentManifest(str(path))
        meta = {}
        meta_path = path.with_suffix(".meta.json")
        if meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        manifest = cls(
            name=meta.get("name", path.stem),
            path=path,
            parent_refs=meta.get("parent_refs", []),
            config_snapshot=meta.get("config_snapshot", {}),
            clock=clock,
        )
        manifest._load_existing()
        return manifest

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self.open()

    def __exit__(self, *exc):
        self.close()

    # -- content

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> set[str]:
        return set(self._ids)

    def append(self, record: SamplePair) -> bool:
        """Add one record; returns False for duplicates (by id or content)."""
        if record.id in self._ids or _dedup_key(record) in self._dedup_keys:
            return False
        if not record.created_at:
            record.created_at = self.clock()
        self.entries.append(record)
        self._ids.add(record.id)
        self._dedup_keys.add(_dedup_key(record))
        if self._fh is None:
            self.open()
        self._fh.write(record.to_json() + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        return True

    def extend_from(self, parent: "DatasetManifest") -> int:
        added = 0
        for entry in parent.entries:
            if self.append(entry):
                added += 1
        return added


def _dedup_key(record: SamplePair) -> str:
    return record.code_sha256 or f"image:{record.image_sha256}"


def union_manifests(
    name: str,
    path: str | Path,
    parents: list[DatasetManifest],
    config_snapshot: dict | None = None,
    clock: Callable[[], str] | None = None,
) -> DatasetManifest:
    """Monotone dedup union of parent manifests, in parent order."""
    if not parents:
        raise MissingParentManifest("union needs at least one parent")
    out = DatasetManifest(
        name=name,
        path=path,
        parent_refs=[str(p.path) for p in parents],
        config_snapshot=config_snapshot or {},
        clock=clock,
    ).open()
    for parent in parents:
        out.extend_from(parent)
    return out
