"""Versioned line-delimited record files.

Every artifact file written by this package is a JSONL file whose first
line is a header record carrying the record kind, a format version and
(optionally) a hash of the run configuration that produced it.  Records
are serialized with sorted keys so identical inputs yield byte-identical
files.
"""

import hashlib
import json
import os
from typing import Any, Iterable, Iterator

FORMAT_VERSION = 1


class RecordFormatError(ValueError):
    """Raised when a record file is malformed or of the wrong kind."""


def config_hash(config: dict) -> str:
    """Stable short hash of a configuration mapping."""
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def dumps(record: Any) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_records(path: str | os.PathLike, kind: str,
                  records: Iterable[dict], meta: dict | None = None) -> None:
    """Write a header line followed by one JSON record per line."""
    header = {"kind": kind, "version": FORMAT_VERSION}
    if meta:
        header.update(meta)
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(dumps(header) + "\n")
        for rec in records:
            f.write(dumps(rec) + "\n")
    os.replace(tmp, path)


def read_header(path: str | os.PathLike, kind: str | None = None) -> dict:
    with open(path, encoding="utf-8") as f:
        line = f.readline()
    if not line:
        raise RecordFormatError(f"{path}: empty record file")
    header = json.loads(line)
    if "kind" not in header or "version" not in header:
        raise RecordFormatError(f"{path}: missing header")
    if kind is not None and header["kind"] != kind:
        raise RecordFormatError(
            f"{path}: expected kind {kind!r}, found {header['kind']!r}")
    return header


def iter_records(path: str | os.PathLike, kind: str | None = None) -> Iterator[dict]:
    """Yield the data records of a file, skipping (and checking) the header."""
    with open(path, encoding="utf-8") as f:
        first = f.readline()
        if not first:
            raise RecordFormatError(f"{path}: empty record file")
        header = json.loads(first)
        if kind is not None and header.get("kind") != kind:
            raise RecordFormatError(
                f"{path}: expected kind {kind!r}, found {header.get('kind')!r}")
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_records(path: str | os.PathLike, kind: str | None = None) -> tuple[dict, list[dict]]:
    header = read_header(path, kind)
    return header, list(iter_records(path, kind))


def append_record(path: str | os.PathLike, kind: str, record: dict) -> None:
    """Append one record, creating the file (with header) if needed.

    The write is flushed and fsynced before returning, so an acknowledged
    record survives a crash.
    """
    new = not os.path.exists(path)
    with open(path, "a", encoding="utf-8") as f:
        if new:
            f.write(dumps({"kind": kind, "version": FORMAT_VERSION}) + "\n")
        f.write(dumps(record) + "\n")
        f.flush()
        os.fsync(f.fileno())
