"""Canonical JSON and the versioned on-disk container used by snapshots and models.

Layout: an ASCII magic line "domainforge-<kind> <version>", one header JSON
line, one canonical body JSON line. The header always carries the sha256
fingerprint of the body bytes; load recomputes and cross-checks it, so any
body edit (or truncation) is a format error.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

from .errors import FormatError


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def write_payload(path: str | Path, kind: str, version: int, header: dict, body: dict) -> str:
    """Write the container; returns the body fingerprint stored in the header."""
    body_line = canonical_json(body).encode("ascii")
    fingerprint = sha256_hex(body_line)
    full_header = dict(header)
    full_header["fingerprint"] = fingerprint
    with open(path, "wb") as fh:
        fh.write(f"domainforge-{kind} {version}\n".encode("ascii"))
        fh.write(canonical_json(full_header).encode("ascii") + b"\n")
        fh.write(body_line + b"\n")
    return fingerprint


def read_payload(path: str | Path, kind: str, version: int) -> tuple[dict, dict]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {kind} file {path}: {exc}") from exc
    lines = raw.split(b"\n")
    if len(lines) < 3 or lines[2] == b"":
        raise FormatError(f"{kind} file {path} is truncated")
    magic = lines[0].decode("ascii", "replace").split()
    if len(magic) != 2 or magic[0] != f"domainforge-{kind}":
        raise FormatError(f"{path} is not a domainforge-{kind} file")
    if magic[1] != str(version):
        raise FormatError(f"unsupported {kind} format version {magic[1]} (expected {version})")
    try:
        header = json.loads(lines[1])
        body = json.loads(lines[2])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{kind} file {path} is corrupt: {exc}") from exc
    if not isinstance(header, dict) or not isinstance(body, dict):
        raise FormatError(f"{kind} file {path} has a malformed header or body")
    if header.get("fingerprint") != sha256_hex(lines[2]):
        raise FormatError(f"{kind} file {path} failed its fingerprint check")
    return header, body
