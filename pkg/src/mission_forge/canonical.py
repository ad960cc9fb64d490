"""Canonical JSON encoding and content hashing.

Every document, event line, and protocol message uses the same encoding:
UTF-8, sorted keys, compact separators, shortest round-trip float text,
non-finite numbers rejected. Serializing the same value twice yields
identical bytes, which makes dataset manifests and log hashes stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

from .errors import DocumentError


def _reject_non_finite(obj: Any, path: str = "$") -> None:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise DocumentError("non-finite number", code="NON_FINITE", path=path)
    elif isinstance(obj, dict):
        for k, v in obj.items():
            _reject_non_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _reject_non_finite(v, f"{path}[{i}]")


def canonical_dumps(obj: Any) -> str:
    _reject_non_finite(obj)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False,
                      ensure_ascii=False)


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def message_dumps(obj: dict) -> str:
    """Like canonical_dumps but keeps ``kind`` as the first field."""
    if "kind" not in obj:
        raise DocumentError("message requires a kind field", code="MISSING_FIELD", path="$.kind")
    _reject_non_finite(obj)
    rest = {k: obj[k] for k in sorted(obj) if k != "kind"}
    parts = [json.dumps({"kind": obj["kind"]}, separators=(",", ":"), ensure_ascii=False)[1:-1]]
    if rest:
        parts.append(json.dumps(rest, sort_keys=True, separators=(",", ":"),
                                allow_nan=False, ensure_ascii=False)[1:-1])
    return "{" + ",".join(parts) + "}"


def content_hash(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for c in chunks:
        h.update(c)
    return h.hexdigest()


def loads_line(line: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", code="BAD_JSON") from exc
    if not isinstance(obj, dict):
        raise DocumentError("expected a JSON object", code="BAD_JSON")
    return obj
