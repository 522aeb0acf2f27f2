"""Small shared helpers: atomic writes, hashing, seed substreams."""

from __future__ import annotations

import hashlib
import os


def atomic_write_text(path, text: str):
    """Write text to path via a temp file + rename."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def substream_seed(master_seed: int, name: str) -> int:
    """Deterministic named substream seed derived from one master seed."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
