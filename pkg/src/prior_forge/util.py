"""Shared plumbing: hashing, stderr JSON logging, seed fan-out."""

from __future__ import annotations

import json
import sys
import time

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def fnv1a64_hex(data: bytes) -> str:
    return f"{fnv1a64(data):016x}"


def file_digest(path) -> str:
    with open(path, "rb") as fh:
        return fnv1a64_hex(fh.read())


def hash_cells_u64(cells: np.ndarray, seed: int) -> np.ndarray:
    """Vectorized FNV-1a-style mix of integer cell ids with a seed.

    Used for deterministic per-cell label flips; returns uint64 hashes.
    """
    h = np.full(cells.shape, _FNV_OFFSET, dtype=np.uint64)
    prime = np.uint64(_FNV_PRIME)
    x = cells.astype(np.uint64)
    s = np.uint64(seed & _MASK64)
    for shift in (0, 8, 16, 24, 32, 40, 48, 56):
        h = (h ^ ((x >> np.uint64(shift)) & np.uint64(0xFF))) * prime
        h = (h ^ ((s >> np.uint64(shift)) & np.uint64(0xFF))) * prime
    return h


def split_rngs(seed: int, names: tuple[str, ...]) -> dict[str, np.random.Generator]:
    """Fan a root seed out to named counter-based (Philox) generators.

    Children come from ``SeedSequence(seed).spawn`` so subsystems draw from
    independent streams and stay reproducible regardless of thread count.
    """
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.Generator(np.random.Philox(child))
            for name, child in zip(names, children)}


_LOG_STREAM = sys.stderr
_LOG_ENABLED = True


def set_logging(enabled: bool) -> None:
    global _LOG_ENABLED
    _LOG_ENABLED = enabled


def log_event(event: str, **fields) -> None:
    """Emit one single-line JSON log record on stderr."""
    if not _LOG_ENABLED:
        return
    record = {"ts": round(time.time(), 3), "event": event}
    record.update(fields)
    print(json.dumps(record, separators=(",", ":")), file=_LOG_STREAM)
