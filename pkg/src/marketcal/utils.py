"""Seed derivation, optional process-pool mapping, and atomic file writes."""

from __future__ import annotations

import hashlib
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

MASK63 = (1 << 63) - 1


def stable_int(label: str) -> int:
    """Map a text label to a stable 63-bit integer (independent of PYTHONHASHSEED)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & MASK63


def derive_seed(master: int, *path: int | str) -> int:
    """Derive a child seed from a master seed and a namespacing path.

    Strings are hashed stably, so ``derive_seed(7, "simulation")`` is the same
    integer in every process and on every platform.
    """
    parts = [int(master) & MASK63]
    for p in path:
        parts.append(stable_int(p) if isinstance(p, str) else int(p) & MASK63)
    digest = hashlib.sha256(",".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little") & MASK63


def derive_rng(master: int, *path: int | str) -> np.random.Generator:
    """A numpy Generator seeded from (master, *path)."""
    return np.random.default_rng(derive_seed(master, *path))


def pmap(fn: Callable, items: Sequence, workers: int | None = None, chunksize: int = 1) -> list:
    """Map ``fn`` over ``items``, optionally across processes.

    Results come back in input order regardless of scheduling, so callers get
    identical output for any worker count. ``fn`` and the items must pickle
    when workers > 1.
    """
    if workers is None or workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write text to ``path`` via a temp file + rename (no partial files)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def config_digest(obj: object) -> str:
    """Short stable hash of a repr-able configuration object."""
    return hashlib.sha256(repr(obj).encode("utf-8")).hexdigest()[:12]
