"""Static strip range structure over a sequence of distinct numbers.

Public indices are 1-based to match the usual statement of the problem;
the empty answer is ``None``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import BUILDER_STATE, build_step, query_many, strip_query
from .layout import N_BASE, N_LINK, Layout, plan

MAGIC = b"EWSTRIP\0"
VERSION = 1
UNLIMITED = np.int64(2**62)


class DuplicateValues(ValueError):
    pass


@dataclass(frozen=True)
class StripQuery:
    i: int
    j: int
    strip: int
    dir: str = "right"

    def __post_init__(self):
        if self.strip not in (1, 2, 3):
            raise ValueError("strip must be 1, 2 or 3")
        if self.dir not in ("right", "left"):
            raise ValueError("dir must be 'right' or 'left'")

    @property
    def right(self) -> bool:
        return self.dir == "right"


def ranks_of(y: Sequence[float]) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    order = np.argsort(arr, kind="stable")
    if arr.size and np.any(arr[order][1:] == arr[order][:-1]):
        raise DuplicateValues("values must be distinct")
    srank = np.empty(arr.size, np.int64)
    srank[order] = np.arange(arr.size)
    return srank


@dataclass
class Arrays:
    """Storage of one built structure (also used for engine path blocks)."""

    pts: np.ndarray
    mem: np.ndarray
    srt: np.ndarray
    links: np.ndarray
    base: np.ndarray

    @classmethod
    def allocate(cls, layout: Layout) -> "Arrays":
        return cls(
            np.full((4, layout.depth, layout.m), -1, np.int64),
            np.full(layout.mem_total, -1, np.int64),
            np.full(layout.mem_total, -1, np.int64),
            np.full((N_LINK, max(layout.tab_total, 1)), -1, np.int64),
            np.full((N_BASE, max(layout.base_total, 1)), -1, np.int64),
        )


def build_arrays(layout: Layout, srank: np.ndarray) -> tuple[Arrays, int]:
    arr = Arrays.allocate(layout)
    scratch = np.zeros(layout.gmax + layout.n_nodes, np.int64)
    state = np.zeros(BUILDER_STATE, np.int64)
    build_step(
        layout.nodes, layout.tasks, arr.pts, arr.mem, arr.srt, arr.links, arr.base,
        srank, scratch, np.int64(layout.gmax), state, UNLIMITED,
    )
    return arr, int(state[2])


@dataclass
class StripStructure:
    values: np.ndarray
    s: int
    layout: Layout
    arrays: Arrays
    build_ops: int
    max_lookups: int = 0
    n_queries: int = 0
    lookup_hist: dict[int, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def _check(self, q: StripQuery) -> None:
        if not (1 <= q.i <= self.n and 1 <= q.j <= self.n):
            raise IndexError("query indices out of range")
        if self.values[q.i - 1] == self.values[q.j - 1]:
            raise ValueError("query lines must differ (y_i == y_j)")

    def query_raw(self, i: int, j: int, strip: int, right: bool) -> tuple[int, int]:
        """0-based query returning (answer or -1, lookups) without bookkeeping."""
        a = self.arrays
        return strip_query(self.layout.nodes, a.pts, a.links, a.base, np.int64(self.n), i, j, strip, right)

    def _record(self, looks: np.ndarray) -> None:
        if looks.size:
            self.max_lookups = max(self.max_lookups, int(looks.max()))
            self.n_queries += int(looks.size)
            vals, counts = np.unique(looks, return_counts=True)
            for v, c in zip(vals, counts):
                self.lookup_hist[int(v)] = self.lookup_hist.get(int(v), 0) + int(c)

    def query(self, q: StripQuery) -> int | None:
        self._check(q)
        ans, look = self.query_raw(q.i - 1, q.j - 1, q.strip, q.right)
        self._record(np.array([look]))
        return None if ans < 0 else int(ans) + 1

    def query_batch(self, qs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """0-based batch: rows (i, j, strip, right); returns (answers, lookups)."""
        a = self.arrays
        qs = np.ascontiguousarray(qs, dtype=np.int64)
        ans, looks = query_many(self.layout.nodes, a.pts, a.links, a.base, np.int64(self.n), qs)
        self._record(looks)
        return ans, looks

    def stats(self) -> dict:
        return {
            "storage_cells": self.layout.storage_cells(),
            "max_lookups_observed": self.max_lookups,
            "build_ops": self.build_ops,
        }

    # ------------------------------------------------------------ persistence

    def to_bytes(self) -> bytes:
        head = MAGIC + struct.pack("<HqqQ", VERSION, self.n, self.s, self.build_ops)
        body = [self.values.astype("<f8").tobytes()]
        a = self.arrays
        for arr in (a.pts, a.mem, a.srt, a.links, a.base):
            body.append(np.ascontiguousarray(arr, dtype="<i8").tobytes())
        return head + b"".join(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> "StripStructure":
        if not data.startswith(MAGIC):
            raise ValueError("not a strip structure blob")
        off = len(MAGIC)
        version, n, s, ops = struct.unpack_from("<HqqQ", data, off)
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        off += struct.calcsize("<HqqQ")
        values = np.frombuffer(data, "<f8", n, off).astype(float)
        off += 8 * n
        layout = plan(max(n, 1), s)
        shell = Arrays.allocate(layout)
        parts = []
        for arr in (shell.pts, shell.mem, shell.srt, shell.links, shell.base):
            cnt = arr.size
            parts.append(np.frombuffer(data, "<i8", cnt, off).astype(np.int64).reshape(arr.shape))
            off += 8 * cnt
        if off != len(data):
            raise ValueError("trailing bytes in strip structure blob")
        return cls(values, s, layout, Arrays(*parts), int(ops))


def build(y: Sequence[float], s: int) -> StripStructure:
    if s < 1:
        raise ValueError("s must be at least 1")
    values = np.asarray(y, dtype=float)
    if values.size < 1:
        raise ValueError("need at least one value")
    srank = ranks_of(values)
    layout = plan(values.size, s)
    arrays, ops = build_arrays(layout, srank)
    return StripStructure(values, s, layout, arrays, ops)


def oracle_query(y: Sequence[float], q: StripQuery) -> int | None:
    """Literal scan of the definition (1-based indices)."""
    yi, yj = y[q.i - 1], y[q.j - 1]
    lo, hi = min(yi, yj), max(yi, yj)
    if q.strip == 1:
        members = [k for k in range(1, len(y) + 1) if y[k - 1] > hi]
    elif q.strip == 2:
        members = [k for k in range(1, len(y) + 1) if lo < y[k - 1] < hi]
    else:
        members = [k for k in range(1, len(y) + 1) if y[k - 1] < lo]
    if not members:
        return None
    if q.dir == "right":
        later = [k for k in members if k > q.i]
        return min(later) if later else min(members)
    earlier = [k for k in members if k < q.i]
    return max(earlier) if earlier else max(members)


def oracle_all(y: Sequence[float]) -> np.ndarray:
    """Every answer at once, shape (n, n, 3, 2), 0-based, -1 for empty.

    Index order: [i, j, strip-1, right]. Vectorized form of the same scan.
    """
    v = np.asarray(y, dtype=float)
    n = v.size
    idx = np.arange(n)
    lo = np.minimum.outer(v, v)
    hi = np.maximum.outer(v, v)
    out = np.full((n, n, 3, 2), -1, np.int64)
    strips = [
        v[None, None, :] > hi[:, :, None],
        (v[None, None, :] > lo[:, :, None]) & (v[None, None, :] < hi[:, :, None]),
        v[None, None, :] < lo[:, :, None],
    ]
    big = n + 1
    for a, mask in enumerate(strips):
        nonempty = mask.any(axis=2)
        after = mask & (idx[None, None, :] > idx[:, None, None])
        before = mask & (idx[None, None, :] < idx[:, None, None])
        first_any = np.where(mask, idx, big).min(axis=2)
        first_after = np.where(after, idx, big).min(axis=2)
        right = np.where(first_after < big, first_after, first_any)
        last_any = np.where(mask, idx, -1).max(axis=2)
        last_before = np.where(before, idx, -1).max(axis=2)
        left = np.where(last_before >= 0, last_before, last_any)
        out[:, :, a, 1] = np.where(nonempty, right, -1)
        out[:, :, a, 0] = np.where(nonempty, left, -1)
    return out
