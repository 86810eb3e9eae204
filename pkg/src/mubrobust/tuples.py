"""Enumeration of outcome tuples j = (j_1, ..., j_k) and their operator sums.

Tuples are visited in lexicographic order (last index fastest).  The sums
``S_j = sum_x A_{j_x|x}`` are produced in blocks: a fixed "head" part is
added to a precomputed table of all "tail" partial sums, so one block is a
single broadcast addition followed by a batched eigenproblem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

DEFAULT_BLOCK = 1 << 14


@dataclass(frozen=True)
class TupleBlock:
    """A contiguous run of tuples sharing the same head indices."""

    head: tuple[int, ...]
    tail_axes: int
    sums: np.ndarray  # (n_block, d, d)
    start: int  # offset of the block inside the scanned tuple range

    def tuples(self, tail_counts: Sequence[int], rows=None) -> np.ndarray:
        idx = np.arange(self.sums.shape[0]) if rows is None else np.asarray(rows)
        tail = np.stack(np.unravel_index(idx, tuple(tail_counts)), axis=-1) if tail_counts else np.zeros((len(idx), 0), int)
        head = np.broadcast_to(np.array(self.head, dtype=int), (len(idx), len(self.head)))
        return np.concatenate([head, tail], axis=1).astype(int)


def partial_sums(ops: Sequence[np.ndarray]) -> np.ndarray:
    """All sums ``sum_x ops[x][j_x]`` as an array of shape (prod n_x, d, d)."""
    d = ops[0].shape[-1]
    total = np.zeros((1, d, d), dtype=complex)
    for o in ops:
        total = (total[:, None] + o[None]).reshape(-1, d, d)
    return total


def split_axes(counts: Sequence[int], block: int = DEFAULT_BLOCK) -> int:
    """Number of trailing axes whose joint size stays within ``block`` (at least one)."""
    size, n = 1, 0
    for c in reversed(counts):
        if n > 0 and size * c > block:
            break
        size *= c
        n += 1
    return n


def iter_blocks(
    ops: Sequence[np.ndarray],
    fixed: int = 0,
    limit: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> Iterator[TupleBlock]:
    """Yield :class:`TupleBlock` objects covering all tuples.

    Parameters
    ----------
    ops : list of (n_x, d, d) arrays
    fixed : int
        The first ``fixed`` indices are pinned to 0.
    limit : int, optional
        Stop after this many tuples (the last block is cut short).
    """
    counts = [o.shape[0] for o in ops]
    k = len(ops)
    n_tail = min(split_axes(counts[fixed:], block), k - fixed) if k > fixed else 0
    head_axes = k - n_tail
    tail = partial_sums(ops[head_axes:]) if n_tail else np.zeros((1,) + ops[0].shape[1:], dtype=complex)
    ranges = [range(1) if x < fixed else range(counts[x]) for x in range(head_axes)]
    done = 0
    for head in itertools.product(*ranges):
        if limit is not None and done >= limit:
            return
        h = sum((ops[x][head[x]] for x in range(head_axes)), np.zeros_like(tail[0]))
        sums = tail + h
        if limit is not None and done + len(sums) > limit:
            sums = sums[: limit - done]
        yield TupleBlock(tuple(head), n_tail, sums, done)
        done += len(sums)


def tuple_sum(ops: Sequence[np.ndarray], j: Sequence[int]) -> np.ndarray:
    return sum(ops[x][int(a)] for x, a in enumerate(j))


def orbit_tuples(perms: np.ndarray, reps: np.ndarray) -> np.ndarray:
    """All images of the representative tuples under a group given by outcome permutations.

    ``perms[g, x, a]`` is the image of outcome ``a`` of measurement ``x``.
    Returns the sorted unique tuples.
    """
    if len(reps) == 0:
        return np.zeros((0, perms.shape[1]), dtype=int)
    k = perms.shape[1]
    images = perms[:, np.arange(k)[None, :], reps]  # (g, n_reps, k)
    out = np.unique(images.reshape(-1, k), axis=0)
    return out
