"""GF(2) linear algebra on rows packed into Python integers."""

from __future__ import annotations

from typing import Sequence


def rank(rows: Sequence[int]) -> int:
    pivots: dict[int, int] = {}
    for r in rows:
        while r:
            low = r & -r
            if low in pivots:
                r ^= pivots[low]
            else:
                pivots[low] = r
                break
    return len(pivots)


def echelon(rows: Sequence[int]) -> list[tuple[int, int, int]]:
    """Reduced echelon basis as ``(pivot_bit, row, combo)`` triples.

    ``combo`` records which input rows (bit ``i`` = ``rows[i]``) sum to the
    reduced row.  Pivots are lowest set bits; output is sorted by pivot.
    """
    basis: list[list[int]] = []  # [pivot, row, combo]
    for i, r in enumerate(rows):
        c = 1 << i
        for piv, row, combo in basis:
            if r & piv:
                r ^= row
                c ^= combo
        if not r:
            continue
        piv = r & -r
        for entry in basis:
            if entry[1] & piv:
                entry[1] ^= r
                entry[2] ^= c
        basis.append([piv, r, c])
    basis.sort(key=lambda e: e[0].bit_length())
    return [(p, r, c) for p, r, c in basis]


def reduce(vec: int, basis: Sequence[tuple[int, int, int]]) -> tuple[int, int]:
    """Reduce ``vec`` against an echelon basis; returns ``(residual, combo)``."""
    combo = 0
    for piv, row, c in basis:
        if vec & piv:
            vec ^= row
            combo ^= c
    return vec, combo


def solve(rows: Sequence[int], vec: int) -> int | None:
    """Combination mask of ``rows`` summing to ``vec``, or ``None``."""
    residual, combo = reduce(vec, echelon(rows))
    return None if residual else combo


def kernel(rows: Sequence[int]) -> list[int]:
    """Basis of combinations ``c`` (bit masks over ``rows``) with ``sum c_i rows_i = 0``."""
    out = []
    basis: list[tuple[int, int, int]] = []
    for i, r in enumerate(rows):
        c = 1 << i
        for piv, row, combo in basis:
            if r & piv:
                r ^= row
                c ^= combo
        if r:
            basis.append((r & -r, r, c))
        else:
            out.append(c)
    return out


def nullspace(rows: Sequence[int], ncols: int) -> list[int]:
    """Basis of vectors ``v`` (packed over ``ncols`` bits) with ``row . v = 0`` for every row."""
    # Transpose so that kernel() on columns yields the right null space.
    cols = []
    for j in range(ncols):
        col = 0
        for i, r in enumerate(rows):
            if (r >> j) & 1:
                col |= 1 << i
        cols.append(col)
    return kernel(cols)


def dot(a: int, b: int) -> int:
    return (a & b).bit_count() & 1
