"""Exact linear algebra over the rationals (dense Gaussian elimination)."""

from __future__ import annotations

from .rationals import Q, ZERO


def solve_exact(matrix: list[list], rhs: list) -> list | None:
    """One solution of ``matrix x = rhs`` over the rationals, or None when
    the system is inconsistent.  Free variables are set to zero."""
    rows = [list(map(Q, row)) + [Q(v)] for row, v in zip(matrix, rhs)]
    n_rows = len(rows)
    n_cols = len(matrix[0]) if matrix else 0
    pivot_cols = []
    rank = 0
    for col in range(n_cols):
        pivot = None
        for r in range(rank, n_rows):
            if rows[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(n_rows):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[rank])]
        pivot_cols.append(col)
        rank += 1
        if rank == n_rows:
            break
    for r in range(rank, n_rows):
        if rows[r][n_cols] != 0:
            return None
    solution = [ZERO] * n_cols
    for r, col in enumerate(pivot_cols):
        solution[col] = rows[r][n_cols]
    return solution


def nullspace_contains_only_zero(matrix: list[list]) -> bool:
    """True when the homogeneous system has full column rank."""
    n_cols = len(matrix[0]) if matrix else 0
    rows = [list(map(Q, row)) for row in matrix]
    rank = 0
    for col in range(n_cols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            return False
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return True
