"""Integer kernels by exact column elimination."""
from __future__ import annotations

from typing import Sequence


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """A Z-basis of ``{x in Z^ncols : M x = 0}``.

    Unimodular column operations bring ``M`` to column echelon form while the
    same operations are applied to the identity; the identity columns that end
    up under zero columns of ``M`` span the kernel over Z.
    """
    h = [[int(rows[i][j]) for i in range(len(rows))] for j in range(ncols)]  # columns of M
    u = [[int(i == j) for i in range(ncols)] for j in range(ncols)]  # columns of the transform
    pivot = 0
    for r in range(len(rows)):
        if pivot == ncols:
            break
        while True:
            nz = [j for j in range(pivot, ncols) if h[j][r] != 0]
            if not nz:
                break
            j0 = min(nz, key=lambda j: abs(h[j][r]))
            h[pivot], h[j0] = h[j0], h[pivot]
            u[pivot], u[j0] = u[j0], u[pivot]
            done = True
            for j in range(pivot + 1, ncols):
                if h[j][r] != 0:
                    q = h[j][r] // h[pivot][r]
                    h[j] = [a - q * b for a, b in zip(h[j], h[pivot])]
                    u[j] = [a - q * b for a, b in zip(u[j], u[pivot])]
                    if h[j][r] != 0:
                        done = False
            if done:
                pivot += 1
                break
    return [u[j] for j in range(pivot, ncols)]
