"""Dense real-matrix kernels: exponentials, exponential integrals, pivoted
solves, and block addressing on the stacked-state layout [M | N | ... | N].

Everything here is a pure function of its inputs; matrices are plain
float64 ndarrays and are never mutated except by :func:`block_set`, which
exists precisely to assemble block matrices in place.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError, IntervalError, SingularMatrixError

# Relative pivot threshold below which a solve is reported as singular.
PIVOT_RTOL = 1e-12


def as_matrix(a, name="matrix"):
    """Coerce to a finite 2-D float64 array, validating on the way in."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} contains non-finite entries")
    return arr


def _require_square(A, name):
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")


def symmetrize(A):
    """Return (A + A^T)/2."""
    return 0.5 * (A + A.T)


def mat_exp(A, t=1.0):
    """Matrix exponential e^(A*t).

    Scaling-and-squaring with a fixed-order rational core (scipy's expm),
    adequate for the small dense matrices this package works with.
    """
    A = as_matrix(A, "A")
    _require_square(A, "A")
    t = float(t)
    if not np.isfinite(t):
        raise IntervalError(f"t must be finite, got {t}")
    return scipy.linalg.expm(A * t)


def _exp_cumulative(A, t):
    # int_0^t e^(A s) ds is the top-right block of exp([[A, I], [0, 0]] t).
    m = A.shape[0]
    aug = np.zeros((2 * m, 2 * m))
    aug[:m, :m] = A
    aug[:m, m:] = np.eye(m)
    return scipy.linalg.expm(aug * t)[:m, m:]


def exp_integral(A, a, b):
    """Integral of e^(A*s) over s in [a, b], with 0 <= a <= b.

    Computed as the difference of two cumulative integrals from 0, each
    read off an augmented-matrix exponential; no quadrature involved.
    """
    A = as_matrix(A, "A")
    _require_square(A, "A")
    a = float(a)
    b = float(b)
    if not (0.0 <= a <= b):
        raise IntervalError(f"interval must satisfy 0 <= a <= b, got [{a}, {b}]")
    return _exp_cumulative(A, b) - _exp_cumulative(A, a)


def solve(A, B):
    """Solve A @ X = B by LU with partial pivoting.

    Raises :class:`SingularMatrixError` when the smallest pivot falls below
    PIVOT_RTOL times the largest entry of A, reporting that pivot.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    _require_square(A, "A")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(
            f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    with warnings.catch_warnings():
        # lu_factor warns on exact zero pivots; our own check below governs.
        warnings.simplefilter("ignore")
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = pivots.min() if pivots.size else 0.0
    if smallest <= PIVOT_RTOL * np.abs(A).max():
        raise SingularMatrixError(
            f"matrix is numerically singular (pivot {smallest:.3e})", smallest)
    return scipy.linalg.lu_solve((lu, piv), B, check_finite=False)


class BlockLayout:
    """Partition of a square matrix into blocks of the given edge sizes.

    Block indices are 1-based to match the usual (m, n) block-subscript
    convention for the stacked state [x; u_1; ...; u_p].
    """

    def __init__(self, sizes):
        sizes = tuple(int(s) for s in sizes)
        if not sizes or any(s <= 0 for s in sizes):
            raise DimensionError(f"block sizes must be positive, got {sizes}")
        self.sizes = sizes
        self.offsets = tuple(np.concatenate(([0], np.cumsum(sizes))).tolist())

    @property
    def total(self):
        return self.offsets[-1]

    @property
    def count(self):
        return len(self.sizes)

    def span(self, m):
        """Index slice of 1-based block m."""
        if not 1 <= m <= self.count:
            raise IndexError(f"block index {m} outside 1..{self.count}")
        return slice(self.offsets[m - 1], self.offsets[m])

    def __repr__(self):
        return f"BlockLayout{self.sizes}"


def augmented_layout(M, N, p):
    """Layout [M | N | ... | N] with p control blocks."""
    return BlockLayout((M,) + (N,) * p)


def block_get(S, layout, m, n):
    """Copy of the (m, n) block of S under the given layout."""
    S = as_matrix(S, "S")
    if S.shape != (layout.total, layout.total):
        raise DimensionError(
            f"S has shape {S.shape}, layout expects {(layout.total,) * 2}")
    return S[layout.span(m), layout.span(n)].copy()


def block_set(S, layout, m, n, value):
    """Overwrite the (m, n) block of S in place."""
    value = as_matrix(value, "value")
    rows, cols = layout.span(m), layout.span(n)
    expected = (rows.stop - rows.start, cols.stop - cols.start)
    if value.shape != expected:
        raise DimensionError(
            f"block ({m}, {n}) expects shape {expected}, got {value.shape}")
    S[rows, cols] = value
