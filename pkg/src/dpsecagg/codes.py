"""Matrix algebra over GF(q): Vandermonde MDS codes and erasure decoding.

Matrices hold canonical residues in a flat row-major tuple. Heavy lifting
(products, elimination) goes through :mod:`dpsecagg.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from . import kernels
from .algebra import FieldConfig, FieldElement
from .errors import (
    DimensionMismatch,
    DuplicatePoints,
    InsufficientShares,
    ModulusMismatch,
    SingularSubmatrix,
)


@dataclass(frozen=True)
class Matrix:
    rows: int
    cols: int
    entries: tuple[int, ...]
    q: int

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"{len(self.entries)} entries for a {self.rows}x{self.cols} matrix")
        q = self.q
        object.__setattr__(self, "entries", tuple(v % q for v in self.entries))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], q: int, cols: int | None = None) -> Matrix:
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise DimensionMismatch("ragged rows")
        return cls(len(rows), cols, tuple(int(v) for r in rows for v in r), q)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], q: int, rows: int | None = None) -> Matrix:
        return cls.from_rows(columns, q, cols=rows).T

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int) -> Matrix:
        return cls(rows, cols, (0,) * (rows * cols), q)

    @classmethod
    def identity(cls, n: int, q: int) -> Matrix:
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)), q)

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def element(self, i: int, j: int) -> FieldElement:
        return FieldElement(self[i, j], FieldConfig(self.q))

    def row(self, i: int) -> list[int]:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def column(self, j: int) -> list[int]:
        return list(self.entries[j::self.cols]) if self.cols else []

    def to_rows(self) -> list[list[int]]:
        return [self.row(i) for i in range(self.rows)]

    @property
    def T(self) -> Matrix:
        r, c, e = self.rows, self.cols, self.entries
        return Matrix(c, r, tuple(e[i * c + j] for j in range(c) for i in range(r)), self.q)

    def select_columns(self, cols: Sequence[int]) -> Matrix:
        return Matrix.from_columns([self.column(j) for j in cols], self.q, rows=self.rows)

    def select_rows(self, rows: Sequence[int]) -> Matrix:
        return Matrix.from_rows([self.row(i) for i in rows], self.q, cols=self.cols)

    def hstack(self, other: Matrix) -> Matrix:
        _check_q(self, other)
        if self.rows != other.rows:
            raise DimensionMismatch(f"hstack {self.rows} rows vs {other.rows}")
        return Matrix.from_rows([self.row(i) + other.row(i) for i in range(self.rows)],
                                self.q, cols=self.cols + other.cols)

    def __matmul__(self, other: Matrix) -> Matrix:
        return matmul(self, other)

    def apply(self, v: Sequence[int]) -> list[int]:
        """Matrix-vector product."""
        if len(v) != self.cols:
            raise DimensionMismatch(f"vector of length {len(v)} for {self.cols} columns")
        return kernels.matmul(self.entries, [x % self.q for x in v], self.rows, self.cols, 1, self.q)


def _check_q(a: Matrix, b: Matrix):
    if a.q != b.q:
        raise ModulusMismatch(f"GF({a.q}) vs GF({b.q})")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    _check_q(a, b)
    if a.cols != b.rows:
        raise DimensionMismatch(f"{a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    out = kernels.matmul(a.entries, b.entries, a.rows, a.cols, b.cols, a.q)
    return Matrix(a.rows, b.cols, tuple(out), a.q)


@dataclass(frozen=True)
class EvaluationPoints:
    """User points ``alphas`` (nonzero) and retrieval points ``betas``, all distinct."""

    alphas: tuple[int, ...]
    betas: tuple[int, ...]
    q: int

    def __post_init__(self):
        q = self.q
        object.__setattr__(self, "alphas", tuple(a % q for a in self.alphas))
        object.__setattr__(self, "betas", tuple(b % q for b in self.betas))
        every = self.alphas + self.betas
        if len(set(every)) != len(every):
            raise DuplicatePoints(f"evaluation points collide mod {q}: {every}")
        if 0 in self.alphas:
            raise DuplicatePoints("user points must be nonzero")

    @classmethod
    def default(cls, k: int, lp: int, q: int) -> EvaluationPoints:
        """alpha_i = i for i in 1..K, beta_l = K + l for l in 1..L'."""
        return cls(tuple(range(1, k + 1)), tuple(range(k + 1, k + lp + 1)), q)

    def alpha(self, user: int) -> int:
        """Point of 1-based ``user``."""
        return self.alphas[user - 1]


def vandermonde(u: int, points: Sequence[int], q: int) -> Matrix:
    """u x n matrix with entry (i, j) = points[j] ** i."""
    if u < 1:
        raise DimensionMismatch("need at least one row")
    pts = [int(p) % q for p in points]
    if len(set(pts)) != len(pts):
        raise DuplicatePoints(f"points not distinct mod {q}: {list(points)}")
    return Matrix.from_rows([[pow(p, i, q) for p in pts] for i in range(u)], q, cols=len(pts))


def mds_encode(subkeys: Sequence[Sequence[int]], m: Matrix) -> list[list[int]]:
    """Encode U sub-key vectors into one share per column of the U x K matrix ``m``.

    Share j is sum_r subkeys[r] * m[r, j], taken symbol by symbol.
    """
    if len(subkeys) != m.rows:
        raise DimensionMismatch(f"{len(subkeys)} sub-keys for a {m.rows}-row code")
    width = len(subkeys[0]) if subkeys else 0
    if any(len(s) != width for s in subkeys):
        raise DimensionMismatch("sub-keys differ in length")
    # (width x U) @ (U x K): column j of the result is share j
    s = Matrix.from_columns(subkeys, m.q, rows=width)
    coded = matmul(s, m)
    return [coded.column(j) for j in range(m.cols)]


@lru_cache(maxsize=4096)
def _decoding_inverse(m: Matrix, cols: tuple[int, ...]) -> Matrix:
    # the same erasure pattern recurs across runs; Matrix is frozen so this is safe
    return inverse(m.select_columns(cols))


def rs_erasure_decode(shares, m: Matrix) -> list[list[int]]:
    """Recover the U sub-key vectors from at least U shares.

    ``shares`` maps 0-based column index to share vector (or is an iterable of
    such pairs). The lowest U columns present are used.
    """
    shares = dict(shares)
    u = m.rows
    if len(shares) < u:
        raise InsufficientShares(f"{len(shares)} shares, need {u}")
    cols = sorted(shares)[:u]
    for c in cols:
        if not 0 <= c < m.cols:
            raise DimensionMismatch(f"column {c} outside a {m.cols}-column code")
    width = len(shares[cols[0]])
    if any(len(shares[c]) != width for c in cols):
        raise DimensionMismatch("shares differ in length")
    try:
        sub_inv = _decoding_inverse(m, tuple(cols))
    except SingularSubmatrix as exc:
        raise SingularSubmatrix(f"columns {cols} do not form an invertible submatrix") from exc
    y = Matrix.from_columns([shares[c] for c in cols], m.q, rows=width)
    s = matmul(y, sub_inv)
    return [s.column(r) for r in range(u)]


# --- elimination-based primitives -----------------------------------------

def row_reduce(m: Matrix) -> tuple[Matrix, list[int]]:
    entries, pivots = kernels.rref(m.entries, m.rows, m.cols, m.q)
    return Matrix(m.rows, m.cols, tuple(entries), m.q), pivots


def rank(m: Matrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(row_reduce(m)[1])


def kernel_basis(m: Matrix) -> list[list[int]]:
    """Basis of {x : m x = 0}."""
    if m.cols == 0:
        return []
    if m.rows == 0:
        return Matrix.identity(m.cols, m.q).to_rows()
    r, pivots = row_reduce(m)
    q = m.q
    free = [c for c in range(m.cols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [0] * m.cols
        v[f] = 1
        for i, p in enumerate(pivots):
            v[p] = (-r[i, f]) % q
        basis.append(v)
    return basis


def in_column_space(m: Matrix, v: Sequence[int]) -> bool:
    if len(v) != m.rows:
        raise DimensionMismatch(f"vector of length {len(v)} against {m.rows} rows")
    aug = m.hstack(Matrix.from_columns([v], m.q, rows=m.rows))
    return rank(aug) == rank(m)


def solve(m: Matrix, v: Sequence[int]) -> list[int]:
    """Unique solution of m x = v for square invertible m."""
    if m.rows != m.cols:
        raise DimensionMismatch("solve needs a square matrix")
    aug = m.hstack(Matrix.from_columns([v], m.q, rows=m.rows))
    r, pivots = row_reduce(aug)
    if pivots != list(range(m.cols)):
        raise SingularSubmatrix("matrix is singular")
    return r.column(m.cols)


def inverse(m: Matrix) -> Matrix:
    n = m.rows
    if n != m.cols:
        raise DimensionMismatch("inverse needs a square matrix")
    r, pivots = row_reduce(m.hstack(Matrix.identity(n, m.q)))
    if pivots[:n] != list(range(n)):
        raise SingularSubmatrix("matrix is singular")
    return Matrix.from_rows([r.row(i)[n:] for i in range(n)], m.q, cols=n)
