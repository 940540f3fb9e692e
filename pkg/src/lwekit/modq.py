"""Exact linear algebra over Z_q with centered residues.

The centered representative of a residue class is the unique integer r
with -q/2 < r <= q/2, so short vectors and Gaussian errors keep their
sign instead of wrapping to large positive values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


def is_prime(q: int) -> bool:
    """Trial-division primality check, adequate for desk-scale moduli."""
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def reduce_centered(x: int, q: int) -> int:
    """Reduce x mod q to the centered representative in (-q/2, q/2]."""
    if q < 2:
        raise ParameterError(f"modulus must be at least 2, got {q}")
    r = x % q
    return r - q if 2 * r > q else r


def centered(values, q: int) -> np.ndarray:
    """Vectorized reduce_centered over an integer array."""
    if q < 2:
        raise ParameterError(f"modulus must be at least 2, got {q}")
    r = np.mod(np.asarray(values, dtype=np.int64), q)
    return np.where(2 * r > q, r - q, r)


@dataclass(frozen=True)
class ModMatrix:
    """Integer matrix with entries stored as centered residues mod q."""

    entries: np.ndarray
    q: int

    def __post_init__(self):
        if self.q < 2:
            raise ParameterError(f"modulus must be at least 2, got {self.q}")
        ent = np.atleast_2d(np.asarray(self.entries, dtype=np.int64))
        object.__setattr__(self, "entries", centered(ent, self.q))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def to_json(self) -> str:
        return json.dumps({"q": int(self.q), "rows": self.entries.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ModMatrix":
        data = json.loads(text)
        return cls(np.asarray(data["rows"], dtype=np.int64), int(data["q"]))


def _rref_mod_q(B: np.ndarray, q: int):
    """Row-reduce B over GF(q). Returns (rref, pivot_columns).

    Pivoting is leftmost nonzero column, smallest row index, so the
    result is reproducible.
    """
    B = np.mod(B, q).astype(np.int64)
    rows, cols = B.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivot_row = -1
        for i in range(r, rows):
            if B[i, c] % q != 0:
                pivot_row = i
                break
        if pivot_row < 0:
            continue
        if pivot_row != r:
            B[[r, pivot_row]] = B[[pivot_row, r]]
        inv = pow(int(B[r, c]), -1, q)
        B[r] = (B[r] * inv) % q
        for i in range(rows):
            if i != r and B[i, c] != 0:
                B[i] = (B[i] - B[i, c] * B[r]) % q
        pivots.append(c)
        r += 1
    return B, pivots


def rank_mod_q(mat: ModMatrix) -> int:
    """Rank of the matrix over Z_q (prime q)."""
    if not is_prime(mat.q):
        raise ParameterError(f"unsupported modulus: {mat.q} is not prime")
    _, pivots = _rref_mod_q(np.mod(mat.entries, mat.q), mat.q)
    return len(pivots)


def kernel_mod_q(mat: ModMatrix) -> np.ndarray:
    """Generators of {w in Z_q^m : A^T w = 0 mod q} for A = mat (m x n).

    Returns a (k, m) integer array of centered vectors that generate the
    full kernel of A^T over Z_q; for full column-rank A, k = m - n.
    Gaussian elimination needs inverses, so q must be prime.
    """
    A = mat.entries
    q = mat.q
    if A.size == 0:
        raise ParameterError("matrix must be nonempty")
    if not is_prime(q):
        raise ParameterError(f"unsupported modulus: {q} is not prime")
    m, n = A.shape
    if m < n:
        raise ParameterError(f"need at least as many rows as columns, got {m} x {n}")
    # kernel of the n x m map A^T
    rref, pivots = _rref_mod_q(np.mod(A.T, q), q)
    free_cols = [c for c in range(m) if c not in pivots]
    gens = np.zeros((len(free_cols), m), dtype=np.int64)
    for row, f in enumerate(free_cols):
        gens[row, f] = 1
        for i, p in enumerate(pivots):
            gens[row, p] = (-rref[i, f]) % q
    return centered(gens, q)
