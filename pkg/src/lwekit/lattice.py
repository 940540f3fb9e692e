"""Integer-lattice machinery.

Covers basis construction for the q-ary kernel lattice, Gram-Schmidt data,
LLL and blockwise reduction, exact enumeration of shortest vectors,
coefficient recovery, the qubit-budget calculator and the block-size
heuristic.

Reduction runs in double precision on exact integer rows; every reduced
basis is then re-verified with exact integer arithmetic and the reduction
reruns in exact rational arithmetic if verification fails.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import CapacityError, MembershipError, NotFoundError, ParameterError, RankError

DEFAULT_DELTA = 0.75
ENUM_DIMENSION_CAP = 36
_MAX_EXACT_ITERS = 2_000_000


def _as_int_rows(vectors) -> np.ndarray:
    arr = np.asarray(vectors)
    if arr.ndim != 2:
        raise ParameterError("expected a 2-d array of row vectors")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(np.asarray(arr, dtype=np.float64))
        if not np.allclose(arr, rounded, atol=1e-9):
            raise ParameterError("basis vectors must be integral")
        arr = rounded
    return arr.astype(np.int64)


@dataclass(frozen=True)
class LatticeBasis:
    """Square full-rank integer basis, one lattice vector per row."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = _as_int_rows(self.vectors)
        if arr.shape[0] != arr.shape[1]:
            raise RankError(f"basis must be square, got {arr.shape[0]} x {arr.shape[1]}")
        if not np.any(arr, axis=1).all():
            raise RankError("basis contains a zero vector")
        sign, logdet = np.linalg.slogdet(arr.astype(np.float64))
        if sign == 0 or not np.isfinite(logdet):
            raise RankError("basis rows are linearly dependent")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def gram_schmidt(self, exact: bool = False) -> "GramSchmidtData":
        return gram_schmidt(self, exact=exact)

    def norms_sq(self) -> np.ndarray:
        """Exact squared row norms."""
        v = self.vectors
        return np.einsum("ij,ij->i", v, v)

    def min_norm_sq(self) -> int:
        return int(self.norms_sq().min())

    def to_json(self) -> str:
        return json.dumps({"vectors": self.vectors.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "LatticeBasis":
        return cls(np.asarray(json.loads(text)["vectors"], dtype=np.int64))


@dataclass(frozen=True)
class GramSchmidtData:
    """Orthogonalization data: norms_sq[i] = |b~_i|^2, mu[i][j] for j < i.

    Float arrays by default; exact=True callers get Fractions (lists).
    """

    norms_sq: object
    mu: object


def gram_schmidt(basis: LatticeBasis, exact: bool = False) -> GramSchmidtData:
    """Gram-Schmidt data of a basis; raises on dependent rows."""
    if exact:
        res = _integral_gs([[int(x) for x in row] for row in basis.vectors])
        if res is None:
            raise RankError("basis rows are linearly dependent")
        lam, D = res
        n = basis.dim
        mu = [[Fraction(lam[i][j], D[j + 1]) for j in range(i)] for i in range(n)]
        norms = [Fraction(D[i + 1], D[i]) for i in range(n)]
        return GramSchmidtData(norms, mu)
    mu, bsq = _kernels.gram_schmidt_f64(basis.vectors.astype(np.int64))
    if not np.all(bsq > 0.0):
        raise RankError("basis rows are numerically dependent")
    return GramSchmidtData(bsq, mu)


# ---------------------------------------------------------------------------
# exact integer verification (and exact rational fallback reduction)

def _integral_gs(rows):
    """Integer-only Gram-Schmidt invariants.

    Returns (lam, D) with D[0] = 1, D[i+1] = det(Gram(b_0..b_i)) and
    lam[i][j] = mu_{i,j} * D[j+1], or None when the rows are dependent.
    """
    n = len(rows)
    lam = [[0] * n for _ in range(n)]
    D = [1] * (n + 1)
    for i in range(n):
        for j in range(i + 1):
            u = sum(a * b for a, b in zip(rows[i], rows[j]))
            for t in range(j):
                u = (D[t + 1] * u - lam[i][t] * lam[j][t]) // D[t]
            if j < i:
                lam[i][j] = u
            else:
                if u <= 0:
                    return None
                D[i + 1] = u
    return lam, D


def is_lll_reduced(vectors, delta: float) -> bool:
    """Exact check of size reduction and the Lovasz condition."""
    rows = [[int(x) for x in row] for row in _as_int_rows(vectors)]
    res = _integral_gs(rows)
    if res is None:
        return False
    lam, D = res
    n = len(rows)
    for i in range(n):
        for j in range(i):
            if 2 * abs(lam[i][j]) > D[j + 1]:
                return False
    frac = Fraction(delta)
    num, den = frac.numerator, frac.denominator
    for k in range(1, n):
        lhs = den * (D[k + 1] * D[k - 1] + lam[k][k - 1] ** 2)
        if lhs < num * D[k] ** 2:
            return False
    return True


def _mlll_exact(rows, delta):
    """Exact rational MLLL: the fallback when the float pass fails.

    Same dynamics as the float kernel, with Fractions for the
    Gram-Schmidt data, so dependency detection is exact.
    """
    frac = Fraction(delta)
    B = [[int(x) for x in row] for row in rows if any(int(x) for x in row)]
    n = len(B)
    if n <= 1:
        return B
    dim = len(B[0])

    def gs(upto):
        bstar = []
        bsq = []
        mu = [[Fraction(0)] * n for _ in range(n)]
        for i in range(upto + 1):
            vec = [Fraction(x) for x in B[i]]
            for j in range(i):
                if bsq[j] == 0:
                    mu[i][j] = Fraction(0)
                    continue
                dot = sum(Fraction(B[i][d]) * bstar[j][d] for d in range(dim))
                mu[i][j] = dot / bsq[j]
                for d in range(dim):
                    vec[d] -= mu[i][j] * bstar[j][d]
            bstar.append(vec)
            bsq.append(sum(v * v for v in vec))
        return mu, bsq

    k = 1
    iters = 0
    while k < n:
        iters += 1
        if iters > _MAX_EXACT_ITERS:
            raise RankError("exact reduction failed to terminate")
        mu, bsq = gs(k)
        changed = False
        r = mu[k][k - 1]
        if 2 * abs(r) > 1:
            mi = round(r)
            B[k] = [a - mi * b for a, b in zip(B[k], B[k - 1])]
            changed = True
        if not any(B[k]):
            del B[k]
            n -= 1
            k = max(min(k, n - 1), 1)
            if n <= 1:
                break
            continue
        if changed:
            mu, bsq = gs(k)
        if bsq[k] > 0 and bsq[k] >= (frac - mu[k][k - 1] ** 2) * bsq[k - 1]:
            for j in range(k - 2, -1, -1):
                r = mu[k][j]
                if 2 * abs(r) > 1:
                    mi = round(r)
                    B[k] = [a - mi * b for a, b in zip(B[k], B[j])]
                    mu, bsq = gs(k)
            if not any(B[k]):
                del B[k]
                n -= 1
                k = max(min(k, n - 1), 1)
                if n <= 1:
                    break
                continue
            k += 1
        else:
            B[k], B[k - 1] = B[k - 1], B[k]
            k = max(k - 1, 1)
    return B


# ---------------------------------------------------------------------------
# public reduction operations

def lll_reduce(generators, delta: float = DEFAULT_DELTA) -> LatticeBasis:
    """LLL-reduce a generating set into a basis of the same lattice.

    Input rows may be dependent or zero; vectors that collapse to zero
    during reduction are discarded. The output must span the full ambient
    dimension, otherwise a RankError is raised.
    """
    if not (0.25 < delta < 1.0):
        raise ParameterError(f"delta must lie in (1/4, 1), got {delta}")
    rows = _as_int_rows(generators)
    rows = rows[np.any(rows, axis=1)]
    if rows.shape[0] == 0:
        raise RankError("no nonzero generators given")
    dim = rows.shape[1]

    work = rows.copy()
    n = work.shape[0]
    # slightly stronger delta inside the float kernel buys margin for the
    # exact check at the requested delta
    delta_eff = min(delta + 1e-7, 0.999999999)
    max_iters = 20_000 + 2_000 * n * dim
    kept, status = _kernels.mlll_f64(work, n, delta_eff, max_iters)
    out = work[:kept]
    ok = status == _kernels.MLLL_OK and kept == dim and is_lll_reduced(out, delta)
    if not ok:
        exact_rows = _mlll_exact(rows.tolist(), delta)
        out = np.asarray(exact_rows, dtype=np.int64)
        if out.shape[0] != dim:
            raise RankError(
                f"generators span rank {out.shape[0]} but a full rank-{dim} basis is required"
            )
        if not is_lll_reduced(out, delta):
            raise RankError("exact reduction produced an invalid basis")
    return LatticeBasis(out)


def hermite_normal_form(rows) -> np.ndarray:
    """Row-style Hermite normal form of the lattice generated by the rows.

    Exact integer arithmetic; returns the nonzero rows, pivots positive,
    entries above each pivot reduced into [0, pivot).
    """
    work = [[int(x) for x in row] for row in _as_int_rows(rows)]
    nrows = len(work)
    ncols = len(work[0]) if nrows else 0
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        # euclidean elimination in column c
        while True:
            nz = [i for i in range(r, nrows) if work[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: (abs(work[i][c]), i))
            work[r], work[piv] = work[piv], work[r]
            if work[r][c] < 0:
                work[r] = [-x for x in work[r]]
            done = True
            for i in range(r + 1, nrows):
                if work[i][c] != 0:
                    f = work[i][c] // work[r][c]
                    work[i] = [a - f * b for a, b in zip(work[i], work[r])]
                    if work[i][c] != 0:
                        done = False
            if done:
                break
        if work[r][c] != 0:
            for i in range(r):
                f = work[i][c] // work[r][c]
                if f:
                    work[i] = [a - f * b for a, b in zip(work[i], work[r])]
            r += 1
    out = [row for row in work if any(row)]
    return np.asarray(out, dtype=np.int64) if out else np.zeros((0, ncols), dtype=np.int64)


def build_sis_lattice(kernel_vectors, q: int, m: int,
                      delta: float = DEFAULT_DELTA,
                      hnf_prepass: bool = False) -> LatticeBasis:
    """Reduced basis of the lattice spanned by the kernel vectors and q*I.

    Every member v of the lattice satisfies A^T v = 0 (mod q) whenever the
    kernel vectors do. The default path feeds all (m-n)+m generators
    straight into zero-discarding LLL; hnf_prepass extracts a triangular
    basis first (useful when debugging determinism).
    """
    if q < 2:
        raise ParameterError(f"modulus must be at least 2, got {q}")
    kern = np.asarray(kernel_vectors, dtype=np.int64)
    if kern.size == 0:
        kern = kern.reshape(0, m)
    if kern.ndim != 2 or kern.shape[1] != m:
        raise ParameterError(f"kernel vectors must have length {m}")
    gens = np.vstack([kern, q * np.eye(m, dtype=np.int64)])
    if hnf_prepass:
        gens = hermite_normal_form(gens)
    return lll_reduce(gens, delta=delta)


def _reduce_rows_fast(rows: np.ndarray, delta: float) -> np.ndarray:
    """Float-kernel reduction without the exact verification, for interior
    steps of blockwise sweeps; falls back to the verified path whenever
    the kernel misbehaves."""
    dim = rows.shape[1]
    work = rows[np.any(rows, axis=1)].copy()
    n = work.shape[0]
    delta_eff = min(delta + 1e-7, 0.999999999)
    kept, status = _kernels.mlll_f64(work, n, delta_eff, 20_000 + 2_000 * n * dim)
    if status == _kernels.MLLL_OK and kept == dim:
        return work[:kept]
    return lll_reduce(rows, delta=delta).vectors


def bkz_reduce(basis: LatticeBasis, block_size: int,
               delta: float = DEFAULT_DELTA, max_sweeps: int = 8) -> LatticeBasis:
    """Blockwise reduction: LLL plus enumeration-and-insertion sweeps.

    Runs full enumeration on each projected block of the given size and
    re-reduces after every improving insertion, until a sweep makes no
    progress or the sweep cap is hit. block_size == dim is exact SVP for
    the first vector. Interior re-reductions skip the exact verification;
    each sweep ends with a fully verified reduction.
    """
    m = basis.dim
    if not (2 <= block_size <= m):
        raise ParameterError(f"block size must lie in [2, {m}], got {block_size}")
    current = lll_reduce(basis.vectors, delta=delta)
    for _ in range(max_sweeps):
        improved = False
        rows = current.vectors
        for i in range(m - 1):
            j = min(i + block_size - 1, m - 1)
            mu, bsq = _kernels.gram_schmidt_f64(rows)
            sub_mu = np.ascontiguousarray(mu[i:j + 1, i:j + 1])
            sub_bsq = np.ascontiguousarray(bsq[i:j + 1])
            bound = bsq[i] * (1.0 - 1e-9)
            found, _, coeffs, _ = _kernels.enum_shortest(sub_mu, sub_bsq, bound, 0)
            if not found:
                continue
            v = coeffs @ rows[i:j + 1]
            rows = _reduce_rows_fast(np.vstack([rows[:i], v[None, :], rows[i:]]), delta)
            improved = True
        if not improved:
            break
        current = lll_reduce(rows, delta=delta)
    return current


def svp_enumerate(basis: LatticeBasis, radius_bound: float | None = None,
                  dimension_cap: int = ENUM_DIMENSION_CAP,
                  canonical_ties: bool = True,
                  node_budget: int | None = None) -> np.ndarray:
    """Exact shortest nonzero vector of the lattice by enumeration.

    Ties are broken deterministically: among all minimizers, the
    coefficient vector (in the given basis) is sign-normalized so its
    first nonzero entry is positive, then the lexicographically smallest
    one wins. canonical_ties=False skips the tie-collection pass and
    returns the (still deterministic) first minimizer the search settles
    on, at half the enumeration cost. A node_budget caps the search tree
    and raises a CapacityError mentioning "node budget" when exhausted.
    """
    m = basis.dim
    if m > dimension_cap:
        raise CapacityError(
            f"enumeration capped at dimension {dimension_cap} (got {m}); "
            "reduce with bkz_reduce first or raise the cap"
        )
    mu, bsq = _kernels.gram_schmidt_f64(basis.vectors)
    start = float(basis.min_norm_sq())
    if radius_bound is not None:
        if radius_bound <= 0:
            raise ParameterError("radius bound must be positive")
        start = min(start, float(radius_bound) ** 2)
    bound = start * (1.0 + 1e-12) + 1e-9
    budget = 0 if node_budget is None else int(node_budget)
    found, best, xbest, completed = _kernels.enum_shortest(mu, bsq, bound, budget)
    if not completed:
        raise CapacityError(
            f"enumeration node budget of {node_budget} exhausted at dimension {m}")
    if not found:
        raise NotFoundError("no nonzero lattice vector inside the radius bound")
    if not canonical_ties:
        v = xbest @ basis.vectors
        if radius_bound is not None and float(v @ v) > float(radius_bound) ** 2 + 1e-9:
            raise NotFoundError("no nonzero lattice vector inside the radius bound")
        lead = xbest[np.nonzero(xbest)[0][0]]
        return v if lead > 0 else -v
    collect_bound = best * (1.0 + 1e-9) + 1e-9
    cap = 256
    while True:
        out = np.zeros((cap, m), dtype=np.int64)
        count = _kernels.enum_collect(mu, bsq, collect_bound, out)
        if count <= cap:
            break
        cap = 2 * count
    cands = out[:count]
    vecs = cands @ basis.vectors
    norms = np.einsum("ij,ij->i", vecs, vecs)
    if radius_bound is not None:
        keep = norms <= float(radius_bound) ** 2 + 1e-9
        cands, norms = cands[keep], norms[keep]
        if cands.shape[0] == 0:
            raise NotFoundError("no nonzero lattice vector inside the radius bound")
    nmin = norms.min()
    ties = cands[norms == nmin]
    canon = []
    for x in ties:
        lead = x[np.nonzero(x)[0][0]]
        canon.append(tuple(x if lead > 0 else -x))
    best_x = np.asarray(min(canon), dtype=np.int64)
    return best_x @ basis.vectors


def coefficients_in_basis(basis: LatticeBasis, v) -> np.ndarray:
    """Integer coefficients x with sum_i x_i b_i = v; exact.

    Float solve with exact verification first, exact rational solve as
    the fallback; raises MembershipError when v is not in the lattice.
    """
    vec = np.asarray(v, dtype=np.int64)
    if vec.shape != (basis.dim,):
        raise ParameterError(f"vector must have length {basis.dim}")
    B = basis.vectors
    try:
        x = np.linalg.solve(B.T.astype(np.float64), vec.astype(np.float64))
        xi = np.rint(x).astype(np.int64)
        if np.array_equal(xi @ B, vec):
            return xi
    except np.linalg.LinAlgError:
        pass
    xi = _solve_exact(B, vec)
    if xi is None:
        raise MembershipError("vector is not an integer combination of the basis")
    return xi


def _solve_exact(B: np.ndarray, vec: np.ndarray):
    """Solve x B = vec over the rationals; None unless x is integral."""
    n = B.shape[0]
    M = [[Fraction(int(B[j][i])) for j in range(n)] for i in range(n)]  # columns of B^T
    rhs = [Fraction(int(c)) for c in vec]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = 1 / M[col][col]
        M[col] = [a * inv for a in M[col]]
        rhs[col] *= inv
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
                rhs[r] -= f * rhs[col]
    if any(x.denominator != 1 for x in rhs):
        return None
    return np.asarray([int(x) for x in rhs], dtype=np.int64)


# ---------------------------------------------------------------------------
# qubit budget and block-size heuristic

@dataclass(frozen=True)
class QubitBudget:
    """Per-basis qubit counts that guarantee the shortest vector is
    representable in the symmetric spin encoding."""

    delta: float
    counts: tuple           # qubits per basis vector, index 0 = first vector
    coeff_bounds: tuple     # Fraction bound on |coefficient| per basis vector
    alphas: tuple           # Fraction recursion values, alphas[i] for offset i
    total: int

    def to_json(self) -> str:
        return json.dumps({
            "delta": self.delta,
            "qubits": [int(c) for c in self.counts],
            "coeff_bounds": [float(g) for g in self.coeff_bounds],
            "alphas": [float(a) for a in self.alphas],
            "total": self.total,
        })


def _ceil_log2_fraction(fr: Fraction) -> int:
    """Smallest integer t with 2^t >= fr, exact."""
    if fr <= 0:
        raise ParameterError("logarithm argument must be positive")
    p, q = fr.numerator, fr.denominator
    t = p.bit_length() - q.bit_length()

    def covers(s):
        return (q << s) >= p if s >= 0 else q >= (p << -s)

    while not covers(t):
        t += 1
    while covers(t - 1):
        t -= 1
    return t


def qubit_budget(m: int, delta: float) -> QubitBudget:
    """Qubit counts per basis vector so the shortest vector fits.

    The bound on coefficient i (0-based, counting from the front of the
    basis) is alpha_{m-1-i} * (delta - 1/4)^(1-m), with alpha following
    the recursion alpha_i = (delta-1/4)^i + (1/2) * sum_{k<i} alpha_k and
    alpha_0 = 1. Each count is ceil(1 + log2 bound): the extra bit makes
    the two's-complement range [-2^(c-1), 2^(c-1)-1] cover the bound.
    """
    if m < 1:
        raise ParameterError(f"dimension must be at least 1, got {m}")
    frac = Fraction(delta)
    if not (Fraction(1, 4) < frac < 1):
        raise ParameterError(f"delta must lie in (1/4, 1), got {delta}")
    base = frac - Fraction(1, 4)
    alphas = [Fraction(1)]
    running = Fraction(1)
    for i in range(1, m):
        alphas.append(base ** i + running / 2)
        running += alphas[-1]
    scale = base ** (1 - m)
    bounds = [alphas[m - 1 - j] * scale for j in range(m)]
    counts = [1 + _ceil_log2_fraction(g) for g in bounds]
    return QubitBudget(
        delta=float(delta),
        counts=tuple(counts),
        coeff_bounds=tuple(bounds),
        alphas=tuple(alphas),
        total=int(sum(counts)),
    )


def representable(coeffs, counts) -> bool:
    """Whether coeffs or -coeffs fits the symmetric ranges given by counts."""
    x = np.asarray(coeffs, dtype=np.int64)
    c = np.asarray(counts, dtype=np.int64)
    lo = -(1 << (c - 1))
    hi = (1 << (c - 1)) - 1
    direct = np.all((x >= lo) & (x <= hi))
    flipped = np.all((-x >= lo) & (-x <= hi))
    return bool(direct or flipped)


def recommended_block_size(n: int, m: int, q: int, sigma: float,
                           advantage: float, simplified: bool = False) -> int:
    """Block size needed for the target distinguishing advantage.

    k = m / log2(q^(1-n/m) / (sigma*pi) * sqrt(ln(1/advantage)/2)),
    rounded up and clamped into [2, m]. With simplified=True the square
    root factor is dropped, which is exact at advantage = 1/e^2.
    """
    if m < 2 or n < 1:
        raise ParameterError("need m >= 2 and n >= 1")
    if not (0.0 < advantage < 1.0):
        raise ParameterError(f"advantage must lie in (0, 1), got {advantage}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    arg = q ** (1.0 - n / m) / (sigma * math.pi)
    if not simplified:
        arg *= math.sqrt(math.log(1.0 / advantage) / 2.0)
    if arg <= 1.0:
        raise ParameterError(
            "no block size achieves the target advantage: "
            f"log argument {arg:.6g} is not above 1"
        )
    k = m / math.log2(arg)
    return int(min(max(math.ceil(k - 1e-12), 2), m))
