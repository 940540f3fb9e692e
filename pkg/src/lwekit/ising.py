"""Ising encodings of lattice bases.

A spin register stores one integer coefficient per basis vector; the
Hamiltonian's diagonal entry at a bitstring equals the squared norm of
the lattice vector decoded from it, exactly. Two variants:

* symmetric: coefficient i ranges over [-2^(c_i-1), 2^(c_i-1)-1], so the
  zero vector is included;
* nonzero: one pinned coefficient ranges over [1, 2^(c_r)] (0 qubits pin
  it to exactly 1), which keeps every decoded vector off zero. Unpinned
  coefficients use either the symmetric range or, behind a flag, the
  binary range {0..2^c-1} entering with a minus sign, matching the
  single-qubit-per-vector register shape.

Bit convention: bit 0 of the register index corresponds to spin +1, and
qubit u is bit u of the integer index (basis-major layout).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError
from .lattice import LatticeBasis

REGISTER_CAP = 24


@dataclass(frozen=True)
class SpinEncoding:
    """Register layout mapping (basis index, bit index) to qubit position."""

    counts: tuple
    variant: str                 # "symmetric" | "nonzero"
    pinned: int | None = None    # 0-based basis index, nonzero variant only
    coefficient_range: str = "symmetric"  # unpinned coefficients: "symmetric" | "binary"
    span: str = "all"            # unpinned index set: "all" | "prefix"

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.variant not in ("symmetric", "nonzero"):
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.variant == "symmetric":
            if self.pinned is not None:
                raise ParameterError("symmetric variant takes no pinned index")
            if any(c < 1 for c in counts):
                raise ParameterError("each coefficient needs at least one qubit")
        else:
            if self.pinned is None or not 0 <= self.pinned < len(counts):
                raise ParameterError(
                    f"pinned index must lie in [0, {len(counts) - 1}], got {self.pinned}")
            if any(c < 0 for c in counts):
                raise ParameterError("qubit counts must be nonnegative")
            if any(c < 1 for i, c in enumerate(counts) if i != self.pinned and self._active(i)):
                raise ParameterError("unpinned coefficients in span need at least one qubit")
        if self.coefficient_range not in ("symmetric", "binary"):
            raise ParameterError(f"unknown coefficient range {self.coefficient_range!r}")
        if self.span not in ("all", "prefix"):
            raise ParameterError(f"unknown span {self.span!r}")

    def _active(self, i: int) -> bool:
        """Whether basis index i carries qubits."""
        if self.variant == "symmetric":
            return True
        if i == self.pinned:
            return self.counts[i] > 0
        if self.span == "prefix":
            return i < self.pinned
        return True

    def effective_counts(self) -> tuple:
        """Qubits actually allocated per basis index."""
        out = []
        for i, c in enumerate(self.counts):
            if self.variant == "nonzero" and self.span == "prefix" \
                    and i != self.pinned and i >= self.pinned:
                out.append(0)
            else:
                out.append(c)
        return tuple(out)

    @property
    def total_qubits(self) -> int:
        return sum(self.effective_counts())

    def offsets(self) -> tuple:
        offs = []
        pos = 0
        for c in self.effective_counts():
            offs.append(pos)
            pos += c
        return tuple(offs)

    def layout(self) -> list:
        """Qubit position -> (basis index, bit index), bit index 1-based."""
        out = []
        for i, c in enumerate(self.effective_counts()):
            for j in range(1, c + 1):
                out.append((i, j))
        return out


@dataclass(frozen=True)
class IsingHamiltonian:
    """Diagonal spin Hamiltonian: constant + sum h_u s_u + sum J_uv s_u s_v.

    s_u = +1 for bit 0. Coefficients are exact multiples of 1/16 and the
    16-scaled integer forms are kept alongside for exact evaluation.
    """

    constant: float
    h: np.ndarray
    J: np.ndarray
    encoding: SpinEncoding
    basis: LatticeBasis
    c16: int
    h16: np.ndarray
    J16: np.ndarray

    @property
    def n_qubits(self) -> int:
        return self.encoding.total_qubits

    def to_json(self) -> str:
        return json.dumps({
            "constant": self.constant,
            "h": self.h.tolist(),
            "J": self.J.tolist(),
            "layout": [[int(i), int(j)] for i, j in self.encoding.layout()],
            "variant": self.encoding.variant,
            "pinned": self.encoding.pinned,
            "coefficient_range": self.encoding.coefficient_range,
            "span": self.encoding.span,
            "counts": list(self.encoding.counts),
        })


def _coefficient_terms(encoding: SpinEncoding):
    """Per-qubit spin weights and per-basis constants, scaled by 4.

    coefficient_i = (sum_j w_ij s_ij + const_i) / 4 with integer w, const.
    """
    weights4 = []   # (basis index, 4*weight) per qubit, layout order
    const4 = []     # 4*constant offset per basis index
    for i, c in enumerate(encoding.effective_counts()):
        if not encoding._active(i) or (c == 0 and i != encoding.pinned):
            if encoding.variant == "nonzero" and i == encoding.pinned:
                const4.append(4)  # pinned with 0 qubits: coefficient 1
            else:
                const4.append(0)
            continue
        if encoding.variant == "symmetric" or (
                encoding.variant == "nonzero" and i != encoding.pinned
                and encoding.coefficient_range == "symmetric"):
            for j in range(1, c + 1):
                weights4.append((i, 1 << j))
            const4.append(-2)
        elif encoding.variant == "nonzero" and i == encoding.pinned:
            for j in range(1, c + 1):
                weights4.append((i, 1 << j))
            const4.append((1 << (c + 1)) + 2)
        else:  # binary unpinned: enters with a minus sign
            for j in range(1, c + 1):
                weights4.append((i, -(1 << j)))
            const4.append(-(1 << (c + 1)) + 2)
    return weights4, const4


def _build_hamiltonian(basis: LatticeBasis, encoding: SpinEncoding,
                       register_cap: int) -> IsingHamiltonian:
    m = basis.dim
    if len(encoding.counts) != m:
        raise ParameterError(f"need one qubit count per basis vector ({m})")
    N = encoding.total_qubits
    if N > register_cap:
        raise CapacityError(f"register needs {N} qubits, cap is {register_cap}")
    if N == 0:
        raise ParameterError("encoding allocates no qubits")
    weights4, const4 = _coefficient_terms(encoding)
    B = basis.vectors
    # per-dimension linear forms: L_d = (sum_u W4[u][d] s_u + C4[d]) / 4
    W4 = [[int(w) * int(B[i, d]) for d in range(m)] for i, w in weights4]
    C4 = [sum(const4[i] * int(B[i, d]) for i in range(m)) for d in range(m)]
    c16 = 0
    h16 = [0] * N
    J16 = [[0] * N for _ in range(N)]
    for d in range(m):
        c16 += C4[d] * C4[d]
        for u in range(N):
            wu = W4[u][d]
            if wu == 0:
                continue
            c16 += wu * wu
            h16[u] += 2 * C4[d] * wu
            for v in range(u + 1, N):
                J16[u][v] += 2 * wu * W4[v][d]
    for u in range(N):
        for v in range(u + 1, N):
            J16[v][u] = J16[u][v]
    limit = 1 << 62
    flat = [abs(c16)] + [abs(x) for x in h16] + [abs(x) for row in J16 for x in row]
    if max(flat) >= limit:
        raise CapacityError("Hamiltonian coefficients exceed the exact integer range")
    h16a = np.asarray(h16, dtype=np.int64)
    J16a = np.asarray(J16, dtype=np.int64)
    return IsingHamiltonian(
        constant=c16 / 16.0,
        h=h16a / 16.0,
        J=J16a / 16.0,
        encoding=encoding,
        basis=basis,
        c16=c16,
        h16=h16a,
        J16=J16a,
    )


def encode_symmetric(basis: LatticeBasis, counts,
                     register_cap: int = REGISTER_CAP) -> IsingHamiltonian:
    """Hamiltonian whose diagonal is |sum_i x_i b_i|^2 over the symmetric
    coefficient ranges given by counts."""
    enc = SpinEncoding(counts=tuple(int(c) for c in counts), variant="symmetric")
    return _build_hamiltonian(basis, enc, register_cap)


def encode_nonzero(basis: LatticeBasis, counts, pinned: int,
                   coefficient_range: str = "symmetric",
                   span: str = "all",
                   register_cap: int = REGISTER_CAP) -> IsingHamiltonian:
    """Hamiltonian over vectors with the pinned coefficient forced >= 1.

    pinned is a 0-based basis index; its count may be zero, pinning the
    coefficient to exactly 1. span="prefix" restricts unpinned
    coefficients to indices before the pinned one; the default uses all
    other indices, the register shape demonstrated on hardware.
    """
    enc = SpinEncoding(counts=tuple(int(c) for c in counts), variant="nonzero",
                       pinned=int(pinned), coefficient_range=coefficient_range,
                       span=span)
    return _build_hamiltonian(basis, enc, register_cap)


def _coefficients_from_values(encoding: SpinEncoding, values) -> np.ndarray:
    """Map per-basis bit values to signed integer coefficients."""
    m = len(encoding.counts)
    eff = encoding.effective_counts()
    x = np.zeros(m, dtype=np.int64)
    for i in range(m):
        c = eff[i]
        val = int(values[i])
        if encoding.variant == "nonzero" and i == encoding.pinned:
            x[i] = (1 << c) - val
        elif c == 0:
            x[i] = 0
        elif encoding.variant == "nonzero" and encoding.coefficient_range == "binary":
            x[i] = val - ((1 << c) - 1)
        else:
            x[i] = (1 << (c - 1)) - 1 - val
    return x


@dataclass(frozen=True)
class DecodedState:
    coefficients: np.ndarray
    vector: np.ndarray
    energy: int


def decode(z, encoding: SpinEncoding, basis: LatticeBasis) -> DecodedState:
    """Decode a bitstring (int index or '0'/'1' string, qubit u at
    position u) into coefficients, lattice vector and exact energy."""
    N = encoding.total_qubits
    if isinstance(z, str):
        if len(z) != N or any(ch not in "01" for ch in z):
            raise ParameterError(f"bitstring must have {N} binary digits")
        idx = sum(1 << u for u, ch in enumerate(z) if ch == "1")
    else:
        idx = int(z)
        if not 0 <= idx < (1 << N):
            raise ParameterError(f"index out of range for {N} qubits")
    eff = encoding.effective_counts()
    offs = encoding.offsets()
    values = [(idx >> offs[i]) & ((1 << eff[i]) - 1) for i in range(len(eff))]
    x = _coefficients_from_values(encoding, values)
    vector = x @ basis.vectors
    energy = int(vector @ vector)
    return DecodedState(coefficients=x, vector=vector, energy=energy)


def hamiltonian_diagonal(ham: IsingHamiltonian, method: str = "decode",
                         register_cap: int = REGISTER_CAP) -> np.ndarray:
    """Energy table over all 2^N bitstrings, exact int64.

    method="decode" accumulates squared norms of decoded vectors;
    method="coefficients" evaluates the (constant, h, J) form. The two
    agree exactly.
    """
    N = ham.n_qubits
    if N > register_cap:
        raise CapacityError(f"diagonal needs 2^{N} entries, cap is 2^{register_cap}")
    enc = ham.encoding
    eff = enc.effective_counts()
    offs = enc.offsets()
    m = len(eff)
    size = 1 << N
    out = np.empty(size, dtype=np.int64)
    chunk = min(size, 1 << 18)
    B = ham.basis.vectors
    for lo in range(0, size, chunk):
        z = np.arange(lo, min(lo + chunk, size), dtype=np.int64)
        if method == "decode":
            X = np.empty((z.size, m), dtype=np.int64)
            for i in range(m):
                c = eff[i]
                val = (z >> offs[i]) & ((1 << c) - 1)
                if enc.variant == "nonzero" and i == enc.pinned:
                    X[:, i] = (1 << c) - val
                elif c == 0:
                    X[:, i] = 0
                elif enc.variant == "nonzero" and enc.coefficient_range == "binary":
                    X[:, i] = val - ((1 << c) - 1)
                else:
                    X[:, i] = (1 << (c - 1)) - 1 - val
            V = X @ B
            out[lo:lo + z.size] = np.einsum("ij,ij->i", V, V)
        elif method == "coefficients":
            acc = np.full(z.size, ham.c16, dtype=np.int64)
            S = np.empty((z.size, N), dtype=np.int64)
            for u in range(N):
                S[:, u] = 1 - 2 * ((z >> u) & 1)
            acc += S @ ham.h16
            for u in range(N):
                hrow = ham.J16[u, u + 1:]
                if not hrow.any():
                    continue
                acc += S[:, u] * (S[:, u + 1:] @ hrow)
            out[lo:lo + z.size] = acc >> 4
        else:
            raise ParameterError(f"unknown method {method!r}")
    return out


def export_diagonal(diag: np.ndarray, path) -> None:
    """Write an energy table as CSV (.csv) or raw little-endian float64."""
    path = str(path)
    if path.endswith(".csv"):
        with open(path, "w") as fh:
            fh.write("index,energy\n")
            for i, e in enumerate(diag):
                fh.write(f"{i},{int(e)}\n")
    else:
        np.asarray(diag, dtype="<f8").tofile(path)
