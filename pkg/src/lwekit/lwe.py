"""Instance generation, the decision pipeline and ensemble statistics.

The pipeline turns an (A, c) pair into a short vector v of the kernel
lattice {v : A^T v = 0 mod q} and decides from p = <v, c> mod q: for
structured c = As + e the product collapses to <v, e>, a folded Gaussian
concentrated near 0 and q, while uniform c gives uniform p.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (CapacityError, DegenerateDataError, NotFoundError,
                     ParameterError)
from .ising import decode, encode_nonzero, hamiltonian_diagonal
from .lattice import (LatticeBasis, build_sis_lattice, coefficients_in_basis,
                      bkz_reduce, lll_reduce, representable, svp_enumerate)
from .modq import ModMatrix, centered, kernel_mod_q
from .qaoa import (OptimizerConfig, QaoaParams, default_scale, gradient_descent,
                   landscape_scan, run_qaoa, sample)

DEFAULT_ADVANTAGE = math.exp(-2.0)
SOLVERS = ("lll", "bkz", "enum", "qaoa")


@dataclass(frozen=True)
class LweParams:
    n: int
    m: int
    q: int
    sigma: float

    def __post_init__(self):
        if not (self.m >= self.n >= 1):
            raise ParameterError(f"need m >= n >= 1, got n={self.n}, m={self.m}")
        if self.q < 2:
            raise ParameterError(f"modulus must be at least 2, got {self.q}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class LweInstance:
    params: LweParams
    A: ModMatrix
    c: np.ndarray
    label: str                      # "structured" | "uniform"
    s: np.ndarray | None = None
    e: np.ndarray | None = None

    def validate(self) -> bool:
        """Check c = As + e mod q when the witness is present."""
        if self.label == "structured" and self.s is not None and self.e is not None:
            lhs = np.mod(self.A.entries @ self.s + self.e - self.c, self.params.q)
            return bool(np.all(lhs == 0))
        return self.label in ("structured", "uniform")

    def to_json(self) -> str:
        return json.dumps({
            "params": {"n": self.params.n, "m": self.params.m,
                       "q": self.params.q, "sigma": self.params.sigma},
            "label": self.label,
            "A": self.A.entries.tolist(),
            "c": self.c.tolist(),
            "s": None if self.s is None else [int(x) for x in self.s],
            "e": None if self.e is None else [int(x) for x in self.e],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LweInstance":
        data = json.loads(text)
        p = data["params"]
        params = LweParams(int(p["n"]), int(p["m"]), int(p["q"]), float(p["sigma"]))
        return cls(
            params=params,
            A=ModMatrix(np.asarray(data["A"], dtype=np.int64), params.q),
            c=centered(np.asarray(data["c"], dtype=np.int64), params.q),
            label=data["label"],
            s=None if data.get("s") is None else np.asarray(data["s"], dtype=np.int64),
            e=None if data.get("e") is None else np.asarray(data["e"], dtype=np.int64),
        )


# ---------------------------------------------------------------------------
# sampling

def gaussian_support(sigma: float):
    """Support and probabilities of the truncated discrete Gaussian.

    Mass sits on |z| <= ceil(10 sigma) with P(z) proportional to
    exp(-z^2 / (2 sigma^2)); the truncated tail is below 1e-21.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    t = int(math.ceil(10.0 * sigma))
    z = np.arange(-t, t + 1, dtype=np.int64)
    w = np.exp(-(z.astype(np.float64) ** 2) / (2.0 * sigma * sigma))
    return z, w / w.sum()


def sample_discrete_gaussian(sigma: float, rng: np.random.Generator, size=None):
    """Inverse-CDF draws from the truncated discrete Gaussian."""
    z, p = gaussian_support(sigma)
    cum = np.cumsum(p)
    u = rng.random(size)
    idx = np.searchsorted(cum, u, side="right")
    idx = np.minimum(idx, len(z) - 1)
    out = z[idx]
    return int(out) if size is None else out


def gen_instance(params: LweParams, kind: str, rng: np.random.Generator) -> LweInstance:
    """Fresh LWE instance: structured c = As + e, or uniform c."""
    n, m, q = params.n, params.m, params.q
    A = ModMatrix(rng.integers(0, q, size=(m, n)), q)
    if kind == "structured":
        s = rng.integers(0, q, size=n)
        e = sample_discrete_gaussian(params.sigma, rng, size=m)
        c = centered(A.entries @ s + e, q)
        return LweInstance(params, A, c, "structured",
                           s=centered(s, q), e=e.astype(np.int64))
    if kind == "uniform":
        c = centered(rng.integers(0, q, size=m), q)
        return LweInstance(params, A, c, "uniform")
    raise ParameterError(f"kind must be structured or uniform, got {kind!r}")


# ---------------------------------------------------------------------------
# distribution statistics

def inner_product_mod_q(v, c, q: int) -> int:
    """<v, c> mod q as the canonical representative in [0, q)."""
    v = np.asarray(v, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    if v.shape != c.shape:
        raise ParameterError(f"length mismatch: {v.shape} vs {c.shape}")
    total = sum(int(a) * int(b) for a, b in zip(v, c))
    return total % q


def folded_gaussian_probs(effective_std: float, q: int) -> np.ndarray:
    """Discrete Gaussian with the given std folded into Z_q (canonical
    residues)."""
    if effective_std <= 0:
        raise ParameterError("effective std must be positive")
    if q < 2:
        raise ParameterError(f"modulus must be at least 2, got {q}")
    z, p = gaussian_support(effective_std)
    out = np.zeros(q)
    np.add.at(out, np.mod(z, q), p)
    return out


def folded_gaussian_advantage(effective_std: float, q: int) -> float:
    """Total-variation distance between the folded Gaussian and uniform."""
    p1 = folded_gaussian_probs(effective_std, q)
    eps = 0.5 * float(np.abs(p1 - 1.0 / q).sum())
    return min(max(eps, 0.0), (q - 1) / q)


def required_vector_norm(q: int, sigma: float, advantage: float) -> float:
    """Norm bound on v that achieves the target advantage:
    (q / (sigma * pi)) * sqrt(ln(1/advantage) / 2)."""
    if not (0.0 < advantage < 1.0):
        raise ParameterError(f"advantage must lie in (0, 1), got {advantage}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return (q / (sigma * math.pi)) * math.sqrt(math.log(1.0 / advantage) / 2.0)


def decide(p: int, threshold: int, q: int) -> str:
    """structured iff p lies in [0, threshold] or [q - threshold, q]."""
    if not (0 <= threshold <= q / 2):
        raise ParameterError(f"threshold must lie in [0, {q // 2}], got {threshold}")
    if not (0 <= p < q):
        raise ParameterError(f"inner product must lie in [0, {q}), got {p}")
    return "structured" if p <= threshold or p >= q - threshold else "uniform"


def model_threshold(effective_std: float, q: int) -> int:
    """Threshold maximizing decision accuracy under the folded model."""
    p1 = folded_gaussian_probs(effective_std, q)
    ds = np.minimum(np.arange(q), q - np.arange(q))
    best_t, best_acc = 0, -1.0
    for t in range(q // 2 + 1):
        mask = ds <= t
        acc = 0.5 * (p1[mask].sum() + 1.0 - mask.sum() / q)
        if acc > best_acc + 1e-15:
            best_acc, best_t = acc, t
    return best_t


def optimize_threshold(structured_ps, uniform_ps, q: int):
    """Exhaustive threshold scan maximizing labeled accuracy.

    Returns (threshold, accuracy); smallest maximizing threshold on ties.
    """
    sp = np.asarray(structured_ps, dtype=np.int64)
    up = np.asarray(uniform_ps, dtype=np.int64)
    if sp.size == 0 or up.size == 0:
        raise DegenerateDataError("need at least one inner product per label")
    half = q // 2
    ds = np.minimum(sp, q - sp)
    du = np.minimum(up, q - up)
    s_counts = np.bincount(ds, minlength=half + 1)[:half + 1]
    u_counts = np.bincount(du, minlength=half + 1)[:half + 1]
    s_cum = np.cumsum(s_counts)          # structured hits for each threshold
    u_cum = up.size - np.cumsum(u_counts)  # uniform correctly rejected
    correct = s_cum + u_cum
    t = int(np.argmax(correct))          # argmax takes the first maximum
    total = sp.size + up.size
    return t, float(correct[t]) / total


def significance_check(correct_a: int, correct_b: int, changed_instances: int) -> dict:
    """Random-walk significance of a correct-count difference.

    sigma = sqrt(2 R) over the R instances where the compared solvers
    actually produced different vectors; a difference beyond 8 sigma is
    flagged significant.
    """
    sigma = math.sqrt(2.0 * max(changed_instances, 0))
    delta = correct_a - correct_b
    return {
        "delta": int(delta),
        "sigma": sigma,
        "significant": bool(delta > 8.0 * sigma),
    }


def wilson_interval(successes: int, total: int, z: float = 1.96):
    """95% Wilson score interval; spans most of [0, 1] at tiny totals."""
    if total <= 0:
        return 0.0, 1.0
    phat = successes / total
    denom = 1.0 + z * z / total
    center = (phat + z * z / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z * z / (4 * total * total)) / denom
    return min(max(0.0, center - half), phat), max(min(1.0, center + half), phat)


# ---------------------------------------------------------------------------
# pipeline

@dataclass(frozen=True)
class QaoaSolverConfig:
    """Policy for the sampling-based short-vector search."""

    qubits_per_basis: int = 1
    pinned_qubits: int = 0
    pinned: int | None = None            # None sweeps every pinned index
    coefficient_range: str = "symmetric"
    span: str = "all"
    grid_points: int = 24
    iterations: int = 0
    learning_rate: float = 0.06
    step: float = 0.05
    shots: int = 2048
    layers: int = 1


@dataclass(frozen=True)
class PipelineResult:
    solver: str
    vector: np.ndarray
    norm_sq: int
    inner_product: int
    threshold: int
    decision: str
    norm_bound: float
    bound_met: bool
    basis: LatticeBasis
    b0_norm_sq: int
    extra: dict = field(default_factory=dict)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.nonzero(v)[0]
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


_ENUM_NODE_BUDGET = 25_000_000


def _exact_shortest(basis: LatticeBasis, enum_cap: int) -> np.ndarray:
    """Exact shortest vector with adaptive preprocessing.

    Strong reduction plus a node-budgeted search covers typical
    instances; the rare heavy search trees get a blockwise re-reduction
    before an unbounded retry. Deterministic either way.
    """
    strong = lll_reduce(basis.vectors, delta=0.99)
    try:
        return svp_enumerate(strong, dimension_cap=enum_cap,
                             canonical_ties=False, node_budget=_ENUM_NODE_BUDGET)
    except CapacityError as exc:
        if "node budget" not in str(exc):
            raise
    strong = bkz_reduce(strong, min(14, basis.dim), delta=0.99, max_sweeps=2)
    return svp_enumerate(strong, dimension_cap=enum_cap, canonical_ties=False)


def _qaoa_solver(basis: LatticeBasis, cfg: QaoaSolverConfig, seed: int):
    """Sweep pinned indices, optimize each register on a grid (optionally
    refined by gradient descent), sample, and keep the lowest-energy
    nonzero decoded vector."""
    m = basis.dim
    pinned_list = range(m) if cfg.pinned is None else [cfg.pinned]
    best = None
    for r in pinned_list:
        counts = [cfg.qubits_per_basis] * m
        counts[r] = cfg.pinned_qubits
        ham = encode_nonzero(basis, counts, r,
                             coefficient_range=cfg.coefficient_range, span=cfg.span)
        diag = hamiltonian_diagonal(ham)
        scale = default_scale(diag)
        betas = np.linspace(0.0, math.pi, cfg.grid_points, endpoint=False)
        gammas = np.linspace(0.0, 2.0 * math.pi * scale, cfg.grid_points, endpoint=False)
        surface = landscape_scan(diag, betas, gammas, scale)
        bi, gj = np.unravel_index(int(np.argmin(surface)), surface.shape)
        theta = np.array([betas[bi]] * cfg.layers + [gammas[gj] / scale] * cfg.layers)
        if cfg.iterations > 0:
            opt = OptimizerConfig(learning_rate=cfg.learning_rate, step=cfg.step,
                                  max_iters=cfg.iterations)
            theta = gradient_descent(diag, theta, opt, scale=scale)[-1].theta
        params = QaoaParams(betas=theta[:cfg.layers],
                            gammas=theta[cfg.layers:] * scale, scale=scale)
        state = run_qaoa(diag, params)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
        hist = sample(state, cfg.shots, rng)
        for z in np.nonzero(hist)[0]:
            dec = decode(int(z), ham.encoding, basis)
            if dec.energy <= 0:
                continue
            key = (dec.energy, r, int(z))
            if best is None or key < best[0]:
                best = (key, dec.vector, {"pinned": r, "bitstring": int(z),
                                          "energy": dec.energy})
    if best is None:
        raise NotFoundError("sampling produced no nonzero lattice vector")
    return best[1], best[2]


def run_pipeline(instance: LweInstance, solver: str = "enum",
                 delta: float = 0.75,
                 block_size: int | None = None,
                 qaoa_config: QaoaSolverConfig | None = None,
                 seed: int | None = None,
                 target_advantage: float = DEFAULT_ADVANTAGE,
                 multi_vectors: bool = False,
                 enum_cap: int = 36) -> PipelineResult:
    """Kernel -> lattice -> short vector -> inner-product decision.

    The reported basis is always the delta-LLL reduction of the kernel
    generators with q*I; solvers pick their vector from it ("lll"), from
    a blockwise re-reduction ("bkz"), by exact enumeration ("enum", with
    stronger internal preprocessing), or by sampling optimized spin
    registers ("qaoa", seed required).
    """
    if solver not in SOLVERS:
        raise ParameterError(f"solver must be one of {SOLVERS}, got {solver!r}")
    params = instance.params
    q, m = params.q, params.m
    kern = kernel_mod_q(instance.A)
    basis = build_sis_lattice(kern, q, m, delta=delta)
    residues = np.mod(basis.vectors @ instance.A.entries, q)
    if residues.any():
        raise RuntimeError("lattice construction broke the kernel congruence")
    norms = basis.norms_sq()
    b0_norm_sq = int(norms.min())
    extra: dict = {}
    if solver == "lll":
        v = basis.vectors[int(np.argmin(norms))]
    elif solver == "bkz":
        if block_size is None:
            raise ParameterError("bkz solver needs a block size")
        reduced = bkz_reduce(basis, block_size, delta=delta)
        rnorms = reduced.norms_sq()
        v = reduced.vectors[int(np.argmin(rnorms))]
        extra["block_size"] = block_size
    elif solver == "enum":
        v = _exact_shortest(basis, enum_cap)
    else:
        if seed is None:
            raise ParameterError("qaoa solver needs an explicit seed")
        cfg = qaoa_config or QaoaSolverConfig()
        v, qinfo = _qaoa_solver(basis, cfg, seed)
        extra.update(qinfo)
    v = _canonical_sign(np.asarray(v, dtype=np.int64))
    norm_sq = int(v @ v)
    p = inner_product_mod_q(v, instance.c, q)
    bound = required_vector_norm(q, params.sigma, target_advantage)
    threshold = model_threshold(math.sqrt(norm_sq) * params.sigma, q)
    if multi_vectors:
        ps = []
        for row in basis.vectors:
            if float(row @ row) <= bound * bound + 1e-9:
                ps.append(inner_product_mod_q(row, instance.c, q))
        extra["basis_inner_products"] = ps
    return PipelineResult(
        solver=solver,
        vector=v,
        norm_sq=norm_sq,
        inner_product=p,
        threshold=threshold,
        decision=decide(p, threshold, q),
        norm_bound=bound,
        bound_met=math.sqrt(norm_sq) <= bound + 1e-12,
        basis=basis,
        b0_norm_sq=b0_norm_sq,
        extra=extra,
    )


@dataclass(frozen=True)
class RegisterStudy:
    """Grid-scan study of the best spin register for one lattice."""

    pinned: int
    diagonal: np.ndarray
    scale: float
    betas: np.ndarray
    gammas: np.ndarray
    surface: np.ndarray
    best_beta: float
    best_gamma: float
    ground_energy: int
    target_probability: float


def qaoa_enhancement(basis: LatticeBasis, qubits_per_basis: int = 1,
                     pinned_qubits: int = 0, coefficient_range: str = "binary",
                     span: str = "all", grid_points: int = 48) -> RegisterStudy:
    """Pick the register with the lowest ground energy and scan its
    single-layer landscape.

    Sweeps the pinned index, keeps the register whose exact ground energy
    is minimal (its ground state decodes to the shortest vector the
    registers can reach), grid-scans one full (beta, gamma) period and
    reports the exact probability of the ground manifold at the grid
    minimum of the energy surface.
    """
    m = basis.dim
    best = None
    for r in range(m):
        counts = [qubits_per_basis] * m
        counts[r] = pinned_qubits
        ham = encode_nonzero(basis, counts, r,
                             coefficient_range=coefficient_range, span=span)
        diag = hamiltonian_diagonal(ham)
        g = int(diag.min())
        if best is None or g < best[0]:
            best = (g, r, diag)
    ground, pinned, diag = best
    scale = default_scale(diag)
    betas = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    gammas = np.linspace(0.0, 2.0 * math.pi * scale, grid_points, endpoint=False)
    surface = landscape_scan(diag, betas, gammas, scale)
    bi, gj = np.unravel_index(int(np.argmin(surface)), surface.shape)
    state = run_qaoa(diag, QaoaParams([betas[bi]], [gammas[gj]], scale))
    prob = float((np.abs(state) ** 2)[diag == ground].sum())
    return RegisterStudy(
        pinned=pinned,
        diagonal=diag,
        scale=scale,
        betas=betas,
        gammas=gammas,
        surface=surface,
        best_beta=float(betas[bi]),
        best_gamma=float(gammas[gj]),
        ground_energy=ground,
        target_probability=prob,
    )


# ---------------------------------------------------------------------------
# ensembles

@dataclass(frozen=True)
class RepresentabilityStat:
    qubits: int
    overall: tuple        # (successes, total, fraction, lo, hi)
    conditional: tuple    # same, among instances with v0 shorter than b0


@dataclass(frozen=True)
class DecisionReport:
    params: LweParams
    instances_per_class: int
    solver: str
    seed: int
    threshold: int
    accuracy: float
    correct: int
    total: int
    hist_structured: np.ndarray
    hist_uniform: np.ndarray
    empirical_advantage: float
    v0_shorter: tuple     # (count, total, fraction, lo, hi)
    representability: list
    bound_met_fraction: float
    mean_norm: float

    def to_json(self) -> str:
        return json.dumps({
            "params": {"n": self.params.n, "m": self.params.m,
                       "q": self.params.q, "sigma": self.params.sigma},
            "instances_per_class": self.instances_per_class,
            "solver": self.solver,
            "seed": self.seed,
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "hist_structured": self.hist_structured.tolist(),
            "hist_uniform": self.hist_uniform.tolist(),
            "empirical_advantage": self.empirical_advantage,
            "v0_shorter": list(self.v0_shorter),
            "representability": [
                {"qubits": r.qubits, "overall": list(r.overall),
                 "conditional": list(r.conditional)}
                for r in self.representability
            ],
            "bound_met_fraction": self.bound_met_fraction,
            "mean_norm": self.mean_norm,
        }, sort_keys=True)


def _fraction_tuple(successes: int, total: int):
    frac = successes / total if total else 0.0
    lo, hi = wilson_interval(successes, total)
    return (successes, total, frac, lo, hi)


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for ensemble member `index`, spawned from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def monte_carlo(params: LweParams, instances_per_class: int,
                solver: str = "enum", qubit_counts=(1, 2, 3, 4),
                seed: int = 0, delta: float = 0.75,
                block_size: int | None = None,
                qaoa_config: QaoaSolverConfig | None = None,
                svp_stats: bool = True,
                enum_cap: int = 36) -> DecisionReport:
    """Fresh-instance study: M structured plus M uniform instances.

    Reports the optimal threshold with its accuracy, per-label histograms
    of p over Z_q, the fraction of lattices whose true shortest vector
    beats the best LLL vector, and (for each per-basis qubit count) how
    often the shortest vector's coefficients are representable in the
    symmetric encoding. Deterministic for a given master seed; instance i
    derives its generator from (seed, i), structured first.
    """
    if instances_per_class < 1:
        raise ParameterError("need at least one instance per class")
    M = instances_per_class
    q = params.q
    structured_ps, uniform_ps = [], []
    hist_s = np.zeros(q, dtype=np.int64)
    hist_u = np.zeros(q, dtype=np.int64)
    v0_shorter = 0
    repr_overall = {y: 0 for y in qubit_counts}
    repr_conditional = {y: 0 for y in qubit_counts}
    bound_met = 0
    norm_total = 0.0
    for i in range(2 * M):
        label = "structured" if i < M else "uniform"
        rng = instance_rng(seed, i)
        inst = gen_instance(params, label, rng)
        child_seed = int(rng.integers(0, 2 ** 62))
        res = run_pipeline(inst, solver=solver, delta=delta, block_size=block_size,
                           qaoa_config=qaoa_config, seed=child_seed,
                           enum_cap=enum_cap)
        p = res.inner_product
        if label == "structured":
            structured_ps.append(p)
            hist_s[p] += 1
        else:
            uniform_ps.append(p)
            hist_u[p] += 1
        bound_met += res.bound_met
        norm_total += math.sqrt(res.norm_sq)
        if svp_stats:
            if solver == "enum":
                v0 = res.vector
            else:
                v0 = _exact_shortest(res.basis, enum_cap)
            shorter = int(v0 @ v0) < res.b0_norm_sq
            v0_shorter += shorter
            coeffs = coefficients_in_basis(res.basis, v0)
            for y in qubit_counts:
                ok = representable(coeffs, [y] * params.m)
                repr_overall[y] += ok
                if shorter:
                    repr_conditional[y] += ok
    threshold, accuracy = optimize_threshold(structured_ps, uniform_ps, q)
    total = 2 * M
    correct = int(round(accuracy * total))
    f_s = hist_s / M
    f_u = hist_u / M
    emp_adv = 0.5 * float(np.abs(f_s - f_u).sum())
    reps = []
    if svp_stats:
        for y in qubit_counts:
            reps.append(RepresentabilityStat(
                qubits=int(y),
                overall=_fraction_tuple(repr_overall[y], total),
                conditional=_fraction_tuple(repr_conditional[y], v0_shorter),
            ))
    return DecisionReport(
        params=params,
        instances_per_class=M,
        solver=solver,
        seed=seed,
        threshold=threshold,
        accuracy=accuracy,
        correct=correct,
        total=total,
        hist_structured=hist_s,
        hist_uniform=hist_u,
        empirical_advantage=emp_adv,
        v0_shorter=_fraction_tuple(v0_shorter, total if svp_stats else 0),
        representability=reps,
        bound_met_fraction=bound_met / total,
        mean_norm=norm_total / total,
    )
