"""Dense state-vector simulation of QAOA over a diagonal Hamiltonian.

One layer applies the phase factor exp(-i*gamma*E/scale) per basis state
first and the transverse mixer exp(-i*beta*X) per qubit second. The
energy scale keeps gamma dimensionless when diagonal entries are large;
by default it is max|E| so the useful gamma window stays O(2*pi*scale).

Angle vectors for the optimizer are laid out [beta_1..beta_p,
gamma_1..gamma_p].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, ParameterError

QUBIT_CAP = 24


def default_scale(diagonal) -> float:
    """Default energy scale: max|E|, or 1 for an all-zero table."""
    m = float(np.max(np.abs(np.asarray(diagonal))))
    return m if m > 0 else 1.0


@dataclass(frozen=True)
class QaoaParams:
    """Per-layer angles and the energy scale dividing H in the phase."""

    betas: tuple
    gammas: tuple
    scale: float = 1.0

    def __post_init__(self):
        betas = tuple(float(b) for b in np.atleast_1d(self.betas))
        gammas = tuple(float(g) for g in np.atleast_1d(self.gammas))
        if len(betas) != len(gammas) or not betas:
            raise ParameterError("need one (beta, gamma) pair per layer")
        if self.scale <= 0:
            raise ParameterError("scale must be positive")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "gammas", gammas)

    @property
    def layers(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.06
    step: float = 0.05           # finite-difference step
    max_iters: int = 8
    grad_tol: float = 1e-4
    central: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0 or self.step <= 0:
            raise ParameterError("learning rate and step must be positive")


def _n_qubits(diagonal) -> int:
    size = len(diagonal)
    n = size.bit_length() - 1
    if size != 1 << n:
        raise ParameterError(f"diagonal length {size} is not a power of two")
    return n


def uniform_state(n_qubits: int) -> np.ndarray:
    if n_qubits > QUBIT_CAP:
        raise CapacityError(f"state capped at {QUBIT_CAP} qubits, got {n_qubits}")
    size = 1 << n_qubits
    return np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)


def apply_phase(state: np.ndarray, diagonal, gamma: float, scale: float = 1.0) -> np.ndarray:
    """Multiply each amplitude by exp(-i*gamma*E/scale). Norm preserving."""
    diag = np.asarray(diagonal, dtype=np.float64)
    if diag.shape != state.shape:
        raise ParameterError(
            f"diagonal length {diag.shape} does not match state {state.shape}")
    if scale <= 0:
        raise ParameterError("scale must be positive")
    return state * np.exp(-1j * gamma * diag / scale)


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply cos(beta) I - i sin(beta) X on every qubit. Norm preserving."""
    n = _n_qubits(state)
    out = state
    cb = math.cos(beta)
    sb = math.sin(beta)
    for u in range(n):
        shaped = out.reshape(1 << (n - 1 - u), 2, 1 << u)
        a0 = shaped[:, 0, :]
        a1 = shaped[:, 1, :]
        new = np.empty_like(shaped)
        new[:, 0, :] = cb * a0 - 1j * sb * a1
        new[:, 1, :] = cb * a1 - 1j * sb * a0
        out = new.reshape(out.shape)
    return out


def run_qaoa(diagonal, params: QaoaParams) -> np.ndarray:
    """State after p layers of phase-then-mixer applied to |+...+>."""
    n = _n_qubits(diagonal)
    state = uniform_state(n)
    for beta, gamma in zip(params.betas, params.gammas):
        state = apply_phase(state, diagonal, gamma, params.scale)
        state = apply_mixer(state, beta)
    return state


def expectation(state: np.ndarray, diagonal) -> float:
    """<H> = sum_z |amp_z|^2 E_z."""
    diag = np.asarray(diagonal, dtype=np.float64)
    if diag.shape != state.shape:
        raise ParameterError(
            f"diagonal length {diag.shape} does not match state {state.shape}")
    probs = np.abs(state) ** 2
    return float(np.sum(probs * diag))


def sample(state: np.ndarray, shots: int, seed) -> np.ndarray:
    """Multinomial counts over basis states, deterministic for a seed."""
    if shots < 1:
        raise ParameterError(f"shots must be at least 1, got {shots}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    probs = np.abs(state) ** 2
    probs = probs / probs.sum()
    return rng.multinomial(shots, probs)


def finite_diff_gradient(cost, theta, step: float = 0.05, central: bool = False) -> np.ndarray:
    """Forward-difference gradient of cost at theta (central behind a flag)."""
    if step <= 0:
        raise ParameterError("step must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    base = cost(theta) if not central else None
    for u in range(theta.size):
        up = theta.copy()
        up[u] += step
        if central:
            down = theta.copy()
            down[u] -= step
            grad[u] = (cost(up) - cost(down)) / (2 * step)
        else:
            grad[u] = (cost(up) - base) / step
    return grad


@dataclass(frozen=True)
class TrajectoryPoint:
    theta: np.ndarray
    energy: float


def descend(cost, theta0, config: OptimizerConfig | None = None) -> list:
    """Plain gradient descent on an arbitrary cost over angle vectors.

    Records every iterate as a TrajectoryPoint starting with theta0;
    stops after max_iters updates or when the gradient norm drops below
    grad_tol. Non-convergence is an outcome, not an error.
    """
    config = config or OptimizerConfig()
    theta = np.asarray(theta0, dtype=np.float64).copy()
    traj = [TrajectoryPoint(theta.copy(), float(cost(theta)))]
    for _ in range(config.max_iters):
        grad = finite_diff_gradient(cost, theta, step=config.step, central=config.central)
        if float(np.linalg.norm(grad)) < config.grad_tol:
            break
        theta = theta - config.learning_rate * grad
        traj.append(TrajectoryPoint(theta.copy(), float(cost(theta))))
    return traj


def gradient_descent(diagonal, theta0, config: OptimizerConfig | None = None,
                     scale: float | None = None, csv_path=None) -> list:
    """Gradient descent on the QAOA energy in scale units.

    theta is [beta_1..beta_p, gamma_1..gamma_p] with the gamma entries in
    units of the energy scale (the dimensionless angles the rescaled
    Hamiltonian sees), and the descended cost is E/scale, so one learning
    rate suits both axes. Recorded energies are the raw expectations.
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    if theta.size % 2 != 0 or theta.size == 0:
        raise ParameterError("theta must hold p betas followed by p gammas")
    if scale is None:
        scale = default_scale(diagonal)

    def cost(th):
        p = th.size // 2
        params = QaoaParams(betas=th[:p], gammas=th[p:] * scale, scale=scale)
        return expectation(run_qaoa(diagonal, params), diagonal) / scale

    traj = [TrajectoryPoint(pt.theta, pt.energy * scale)
            for pt in descend(cost, theta, config)]
    if csv_path is not None:
        p = traj[0].theta.size // 2
        with open(csv_path, "w") as fh:
            beta_cols = ",".join(f"beta_{i+1}" for i in range(p))
            gamma_cols = ",".join(f"gamma_scaled_{i+1}" for i in range(p))
            fh.write(f"iteration,{beta_cols},{gamma_cols},energy\n")
            for it, pt in enumerate(traj):
                angles = ",".join(f"{a:.12g}" for a in pt.theta)
                fh.write(f"{it},{angles},{pt.energy:.12g}\n")
    return traj


def landscape_scan(diagonal, betas, gammas, scale: float | None = None,
                   csv_path=None) -> np.ndarray:
    """Single-layer energy surface E[i, j] over beta[i], gamma[j]."""
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=np.float64))
    if betas.size < 1 or gammas.size < 1:
        raise ParameterError("grid must be nonempty")
    if scale is None:
        scale = default_scale(diagonal)
    n = _n_qubits(diagonal)
    diag = np.asarray(diagonal, dtype=np.float64)
    surface = np.empty((betas.size, gammas.size))
    for j, g in enumerate(gammas):
        phased = apply_phase(uniform_state(n), diag, g, scale)
        for i, b in enumerate(betas):
            surface[i, j] = expectation(apply_mixer(phased, b), diag)
    if csv_path is not None:
        with open(csv_path, "w") as fh:
            fh.write("beta,gamma,energy\n")
            for i, b in enumerate(betas):
                for j, g in enumerate(gammas):
                    fh.write(f"{b:.12g},{g:.12g},{surface[i, j]:.12g}\n")
    return surface
