import cmath
import math

import numpy as np
import pytest

from lwekit.errors import ParameterError
from lwekit.qaoa import (OptimizerConfig, QaoaParams, apply_mixer, apply_phase,
                         default_scale, descend, expectation,
                         finite_diff_gradient, gradient_descent, landscape_scan,
                         run_qaoa, sample, uniform_state)


def random_state(rng, n):
    amps = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return amps / np.linalg.norm(amps)


# ---------------------------------------------------------------------------
# phase and mixer

def test_phase_zero_angle_is_identity():
    state = uniform_state(3)
    out = apply_phase(state, np.arange(8), 0.0)
    assert np.array_equal(out, state)


def test_phase_uniform_diagonal_is_global_phase():
    rng = np.random.default_rng(0)
    state = random_state(rng, 3)
    out = apply_phase(state, np.full(8, 7.0), 0.9)
    assert np.allclose(np.abs(out) ** 2, np.abs(state) ** 2, atol=1e-12)


def test_phase_single_qubit_amplitudes():
    state = uniform_state(1)
    out = apply_phase(state, np.array([1.0, -1.0]), math.pi / 4, 1.0)
    expected = np.array([cmath.exp(-1j * math.pi / 4),
                         cmath.exp(1j * math.pi / 4)]) / math.sqrt(2)
    assert np.allclose(out, expected, atol=1e-12)


def test_phase_shape_error():
    with pytest.raises(ParameterError):
        apply_phase(uniform_state(2), np.arange(5), 0.1)


def test_mixer_zero_angle_is_identity():
    rng = np.random.default_rng(1)
    state = random_state(rng, 3)
    assert np.allclose(apply_mixer(state, 0.0), state, atol=1e-15)


def test_mixer_half_pi_flips_all_bits():
    n = 3
    state = np.zeros(2 ** n, dtype=complex)
    state[0] = 1.0
    out = apply_mixer(state, math.pi / 2)
    expected = np.zeros(2 ** n, dtype=complex)
    expected[-1] = (-1j) ** n
    assert np.allclose(out, expected, atol=1e-12)


def test_mixer_quarter_pi_single_qubit():
    state = np.array([1.0, 0.0], dtype=complex)
    out = apply_mixer(state, math.pi / 4)
    expected = np.array([1.0, -1j]) / math.sqrt(2)
    assert np.allclose(out, expected, atol=1e-12)


def test_unitarity_on_random_circuits():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        diag = rng.integers(-20, 20, size=2 ** n).astype(float)
        state = uniform_state(n)
        for _ in range(4):
            state = apply_phase(state, diag, rng.normal(), default_scale(diag))
            state = apply_mixer(state, rng.normal())
        assert abs(np.linalg.norm(state) - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# full circuits

def test_zero_angles_give_uniform_state_and_mean_energy():
    diag = np.array([0.0, 5.0, 5.0, 10.0])
    params = QaoaParams([0.0], [0.0], scale=1.0)
    state = run_qaoa(diag, params)
    assert np.allclose(state, uniform_state(2), atol=1e-12)
    assert expectation(state, diag) == pytest.approx(diag.mean(), abs=1e-12)


def test_single_qubit_closed_form():
    diag = np.array([1.0, -1.0])
    for beta in np.linspace(0, math.pi, 7):
        for gamma in np.linspace(0, 2 * math.pi, 9):
            state = run_qaoa(diag, QaoaParams([beta], [gamma], scale=1.0))
            expected = math.sin(2 * beta) * math.sin(2 * gamma)
            assert expectation(state, diag) == pytest.approx(expected, abs=1e-9)


def test_target_probability_at_zero_angles_is_uniform():
    diag = np.arange(16, dtype=float)
    state = run_qaoa(diag, QaoaParams([0.0], [0.0], scale=1.0))
    probs = np.abs(state) ** 2
    assert np.allclose(probs, 1 / 16, atol=1e-12)


def test_multi_layer_supported():
    diag = np.array([0.0, 3.0, 1.0, 2.0])
    params = QaoaParams([0.3, 0.1], [0.2, 0.4], scale=default_scale(diag))
    state = run_qaoa(diag, params)
    assert abs(np.linalg.norm(state) - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# expectation

def test_expectation_basis_state():
    diag = np.array([3.0, 7.0, 1.0, 5.0])
    state = np.zeros(4, dtype=complex)
    state[2] = 1.0
    assert expectation(state, diag) == pytest.approx(1.0, abs=1e-14)


def test_expectation_two_paths_agree():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        diag = rng.normal(size=2 ** n)
        state = random_state(rng, n)
        via_probs = expectation(state, diag)
        via_quadratic_form = float(np.vdot(state, diag * state).real)
        assert via_probs == pytest.approx(via_quadratic_form, abs=1e-10)
        assert diag.min() - 1e-12 <= via_probs <= diag.max() + 1e-12


def test_expectation_shape_error():
    with pytest.raises(ParameterError):
        expectation(uniform_state(2), np.arange(8))


# ---------------------------------------------------------------------------
# gradients and descent

def test_gradient_of_constant_cost_is_zero():
    grad = finite_diff_gradient(lambda t: 4.0, np.array([0.3, 0.4]), step=0.05)
    assert np.allclose(grad, 0.0)


def test_gradient_matches_analytic_derivative():
    def cost(t):
        return math.sin(2 * t[0]) * math.sin(2 * t[1])

    theta = np.array([math.pi / 8, math.pi / 8])
    grad = finite_diff_gradient(cost, theta, step=1e-6)
    expected = 2 * math.cos(math.pi / 4) * math.sin(math.pi / 4)
    assert grad[0] == pytest.approx(expected, abs=1e-4)
    assert grad[1] == pytest.approx(expected, abs=1e-4)


def test_gradient_truncation_error_halves_with_step():
    # forward difference on x^2 at x=1 has error exactly equal to the step
    def cost(t):
        return float(t[0] ** 2)

    err1 = finite_diff_gradient(cost, np.array([1.0]), step=0.1)[0] - 2.0
    err2 = finite_diff_gradient(cost, np.array([1.0]), step=0.05)[0] - 2.0
    assert err1 / err2 == pytest.approx(2.0, rel=1e-6)


def test_central_difference_flag():
    def cost(t):
        return float(t[0] ** 2)

    grad = finite_diff_gradient(cost, np.array([1.0]), step=0.1, central=True)
    assert grad[0] == pytest.approx(2.0, abs=1e-12)


def test_descend_stops_at_stationary_point():
    traj = descend(lambda t: 1.0, np.array([0.1, 0.2]),
                   OptimizerConfig(max_iters=50))
    assert len(traj) == 1


def test_descend_quadratic_bowl_geometric_rate():
    curvature = 3.0
    lr = 0.06

    def cost(t):
        return float(curvature * t[0] ** 2)

    cfg = OptimizerConfig(learning_rate=lr, step=1e-7, max_iters=10, grad_tol=0.0)
    traj = descend(cost, np.array([1.0]), cfg)
    rate = abs(1 - 2 * lr * curvature)
    for k in range(1, 6):
        assert traj[k].theta[0] == pytest.approx(rate ** k, rel=1e-3)


def test_gradient_descent_records_trajectory(tmp_path):
    diag = np.array([0.0, 5.0, 5.0, 10.0])
    csv = tmp_path / "traj.csv"
    traj = gradient_descent(diag, [0.4, 0.5], OptimizerConfig(max_iters=4),
                            scale=default_scale(diag), csv_path=csv)
    assert 1 <= len(traj) <= 5
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "iteration,beta_1,gamma_scaled_1,energy"
    assert len(lines) == len(traj) + 1
    # energies recorded unscaled
    assert diag.min() <= traj[0].energy <= diag.max()


def test_gradient_descent_zero_iterations():
    diag = np.array([0.0, 1.0, 2.0, 3.0])
    traj = gradient_descent(diag, [0.3, 0.2], OptimizerConfig(max_iters=0))
    assert len(traj) == 1


def test_gradient_descent_validates_theta():
    with pytest.raises(ParameterError):
        gradient_descent(np.arange(4), [0.1, 0.2, 0.3])


# ---------------------------------------------------------------------------
# landscape

def test_landscape_single_point():
    diag = np.array([0.0, 5.0, 5.0, 10.0])
    surface = landscape_scan(diag, [0.3], [0.7], scale=1.0)
    state = run_qaoa(diag, QaoaParams([0.3], [0.7], scale=1.0))
    assert surface[0, 0] == pytest.approx(expectation(state, diag), abs=1e-12)


def test_landscape_beta_periodicity():
    diag = np.array([0.0, 5.0, 5.0, 10.0])
    a = landscape_scan(diag, [0.4], [0.9], scale=1.0)
    b = landscape_scan(diag, [0.4 + math.pi], [0.9], scale=1.0)
    assert abs(a[0, 0] - b[0, 0]) < 1e-9


def test_landscape_gamma_periodicity_integer_spectrum():
    diag = np.array([0.0, 5.0, 5.0, 10.0])
    a = landscape_scan(diag, [0.4], [0.9], scale=1.0)
    b = landscape_scan(diag, [0.4], [0.9 + 2 * math.pi], scale=1.0)
    assert abs(a[0, 0] - b[0, 0]) < 1e-9
    scale = default_scale(diag)
    c = landscape_scan(diag, [0.4], [0.9], scale=scale)
    d = landscape_scan(diag, [0.4], [0.9 + 2 * math.pi * scale], scale=scale)
    assert abs(c[0, 0] - d[0, 0]) < 1e-9


def test_landscape_csv(tmp_path):
    diag = np.array([0.0, 1.0])
    csv = tmp_path / "scan.csv"
    surface = landscape_scan(diag, [0.1, 0.2], [0.3, 0.4], scale=1.0, csv_path=csv)
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "beta,gamma,energy"
    assert len(lines) == 5
    assert surface.shape == (2, 2)


def test_landscape_empty_grid_rejected():
    with pytest.raises(ParameterError):
        landscape_scan(np.array([0.0, 1.0]), [], [0.1])


# ---------------------------------------------------------------------------
# sampling

def test_sample_basis_state_concentrates():
    state = np.zeros(8, dtype=complex)
    state[5] = 1.0
    counts = sample(state, 1000, 42)
    assert counts[5] == 1000
    assert counts.sum() == 1000


def test_sample_uniform_within_binomial_bounds():
    counts = sample(uniform_state(5), 10 ** 5, 7)
    p = 1 / 32
    sigma = math.sqrt(10 ** 5 * p * (1 - p))
    assert np.all(np.abs(counts - 10 ** 5 * p) <= 5 * sigma)


def test_sample_deterministic_for_fixed_seed():
    state = run_qaoa(np.arange(8, dtype=float), QaoaParams([0.3], [0.4], scale=7.0))
    a = sample(state, 2048, 123)
    b = sample(state, 2048, 123)
    assert np.array_equal(a, b)


def test_sample_rejects_bad_shots():
    with pytest.raises(ParameterError):
        sample(uniform_state(2), 0, 1)


def test_params_validation():
    with pytest.raises(ParameterError):
        QaoaParams([0.1], [0.2, 0.3])
    with pytest.raises(ParameterError):
        QaoaParams([0.1], [0.2], scale=0.0)
    with pytest.raises(ParameterError):
        OptimizerConfig(learning_rate=-1.0)
