import json
import math

import numpy as np
import pytest
from scipy import stats

import oracles
from lwekit.errors import DegenerateDataError, ParameterError
from lwekit.lwe import (LweInstance, LweParams, QaoaSolverConfig, decide,
                        folded_gaussian_advantage, folded_gaussian_probs,
                        gaussian_support, gen_instance, inner_product_mod_q,
                        instance_rng, model_threshold, monte_carlo,
                        optimize_threshold, qaoa_enhancement,
                        required_vector_norm, run_pipeline,
                        sample_discrete_gaussian, significance_check,
                        wilson_interval)

IVB = LweParams(2, 6, 17, 1.2)


# ---------------------------------------------------------------------------
# parameters and instances

def test_params_validation():
    with pytest.raises(ParameterError):
        LweParams(3, 2, 17, 1.0)
    with pytest.raises(ParameterError):
        LweParams(0, 2, 17, 1.0)
    with pytest.raises(ParameterError):
        LweParams(2, 6, 1, 1.0)
    with pytest.raises(ParameterError):
        LweParams(2, 6, 17, 0.0)


def test_structured_instance_satisfies_witness():
    for i in range(20):
        inst = gen_instance(IVB, "structured", instance_rng(5, i))
        assert inst.validate()
        lhs = np.mod(inst.A.entries @ inst.s + inst.e - inst.c, 17)
        assert not lhs.any()


def test_uniform_instance_has_no_witness():
    inst = gen_instance(IVB, "uniform", instance_rng(5, 0))
    assert inst.s is None and inst.e is None
    assert inst.validate()


def test_instance_generation_deterministic():
    a = gen_instance(IVB, "structured", instance_rng(9, 3))
    b = gen_instance(IVB, "structured", instance_rng(9, 3))
    assert a.to_json() == b.to_json()


def test_instance_json_round_trip():
    inst = gen_instance(IVB, "structured", instance_rng(4, 0))
    again = LweInstance.from_json(inst.to_json())
    assert again.to_json() == inst.to_json()
    data = json.loads(inst.to_json())
    assert set(data) == {"params", "label", "A", "c", "s", "e"}


def test_tiny_sigma_collapses_error_to_zero():
    params = LweParams(2, 6, 17, 1e-12)
    inst = gen_instance(params, "structured", instance_rng(1, 0))
    assert not inst.e.any()
    lhs = np.mod(inst.A.entries @ inst.s - inst.c, 17)
    assert not lhs.any()


def test_gen_instance_rejects_unknown_kind():
    with pytest.raises(ParameterError):
        gen_instance(IVB, "other", instance_rng(1, 0))


# ---------------------------------------------------------------------------
# discrete Gaussian

def test_gaussian_support_symmetric_probabilities():
    z, p = gaussian_support(3.2)
    assert np.array_equal(z, -z[::-1])
    assert np.allclose(p, p[::-1], atol=0)  # exact by construction


def test_gaussian_sampler_moments():
    z, p = gaussian_support(3.2)
    model_std = math.sqrt(float((z.astype(float) ** 2 * p).sum()))
    rng = np.random.default_rng(12345)
    draws = sample_discrete_gaussian(3.2, rng, size=10 ** 6)
    assert abs(draws.mean()) <= 5 * model_std / 1000.0
    assert abs(draws.std() - 3.2) <= 0.032
    assert np.abs(draws).max() <= math.ceil(32.0)


def test_gaussian_sampler_tiny_sigma():
    rng = np.random.default_rng(0)
    draws = sample_discrete_gaussian(1e-9, rng, size=1000)
    assert not draws.any()


def test_gaussian_sampler_scalar_and_errors():
    rng = np.random.default_rng(0)
    assert isinstance(sample_discrete_gaussian(1.0, rng), int)
    with pytest.raises(ParameterError):
        sample_discrete_gaussian(0.0, rng)


# ---------------------------------------------------------------------------
# inner products

def test_inner_product_zero_vector():
    assert inner_product_mod_q(np.zeros(3, dtype=int), np.array([1, 2, 3]), 17) == 0


def test_inner_product_wraps():
    assert inner_product_mod_q(np.array([1, 1]), np.array([9, 9]), 17) == 1


def test_inner_product_length_mismatch():
    with pytest.raises(ParameterError):
        inner_product_mod_q(np.array([1]), np.array([1, 2]), 17)


def test_inner_product_collapses_to_error_term():
    for i in range(20):
        inst = gen_instance(IVB, "structured", instance_rng(21, i))
        res = run_pipeline(inst, solver="lll")
        expected = inner_product_mod_q(res.vector, inst.e, 17)
        assert res.inner_product == expected


# ---------------------------------------------------------------------------
# folded Gaussian statistics

def test_advantage_point_mass_limit():
    for q in (17, 139):
        assert folded_gaussian_advantage(1e-9, q) == pytest.approx((q - 1) / q, abs=1e-15)


def test_advantage_monotone_in_effective_std():
    values = [folded_gaussian_advantage(s, 139) for s in np.linspace(0.5, 120, 40)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_advantage_vanishes_for_wide_gaussians():
    assert folded_gaussian_advantage(1000.0, 17) < 1e-6


def test_advantage_matches_reference_model():
    for std, q in ((5.0, 17), (44.25, 139), (2.0, 101)):
        ref = 0.5 * float(np.abs(oracles.folded_model(std, q) - 1 / q).sum())
        assert folded_gaussian_advantage(std, q) == pytest.approx(ref, rel=1e-6)


def test_advantage_at_design_point_shows_convention_gap():
    # the norm bound is calibrated against the exponential bias, which
    # exceeds the total-variation distance by roughly pi/2 in this regime
    eps = folded_gaussian_advantage(13.8266 * 3.2, 139)
    bias = math.exp(-2.0)
    assert eps == pytest.approx(bias * 2 / math.pi, rel=0.02)


def test_required_norm_formula():
    assert required_vector_norm(139, 3.2, math.exp(-1)) == pytest.approx(
        (139 / (3.2 * math.pi)) * math.sqrt(0.5), abs=1e-12)
    assert required_vector_norm(139, 3.2, math.exp(-2)) == pytest.approx(13.8266, abs=1e-3)


def test_required_norm_monotonicity():
    base = required_vector_norm(139, 3.2, 0.2)
    assert required_vector_norm(139, 3.2, 0.4) < base
    assert required_vector_norm(151, 3.2, 0.2) > base


def test_required_norm_domain():
    with pytest.raises(ParameterError):
        required_vector_norm(17, 1.0, 0.0)
    with pytest.raises(ParameterError):
        required_vector_norm(17, 1.0, 1.0)
    with pytest.raises(ParameterError):
        required_vector_norm(17, 0.0, 0.5)


# ---------------------------------------------------------------------------
# decisions and thresholds

def test_decide_zero_is_structured():
    assert decide(0, 0, 17) == "structured"


def test_decide_middle_is_uniform():
    assert decide(8, 2, 17) == "uniform"


def test_decide_paper_boundary():
    assert decide(31, 30, 139) == "uniform"
    assert decide(109, 30, 139) == "structured"
    assert decide(30, 30, 139) == "structured"
    assert decide(139 - 30, 30, 139) == "structured"


def test_decide_validates_inputs():
    with pytest.raises(ParameterError):
        decide(3, 70, 139)
    with pytest.raises(ParameterError):
        decide(139, 30, 139)


def test_model_threshold_tracks_spread():
    narrow = model_threshold(1.0, 139)
    wide = model_threshold(30.0, 139)
    assert 0 < narrow < wide <= 69


def test_optimize_threshold_separated():
    t, acc = optimize_threshold([0, 0, 0], [8, 9, 8], 17)
    assert acc == 1.0
    assert t < 8


def test_optimize_threshold_no_signal():
    rng = np.random.default_rng(3)
    ps = rng.integers(0, 17, size=2000)
    t, acc = optimize_threshold(ps[:1000], ps[1000:], 17)
    assert 0.45 <= acc <= 0.58


def test_optimize_threshold_prefers_smallest_tie():
    # all structured at 0, all uniform at 5 (q = 11): thresholds 0..4 tie
    t, acc = optimize_threshold([0, 0], [5, 5], 11)
    assert (t, acc) == (0, 1.0)


def test_optimize_threshold_single_class():
    with pytest.raises(DegenerateDataError):
        optimize_threshold([], [1, 2], 17)


def test_significance_check_math():
    out = significance_check(600, 300, 400)
    assert out["delta"] == 300
    assert out["sigma"] == pytest.approx(math.sqrt(800))
    assert out["significant"] is True
    assert significance_check(310, 300, 400)["significant"] is False


def test_wilson_interval_degenerate():
    lo, hi = wilson_interval(0, 1)
    assert lo == 0.0 and hi > 0.7
    lo, hi = wilson_interval(1, 1)
    assert hi == 1.0 and lo < 0.3


# ---------------------------------------------------------------------------
# pipeline

def test_pipeline_vector_is_in_kernel_lattice():
    for solver in ("lll", "enum"):
        for i in range(10):
            inst = gen_instance(IVB, "structured", instance_rng(41, i))
            res = run_pipeline(inst, solver=solver)
            assert not np.mod(res.vector @ inst.A.entries, 17).any()
            assert res.norm_sq == int(res.vector @ res.vector)


def test_pipeline_enum_never_longer_than_lll():
    for i in range(10):
        inst = gen_instance(IVB, "structured", instance_rng(43, i))
        enum_res = run_pipeline(inst, solver="enum")
        lll_res = run_pipeline(inst, solver="lll")
        assert enum_res.norm_sq <= lll_res.norm_sq
        assert enum_res.norm_sq <= enum_res.b0_norm_sq


def test_pipeline_bkz_solver():
    inst = gen_instance(IVB, "structured", instance_rng(44, 0))
    res = run_pipeline(inst, solver="bkz", block_size=6)
    exact = run_pipeline(inst, solver="enum")
    assert res.norm_sq == exact.norm_sq
    with pytest.raises(ParameterError):
        run_pipeline(inst, solver="bkz")


def test_pipeline_unknown_solver():
    inst = gen_instance(IVB, "structured", instance_rng(44, 1))
    with pytest.raises(ParameterError):
        run_pipeline(inst, solver="sieve")


def test_pipeline_structured_concentration_matches_model():
    # fraction of p values inside the decision band approaches the folded
    # model's mass for the band
    hits = 0
    band_mass = []
    n_trials = 300
    for i in range(n_trials):
        inst = gen_instance(IVB, "structured", instance_rng(47, i))
        res = run_pipeline(inst, solver="enum")
        t = res.threshold
        hits += res.inner_product <= t or res.inner_product >= 17 - t
        model = oracles.folded_model(math.sqrt(res.norm_sq) * 1.2, 17)
        ds = np.minimum(np.arange(17), 17 - np.arange(17))
        band_mass.append(model[ds <= t].sum())
    expected = float(np.mean(band_mass))
    assert hits / n_trials == pytest.approx(expected, abs=0.08)


def test_pipeline_uniform_inner_products_pass_chi_square():
    ps = []
    for i in range(1000):
        inst = gen_instance(IVB, "uniform", instance_rng(53, i))
        res = run_pipeline(inst, solver="lll")
        ps.append(res.inner_product)
    counts = np.bincount(ps, minlength=17)
    assert stats.chisquare(counts).pvalue > 0.01


def test_pipeline_qaoa_solver_finds_short_vector():
    inst = gen_instance(IVB, "structured", instance_rng(59, 0))
    exact = run_pipeline(inst, solver="enum")
    res = run_pipeline(inst, solver="qaoa", seed=11,
                       qaoa_config=QaoaSolverConfig(coefficient_range="binary"))
    assert not np.mod(res.vector @ inst.A.entries, 17).any()
    assert res.extra["energy"] == res.norm_sq
    assert res.norm_sq == exact.norm_sq  # exhaustive sampling at this size
    with pytest.raises(ParameterError):
        run_pipeline(inst, solver="qaoa")  # seed required


def test_pipeline_min_ground_over_registers_is_exact():
    for i in range(10):
        inst = gen_instance(IVB, "structured", instance_rng(31337, i))
        res = run_pipeline(inst, solver="enum")
        study = qaoa_enhancement(res.basis)
        assert study.ground_energy == res.norm_sq


def test_pipeline_multi_vector_flag():
    inst = gen_instance(IVB, "structured", instance_rng(61, 0))
    res = run_pipeline(inst, solver="enum", multi_vectors=True)
    ps = res.extra["basis_inner_products"]
    assert ps, "reduced basis offers at least one vector under the bound"
    bound_sq = res.norm_bound ** 2
    rows = [row for row in res.basis.vectors if row @ row <= bound_sq + 1e-9]
    assert len(ps) == len(rows)


def test_pipeline_bound_reporting():
    inst = gen_instance(IVB, "structured", instance_rng(63, 0))
    res = run_pipeline(inst, solver="enum")
    assert res.norm_bound == pytest.approx(required_vector_norm(17, 1.2, math.exp(-2)))
    assert res.bound_met == (math.sqrt(res.norm_sq) <= res.norm_bound + 1e-12)


# ---------------------------------------------------------------------------
# ensembles

def test_monte_carlo_degenerate_single_instance():
    report = monte_carlo(IVB, 1, solver="lll", seed=0, qubit_counts=(2,))
    lo, hi = report.v0_shorter[3], report.v0_shorter[4]
    assert hi - lo > 0.5  # error bars stay wide at M = 1
    assert report.total == 2


def test_monte_carlo_deterministic():
    a = monte_carlo(IVB, 5, solver="enum", seed=7, qubit_counts=(1, 2))
    b = monte_carlo(IVB, 5, solver="enum", seed=7, qubit_counts=(1, 2))
    assert a.to_json() == b.to_json()


def test_monte_carlo_report_contents():
    report = monte_carlo(IVB, 30, solver="enum", seed=70, qubit_counts=(1, 2, 3))
    assert report.hist_structured.sum() == 30
    assert report.hist_uniform.sum() == 30
    assert 0 <= report.empirical_advantage <= 1
    assert 0 <= report.accuracy <= 1
    assert 0 <= report.threshold <= 8
    assert len(report.representability) == 3
    for stat in report.representability:
        k, n, frac, lo, hi = stat.overall
        assert 0 <= lo <= frac <= hi <= 1
        assert n == 60
    data = json.loads(report.to_json())
    assert "representability" in data and "hist_structured" in data


def test_monte_carlo_accuracy_beats_chance_at_small_sigma():
    params = LweParams(2, 6, 17, 0.5)
    report = monte_carlo(params, 150, solver="enum", seed=71, svp_stats=False)
    assert report.accuracy > 0.75


def test_sampling_rule_ensemble_classification():
    # ceil(1/eps^2) draws per ensemble separate the folded model from
    # uniform with accuracy above 90% under the likelihood-ratio test
    q = 17
    for std, seed in ((2.0, 99), (3.0, 99)):
        eps = folded_gaussian_advantage(std, q)
        K = math.ceil(1 / eps ** 2)
        p1 = folded_gaussian_probs(std, q)
        rng = np.random.default_rng(seed)
        llr = np.log(p1 * q)
        wins = 0
        trials = 400
        for _ in range(trials):
            wins += llr[rng.choice(q, size=K, p=p1)].sum() > 0
            wins += llr[rng.integers(0, q, size=K)].sum() <= 0
        assert wins / (2 * trials) > 0.9


def test_error_distribution_matches_folded_model_chi_square():
    # fixed kernel vector, fresh error draws: <v, e> mod q follows the
    # folded Gaussian with std |v| sigma
    inst = gen_instance(IVB, "structured", instance_rng(83, 0))
    res = run_pipeline(inst, solver="enum")
    v = res.vector
    std = math.sqrt(res.norm_sq) * 1.2
    rng = np.random.default_rng(2024)
    draws = 10 ** 4
    ps = np.empty(draws, dtype=np.int64)
    for t in range(draws):
        e = sample_discrete_gaussian(1.2, rng, size=6)
        ps[t] = inner_product_mod_q(v, e, 17)
    counts = np.bincount(ps, minlength=17)
    expected = oracles.folded_model(std, 17) * draws
    # merge bins with small expectation into one tail class
    keep = expected >= 5
    if keep.all():
        obs, exp = counts.astype(float), expected
    else:
        obs = np.append(counts[keep], counts[~keep].sum()).astype(float)
        exp = np.append(expected[keep], expected[~keep].sum())
        if exp[-1] < 1e-9:
            obs, exp = obs[:-1], exp[:-1]
    exp = exp * (obs.sum() / exp.sum())
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_matched_ensembles_significance():
    # shorter vectors give significantly more correct decisions than the
    # trivial lattice member q*e_1 on the same instances
    params = LweParams(2, 6, 17, 0.5)
    M = 600
    m1 = m2 = changed = 0
    weak = 17 * np.eye(6, dtype=np.int64)[0]
    for i in range(2 * M):
        label = "structured" if i < M else "uniform"
        inst = gen_instance(params, label, instance_rng(777, i))
        res = run_pipeline(inst, solver="enum")
        p_weak = inner_product_mod_q(weak, inst.c, 17)
        m1 += decide(res.inner_product, res.threshold, 17) == label
        m2 += decide(p_weak, 8, 17) == label
        changed += int(weak @ weak) != res.norm_sq
    out = significance_check(m1, m2, changed)
    assert m1 > m2
    assert out["significant"], (m1, m2, changed)
