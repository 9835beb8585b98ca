import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surechan.channels import cfr_autocorrelation, draw_cir, load_profile
from surechan.core import ObservationPair, build_shift_matrix, channel_gains, dft, observe_preamble
from surechan.estimators import (DegenerateObservationError, EstimatorSpec, SureLetParams, estimate_cir_threshold,
                                 estimate_james_stein, estimate_lmmse, estimate_ml, estimate_sure_let,
                                 estimate_sure_linear, hard_threshold, let_complement, lmmse_noiseless_limit, let_residual, lmmse_matrix,
                                 plugin_divergence, reference_thresholds, run_estimator, soft_threshold,
                                 sure_linear_weights, sure_risk, threshold_grid)


def tu6_observation(K, sigma2, seed):
    rng = np.random.default_rng(seed)
    h = channel_gains(draw_cir(load_profile("tu6"), rng), K)
    return h, observe_preamble(h, sigma2, rng)


def random_obs(K, sigma2, seed, taps=3):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(taps) + 1j * rng.standard_normal(taps)
    h = channel_gains(g / np.linalg.norm(g), K)
    return h, observe_preamble(h, sigma2, rng)


# ------------------------------------------------------------------ risk


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0))
def test_risk_of_identity_is_sigma2(seed, sigma2):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    rep = sure_risk(y, y, 16, sigma2)
    assert rep.epsilon == pytest.approx(sigma2, abs=1e-12 * (1 + np.vdot(y, y).real))


def test_risk_of_zero_denoiser():
    y = np.array([1, 2j, -1, 0.5])
    rep = sure_risk(y, np.zeros(4), 0, 0.3)
    assert rep.epsilon == pytest.approx(np.vdot(y, y).real / 4 - 0.3)


def test_risk_components_combine():
    rng = np.random.default_rng(0)
    y, f = rng.standard_normal((2, 8)) + 1j
    rep = sure_risk(y, f, 3.0 - 1j, 0.7)
    assert len(rep.components) == 4
    assert abs(rep.epsilon - rep.combined) <= 1e-12


def test_risk_length_mismatch():
    with pytest.raises(ValueError):
        sure_risk(np.ones(4), np.ones(5), 0, 1.0)


def test_risk_unbiased_for_fixed_denoiser():
    K, sigma2, n = 64, 0.2, 10_000
    h, _ = random_obs(K, 0.0, 1)
    a = np.array([0.3, 0.5 - 0.1j, 0.2])  # fixed 3-tap smoother
    rng = np.random.default_rng(2)
    eps, mse = np.empty(n), np.empty(n)
    for i in range(n):
        obs = observe_preamble(h, sigma2, rng)
        f = build_shift_matrix(obs.y, 1) @ a
        eps[i] = sure_risk(obs.y, f, K * a[1], sigma2).epsilon
        mse[i] = np.mean(np.abs(f - h) ** 2)
    d = eps - mse
    assert abs(d.mean()) <= 3 * d.std(ddof=1) / np.sqrt(n)


# ------------------------------------------------------------- baselines


def test_ml_is_identity():
    h, obs = random_obs(16, 0.5, 3)
    np.testing.assert_array_equal(estimate_ml(obs), obs.y)
    noiseless = ObservationPair.from_cfr(h, 0.0)
    np.testing.assert_array_equal(estimate_ml(noiseless), h)


def test_ml_mse_equals_sigma2():
    h, _ = random_obs(32, 0.0, 4)
    rng = np.random.default_rng(4)
    mse = [np.mean(np.abs(estimate_ml(observe_preamble(h, 0.5, rng)) - h) ** 2) for _ in range(5000)]
    assert np.mean(mse) == pytest.approx(0.5, abs=3 * np.std(mse) / np.sqrt(5000))


def test_lmmse_hand_2x2():
    C = np.array([[2.0, 1.0], [1.0, 2.0]])
    np.testing.assert_allclose(lmmse_matrix(C, 1.0), [[0.625, 0.125], [0.125, 0.625]], atol=1e-15)
    obs = ObservationPair.from_cfr([1.0, -2.0j], 1.0)
    np.testing.assert_allclose(estimate_lmmse(obs, C, 1.0), [[0.625, 0.125], [0.125, 0.625]] @ obs.y, atol=1e-14)


def test_lmmse_noiseless_and_scalar():
    _, obs = random_obs(16, 0.3, 5)
    np.testing.assert_allclose(estimate_lmmse(obs, np.eye(16) * 2.0, 0.0), obs.y, atol=1e-13)
    np.testing.assert_allclose(estimate_lmmse(obs, np.eye(16) * 2.0, 0.5), 0.8 * obs.y, atol=1e-13)


@pytest.mark.parametrize("K", [8, 64, 256])
def test_lmmse_circulant_matches_dense(K):
    C = cfr_autocorrelation(load_profile("tu6"), K) if K > 25 else cfr_autocorrelation(load_profile("rayleigh1"), K)
    _, obs = random_obs(K, 0.1, K)
    fast = estimate_lmmse(obs, C, 0.1)
    dense = lmmse_matrix(C, 0.1) @ obs.y
    assert np.max(np.abs(fast - dense)) <= 1e-9 * max(1.0, np.max(np.abs(dense)))


def test_lmmse_errors():
    obs = ObservationPair.from_cfr([1.0, 1.0], 0.0)
    with pytest.raises(ValueError, match="Hermitian"):
        estimate_lmmse(obs, np.array([[1.0, 2.0], [0.0, 1.0]]), 0.1)
    with pytest.raises(DegenerateObservationError):
        estimate_lmmse(obs, np.array([[1.0, 1.0], [1.0, 1.0]]), 0.0)
    with pytest.raises(DegenerateObservationError):
        lmmse_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]), 0.0)


@pytest.mark.parametrize("scenario", ["rayleigh1", "tu6"])
def test_lmmse_noiseless_limit_is_projection(scenario):
    K = 64
    C = cfr_autocorrelation(load_profile(scenario), K)
    h, _ = tu6_observation(K, 0.0, 50) if scenario == "tu6" else random_obs(K, 0.0, 50, taps=1)
    obs = ObservationPair.from_cfr(h, 0.0)
    np.testing.assert_allclose(lmmse_noiseless_limit(obs, C), h, atol=1e-10)
    with pytest.raises(DegenerateObservationError):
        estimate_lmmse(obs, C, 0.0)


def test_lmmse_noiseless_limit_dense_route():
    rng = np.random.default_rng(51)
    v, w = rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
    C = np.outer(v, v.conj())  # rank one, not circulant
    obs = ObservationPair.from_cfr(2j * v, 0.0)
    np.testing.assert_allclose(lmmse_noiseless_limit(obs, C), obs.y, atol=1e-12)
    y = 2j * v + w
    proj = v * np.vdot(v, y) / np.vdot(v, v)
    np.testing.assert_allclose(lmmse_noiseless_limit(ObservationPair.from_cfr(y, 0.0), C), proj, atol=1e-12)


def test_flat_noiseless_observation_keeps_exact_fit():
    obs = ObservationPair.from_cfr(np.full(16, 0.3 - 0.2j), 0.0)
    h_lin, risk = estimate_sure_linear(obs, 0.0, 1)
    h_let, params, _ = estimate_sure_let(obs, 0.0, 1)
    np.testing.assert_allclose(h_lin, obs.y)
    np.testing.assert_allclose(h_let, obs.y)
    assert risk.epsilon == 0
    np.testing.assert_array_equal(params.a_dagger, [0, 1, 0, 0])


def test_cir_threshold_rule():
    sigma2 = 0.5
    r = np.zeros(8, complex)
    r[0] = np.sqrt(3 * sigma2)
    r[3] = np.sqrt(sigma2) * 1j
    r[5] = 1.0  # |r|^2 == 2 sigma2 exactly: kept
    obs = ObservationPair(dft(r), r, sigma2)
    out = np.fft.ifft(estimate_cir_threshold(obs, sigma2), norm="ortho")
    np.testing.assert_allclose(out, [r[0], 0, 0, 0, 0, r[5], 0, 0], atol=1e-12)
    np.testing.assert_allclose(estimate_cir_threshold(obs, 0.0), obs.y, atol=1e-12)


def test_reference_thresholds():
    T = 0.5
    phi = 0.7
    r = np.array([T, 0.49, 2 * T * np.exp(1j * phi), -0.3j])
    assert hard_threshold(r, T)[0] == T  # boundary kept
    assert hard_threshold(r, T)[1] == 0
    s = soft_threshold(r, T)
    assert s[0] == 0 and s[1] == 0 and s[3] == 0
    assert s[2] == pytest.approx(T * np.exp(1j * phi))
    both = reference_thresholds(r, T)
    assert set(both) == {"hard", "soft"}
    with pytest.raises(ValueError):
        reference_thresholds(r, -1)


# ------------------------------------------------------------ SURE-linear


def test_sure_linear_noiseless_is_centre_indicator():
    _, obs = random_obs(16, 0.0, 6)
    params = sure_linear_weights(build_shift_matrix(obs.y, 1), obs.y, 0.0)
    np.testing.assert_allclose(params.a, [0, 1, 0], atol=1e-10)
    h_hat, _ = estimate_sure_linear(obs, 0.0, 1)
    np.testing.assert_allclose(h_hat, obs.y, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**32 - 1), st.floats(1e-3, 10.0))
def test_james_stein_closed_form(log2k, seed, sigma2):
    K = 2 ** log2k
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    a0 = sure_linear_weights(y[:, None], y, sigma2).a[0]
    assert abs(a0 - (1 - K * sigma2 / np.vdot(y, y).real)) <= 1e-12 * max(1.0, K * sigma2 / np.vdot(y, y).real)
    h_hat, _ = estimate_james_stein(ObservationPair.from_cfr(y, sigma2), sigma2)
    np.testing.assert_allclose(h_hat, a0.real * y, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0))
def test_james_stein_shrinks(seed, sigma2):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    assert abs(sure_linear_weights(y[:, None], y, sigma2).a[0]) < 1 or np.vdot(y, y).real < 8 * 16 * sigma2


def test_sure_linear_weights_on_dense_grid_lines():
    # K=8, L=1: no step of 1e-3 along any real coordinate lowers the risk
    _, obs = random_obs(8, 1.0, 7, taps=2)
    Y = build_shift_matrix(obs.y, 1)
    beta = np.array([0, 8, 0])
    a = sure_linear_weights(Y, obs.y, 1.0).a
    best = sure_risk(obs.y, Y @ a, beta @ a, 1.0).epsilon
    steps = np.arange(-50, 51) * 1e-3
    for coord in range(6):
        e = np.zeros(3, complex)
        e[coord // 2] = 1 if coord % 2 == 0 else 1j
        vals = [sure_risk(obs.y, Y @ (a + s * e), beta @ (a + s * e), 1.0).epsilon for s in steps]
        assert int(np.argmin(vals)) == 50


def test_sure_linear_beats_ml_risk_and_probes():
    _, obs = tu6_observation(64, 0.1, 8)
    Y = build_shift_matrix(obs.y, 1)
    beta = np.array([0, 64, 0])
    a = sure_linear_weights(Y, obs.y, 0.1).a
    eps_opt = sure_risk(obs.y, Y @ a, beta @ a, 0.1).epsilon
    assert eps_opt <= sure_risk(obs.y, obs.y, 64, 0.1).epsilon
    rng = np.random.default_rng(0)
    for _ in range(100):
        probe = a + rng.normal(scale=0.3, size=3) + 1j * rng.normal(scale=0.3, size=3)
        assert eps_opt <= sure_risk(obs.y, Y @ probe, beta @ probe, 0.1).epsilon


def test_sure_linear_degenerate_observation():
    obs = ObservationPair.from_cfr(np.ones(16), 0.1)  # all shift columns identical
    with pytest.raises(DegenerateObservationError):
        estimate_sure_linear(obs, 0.1, 1)


def test_sure_linear_rejects_bad_window():
    _, obs = random_obs(8, 0.1, 9)
    with pytest.raises(ValueError):
        estimate_sure_linear(obs, 0.1, 4)


# -------------------------------------------------------------------- LET


def test_let_residual_examples():
    T = 2.0
    r = np.array([0.0, np.sqrt(T), np.sqrt(2 * T) * 1j])
    r_t, _ = let_residual(r, T)
    assert r_t[0] == 0
    assert r_t[2] == pytest.approx(r[2] * np.exp(-2))
    terms = [let_residual(np.array([x]), T)[1] for x in r]
    np.testing.assert_allclose(terms, [1.0, 0.0, -np.exp(-2)], atol=1e-15)
    with pytest.raises(ValueError):
        let_residual(r, 0.0)


@pytest.mark.parametrize("z", [0.3 + 0.4j, 1.2 - 0.9j, -2.0 + 0.1j])
def test_let_divergence_by_finite_differences(z):
    # Wirtinger derivative d/dz = (d/dx - j d/dy) / 2 of the real-composite map
    T, h = 1.5, 1e-6

    def f(x):
        return let_residual(np.array([x]), T)[0][0]

    dx = (f(z + h) - f(z - h)) / (2 * h)
    dy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    wirtinger = 0.5 * (dx - 1j * dy)
    _, d = let_residual(np.array([z]), T)
    assert wirtinger.real == pytest.approx(d, abs=1e-8)
    assert abs(wirtinger.imag) < 1e-8
    q, dq = let_complement(np.array([z]), T)
    assert q[0] == pytest.approx(z - f(z))
    assert dq == pytest.approx(1 - d)


def test_sure_let_noiseless_exact_fit():
    _, obs = tu6_observation(64, 0.0, 10)
    h_hat, params, _ = estimate_sure_let(obs, 0.0, 1)
    np.testing.assert_allclose(h_hat, obs.y, rtol=0, atol=1e-9 * np.linalg.norm(obs.y))
    np.testing.assert_allclose(params.a_dagger, [0, 1, 0, 0], atol=1e-8)


def test_sure_let_huge_threshold_is_degenerate():
    _, obs = tu6_observation(64, 0.1, 11)
    with pytest.raises(DegenerateObservationError):
        estimate_sure_let(obs, 0.1, 1, T=1e12)


def test_sure_let_fixed_threshold_default():
    _, obs = tu6_observation(64, 0.1, 12)
    _, params, _ = estimate_sure_let(obs, 0.1, 1)
    assert params.T == pytest.approx(1.2)
    assert params.T_policy == "fixed"
    assert params.a_dagger.shape == (4,)


def test_sure_let_grid_policy_picks_best():
    _, obs = tu6_observation(64, 0.1, 13)
    _, params, risk = estimate_sure_let(obs, 0.1, 1, T_policy="grid")
    grid = threshold_grid(0.1)
    assert grid[0] == pytest.approx(0.05) and grid[-1] == pytest.approx(2.5) and len(grid) == 25
    assert any(np.isclose(params.T, grid))
    for t in grid:
        assert risk.epsilon <= estimate_sure_let(obs, 0.1, 1, T=t)[2].epsilon + 1e-15
    with pytest.raises(ValueError):
        estimate_sure_let(obs, 0.1, 1, T_policy="anneal")


def test_sure_let_optimality_probes():
    _, obs = tu6_observation(64, 0.1, 14)
    _, params, _ = estimate_sure_let(obs, 0.1, 1)
    r_t, d = let_residual(obs.r, params.T)
    B = np.column_stack([build_shift_matrix(obs.y, 1), dft(r_t)])
    beta = np.array([0, 64, 0, d])
    a = params.a_dagger
    eps_opt = sure_risk(obs.y, B @ a, beta @ a, 0.1).epsilon
    rng = np.random.default_rng(1)
    for _ in range(100):
        probe = a + rng.normal(scale=0.3, size=4) + 1j * rng.normal(scale=0.3, size=4)
        assert eps_opt <= sure_risk(obs.y, B @ probe, beta @ probe, 0.1).epsilon


@pytest.mark.parametrize("seed", range(5))
def test_let_parameterizations_agree(seed):
    _, obs = tu6_observation(64, 0.05 * (seed + 1), seed)
    s2 = obs.sigma2
    a, _, ra = estimate_sure_let(obs, s2, 1, basis="residual")
    b, _, rb = estimate_sure_let(obs, s2, 1, basis="complement")
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))
    assert ra.epsilon == pytest.approx(rb.epsilon, rel=1e-9)


def fd_divergence(fn, y, h=1e-6):
    total = 0.0
    for k in range(y.size):
        for step in (h, 1j * h):
            yp, ym = y.copy(), y.copy()
            yp[k] += step
            ym[k] -= step
            d = (fn(yp)[k] - fn(ym)[k]) / (2 * h)
            total += d.real if step == h else d.imag
    return total / 2  # real part of the Wirtinger divergence


@pytest.mark.parametrize("kind", ["james-stein", "linear", "linear5", "let", "let-complement"])
def test_reported_divergence_matches_finite_differences(kind):
    K, s2 = 16, 0.3
    _, obs = random_obs(K, s2, 21)

    def run(y):
        o = ObservationPair.from_cfr(y, s2)
        if kind == "james-stein":
            return estimate_james_stein(o, s2)
        if kind.startswith("linear"):
            return estimate_sure_linear(o, s2, 2 if kind == "linear5" else 1)
        h_hat, _, risk = estimate_sure_let(o, s2, 1, T=1.0, basis="complement" if "complement" in kind else "residual")
        return h_hat, risk

    reported = run(obs.y)[1].divergence.real
    numeric = fd_divergence(lambda y: run(y)[0], obs.y)
    assert numeric == pytest.approx(reported, rel=1e-4)


def test_plugin_divergence_is_weight_sum():
    _, obs = random_obs(16, 0.2, 22)
    _, params, _ = estimate_sure_let(obs, 0.2, 1)
    _, d = let_residual(obs.r, params.T)
    assert plugin_divergence(obs, params) == pytest.approx(16 * params.a_dagger[1] + d * params.a_dagger[3])


@pytest.mark.parametrize("kind", ["james-stein", "sure-let"])
def test_sure_estimators_are_unbiased(kind):
    K, s2, n = 64, 0.1, 10_000
    h, _ = tu6_observation(K, 0.0, 30)
    rng = np.random.default_rng(31)
    d = np.empty(n)
    for i in range(n):
        obs = observe_preamble(h, s2, rng)
        if kind == "james-stein":
            h_hat, risk = estimate_james_stein(obs, s2)
        else:
            h_hat, _, risk = estimate_sure_let(obs, s2, 1)
        d[i] = risk.epsilon - np.mean(np.abs(h_hat - h) ** 2)
    assert abs(d.mean()) <= 3 * d.std(ddof=1) / np.sqrt(n)


# ---------------------------------------------------------------- dispatch


def test_estimator_spec_parse_and_labels():
    assert EstimatorSpec.parse("sure-let:2").L == 2
    assert EstimatorSpec.parse("sure-let").label == "sure-let(N=3,T=12s2)"
    assert EstimatorSpec.parse("sure-let", T_policy="grid").label == "sure-let(N=3,grid)"
    assert EstimatorSpec.parse("sure-linear:2").label == "sure-linear(N=5)"
    assert EstimatorSpec("ml").label == "ml"
    with pytest.raises(ValueError, match="unknown estimator"):
        EstimatorSpec("wiener")


@pytest.mark.parametrize("name", ["ml", "lmmse", "kang", "james-stein", "sure-linear", "sure-let", "genie"])
def test_run_estimator_dispatch(name):
    h, obs = tu6_observation(64, 0.1, 40)
    C = cfr_autocorrelation(load_profile("tu6"), 64)
    h_hat, eps = run_estimator(EstimatorSpec(name), obs, 0.1, C_hh=C, h_true=h)
    assert h_hat.shape == (64,)
    assert np.isnan(eps) == (name in ("ml", "lmmse", "kang", "genie"))
    if name == "genie":
        np.testing.assert_array_equal(h_hat, h)
