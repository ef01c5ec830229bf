"""Gibbs kernels and the two sampling loops.

Closed-form conditional parameters are checked against independent
double-loop oracles; the loops themselves are checked for determinism,
bound preservation, and recovery behavior on constructed instances.
"""

import copy

import numpy as np
import numpy.testing as npt
import pytest

from bayesid.errors import ConfigurationError, InputError
from bayesid.model import Hyperparameters, IdState, ObservedMatrix, init_state
from bayesid.sampler import (
    noise_variance_params,
    run_gibbs,
    run_gibbs_aggressive,
    sample_noise_variance,
    sample_state_vector,
    sample_weight_entry,
    sample_weight_mean_entry,
    sample_weight_precision_entry,
    state_swap_log_odds,
    weight_entry_params,
    weight_mean_entry_params,
    weight_precision_entry_params,
)

from _instances import duplicated_id_matrix, frozen_state


def _entry_params_oracle(state, data, k, l):
    """Posterior (mean, precision) of y[k, l] by direct index-by-index sums."""
    m, n = data.shape
    s = 0.0
    for i in range(m):
        s += state.x[i, k] ** 2
    tau = s / state.sigma2 + state.gtn_tau[k, l]
    acc = 0.0
    for i in range(m):
        partial = data.values[i, l]
        for j in range(n):
            if j != k:
                partial -= state.x[i, j] * state.y[j, l]
        acc += state.x[i, k] * partial
    mu = (acc / state.sigma2 + state.gtn_tau[k, l] * state.gtn_mu[k, l]) / tau
    return mu, tau


def _rss_oracle(state, data):
    m, n = data.shape
    total = 0.0
    for i in range(m):
        for j in range(n):
            pred = 0.0
            for k in range(n):
                pred += state.x[i, k] * state.y[k, j]
            total += (data.values[i, j] - pred) ** 2
    return total


class TestWeightEntryParams:
    def test_single_row_worked_case(self):
        # one row, one active column with value 2, target entry 1, unit noise
        data = ObservedMatrix.fully_observed(np.array([[2.0, 1.0]]))
        state = IdState(
            x=np.array([[2.0, 0.0]]),
            y=np.zeros((2, 2)),
            r=np.array([1, 0], dtype=np.int8),
            sigma2=1.0,
            gtn_mu=np.zeros((2, 2)),
            gtn_tau=np.ones((2, 2)),
        )
        mu, tau = weight_entry_params(state, data, 0, 1)
        npt.assert_allclose(tau, 5.0, rtol=1e-12)
        npt.assert_allclose(mu, 0.4, rtol=1e-12)

    def test_inactive_column_reverts_to_prior(self):
        rng = np.random.default_rng(101)
        data, hp, state = frozen_state(5, 4, 2, rng, variant="gbtn")
        k = int(state.interpolated_indices[0])
        mu, tau = weight_entry_params(state, data, k, 3)
        assert mu == state.gtn_mu[k, 3]
        assert tau == state.gtn_tau[k, 3]

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(103)
        for _ in range(15):
            m = int(rng.integers(2, 8))
            n = int(rng.integers(2, 7))
            k_active = int(rng.integers(1, n + 1))
            data, hp, state = frozen_state(m, n, k_active, rng, variant="gbtn")
            k = int(rng.integers(n))
            l = int(rng.integers(n))
            got = weight_entry_params(state, data, k, l)
            want = _entry_params_oracle(state, data, k, l)
            npt.assert_allclose(got, want, rtol=1e-10)

    def test_sample_writes_within_bounds(self):
        rng = np.random.default_rng(107)
        data, hp, state = frozen_state(5, 4, 2, rng)
        for _ in range(200):
            draw = sample_weight_entry(state, data, 1, 2, hp, rng)
            assert -1.0 <= draw <= 1.0
            assert state.y[1, 2] == draw


class TestNoiseVariance:
    def test_zero_residual_worked_case(self):
        values = np.array([[0.3, -0.2], [0.1, 0.4]])
        data = ObservedMatrix.fully_observed(values)
        state = IdState(
            x=values.copy(),
            y=np.eye(2),
            r=np.array([1, 1], dtype=np.int8),
            sigma2=1.0,
            gtn_mu=np.zeros((2, 2)),
            gtn_tau=np.ones((2, 2)),
        )
        p = noise_variance_params(state, data, Hyperparameters(k=2))
        npt.assert_allclose(p.shape, 2.1, rtol=1e-12)
        npt.assert_allclose(p.rate, 1.0, rtol=1e-12)

    def test_rate_is_half_rss_plus_prior(self):
        rng = np.random.default_rng(109)
        data, hp, state = frozen_state(4, 3, 2, rng)
        p = noise_variance_params(state, data, hp)
        npt.assert_allclose(p.rate, 0.5 * _rss_oracle(state, data) + hp.beta_sigma, rtol=1e-10)
        npt.assert_allclose(p.shape, 4 * 3 / 2 + hp.alpha_sigma, rtol=1e-12)

    def test_draw_mean_near_analytic(self):
        rng = np.random.default_rng(113)
        data, hp, state = frozen_state(4, 4, 2, rng)
        p = noise_variance_params(state, data, hp)
        draws = np.empty(10_000)
        for t in range(draws.size):
            draws[t] = sample_noise_variance(state, data, hp, rng)
            state.sigma2 = 1.0  # keep the conditional frozen
        ref = p.rate / (p.shape - 1.0)
        assert abs(draws.mean() - ref) / ref < 0.05


class TestHierarchicalKernels:
    def _gbtn_state(self, seed=127):
        rng = np.random.default_rng(seed)
        return frozen_state(5, 4, 2, rng, variant="gbtn") + (rng,)

    def test_mean_update_worked_case(self):
        data, hp, state, rng = self._gbtn_state()
        state.gtn_tau[1, 2] = 1.0
        state.y[1, 2] = 0.5
        m_post, t_post = weight_mean_entry_params(state, hp, 1, 2)
        npt.assert_allclose(t_post, 1.1, rtol=1e-12)
        npt.assert_allclose(m_post, 0.5 / 1.1, rtol=1e-12)

    def test_mean_update_prior_domination(self):
        data, hp_base, state, rng = self._gbtn_state()
        hp = Hyperparameters(k=2, variant="gbtn", tau_mu=1e12, mu_mu=0.25)
        m_post, _ = weight_mean_entry_params(state, hp, 0, 0)
        assert abs(m_post - 0.25) < 1e-6

    def test_precision_update_worked_case(self):
        data, hp, state, rng = self._gbtn_state()
        state.y[2, 1] = 0.3
        state.gtn_mu[2, 1] = 0.3
        p = weight_precision_entry_params(state, hp, 2, 1)
        npt.assert_allclose(p.shape, 1.5, rtol=1e-12)
        npt.assert_allclose(p.rate, 1.0, rtol=1e-12)

    def test_precision_rate_structure(self):
        data, hp, state, rng = self._gbtn_state()
        state.y[0, 3] = 0.9
        state.gtn_mu[0, 3] = 0.9 - np.sqrt(2.0)
        p = weight_precision_entry_params(state, hp, 0, 3)
        npt.assert_allclose(p.rate, hp.beta_t + 1.0, rtol=1e-12)

    def test_draws_write_into_state(self):
        data, hp, state, rng = self._gbtn_state()
        mu_draw = sample_weight_mean_entry(state, hp, 1, 1, rng)
        assert state.gtn_mu[1, 1] == mu_draw
        tau_draw = sample_weight_precision_entry(state, hp, 1, 1, rng)
        assert state.gtn_tau[1, 1] == tau_draw and tau_draw > 0

    def test_rejected_under_plain_variant(self):
        rng = np.random.default_rng(131)
        data, hp, state = frozen_state(4, 3, 2, rng, variant="gbt")
        with pytest.raises(ConfigurationError):
            weight_mean_entry_params(state, hp, 0, 0)
        with pytest.raises(ConfigurationError):
            weight_precision_entry_params(state, hp, 0, 0)


def _symmetric_state(m=6, n=4, k=2, seed=137):
    """All data columns identical and all weight rows identical, so every
    possible swap leaves the residual unchanged."""
    rng = np.random.default_rng(seed)
    col = rng.normal(size=m)
    values = np.tile(col[:, None], (1, n))
    row = rng.uniform(-0.5, 0.5, size=n)
    y = np.tile(row, (n, 1))
    r = np.zeros(n, dtype=np.int8)
    r[:k] = 1
    x = np.where(r[None, :] == 1, values, 0.0)
    data = ObservedMatrix.fully_observed(values)
    state = IdState(x=x, y=y, r=r, sigma2=1.0, gtn_mu=np.zeros((n, n)), gtn_tau=np.ones((n, n)))
    return data, state


def _exact_state(seed=139):
    """Noise-free four-column instance with the exact interpolation weights
    stored in y, active set {0, 2} (one true basis column missing)."""
    rng = np.random.default_rng(seed)
    b0, b1 = rng.normal(size=10), rng.normal(size=10)
    values = np.stack([b0, b1, 0.6 * b0 - 0.3 * b1, -0.5 * b0 + 0.8 * b1], axis=1)
    y = np.zeros((4, 4))
    y[0, :] = [1.0, 0.0, 0.6, -0.5]
    y[1, :] = [0.0, 1.0, -0.3, 0.8]
    r = np.array([1, 0, 1, 0], dtype=np.int8)
    x = np.where(r[None, :] == 1, values, 0.0)
    data = ObservedMatrix.fully_observed(values)
    state = IdState(x=x, y=y, r=r, sigma2=1.0, gtn_mu=np.zeros((4, 4)), gtn_tau=np.ones((4, 4)))
    return data, state


class TestStateSwap:
    def test_symmetric_swap_has_zero_log_odds(self):
        data, state = _symmetric_state()
        assert state_swap_log_odds(state, data, 0, 2) == 0.0

    def test_symmetric_acceptance_rate_half(self):
        data, state = _symmetric_state()
        rng = np.random.default_rng(149)
        accepted = 0
        trials = 10_000
        for _ in range(trials):
            if sample_state_vector(state, data, Hyperparameters(k=2), rng):
                accepted += 1
            assert state.r.sum() == 2
        assert abs(accepted / trials - 0.5) <= 0.02

    def test_activating_missing_basis_column_favored(self):
        data, state = _exact_state()
        log_odds = state_swap_log_odds(state, data, 2, 1)
        assert log_odds > 5.0

    def test_deactivating_needed_basis_column_disfavored(self):
        data, state = _exact_state()
        # move to the exact configuration first, then propose breaking it
        state.r[:] = [1, 1, 0, 0]
        state.x[:, 1] = data.values[:, 1]
        state.x[:, 2] = 0.0
        assert state_swap_log_odds(state, data, 1, 2) < -5.0

    def test_log_odds_clamped_at_saturation(self):
        data, state = _exact_state()
        state.sigma2 = 1e-9
        assert state_swap_log_odds(state, data, 2, 1) == 700.0
        state.r[:] = [1, 1, 0, 0]
        state.x[:, 1] = data.values[:, 1]
        state.x[:, 2] = 0.0
        assert state_swap_log_odds(state, data, 1, 2) == -700.0

    def test_incremental_agrees_with_full_recompute(self):
        rng = np.random.default_rng(151)
        for _ in range(40):
            m = int(rng.integers(2, 10))
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, n))
            data, hp, state = frozen_state(m, n, k, rng)
            j = int(state.basis_indices[rng.integers(k)])
            i = int(state.interpolated_indices[rng.integers(n - k)])
            fast = state_swap_log_odds(state, data, j, i)
            slow = state_swap_log_odds(state, data, j, i, full_recompute=True)
            npt.assert_allclose(fast, slow, rtol=1e-8, atol=1e-10)

    def test_debug_checks_cross_validate(self):
        rng = np.random.default_rng(157)
        data, hp, state = frozen_state(6, 5, 2, rng)
        for _ in range(30):
            sample_state_vector(state, data, hp, rng, debug_checks=True)

    def test_swap_requires_valid_pair(self):
        data, state = _exact_state()
        with pytest.raises(ConfigurationError):
            state_swap_log_odds(state, data, 1, 0)

    def test_no_move_when_everything_active(self):
        rng = np.random.default_rng(163)
        data, hp, state = frozen_state(4, 3, 3, rng)
        r_before = state.r.copy()
        assert sample_state_vector(state, data, hp, rng) is False
        npt.assert_array_equal(state.r, r_before)

    def test_maintained_residual_stays_current(self):
        rng = np.random.default_rng(167)
        data, hp, state = frozen_state(6, 5, 2, rng)
        resid = data.values - state.x @ state.y
        for _ in range(60):
            sample_state_vector(state, data, hp, rng, resid=resid)
        npt.assert_allclose(resid, data.values - state.x @ state.y, atol=1e-10)


class TestRunGibbs:
    def test_trace_shapes(self):
        rng = np.random.default_rng(173)
        data = ObservedMatrix.fully_observed(rng.normal(size=(8, 6)))
        hp = Hyperparameters(k=2, iterations=25, burn_in=5, thinning=2)
        state, trace = run_gibbs(data, hp, rng)
        assert trace.mse_per_iter.shape == (25,)
        assert trace.mse_observed_per_iter.shape == (25,)
        assert trace.sigma2_chain.shape == (25,)
        assert len(trace.y_entry_chains) == 5
        for chain in trace.y_entry_chains.values():
            assert chain.shape == (25,)
            assert np.all(chain >= -1.0) and np.all(chain <= 1.0)
        assert np.all(trace.mse_per_iter >= 0.0)
        assert trace.accepted_swaps >= 0

    def test_deterministic_given_seed(self):
        data = ObservedMatrix.fully_observed(np.random.default_rng(179).normal(size=(10, 7)))
        hp = Hyperparameters(k=3, iterations=30, burn_in=5, thinning=2)
        s1, t1 = run_gibbs(data, hp, np.random.default_rng(4))
        s2, t2 = run_gibbs(data, hp, np.random.default_rng(4))
        npt.assert_array_equal(t1.mse_per_iter, t2.mse_per_iter)
        npt.assert_array_equal(t1.sigma2_chain, t2.sigma2_chain)
        npt.assert_array_equal(s1.y, s2.y)
        npt.assert_array_equal(s1.r, s2.r)
        for pos in t1.y_entry_chains:
            npt.assert_array_equal(t1.y_entry_chains[pos], t2.y_entry_chains[pos])

    def test_full_basis_reaches_near_zero_mse(self):
        rng = np.random.default_rng(181)
        data = ObservedMatrix.fully_observed(rng.normal(size=(8, 6)))
        hp = Hyperparameters(k=6, iterations=200, burn_in=50, thinning=5, beta_sigma=1e-9)
        state, trace = run_gibbs(data, hp, rng)
        assert trace.mse_per_iter.min() <= 1e-6

    def test_aggressive_equals_plain_when_nothing_to_swap(self):
        data = ObservedMatrix.fully_observed(np.random.default_rng(191).normal(size=(7, 5)))
        hp = Hyperparameters(k=5, iterations=40, burn_in=10, thinning=2)
        _, t_plain = run_gibbs(data, hp, np.random.default_rng(6))
        _, t_aggr = run_gibbs_aggressive(data, hp, np.random.default_rng(6))
        npt.assert_array_equal(t_plain.mse_per_iter, t_aggr.mse_per_iter)
        npt.assert_array_equal(t_plain.sigma2_chain, t_aggr.sigma2_chain)

    def test_early_stop_cuts_run_short(self):
        rng = np.random.default_rng(193)
        data = ObservedMatrix.fully_observed(rng.normal(size=(8, 6)))
        hp = Hyperparameters(k=2, iterations=400, burn_in=10, thinning=2)
        state, trace = run_gibbs(
            data, hp, rng, early_stop=True, early_stop_tol=0.5, early_stop_window=5
        )
        assert trace.mse_per_iter.size < 400
        assert trace.sigma2_chain.size == trace.mse_per_iter.size

    @pytest.mark.parametrize("runner", [run_gibbs, run_gibbs_aggressive])
    def test_debug_mode_validates_every_iteration(self, runner):
        rng = np.random.default_rng(197)
        a = duplicated_id_matrix(12, 5, 2, rng)
        data = ObservedMatrix.fully_observed(a)
        hp = Hyperparameters(k=3, iterations=40, burn_in=10, thinning=2)
        state, trace = runner(data, hp, rng, debug_checks=True)
        assert np.all(state.y >= -1.0) and np.all(state.y <= 1.0)

    def test_missing_entries_tracked_separately(self):
        rng = np.random.default_rng(199)
        values = rng.normal(size=(10, 8))
        mask = rng.uniform(size=values.shape) > 0.2
        values = np.where(mask, values, 0.0)
        data = ObservedMatrix(values=values, mask=mask)
        hp = Hyperparameters(k=3, iterations=30, burn_in=5, thinning=2)
        state, trace = run_gibbs(data, hp, rng)
        assert np.all(np.isfinite(trace.mse_observed_per_iter))
        assert not np.array_equal(trace.mse_per_iter, trace.mse_observed_per_iter)

    def test_no_observed_entries_rejected(self):
        data = ObservedMatrix(values=np.zeros((3, 3)), mask=np.zeros((3, 3), dtype=bool))
        with pytest.raises(InputError):
            run_gibbs(data, Hyperparameters(k=1, iterations=5, burn_in=0), np.random.default_rng(0))

    def test_probe_positions_respected(self):
        rng = np.random.default_rng(211)
        data = ObservedMatrix.fully_observed(rng.normal(size=(6, 5)))
        hp = Hyperparameters(k=2, iterations=10, burn_in=2, thinning=1)
        probes = [(0, 0), (2, 3), (4, 4)]
        state, trace = run_gibbs(data, hp, rng, probe_positions=probes)
        assert sorted(trace.y_entry_chains) == sorted(probes)

    def test_loss_trend_downward_on_noisy_instance(self):
        rng = np.random.default_rng(223)
        a = duplicated_id_matrix(20, 8, 3, rng, noise=0.3)
        data = ObservedMatrix.fully_observed(a)
        hp = Hyperparameters(k=3, iterations=120, burn_in=40, thinning=2)
        state, trace = run_gibbs(data, hp, rng)
        assert np.median(trace.mse_per_iter[40:]) <= np.median(trace.mse_per_iter[:10])

    def test_gbtn_variant_runs_and_respects_bounds(self):
        rng = np.random.default_rng(227)
        data = ObservedMatrix.fully_observed(rng.normal(size=(8, 6)))
        hp = Hyperparameters(k=2, variant="gbtn", iterations=30, burn_in=5, thinning=2)
        state, trace = run_gibbs(data, hp, rng, debug_checks=True)
        assert np.all(state.y >= -1.0) and np.all(state.y <= 1.0)
        assert np.all(state.gtn_tau > 0.0)

    def test_aggressive_rejects_hierarchical_variant(self):
        data = ObservedMatrix.fully_observed(np.random.default_rng(229).normal(size=(4, 4)))
        hp = Hyperparameters(k=2, variant="gbtn", iterations=5, burn_in=0)
        with pytest.raises(ConfigurationError):
            run_gibbs_aggressive(data, hp, np.random.default_rng(0))


class TestExactRecovery:
    """Noise-free instances built from 5 basis columns, interpolations with
    weights in [-1, 1], and duplicated columns (30 x 20 overall)."""

    def _instance(self):
        a = duplicated_id_matrix(30, 10, 5, np.random.default_rng(1000))
        return ObservedMatrix.fully_observed(a)

    @pytest.mark.parametrize("runner", [run_gibbs, run_gibbs_aggressive])
    def test_reaches_low_mse_within_200_iterations_at_true_rank(self, runner):
        data = self._instance()
        hp = Hyperparameters(k=5, iterations=200, burn_in=50, thinning=5)
        state, trace = runner(data, hp, np.random.default_rng(0))
        assert trace.mse_per_iter.min() <= 1e-3, (
            f"best mse {trace.mse_per_iter.min():.3e}, "
            f"accepted swaps {trace.accepted_swaps}"
        )

    @pytest.mark.parametrize("runner", [run_gibbs, run_gibbs_aggressive])
    def test_reaches_low_mse_with_slack_in_run_rank(self, runner):
        data = self._instance()
        hp = Hyperparameters(k=10, iterations=200, burn_in=50, thinning=5)
        state, trace = runner(data, hp, np.random.default_rng(0))
        assert trace.mse_per_iter.min() <= 1e-3
