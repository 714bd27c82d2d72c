import math

import numpy as np
import pytest

from structscan import (
    BandEmptyError,
    Budget,
    EMConfig,
    IndexSet,
    MixtureFit,
    Observations,
    connected_family,
    epsilon_ball_family,
    fit_gmm_em,
    fit_poisson_mixture_em,
    generate_graph,
    gmm_estimator,
    gmm_estimator_shifted,
    interval_family,
    responsibilities,
    sample_anomaly,
    sample_asd,
    sample_gmm,
    sample_poisson_counts,
    save_mixture_fit,
    submatrix_family,
    unstructured_family,
)


def make_fit(r, alpha_hat, mode="gaussian", mu_hat=3.0):
    r = np.asarray(r, dtype=float)
    return MixtureFit(
        mode=mode,
        alpha_hat=alpha_hat,
        mu_hat=mu_hat,
        responsibilities=r,
        loglik=0.0,
        iterations=1,
        restarts_used=1,
        converged=True,
        loglik_trace=np.array([0.0]),
    )


class TestResponsibilities:
    def test_symmetry_point(self):
        assert responsibilities(np.array([1.0]), 0.5, 2.0)[0] == pytest.approx(0.5, abs=1e-12)

    def test_mu_zero_gives_alpha(self):
        r = responsibilities(np.array([3.0, -1.0, 0.2]), 0.3, 0.0)
        assert np.allclose(r, 0.3, atol=1e-12)

    def test_far_point_saturates(self):
        assert responsibilities(np.array([10.0]), 0.2, 4.0)[0] == pytest.approx(1.0, abs=1e-6)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            responsibilities(np.array([0.0]), 1.5, 1.0)

    def test_monotone_in_x(self):
        x = np.linspace(-4, 8, 101)
        r = responsibilities(x, 0.1, 2.5)
        assert (np.diff(r) >= 0).all()


class TestGmmEm:
    def test_recovers_iid_gmm(self):
        bound = math.sqrt(math.log(10_000) / 10_000)
        ok_a = ok_m = 0
        for s in range(10):
            obs, _ = sample_gmm(0.2, 6.0, 10_000, seed=s)
            fit = fit_gmm_em(obs, EMConfig(seed=s))
            ok_a += abs(fit.alpha_hat - 0.2) <= bound
            ok_m += abs(fit.mu_hat - 6.0) <= 3 * bound
        assert ok_a >= 9 and ok_m >= 9

    def test_recovers_on_asd_data(self):
        n = 10_000
        mu = 4 * math.sqrt(math.log(n))
        bound = math.sqrt(math.log(n) / n)
        ok = 0
        for s in range(10):
            a = sample_anomaly(unstructured_family(n), 2000, seed=s)
            x = sample_asd(a, mu, n, seed=1000 + s)
            fit = fit_gmm_em(x, EMConfig(seed=s))
            ok += abs(fit.alpha_hat - 0.2) <= bound and abs(fit.mu_hat - mu) <= 3 * bound
        assert ok >= 9

    def test_null_data_degenerates(self):
        x = sample_asd(IndexSet((), 2000), 0.0, 2000, seed=3)
        fit = fit_gmm_em(x, EMConfig(seed=0))
        single = float(
            (-0.5 * x.values**2 - 0.5 * math.log(2 * math.pi)).sum()
        )
        assert fit.alpha_hat <= 0.05 or fit.mu_hat <= 0.15
        assert fit.loglik >= single - 1e-6  # mixture never fits worse
        assert fit.loglik - single <= 5.0  # and gains only a thin-tail overfit

    def test_loglik_trace_monotone(self):
        obs, _ = sample_gmm(0.15, 3.0, 3000, seed=7)
        fit = fit_gmm_em(obs, EMConfig(seed=7))
        assert (np.diff(fit.loglik_trace) >= -1e-10).all()

    def test_m_step_fixed_point(self):
        obs, _ = sample_gmm(0.25, 4.0, 5000, seed=2)
        fit = fit_gmm_em(obs, EMConfig(seed=2))
        assert fit.converged
        r = fit.responsibilities
        assert abs(float(r.mean()) - fit.alpha_hat) <= 1e-8
        assert abs(float((r * obs.values).sum() / r.sum()) - fit.mu_hat) <= 1e-8

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            fit_gmm_em(np.array([1.0]))

    def test_deterministic(self):
        obs, _ = sample_gmm(0.2, 4.0, 500, seed=4)
        f1 = fit_gmm_em(obs, EMConfig(seed=9))
        f2 = fit_gmm_em(obs, EMConfig(seed=9))
        assert f1.alpha_hat == f2.alpha_hat and f1.mu_hat == f2.mu_hat


class TestGmmEstimator:
    def test_separated_top_set(self):
        r = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
        fit = make_fit(r, alpha_hat=0.5)
        res = gmm_estimator(None, unstructured_family(6), fit)
        assert res.set.indices == (0, 2, 4)

    def test_interval_window_example(self):
        r = np.array([0.1, 0.9, 0.9, 0.1])
        fit = make_fit(r, alpha_hat=0.5)  # round(0.5 * 4) = 2
        res = gmm_estimator(None, interval_family(4), fit)
        assert res.set.indices == (1, 2)

    def test_size_contract(self):
        rng = np.random.default_rng(0)
        g = generate_graph("erdos_renyi", 40, seed=2, p=0.15)
        r = rng.random(40)
        fit = make_fit(r, alpha_hat=0.2)
        target = fit.size_target(40)
        for fam in (unstructured_family(40), interval_family(40), connected_family(g)):
            res = gmm_estimator(None, fam, fit, Budget(seed=1))
            assert len(res.set) == target

    def test_unstructured_is_topk_of_x(self):
        obs, _ = sample_gmm(0.2, 5.0, 400, seed=5)
        fit = fit_gmm_em(obs, EMConfig(seed=5))
        res = gmm_estimator(obs, unstructured_family(400), fit)
        k = len(res.set)
        topk = set(np.argsort(-obs.values, kind="stable")[:k].tolist())
        assert res.set.as_set() == topk

    def test_submatrix_prime_size_falls_to_nearest(self):
        rng = np.random.default_rng(1)
        r = rng.random(25)
        fit = make_fit(r, alpha_hat=7 / 25)  # target 7: no p*q = 7 fits in 5x5
        res = gmm_estimator(None, submatrix_family(5, 5), fit)
        assert len(res.set) == 6  # nearest realizable size

    def test_band_empty_error(self):
        # single realizable ball size far from the target
        pts = [(0.0,), (0.1,), (0.2,), (5.0,), (6.0,), (7.0,), (8.0,), (9.0,), (10.0,), (11.0,)]
        fam = epsilon_ball_family(pts, 0.25)
        fit = make_fit(np.linspace(0, 1, 10), alpha_hat=0.9)
        with pytest.raises(BandEmptyError):
            gmm_estimator(None, fam, fit)

    def test_normalized_error_bound(self):
        # symmetric-difference error stays small in the well-separated regime
        n = 10_000
        mu = 4 * math.sqrt(math.log(n))
        fam = unstructured_family(n)
        ok = 0
        for s in range(10):
            a = sample_anomaly(fam, 2000, seed=s)
            x = sample_asd(a, mu, n, seed=500 + s)
            fit = fit_gmm_em(x, EMConfig(seed=s))
            est = gmm_estimator(x, fam, fit)
            err = len(a.as_set() ^ est.set.as_set()) / len(a)
            ok += err <= 0.2
        assert ok >= 9


class TestGmmEstimatorShifted:
    def test_unstructured_matches_banded(self):
        rng = np.random.default_rng(3)
        r = rng.random(30)
        fit = make_fit(r, alpha_hat=0.23)
        fam = unstructured_family(30)
        banded = gmm_estimator(None, fam, fit)
        shifted = gmm_estimator_shifted(None, fam, fit)
        assert banded.set == shifted.set

    def test_all_equal_falls_back(self):
        fit = make_fit(np.full(12, 0.4), alpha_hat=0.25)
        res = gmm_estimator_shifted(None, unstructured_family(12), fit)
        assert len(res.set) == fit.size_target(12)

    def test_connected_size_tracks_target(self):
        n = 300
        g = generate_graph("erdos_renyi", n, seed=6, p=0.03)
        fam = connected_family(g)
        within = 0
        for s in range(5):
            a = sample_anomaly(fam, 15, seed=s)
            x = sample_asd(a, 4.0, n, seed=100 + s)
            fit = fit_gmm_em(x, EMConfig(seed=s))
            res = gmm_estimator_shifted(x, fam, fit, Budget(iterations=8000, restarts=3, seed=s))
            target = fit.size_target(n)
            assert abs(len(res.set) - target) <= max(0.2 * target, 2)
            within += 1
        assert within == 5


class TestPoissonEm:
    def test_null_data_clamps(self):
        a = IndexSet((), 3000)
        obs = sample_poisson_counts(a, 1.0, np.full(3000, 8.0), seed=1)
        fit = fit_poisson_mixture_em(obs, EMConfig(seed=1))
        assert fit.q_hat <= 1.05 or fit.alpha_hat <= 0.01

    def test_recovery(self):
        ok_a = ok_q = 0
        for s in range(10):
            a = sample_anomaly(unstructured_family(10_000), 1000, seed=s)
            obs = sample_poisson_counts(a, 2.0, np.full(10_000, 10.0), seed=900 + s)
            fit = fit_poisson_mixture_em(obs, EMConfig(seed=s))
            ok_a += abs(fit.alpha_hat - 0.1) <= 0.02
            ok_q += abs(fit.q_hat - 2.0) <= 0.1
        assert ok_a >= 9 and ok_q >= 9

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            fit_poisson_mixture_em(Observations.poisson([3], [1.0]))

    def test_responsibilities_feed_estimator(self):
        a = sample_anomaly(unstructured_family(600), 60, seed=3)
        obs = sample_poisson_counts(a, 3.0, np.full(600, 5.0), seed=4)
        fit = fit_poisson_mixture_em(obs, EMConfig(seed=3))
        est = gmm_estimator(obs, unstructured_family(600), fit)
        inter = len(a.as_set() & est.set.as_set()) / len(a)
        assert inter > 0.8


class TestSerialization:
    def test_save_mixture_fit(self, tmp_path):
        obs, _ = sample_gmm(0.2, 4.0, 200, seed=8)
        fit = fit_gmm_em(obs, EMConfig(seed=8))
        jp, cp = tmp_path / "fit.json", tmp_path / "resp.csv"
        save_mixture_fit(fit, jp, cp)
        import json

        payload = json.loads(jp.read_text())
        assert set(payload) == {
            "alpha_hat", "mu_hat", "loglik", "iterations", "converged", "responsibilities_path",
        }
        lines = cp.read_text().strip().splitlines()
        assert lines[0] == "index,responsibility"
        assert len(lines) == 201
