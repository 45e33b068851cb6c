import json
import math

import numpy as np
import pytest
from scipy import stats as sstats

from stratclt import (
    ConfigError,
    LocalizationError,
    Point,
    compare_covariance,
    config_from_json,
    cov_matrix,
    build_net,
    ks_distance,
    run_clt_experiment,
)
from stratclt.harness import _FieldSimulator, _PURPOSE_SAMPLES

from .conftest import load_config


def small_config(name, **overrides):
    raw = load_config(name)
    raw["sample_sizes"] = overrides.pop("sample_sizes", [200])
    raw["replicates"] = overrides.pop("replicates", 150)
    raw.setdefault("thresholds", {})
    # loose thresholds: these runs check plumbing, not statistics
    raw["thresholds"].update({"ks": 0.2, "mahalanobis_ks": 0.2, "cov_sup": 0.3})
    if "modulus" in raw:
        raw["modulus"].update({"n": 200, "replicates": 120})
    raw.update(overrides)
    return raw


class TestKsDistance:
    def test_perfect_quantiles(self):
        n = 50
        qs = sstats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        assert ks_distance(qs, sstats.norm.cdf) == pytest.approx(1.0 / (2 * n),
                                                                 abs=1e-12)

    def test_point_mass_vs_normal(self):
        assert ks_distance(np.zeros(100), sstats.norm.cdf) == pytest.approx(0.5)

    def test_single_sample_at_median(self):
        assert ks_distance([0.0], sstats.norm.cdf) == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(Exception):
            ks_distance([], sstats.norm.cdf)


class TestCompareCovariance:
    def test_identical(self):
        a = np.array([[1.0, 0.2], [0.2, 1.0]])
        assert compare_covariance(a, a) == (0.0, 0.0)

    def test_zero_analytic_absolute(self):
        e = np.array([[0.3, 0.0], [0.0, 0.1]])
        sup, fro = compare_covariance(e, np.zeros((2, 2)))
        assert sup == pytest.approx(0.3)
        assert fro == pytest.approx(np.linalg.norm(e))

    def test_single_entry_perturbation(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        e = a.copy()
        e[0, 1] = 0.01
        sup, _ = compare_covariance(e, a)
        assert sup == pytest.approx(0.01)


class TestConfigValidation:
    def test_replicate_floor(self):
        raw = small_config("spider3_uniform.json")
        raw["replicates"] = 10
        with pytest.raises(ConfigError):
            config_from_json(raw, seed=1)

    def test_sample_sizes_increasing(self):
        raw = small_config("spider3_uniform.json")
        raw["sample_sizes"] = [100, 100]
        with pytest.raises(ConfigError):
            config_from_json(raw, seed=1)

    def test_net_required(self):
        raw = small_config("spider3_uniform.json")
        del raw["net"]
        with pytest.raises(ConfigError):
            config_from_json(raw, seed=1)

    def test_unknown_test_rejected(self):
        raw = small_config("spider3_uniform.json")
        raw["tests"] = ["cov", "bogus"]
        with pytest.raises(ConfigError):
            config_from_json(raw, seed=1)


class TestDeterminism:
    def test_bit_identical_reports(self):
        raw = small_config("spider3_uniform.json")
        blobs = []
        for _ in range(2):
            cfg = config_from_json(raw, seed=31337)
            rep = run_clt_experiment(cfg)
            blobs.append(json.dumps(rep.to_json(), sort_keys=True))
        assert blobs[0] == blobs[1]

    def test_thread_count_invariance(self):
        raw = small_config("spider3_uniform.json", replicates=250)
        blobs = []
        for threads in (1, 4):
            cfg = config_from_json(raw, seed=7, threads=threads)
            rep = run_clt_experiment(cfg)
            blobs.append(json.dumps(rep.to_json(), sort_keys=True))
        assert blobs[0] == blobs[1]

    def test_seed_changes_results(self):
        raw = small_config("spider3_uniform.json")
        rep_a = run_clt_experiment(config_from_json(raw, seed=1))
        rep_b = run_clt_experiment(config_from_json(raw, seed=2))
        assert rep_a.per_n[200]["cov"]["sup_error"] != \
            rep_b.per_n[200]["cov"]["sup_error"]


class TestRefusals:
    def test_non_localized_measure_refused(self, cone3pi):
        mu_json = {
            "space": {"kind": "flat_cone", "circumference": 3 * math.pi},
            "atoms": [{"point": [1.0, 0.0], "weight": 0.8},
                      {"point": [1.0, math.pi], "weight": 0.2}],
        }
        raw = {
            "measure": mu_json,
            "base": [0.6, 0.0],
            "net": {"epsilon": 0.5},
            "sample_sizes": [200],
            "replicates": 150,
            "validation": {"solver": {"grid_step": 0.01, "grid_radius": 0.5}},
        }
        cfg = config_from_json(raw, seed=5)
        with pytest.raises(LocalizationError) as err:
            run_clt_experiment(cfg)
        assert not err.value.report.logs["passed"]


class TestPointMassTrivial:
    def test_all_fields_identically_zero(self, spider3):
        raw = {
            "measure": {"space": {"kind": "spider", "legs": 3},
                        "atoms": [{"point": [1, 1.0], "weight": 1.0}]},
            "net": {"signs": [1, -1]},
            "sample_sizes": [500],
            "replicates": 150,
            "tests": ["cov", "ks", "mahalanobis", "moments", "martingale"],
        }
        rep = run_clt_experiment(config_from_json(raw, seed=3))
        assert rep.passed
        tests = rep.per_n[500]
        assert tests["cov"]["sup_error"] <= 1e-12
        assert all(r["ks"] is None for r in tests["ks"]["directions"])
        assert tests["mahalanobis"]["dof"] == 0


class TestStatisticalInvariants:
    def test_covariance_error_scales_with_replicates(self, spider_uniform,
                                                     spider_apex):
        # sup error decays like 1/sqrt(R): quadrupling R should shrink the
        # seed-averaged error by a factor inside [1.3, 3.2]
        net = build_net(spider_apex, 1.0)
        sim = _FieldSimulator(spider_uniform, spider_apex, net)
        cov = cov_matrix(spider_uniform, spider_apex, net)
        errors = {}
        for r_count in (500, 2000, 8000):
            sups = []
            for seed in range(5):
                vals = sim.field_rows(seed, _PURPOSE_SAMPLES, 0, 50, r_count, 1)
                emp = vals.T @ vals / r_count
                sups.append(compare_covariance(emp, cov)[0])
            errors[r_count] = float(np.mean(sups))
        assert 1.3 <= errors[500] / errors[2000] <= 3.2
        assert 1.3 <= errors[2000] / errors[8000] <= 3.2

    def test_lln_rate(self, spider_uniform, spider_apex):
        # sup |gbar_n| over the net decays like 1/sqrt(n); one sample
        # stream per replicate is reused across the n values (prefixes)
        # so only the n-dependence varies
        net = build_net(spider_apex, 1.0)
        sim = _FieldSimulator(spider_uniform, spider_apex, net)
        ns = (1000, 4000, 16000)
        reps = 400
        sups = {n: [] for n in ns}
        from stratclt import substream
        from stratclt.measures import sample_indices
        for rep in range(reps):
            idx = sample_indices(spider_uniform, substream(77, 50, rep), ns[-1])
            for n in ns:
                counts = np.bincount(idx[:n], minlength=sim.k).astype(float)
                gbar = (counts @ sim.pair - n * sim.mean_vec) / n
                sups[n].append(np.abs(gbar).max())
        means = {n: float(np.mean(sups[n])) for n in ns}
        assert 1.3 <= means[1000] / means[4000] <= 3.2
        assert 1.3 <= means[4000] / means[16000] <= 3.2

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["spider3_uniform.json",
                                      "openbook3_spine.json",
                                      "flatcone4_star.json"])
    def test_gaussianity_all_singular_spaces(self, name):
        # whitened squared-norm statistic is chi-square at n = 10^4
        raw = load_config(name)
        raw["sample_sizes"] = [10000]
        raw["tests"] = ["mahalanobis"]
        raw.pop("modulus", None)
        cfg = config_from_json(raw, seed=1234)
        rep = run_clt_experiment(cfg)
        t = rep.per_n[10000]["mahalanobis"]
        assert t["ks"] < 0.05
        assert t["passed"]


class TestMartingaleResidual:
    def test_partial_sum_unbiasedness(self, spider_uniform, spider_apex):
        net = build_net(spider_apex, 1.0)
        raw = {
            "measure": {"space": {"kind": "spider", "legs": 3},
                        "atoms": [{"point": [i, 1.0], "weight": 1 / 3}
                                  for i in range(3)]},
            "net": {"legs": [0, 1, 2]},
            "sample_sizes": [200],
            "replicates": 2000,
            "tests": ["martingale"],
            "martingale": {"n": 500, "k": 500},
        }
        rep = run_clt_experiment(config_from_json(raw, seed=99))
        assert rep.martingale["passed"]
        # the report carries the normalization caveat and the scaling factor
        assert "martingale" in rep.martingale["normalization_note"]
        assert rep.martingale["conditional_scaling_sqrt_n_over_n_plus_k"] == \
            pytest.approx(math.sqrt(0.5))


class TestMomentExpansionOracle:
    """Exhaustive enumeration over all ordered sample tuples at tiny n:
    an independent check of the fourth-moment expansion the harness
    asserts exactly (3(1-1/n) e2^2 + e4/n) and of the finite-n
    covariance identity E[G_n(V) G_n(U)] = Sigma(V, U)."""

    def _enumerate(self, tau, weights, n):
        import itertools
        k = len(weights)
        e_g4 = np.zeros(tau.shape[1])
        e_gg = np.zeros((tau.shape[1], tau.shape[1]))
        for tup in itertools.product(range(k), repeat=n):
            prob = float(np.prod([weights[i] for i in tup]))
            g = tau[list(tup), :].sum(axis=0) / math.sqrt(n)
            e_g4 += prob * g**4
            e_gg += prob * np.outer(g, g)
        return e_g4, e_gg

    def test_fourth_moment_expansion_exact(self, spider_uniform, spider_apex):
        net = build_net(spider_apex, 1.0)
        sim = _FieldSimulator(spider_uniform, spider_apex, net)
        tau = sim.pair - sim.mean_vec
        w = spider_uniform.weights
        for n in (2, 3, 4):
            e_g4, e_gg = self._enumerate(tau, w, n)
            e2 = w @ tau**2
            e4 = w @ tau**4
            expansion = 3.0 * (1.0 - 1.0 / n) * e2**2 + e4 / n
            assert np.max(np.abs(e_g4 - expansion)) <= 1e-12
            cov = cov_matrix(spider_uniform, spider_apex, net)
            assert np.max(np.abs(e_gg - cov.entries)) <= 1e-12

    def test_increment_expansion_exact(self, spider_weighted, spider3):
        base = Point(spider3, (1, 0.6))
        net = build_net(base, 1.0)
        sim = _FieldSimulator(spider_weighted, base, net)
        tau = sim.pair - sim.mean_vec
        w = spider_weighted.weights
        delta = (tau[:, 0] - tau[:, 1])[:, None]
        for n in (2, 3):
            e_d4, _ = self._enumerate(delta, w, n)
            e2 = float(w @ delta[:, 0] ** 2)
            e4 = float(w @ delta[:, 0] ** 4)
            expansion = 3.0 * (1.0 - 1.0 / n) * e2 * e2 + e4 / n
            assert abs(float(e_d4[0]) - expansion) <= 1e-12


class TestZeroVarianceDirection:
    def test_orthogonal_direction_asserted_zero(self):
        # atoms along one axis: the orthogonal direction has zero variance
        # and its field values must vanish identically
        raw = {
            "measure": {"space": {"kind": "euclidean", "dim": 2},
                        "atoms": [{"point": [-1.0, 0.0], "weight": 0.5},
                                  {"point": [1.0, 0.0], "weight": 0.5}]},
            "base": [0.0, 0.0],
            "net": {"vectors": [[1.0, 0.0], [0.0, 1.0]]},
            "sample_sizes": [500],
            "replicates": 150,
            "tests": ["ks"],
            "thresholds": {"ks": 0.2},
            "validation": {"solver": {"grid_step": 0.01, "grid_radius": 0.5}},
        }
        rep = run_clt_experiment(config_from_json(raw, seed=8))
        rows = rep.per_n[500]["ks"]["directions"]
        assert rows[0]["ks"] is not None        # along the atoms: KS tested
        assert rows[1]["ks"] is None            # orthogonal: asserted zero
        assert rows[1]["max_abs"] <= 1e-10
        assert rep.per_n[500]["ks"]["passed"]
