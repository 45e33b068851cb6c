"""Seeded Monte Carlo verification of tangent-field Gaussian limits.

For a localized discrete measure, the scaled empirical field on a net
is simulated replicate by replicate and compared against the exactly
computable tangent covariance: entrywise covariance error, per-direction
normal KS distances, a whitened chi-square statistic, fourth-moment and
increment-moment bounds with their explicit two-term constants, a
partial-sum martingale residual, and modulus-of-continuity tables.

Every replicate draws its stream from (seed, purpose, n index, replicate
index), so reports are bit-identical across runs and worker counts.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from . import fields as fl
from . import geometry as geo
from . import measures as mz
from . import regularity as rg
from .errors import ConfigError, DomainError, LocalizationError
from .geometry import DirectionNet, Point
from .measures import DiscreteMeasure
from .rng import substream

_PURPOSE_SAMPLES = 10
_PURPOSE_MARTINGALE = 11
_PURPOSE_MODULUS = 12

ALL_TESTS = ("cov", "ks", "mahalanobis", "moments", "increments", "martingale",
             "modulus")

_NORMALIZATION_NOTE = (
    "The CLT-scaled field is not itself a martingale in n: conditioning on the "
    "first n samples gives E[G_{n+k} | first n] = sqrt(n/(n+k)) * G_n. The "
    "partial sums S_n = sqrt(n) * G_n are the martingale, and the residual "
    "test below is run on them."
)


# ---------------------------------------------------------------------------
# Config


@dataclass(frozen=True)
class Thresholds:
    ks: float = 0.03
    mahalanobis_ks: float = 0.05
    cov_sup: float = 0.05
    zero_variance: float = 1e-10
    modulus_min_drop: float = 1.5

    def to_json(self):
        return {
            "ks": self.ks,
            "mahalanobis_ks": self.mahalanobis_ks,
            "cov_sup": self.cov_sup,
            "zero_variance": self.zero_variance,
            "modulus_min_drop": self.modulus_min_drop,
        }


@dataclass(frozen=True)
class ModulusSpec:
    epsilon: float = 2.0 ** -8
    radii_log2: tuple = (2, 3, 4, 5, 6)
    n: int = 1000
    replicates: int = 500

    def to_json(self):
        return {
            "epsilon": self.epsilon,
            "radii_log2": list(self.radii_log2),
            "n": self.n,
            "replicates": self.replicates,
        }


@dataclass(frozen=True)
class MartingaleSpec:
    n: int = 1000
    k: int = 1000

    def to_json(self):
        return {"n": self.n, "k": self.k}


@dataclass(frozen=True)
class ExperimentConfig:
    measure: DiscreteMeasure
    sample_sizes: tuple
    replicates: int
    seed: int
    base: Point | None = None
    net_epsilon: float | None = None
    net_spec: dict | None = None  # explicit directions, JSON form
    tests: tuple = ALL_TESTS
    thresholds: Thresholds = field(default_factory=Thresholds)
    martingale: MartingaleSpec = field(default_factory=MartingaleSpec)
    modulus: ModulusSpec = field(default_factory=ModulusSpec)
    validation: dict = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        ns = tuple(int(n) for n in self.sample_sizes)
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("sample sizes must be nonempty and strictly increasing")
        if any(n < 1 for n in ns):
            raise ConfigError("sample sizes must be positive")
        if self.replicates < 100:
            raise ConfigError("statistical tests need at least 100 replicates")
        unknown = set(self.tests) - set(ALL_TESTS)
        if unknown:
            raise ConfigError(f"unknown tests: {sorted(unknown)}")
        if self.net_epsilon is None and self.net_spec is None:
            raise ConfigError("config needs a net: epsilon or explicit directions")
        object.__setattr__(self, "sample_sizes", ns)
        object.__setattr__(self, "tests", tuple(self.tests))

    def echo(self) -> dict:
        out = {
            "measure": self.measure.to_json(),
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "tests": list(self.tests),
            "thresholds": self.thresholds.to_json(),
            "martingale": self.martingale.to_json(),
            "modulus": self.modulus.to_json(),
        }
        if self.base is not None:
            out["base"] = self.base.to_coords()
        out["net"] = ({"epsilon": self.net_epsilon}
                      if self.net_epsilon is not None else self.net_spec)
        if self.validation:
            out["validation"] = self.validation
        return out

    def validation_config(self) -> mz.ValidationConfig:
        raw = dict(self.validation)
        solver = mz.SolverConfig(**raw.pop("solver", {}))
        return mz.ValidationConfig(base=self.base, solver=solver, **raw)


def _directions_from_spec(base: Point, spec: dict):
    """Explicit net directions from their JSON form, validated per base."""
    if "legs" in spec:
        return [geo.Direction(base, geo.D_LEG, (i,)) for i in spec["legs"]]
    if "signs" in spec:
        return [geo.Direction(base, geo.D_SIGN, (s,)) for s in spec["signs"]]
    if "angles" in spec:
        return [geo.Direction(base, geo.D_ANGLE, (a,)) for a in spec["angles"]]
    if "page_angles" in spec:
        return [
            geo.Direction(base, geo.D_PAGE_ANGLE, (p, th)) for p, th in spec["page_angles"]
        ]
    if "vectors" in spec:
        return [geo.Direction(base, geo.D_VECTOR, tuple(v)) for v in spec["vectors"]]
    raise ConfigError("net spec needs 'epsilon' or one of "
                      "legs/signs/angles/page_angles/vectors")


def config_from_json(obj: dict, seed: int, threads: int = 1) -> ExperimentConfig:
    """Build an ExperimentConfig from its JSON form plus the run seed."""
    try:
        measure = DiscreteMeasure.from_json(obj["measure"])
        base = None
        if obj.get("base") is not None:
            base = Point.of(measure.space, obj["base"])
        net = obj["net"]
        ns = obj["sample_sizes"]
        reps = obj["replicates"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed experiment config: {exc}") from exc
    try:
        th = Thresholds(**obj.get("thresholds", {}))
        mart = MartingaleSpec(**obj.get("martingale", {}))
        mod_raw = dict(obj.get("modulus", {}))
        if "radii_log2" in mod_raw:
            mod_raw["radii_log2"] = tuple(mod_raw["radii_log2"])
        mod = ModulusSpec(**mod_raw)
    except TypeError as exc:
        raise ConfigError(f"malformed experiment config: {exc}") from exc
    kwargs = dict(
        measure=measure,
        sample_sizes=tuple(ns),
        replicates=int(reps),
        seed=int(seed),
        base=base,
        tests=tuple(obj.get("tests", ALL_TESTS)),
        thresholds=th,
        martingale=mart,
        modulus=mod,
        validation=dict(obj.get("validation", {})),
        threads=int(threads),
    )
    if isinstance(net, dict) and "epsilon" in net:
        kwargs["net_epsilon"] = float(net["epsilon"])
    elif isinstance(net, dict):
        kwargs["net_spec"] = net
    else:
        raise ConfigError("net spec must be an object")
    return ExperimentConfig(**kwargs)


# ---------------------------------------------------------------------------
# Elementary statistics


def ks_distance(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup distance against a cdf callable."""
    arr = np.sort(np.asarray(samples, dtype=float))
    n = len(arr)
    if n < 1:
        raise DomainError("KS distance needs at least one sample")
    f = np.asarray(cdf(arr), dtype=float)
    hi = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(np.max(np.maximum(np.abs(hi - f), np.abs(lo - f))))


def compare_covariance(empirical: np.ndarray, analytic) -> tuple[float, float]:
    """(sup entry error, relative Frobenius error) against the analytic kernel.

    When the analytic matrix vanishes the second component is the
    absolute Frobenius norm of the difference.
    """
    a = analytic.entries if hasattr(analytic, "entries") else np.asarray(analytic)
    e = np.asarray(empirical)
    if e.shape != a.shape:
        raise DomainError("covariance shapes do not match")
    diff = e - a
    sup = float(np.max(np.abs(diff))) if diff.size else 0.0
    denom = float(np.linalg.norm(a))
    fro = float(np.linalg.norm(diff))
    return sup, fro / denom if denom > 0.0 else fro


# ---------------------------------------------------------------------------
# Replicate simulation (counts against the atom pairing matrix)


class _FieldSimulator:
    """Simulates CLT-scaled empirical fields on a net for a discrete measure.

    A sample from a discrete measure is an atom index, so a replicate is
    the multinomial count vector of one inverse-CDF index stream; the
    field values are (counts @ P - n * m) / sqrt(n), identical to
    summing centered pairings sample by sample.
    """

    def __init__(self, measure: DiscreteMeasure, base: Point, net: DirectionNet):
        self.measure = measure
        self.base = base
        self.net = net
        tm = mz.pushforward(measure, base)
        self.pair = fl.pairing_matrix(tm, net)
        self.weights = measure.weights
        self.mean_vec = self.weights @ self.pair
        self.cum = np.cumsum(self.weights)
        self.cum[-1] = 1.0
        self.k = len(self.weights)

    def counts(self, rng: np.random.Generator, n: int) -> np.ndarray:
        idx = np.searchsorted(self.cum, rng.random(n), side="right")
        np.minimum(idx, self.k - 1, out=idx)
        return np.bincount(idx, minlength=self.k).astype(float)

    def field_rows(self, seed: int, purpose: int, n_index: int, n: int,
                   replicates: int, threads: int) -> np.ndarray:
        out = np.empty((replicates, len(self.net)))
        scale = 1.0 / math.sqrt(n)

        def run(lo: int, hi: int):
            for rep in range(lo, hi):
                rng = substream(seed, purpose, n_index, rep)
                c = self.counts(rng, n)
                out[rep] = (c @ self.pair - n * self.mean_vec) * scale

        if threads <= 1 or replicates < 2 * threads:
            run(0, replicates)
        else:
            bounds = np.linspace(0, replicates, threads + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(run, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])
                ]
                for f in futures:
                    f.result()
        return out

    def partial_sum_rows(self, seed: int, n: int, k: int, replicates: int,
                         threads: int) -> np.ndarray:
        """Rows of S_{n+k} - S_n from one coupled stream per replicate."""
        out = np.empty((replicates, len(self.net)))

        def run(lo: int, hi: int):
            for rep in range(lo, hi):
                rng = substream(seed, _PURPOSE_MARTINGALE, rep)
                idx = np.searchsorted(self.cum, rng.random(n + k), side="right")
                np.minimum(idx, self.k - 1, out=idx)
                c_head = np.bincount(idx[:n], minlength=self.k).astype(float)
                c_all = np.bincount(idx, minlength=self.k).astype(float)
                out[rep] = (c_all - c_head) @ self.pair - k * self.mean_vec

        if threads <= 1 or replicates < 2 * threads:
            run(0, replicates)
        else:
            bounds = np.linspace(0, replicates, threads + 1).astype(int)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(run, int(a), int(b))
                    for a, b in zip(bounds[:-1], bounds[1:])
                ]
                for f in futures:
                    f.result()
        return out


# ---------------------------------------------------------------------------
# Individual tests


def _cov_test(values: np.ndarray, cov: fl.CovMatrix, threshold: float) -> dict:
    emp = values.T @ values / values.shape[0]
    sup, fro = compare_covariance(emp, cov)
    return {"sup_error": sup, "frobenius_rel": fro, "threshold": threshold,
            "passed": sup < threshold}


def _ks_test(values: np.ndarray, cov: fl.CovMatrix, threshold: float,
             zero_tol: float) -> dict:
    diag = np.diag(cov.entries)
    scale = max(float(diag.max(initial=0.0)), 0.0)
    rows = []
    for j in range(values.shape[1]):
        var = float(diag[j])
        if var <= 1e-12 * max(scale, 1.0):
            sup_abs = float(np.max(np.abs(values[:, j])))
            rows.append({"direction": j, "variance": var, "ks": None,
                         "max_abs": sup_abs, "passed": sup_abs <= zero_tol})
            continue
        sigma = math.sqrt(var)
        d = ks_distance(values[:, j], lambda x: sstats.norm.cdf(x / sigma))
        rows.append({"direction": j, "variance": var, "ks": d, "max_abs": None,
                     "passed": d < threshold})
    return {"threshold": threshold, "directions": rows,
            "passed": all(r["passed"] for r in rows)}


def _mahalanobis_test(values: np.ndarray, cov: fl.CovMatrix, threshold: float,
                      zero_tol: float) -> dict:
    vals, vecs = cov.eigenvalues, cov.eigenvectors
    lam_max = float(vals.max(initial=0.0))
    keep = vals > 1e-10 * max(lam_max, 1e-300)
    dof = int(keep.sum())
    if dof == 0:
        sup_abs = float(np.max(np.abs(values))) if values.size else 0.0
        return {"dof": 0, "ks": None, "max_abs": sup_abs,
                "threshold": threshold, "passed": sup_abs <= zero_tol}
    white = vecs[:, keep] / np.sqrt(vals[keep])
    stat = np.sum((values @ white) ** 2, axis=1)
    d = ks_distance(stat, lambda x: sstats.chi2.cdf(x, dof))
    return {"dof": dof, "ks": d, "max_abs": None, "threshold": threshold,
            "passed": d < threshold}


def _moment_test(values: np.ndarray, sim: _FieldSimulator, n: int,
                 gamma2: float, gamma4: float) -> dict:
    w = sim.weights
    tau = sim.pair - sim.mean_vec
    e2 = w @ tau**2
    e4 = w @ tau**4
    exact = 3.0 * (1.0 - 1.0 / n) * e2**2 + e4 / n
    bound = 3.0 * gamma2**2 + gamma4 / n
    mc = values**4
    mc4 = mc.mean(axis=0)
    se = mc.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
    rows = []
    for j in range(values.shape[1]):
        rows.append({
            "direction": j,
            "mc_fourth_moment": float(mc4[j]),
            "mc_se": float(se[j]),
            "exact_fourth_moment": float(exact[j]),
            "bound": float(bound),
            "ratio": float(mc4[j] / bound) if bound > 0 else 0.0,
            "exact_ok": bool(exact[j] <= bound * (1 + 1e-12) + 1e-300),
            "passed": bool(mc4[j] <= bound + 3.0 * se[j]),
        })
    return {"bound": float(bound), "directions": rows,
            "passed": all(r["passed"] and r["exact_ok"] for r in rows)}


def _increment_test(values: np.ndarray, sim: _FieldSimulator, n: int,
                    gamma2: float, gamma4: float) -> dict:
    m = len(sim.net)
    if m < 2:
        return {"pairs": [], "passed": True}
    dmat = sim.net.pairwise_distances()
    tau = sim.pair - sim.mean_vec
    w = sim.weights
    rows = []
    ok = True
    for i in range(m):
        for j in range(i + 1, m):
            d = float(dmat[i, j])
            bound = 2.0 * (2.0 * (1.0 + gamma2) * d * d) ** 2 \
                + 8.0 * (1.0 + gamma4) * d**4 / n
            delta = tau[:, i] - tau[:, j]
            e2 = float(w @ delta**2)
            e4 = float(w @ delta**4)
            exact = 3.0 * (1.0 - 1.0 / n) * e2 * e2 + e4 / n
            diffs4 = (values[:, i] - values[:, j]) ** 4
            mc = float(diffs4.mean())
            se = float(diffs4.std(ddof=1) / math.sqrt(values.shape[0]))
            exact_ok = exact <= bound * (1 + 1e-12) + 1e-300
            passed = mc <= bound + 3.0 * se
            ok = ok and passed and exact_ok
            rows.append({
                "i": i, "j": j, "angular_distance": d, "bound": bound,
                "exact_fourth_moment": exact, "mc_fourth_moment": mc,
                "mc_se": se, "ratio": mc / bound if bound > 0.0 else 0.0,
                "exact_ok": bool(exact_ok), "passed": bool(passed),
            })
    return {"pairs": rows, "passed": bool(ok)}


def _martingale_test(sim: _FieldSimulator, cov: fl.CovMatrix, seed: int,
                     spec: MartingaleSpec, replicates: int, threads: int) -> dict:
    rows_raw = sim.partial_sum_rows(seed, spec.n, spec.k, replicates, threads)
    mean_res = rows_raw.mean(axis=0)
    diag = np.diag(cov.entries)
    bounds = 4.0 * np.sqrt(spec.k * np.maximum(diag, 0.0) / replicates)
    rows = []
    for j in range(len(diag)):
        residual = float(abs(mean_res[j]))
        bound = float(bounds[j])
        rows.append({"direction": j, "residual": residual, "bound": bound,
                     "passed": residual <= bound + 1e-10})
    return {
        "n": spec.n, "k": spec.k, "replicates": replicates,
        "conditional_scaling_sqrt_n_over_n_plus_k":
            math.sqrt(spec.n / (spec.n + spec.k)),
        "normalization_note": _NORMALIZATION_NOTE,
        "directions": rows,
        "passed": all(r["passed"] for r in rows),
    }


def _modulus_test(measure: DiscreteMeasure, base: Point, seed: int,
                  spec: ModulusSpec, threads: int, min_drop: float) -> dict:
    net = rg.build_net(base, spec.epsilon)
    sim = _FieldSimulator(measure, base, net)
    values = sim.field_rows(seed, _PURPOSE_MODULUS, 0, spec.n, spec.replicates,
                            threads)
    radii = [2.0 ** (-m) for m in spec.radii_log2]
    table = rg.ModulusTable.from_fields(f"empirical_clt(n={spec.n})", values,
                                        net, radii)
    agg = np.array(table.aggregate)
    w_trunc = np.minimum(table.w, 1.0)
    se = w_trunc.std(axis=0, ddof=1) / math.sqrt(spec.replicates)
    monotone = True
    for c in range(1, len(agg)):
        if agg[c] > agg[c - 1] + 2.0 * (se[c] + se[c - 1]):
            monotone = False
    if agg[-1] > 0.0:
        drop = float(agg[0] / agg[-1])
        drop_ok = drop >= min_drop
    else:
        # zero at the finest radius: the drop is infinite (or the whole
        # table is zero, e.g. for a point mass); either way it passes
        drop = None
        drop_ok = True
    return {
        "net_size": len(net), "n": spec.n, "replicates": spec.replicates,
        "radii": [float(r) for r in radii],
        "aggregate": [float(a) for a in agg],
        "aggregate_se": [float(s) for s in se],
        "drop_ratio": drop,
        "monotone_within_error": bool(monotone),
        "passed": bool(monotone and drop_ok),
        "table": table,
    }


# ---------------------------------------------------------------------------
# Experiment driver


@dataclass(frozen=True, eq=False)
class CLTReport:
    config: dict
    config_hash: str
    seed: int
    base: Point
    net: DirectionNet
    analytic_cov: fl.CovMatrix
    localization: dict
    per_n: dict
    martingale: dict | None
    modulus: dict | None
    passed: bool

    def to_json(self) -> dict:
        per_n = {}
        for n, tests in self.per_n.items():
            per_n[str(n)] = tests
        mod = None
        if self.modulus is not None:
            mod = {k: v for k, v in self.modulus.items() if k != "table"}
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "base": self.base.to_coords(),
            "net": self.net.descriptors(),
            "analytic_cov": [[float(x) for x in row] for row in self.analytic_cov.entries],
            "psd_repair": list(self.analytic_cov.psd_repair),
            "localization": self.localization,
            "per_n": per_n,
            "martingale": self.martingale,
            "modulus": mod,
            "passed": self.passed,
        }


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def resolve_net(base: Point, cfg: ExperimentConfig) -> DirectionNet:
    if cfg.net_epsilon is not None:
        return rg.build_net(base, cfg.net_epsilon)
    dirs = _directions_from_spec(base, cfg.net_spec)
    return geo.net_from_directions(base, dirs)


def run_clt_experiment(cfg: ExperimentConfig) -> CLTReport:
    """Run the configured tests and assemble a deterministic report."""
    localization = mz.validate_localized(cfg.measure, cfg.validation_config())
    if not localization.passed:
        raise LocalizationError("measure failed localization checks",
                                report=localization)
    base = cfg.base if cfg.base is not None else localization.mean
    net = resolve_net(base, cfg)
    sim = _FieldSimulator(cfg.measure, base, net)
    cov = fl.cov_matrix(cfg.measure, base, net)
    gamma2 = cfg.measure.moment(base, 2)
    gamma4 = cfg.measure.moment(base, 4)
    th = cfg.thresholds

    per_n = {}
    all_passed = True
    for n_index, n in enumerate(cfg.sample_sizes):
        need_values = set(cfg.tests) & {"cov", "ks", "mahalanobis", "moments",
                                        "increments"}
        tests = {}
        if need_values:
            values = sim.field_rows(cfg.seed, _PURPOSE_SAMPLES, n_index, n,
                                    cfg.replicates, cfg.threads)
            if "cov" in cfg.tests:
                tests["cov"] = _cov_test(values, cov, th.cov_sup)
            if "ks" in cfg.tests:
                tests["ks"] = _ks_test(values, cov, th.ks, th.zero_variance)
            if "mahalanobis" in cfg.tests:
                tests["mahalanobis"] = _mahalanobis_test(values, cov,
                                                         th.mahalanobis_ks,
                                                         th.zero_variance)
            if "moments" in cfg.tests:
                tests["moments"] = _moment_test(values, sim, n, gamma2, gamma4)
            if "increments" in cfg.tests:
                tests["increments"] = _increment_test(values, sim, n, gamma2,
                                                      gamma4)
        per_n[n] = tests
        all_passed = all_passed and all(t["passed"] for t in tests.values())

    martingale = None
    if "martingale" in cfg.tests:
        martingale = _martingale_test(sim, cov, cfg.seed, cfg.martingale,
                                      cfg.replicates, cfg.threads)
        all_passed = all_passed and martingale["passed"]

    modulus = None
    if "modulus" in cfg.tests:
        modulus = _modulus_test(cfg.measure, base, cfg.seed, cfg.modulus,
                                cfg.threads, th.modulus_min_drop)
        all_passed = all_passed and modulus["passed"]

    cfg_echo = cfg.echo()
    return CLTReport(
        config=cfg_echo,
        config_hash=config_hash(cfg_echo),
        seed=cfg.seed,
        base=base,
        net=net,
        analytic_cov=cov,
        localization=localization.to_json(),
        per_n=per_n,
        martingale=martingale,
        modulus=modulus,
        passed=bool(all_passed),
    )
