"""Discrete probability measures and Fréchet-mean machinery.

Measures are finitely supported, which makes every moment identity an
exact finite sum.  The mean solver is a two-stage scheme: a seeded
inductive (resampled successive-geodesic) iteration followed by a grid
certificate with golden-section refinement, so the reported minimizer
comes with a checked runner-up gap instead of a bare heuristic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import (
    AmbiguousGeodesicError,
    ConfigError,
    ConvergenceError,
    DomainError,
    SpaceMismatchError,
)
from .geometry import Point, SpaceSpec, TangentVector
from .rng import substream

_WEIGHT_TOL = 1e-12

# substream purposes (first component of every spawn key)
_PURPOSE_MEAN = 1
_PURPOSE_CONVEXITY = 2


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on a model space."""

    space: SpaceSpec
    atoms: tuple  # of (Point, weight)

    def __post_init__(self):
        atoms = tuple((p, float(w)) for p, w in self.atoms)
        if not atoms:
            raise DomainError("a measure needs at least one atom")
        total = 0.0
        for p, w in atoms:
            if p.space != self.space:
                raise SpaceMismatchError("atom lives in a different space")
            if not w > 0.0:
                raise DomainError("atom weights must be strictly positive")
            total += w
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise DomainError(f"weights sum to {total!r}, expected 1 within {_WEIGHT_TOL}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def points(self) -> list[Point]:
        return [p for p, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    def moment(self, base: Point, order: int) -> float:
        """Exact E d(base, x)^order."""
        return float(sum(w * geo.distance(base, p) ** order for p, w in self.atoms))

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "atoms": [{"point": p.to_coords(), "weight": w} for p, w in self.atoms],
        }

    @staticmethod
    def from_json(obj: dict) -> "DiscreteMeasure":
        try:
            space = SpaceSpec.from_json(obj["space"])
            atoms = [
                (Point.of(space, a["point"]), a["weight"]) for a in obj["atoms"]
            ]
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"malformed measure file: {exc}") from exc
        return DiscreteMeasure(space, tuple(atoms))


@dataclass(frozen=True)
class TangentMeasure:
    """Pushforward of a measure to the tangent cone at a base point."""

    base: Point
    atoms: tuple  # of (TangentVector, weight)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([v.length for v, _ in self.atoms])


def pushforward(measure: DiscreteMeasure, base: Point) -> TangentMeasure:
    """Atom-wise log map; weights carried over unchanged."""
    out = []
    for i, (p, w) in enumerate(measure.atoms):
        try:
            out.append((geo.log_map(base, p), w))
        except AmbiguousGeodesicError as exc:
            raise AmbiguousGeodesicError(
                f"log map ambiguous at atom {i} with coords {p.to_coords()}: {exc}"
            ) from exc
    return TangentMeasure(base, tuple(out))


def frechet_function(measure: DiscreteMeasure, p: Point) -> float:
    """Half the weighted mean squared distance to p."""
    if p.space != measure.space:
        raise SpaceMismatchError("evaluation point lives in a different space")
    return 0.5 * sum(w * geo.distance(p, x) ** 2 for x, w in measure.atoms)


def sample_indices(measure: DiscreteMeasure, stream: np.random.Generator,
                   n: int) -> np.ndarray:
    """n i.i.d. atom indices by inverse-CDF on the weights."""
    if n < 1:
        raise DomainError("sample size must be >= 1")
    cum = np.cumsum(measure.weights)
    cum[-1] = 1.0  # guard against cumulative rounding
    idx = np.searchsorted(cum, stream.random(n), side="right")
    return np.minimum(idx, len(cum) - 1)


def sample(measure: DiscreteMeasure, stream: np.random.Generator,
           n: int) -> list[Point]:
    """n i.i.d. draws from the measure; bit-reproducible per stream."""
    pts = measure.points
    return [pts[i] for i in sample_indices(measure, stream, n)]


# ---------------------------------------------------------------------------
# Directional derivative and escape cone


def directional_derivative(measure: DiscreteMeasure, base: Point,
                           v: TangentVector) -> float:
    """One-sided derivative of the Fréchet function at base along unit v."""
    _require_unit(v)
    tm = pushforward(measure, base)
    return -sum(w * geo.angular_pairing(x, v) for x, w in tm.atoms)


def _require_unit(v: TangentVector):
    if abs(v.length - 1.0) > 1e-9:
        raise DomainError("direction argument must be a unit tangent vector")


def escape_cone_contains(measure: DiscreteMeasure, base: Point,
                         v: TangentVector, tol: float = 1e-9) -> bool:
    """Whether unit v has vanishing derivative (within tol) at base.

    At a Fréchet mean the tangent mean value is never strictly positive;
    a positive value beyond tol is reported as evidence that base is not
    the mean (a warning, since the membership answer is still False).
    """
    _require_unit(v)
    tm = pushforward(measure, base)
    mean_value = sum(w * geo.angular_pairing(x, v) for x, w in tm.atoms)
    if mean_value > tol:
        warnings.warn(
            f"tangent mean value {mean_value:.3e} > 0: base is not a Fréchet "
            "mean of the measure",
            stacklevel=2,
        )
    return abs(mean_value) <= tol


# ---------------------------------------------------------------------------
# Grid blocks: vectorized Fréchet evaluation over one stratum patch


class _GridBlock:
    """A batch of candidate points in one stratum with vectorized distances."""

    def __init__(self, label: str, size: int):
        self.label = label
        self.size = size
        self.values: np.ndarray | None = None

    def distances_from(self, p: Point) -> np.ndarray:
        raise NotImplementedError

    def point_at(self, i: int) -> Point:
        raise NotImplementedError


class _EuclideanBlock(_GridBlock):
    def __init__(self, space, pts):
        super().__init__("euclidean", len(pts))
        self.space = space
        self.pts = pts

    def distances_from(self, p):
        return np.linalg.norm(self.pts - np.asarray(p.coords), axis=1)

    def point_at(self, i):
        return Point(self.space, tuple(float(x) for x in self.pts[i]))


class _SpiderBlock(_GridBlock):
    def __init__(self, space, leg, radii):
        super().__init__("apex" if leg is None else f"leg{leg}", len(radii))
        self.space = space
        self.leg = leg
        self.radii = radii

    def distances_from(self, p):
        pl, pr = p.coords
        if self.leg is None:
            return np.full(self.size, pr)
        if pr > 0.0 and pl == self.leg:
            return np.abs(self.radii - pr)
        return self.radii + pr

    def point_at(self, i):
        if self.leg is None:
            return geo.apex(self.space)
        return Point(self.space, (self.leg, float(self.radii[i])))


class _BookBlock(_GridBlock):
    def __init__(self, space, page, s, t):
        super().__init__(f"page{page}", len(s))
        self.space = space
        self.page = page
        self.s = s
        self.t = t

    def distances_from(self, p):
        pg, ps, pt = p.coords
        same = (pg == self.page) | (self.t == 0.0) | (pt == 0.0)
        return np.where(
            same,
            np.hypot(self.s - ps, self.t - pt),
            np.hypot(self.s - ps, self.t + pt),
        )

    def point_at(self, i):
        return Point(self.space, (self.page, float(self.s[i]), float(self.t[i])))


class _ConeBlock(_GridBlock):
    def __init__(self, space, r, phi):
        super().__init__("cone", len(r))
        self.space = space
        self.r = r
        self.phi = phi

    def distances_from(self, p):
        pr, pphi = p.coords
        alpha = self.space.circumference
        gap = np.abs(self.phi - pphi)
        gap = np.minimum(gap, alpha - gap)
        ang = np.minimum(gap, math.pi)
        return np.hypot(self.r - pr * np.cos(ang), pr * np.sin(ang))

    def point_at(self, i):
        return Point(self.space, (float(self.r[i]), float(self.phi[i])))


class _SingletonBlock(_GridBlock):
    def __init__(self, label, point):
        super().__init__(label, 1)
        self.point = point

    def distances_from(self, p):
        return np.array([geo.distance(p, self.point)])

    def point_at(self, i):
        return self.point


def _grid_blocks(space: SpaceSpec, center: Point, radius: float, step: float,
                 max_points: float) -> list[_GridBlock]:
    """Grid over every stratum patch intersecting the ball around center."""
    blocks: list[_GridBlock] = []
    if space.kind == geo.EUCLIDEAN:
        axes = [
            np.arange(c - radius, c + radius + step / 2, step) for c in center.coords
        ]
        total = math.prod(len(a) for a in axes)
        if total > max_points:
            raise ConfigError(
                f"certificate grid would need {total} points; increase grid_step"
            )
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        mask = np.linalg.norm(pts - np.asarray(center.coords), axis=1) <= radius
        blocks.append(_EuclideanBlock(space, pts[mask]))
        return blocks
    if space.kind == geo.SPIDER:
        cl, cr = center.coords
        if cr <= radius:
            blocks.append(_SpiderBlock(space, None, np.zeros(1)))
        for leg in range(space.legs):
            if leg == cl and cr > 0.0:
                lo, hi = max(0.0, cr - radius), cr + radius
            else:
                if cr >= radius:
                    continue
                lo, hi = 0.0, radius - cr
            radii = np.arange(max(lo, step), hi + step / 2, step)
            if len(radii):
                blocks.append(_SpiderBlock(space, leg, radii))
        return blocks
    if space.kind == geo.OPEN_BOOK:
        cp, cs, ct = center.coords
        s_axis = np.arange(cs - radius, cs + radius + step / 2, step)
        for page in range(space.pages):
            if page == cp and ct > 0.0:
                t_lo, t_hi = max(0.0, ct - radius), ct + radius
            elif ct < radius:
                t_lo, t_hi = 0.0, radius - ct  # reachable across the spine
            else:
                continue
            t_axis = np.arange(t_lo, t_hi + step / 2, step)
            if page != 0:
                t_axis = t_axis[t_axis > 0.0]  # the spine row lives in page 0
            if not len(t_axis):
                continue
            if len(s_axis) * len(t_axis) > max_points:
                raise ConfigError(
                    "certificate grid too large; increase grid_step"
                )
            ss, tt = np.meshgrid(s_axis, t_axis, indexing="ij")
            ss, tt = ss.ravel(), tt.ravel()
            block = _BookBlock(space, page, ss, tt)
            mask = block.distances_from(center) <= radius
            blocks.append(_BookBlock(space, page, ss[mask], tt[mask]))
        return blocks
    # flat cone
    cr, cphi = center.coords
    alpha = space.circumference
    if cr <= radius:
        blocks.append(_SingletonBlock("apex", geo.apex(space)))
    r_hi = cr + radius
    r_axis = np.arange(step, r_hi + step / 2, step)
    dphi = step / max(r_hi, step)
    if cr <= radius:
        half_width = alpha / 2.0
    else:
        half_width = min(alpha / 2.0, math.asin(min(1.0, radius / cr)) + 2 * dphi)
    n_phi = max(1, math.ceil(half_width / dphi))
    phi_axis = cphi + dphi * np.arange(-n_phi, n_phi + 1)
    if len(r_axis) * len(phi_axis) > max_points:
        raise ConfigError("certificate grid too large; increase grid_step")
    rr, pp = np.meshgrid(r_axis, phi_axis % alpha, indexing="ij")
    rr, pp = rr.ravel(), pp.ravel()
    block = _ConeBlock(space, rr, pp)
    mask = block.distances_from(center) <= radius
    blocks.append(_ConeBlock(space, rr[mask], pp[mask]))
    return blocks


# ---------------------------------------------------------------------------
# Mean solver


@dataclass(frozen=True)
class SolverConfig:
    iterations: int = 20000
    seed: int = 0
    grid_radius: float = 1.0
    grid_step: float = 1e-3
    refine_rounds: int = 2
    golden_iters: int = 40
    sticky_tol: float = 1e-8
    sticky_net_eps: float = 0.02
    runner_up_separation: float = 0.05
    tail_window: int = 50
    tail_tol: float | None = None
    max_grid_points: float = 2.5e7


@dataclass(frozen=True)
class GridCertificate:
    grid_step: float
    runner_up_gap: float
    grid_points: int
    separation: float

    def to_json(self) -> dict:
        return {
            "grid_step": self.grid_step,
            "runner_up_gap": self.runner_up_gap,
            "grid_points": self.grid_points,
            "separation": self.separation,
        }


@dataclass(frozen=True)
class MeanDiagnostics:
    mean: Point
    frechet_value: float
    iterations: int
    certificate: GridCertificate
    sticky: bool
    sticky_stratum: str | None = None
    min_outward_derivative: float | None = None

    def to_json(self) -> dict:
        return {
            "mean": {"space": self.mean.space.to_json(), "coords": self.mean.to_coords()},
            "frechet_value": self.frechet_value,
            "iterations": self.iterations,
            "certificate": self.certificate.to_json(),
            "sticky": self.sticky,
            "sticky_stratum": self.sticky_stratum,
            "min_outward_derivative": self.min_outward_derivative,
        }


def _inductive_mean(measure: DiscreteMeasure, cfg: SolverConfig) -> tuple[Point, int]:
    """Seeded resampled successive-geodesic iteration p <- gamma(p, x, 1/(k+1))."""
    pts = measure.points
    rng = substream(cfg.seed, _PURPOSE_MEAN)
    idx = sample_indices(measure, rng, cfg.iterations)
    p = pts[idx[0]]
    window = []
    for k in range(1, cfg.iterations):
        p = geo.geodesic_point(p, pts[idx[k]], 1.0 / (k + 1.0))
        if k >= cfg.iterations - cfg.tail_window:
            window.append(p)
    if window:
        tail = [geo.distance(q, p) for q in window]
        dmax = max(geo.distance(p, x) for x in pts)
        tol = cfg.tail_tol
        if tol is None:
            tol = max(1e-9, 200.0 * dmax / cfg.iterations)
        if max(tail) > tol:
            raise ConvergenceError(
                f"inductive mean tail {max(tail):.3e} above tolerance {tol:.3e}",
                trajectory_tail=tail,
            )
    return p, cfg.iterations


def _golden_minimize(f, lo: float, hi: float, iters: int) -> tuple[float, float]:
    """Golden-section minimum of f on [lo, hi]; also checks the endpoints."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    candidates = [(f(lo), lo), (f(hi), hi), (fc, c), (fd, d)]
    fx, x = min(candidates, key=lambda p: p[0])
    return x, fx


def _refinement_families(p: Point, step: float):
    """1-parameter families incident to p, as (curve, lo, hi) triples."""
    sp = p.space
    h = 2.0 * step
    fams = []
    if sp.kind == geo.EUCLIDEAN:
        base = np.asarray(p.coords)
        for i in range(sp.dim):
            e = np.zeros(sp.dim)
            e[i] = 1.0
            fams.append((lambda u, e=e: Point(sp, tuple(base + u * e)), -h, h))
    elif sp.kind == geo.SPIDER:
        leg, r = p.coords
        if r == 0.0:
            for l in range(sp.legs):
                fams.append((lambda u, l=l: Point(sp, (l, u)), 0.0, h))
        else:
            fams.append((lambda u: Point(sp, (leg, r + u)), -min(r, h), h))
    elif sp.kind == geo.OPEN_BOOK:
        pg, s, t = p.coords
        fams.append((lambda u: Point(sp, (pg, s + u, t)), -h, h))
        if t > 0.0:
            fams.append((lambda u: Point(sp, (pg, s, t + u)), -min(t, h), h))
        else:
            for q in range(sp.pages):
                fams.append((lambda u, q=q: Point(sp, (q, s, u)), 0.0, h))
    else:
        r, phi = p.coords
        alpha = sp.circumference
        if r == 0.0:
            for j in range(16):
                a = alpha * j / 16.0
                fams.append((lambda u, a=a: Point(sp, (u, a)), 0.0, h))
        else:
            fams.append((lambda u: Point(sp, (r + u, phi)), -min(r, h), h))
            fams.append((lambda u: Point(sp, (r, phi + u / r)), -h, h))
    return fams


def _grid_certificate(measure: DiscreteMeasure, center: Point,
                      cfg: SolverConfig):
    """Grid search + golden refinement around center.

    Returns (best point, best F, certificate, blocks); the runner-up gap
    is measured against the best grid point at least
    ``runner_up_separation`` away, i.e. against the nearest competing
    basin rather than the neighboring cell of the same minimum.
    """
    blocks = _grid_blocks(measure.space, center, cfg.grid_radius, cfg.grid_step,
                          cfg.max_grid_points)
    blocks.append(_SingletonBlock("center", center))
    total = 0
    best_f, best_block, best_i = math.inf, None, -1
    for blk in blocks:
        if blk.size == 0:
            continue
        acc = np.zeros(blk.size)
        for (x, w) in measure.atoms:
            d = blk.distances_from(x)
            acc += w * d * d
        blk.values = 0.5 * acc
        total += blk.size
        i = int(np.argmin(blk.values))
        if blk.values[i] < best_f:
            best_f, best_block, best_i = float(blk.values[i]), blk, i
    if best_block is None:
        raise ConfigError("empty certificate grid; increase grid_radius")
    best_point = best_block.point_at(best_i)

    # runner-up: best F among grid points separated from the minimizer
    gap = math.inf
    for blk in blocks:
        if blk.size == 0:
            continue
        d = blk.distances_from(best_point)
        mask = d >= cfg.runner_up_separation
        if mask.any():
            gap = min(gap, float(np.min(blk.values[mask])) - best_f)
    if not math.isfinite(gap):
        gap = 0.0

    # golden-section refinement along incident 1-parameter families
    point, value = best_point, best_f
    for _ in range(cfg.refine_rounds):
        for curve, lo, hi in _refinement_families(point, cfg.grid_step):
            def f_along(u, curve=curve):
                return frechet_function(measure, curve(u))
            u, fu = _golden_minimize(f_along, lo, hi, cfg.golden_iters)
            if fu < value:
                value, point = fu, curve(u)
    cert = GridCertificate(cfg.grid_step, max(gap, 0.0), total,
                           cfg.runner_up_separation)
    return point, value, cert, blocks


def _space_dim(space: SpaceSpec) -> int:
    if space.kind == geo.EUCLIDEAN:
        return space.dim
    return 1 if space.kind == geo.SPIDER else 2


def _outward_directions(p: Point, eps: float):
    """Directions leaving the stratum of p (empty at smooth points)."""
    from . import regularity

    sid, _ = geo.stratum_of(p)
    net = regularity.build_net(p, eps)
    if p.space.kind == geo.OPEN_BOOK and sid == "spine":
        return [d for d in net.directions if 0.0 < d.data[1] < math.pi]
    return list(net.directions)


def frechet_mean(measure: DiscreteMeasure,
                 cfg: SolverConfig | None = None) -> MeanDiagnostics:
    """Two-stage Fréchet mean: inductive iteration, then grid certificate."""
    cfg = cfg or SolverConfig()
    pts = measure.points
    if all(p == pts[0] for p in pts):
        start, iters = pts[0], 0
    else:
        start, iters = _inductive_mean(measure, cfg)
    mean, value, cert, _ = _grid_certificate(measure, start, cfg)

    sticky = False
    sticky_stratum = None
    min_out = None
    sid, sdim = geo.stratum_of(mean)
    if sdim < _space_dim(measure.space):
        tm = pushforward(measure, mean)
        outs = _outward_directions(mean, cfg.sticky_net_eps)
        if outs:
            derivs = [
                -sum(w * geo.angular_pairing(x, TangentVector(mean, d, 1.0))
                     for x, w in tm.atoms)
                for d in outs
            ]
            min_out = float(min(derivs))
            if min_out >= cfg.sticky_tol:
                sticky = True
                sticky_stratum = sid
    return MeanDiagnostics(mean, value, iters, cert, sticky, sticky_stratum, min_out)


# ---------------------------------------------------------------------------
# Localization checks


@dataclass(frozen=True)
class ValidationConfig:
    base: Point | None = None
    gap_tol: float = 1e-6
    convexity_radius: float = 0.5
    convexity_pairs: int = 200
    convexity_tol: float = 1e-9
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)


@dataclass(frozen=True)
class LocalizationReport:
    passed: bool
    mean: Point | None
    uniqueness: dict
    convexity: dict
    logs: dict

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "mean": None if self.mean is None else self.mean.to_coords(),
            "uniqueness": self.uniqueness,
            "convexity": self.convexity,
            "logs": self.logs,
        }


def _random_point_near(base: Point, radius: float, rng: np.random.Generator,
                       directions) -> Point:
    if directions is None:
        # euclidean without a direction grid: gaussian offset
        g = rng.standard_normal(base.space.dim)
        n = float(np.linalg.norm(g))
        if n == 0.0:
            return base
        off = (radius * rng.random() / n) * g
        return Point(base.space, tuple(c + o for c, o in zip(base.coords, off)))
    d = directions[int(rng.integers(len(directions)))]
    u = radius * rng.random()
    if u == 0.0:
        return base
    return geo.exp_map(base, TangentVector(base, d, u))


def validate_localized(measure: DiscreteMeasure,
                       cfg: ValidationConfig | None = None) -> LocalizationReport:
    """Desk-scale localization checks: unique mean, local convexity,
    measure-a.s. unique logs.  Failures are report entries, not errors."""
    cfg = cfg or ValidationConfig()

    # (a) uniqueness via the grid certificate
    uniqueness: dict = {}
    mean = None
    try:
        if cfg.base is not None:
            mean, value, cert, _ = _grid_certificate(measure, cfg.base, cfg.solver)
            uniqueness["base_override"] = True
        else:
            diag = frechet_mean(measure, cfg.solver)
            mean, cert = diag.mean, diag.certificate
        uniqueness["runner_up_gap"] = cert.runner_up_gap
        uniqueness["gap_tol"] = cfg.gap_tol
        uniqueness["passed"] = cert.runner_up_gap > cfg.gap_tol
    except (ConvergenceError, AmbiguousGeodesicError, ConfigError) as exc:
        uniqueness["passed"] = False
        uniqueness["error"] = str(exc)

    # (b) midpoint convexity of F on chords near the mean
    convexity: dict = {"passed": False}
    if mean is not None:
        rng = substream(cfg.seed, _PURPOSE_CONVEXITY)
        ds = geo.direction_space(mean)
        try:
            grid = ds.grid(max(cfg.convexity_radius / 8.0, 1e-3))
            dirs = [ds.from_coord(c) for c in np.atleast_1d(grid)]
        except DomainError:
            dirs = None  # gaussian-offset sampling (euclidean dim >= 3)
        worst = -math.inf
        checked = 0
        skipped = 0
        for _ in range(cfg.convexity_pairs):
            a = _random_point_near(mean, cfg.convexity_radius, rng, dirs)
            b = _random_point_near(mean, cfg.convexity_radius, rng, dirs)
            try:
                mid = geo.geodesic_point(a, b, 0.5)
            except AmbiguousGeodesicError:
                skipped += 1
                continue
            viol = frechet_function(measure, mid) - 0.5 * (
                frechet_function(measure, a) + frechet_function(measure, b)
            )
            worst = max(worst, viol)
            checked += 1
        convexity = {
            "passed": checked > 0 and worst <= cfg.convexity_tol,
            "pairs_checked": checked,
            "pairs_skipped": skipped,
            "worst_violation": None if checked == 0 else worst,
            "radius": cfg.convexity_radius,
        }

    # (c) unique log at every atom
    failures = []
    if mean is not None:
        for i, (p, _w) in enumerate(measure.atoms):
            try:
                geo.log_map(mean, p)
            except AmbiguousGeodesicError as exc:
                failures.append({"atom": i, "coords": p.to_coords(), "reason": str(exc)})
    logs = {"passed": mean is not None and not failures, "failing_atoms": failures}

    passed = bool(uniqueness.get("passed")) and convexity["passed"] and logs["passed"]
    return LocalizationReport(passed, mean, uniqueness, convexity, logs)
