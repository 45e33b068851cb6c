"""Covering numbers, direction nets, and modulus-of-continuity statistics.

Nets on the model direction spaces are built by exact specialization:
the legs of a spider, uniform arcs on circles of directions, and poles
plus uniform page angles on the spine graph.  Dyadic profiles refine
nets by doubling, so the scales are nested and dyadic counts double
exactly away from the coarsest scales.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import DomainError
from .geometry import DirectionNet, Point


def build_net(base: Point, eps: float, weights: bool = True) -> DirectionNet:
    """An eps-net on the space of directions at base.

    Every direction lies within eps of the net; on the circle-like
    spaces the net is a uniform grid of ceil(L/eps) points (so its
    covering radius is eps/2), and on the finite direction spaces it is
    the full direction set with covering radius 0.
    """
    if not eps > 0.0:
        raise DomainError("net resolution must be positive")
    ds = geo.direction_space(base)
    coords, w, cov_radius = ds.net_coords(eps)
    dirs = tuple(ds.from_coord(c) for c in coords)
    arr = np.asarray(coords, dtype=float)
    return DirectionNet(base, dirs, float(eps), float(cov_radius),
                        tuple(float(x) for x in w) if weights else None,
                        arr)


def _refine_net(base: Point, net: DirectionNet, eps: float) -> DirectionNet:
    """Halve the mesh of a uniform net; the result contains the old net."""
    ds = geo.direction_space(base)
    coords, w, cov_radius = ds.refine(net.coords())
    dirs = tuple(ds.from_coord(c) for c in coords)
    return DirectionNet(base, dirs, float(eps), float(cov_radius),
                        tuple(float(x) for x in w), np.asarray(coords, dtype=float))


def net_is_valid(net: DirectionNet, eps: float | None = None) -> bool:
    """Exhaustive check against a candidate grid of resolution eps/4."""
    eps = net.resolution if eps is None else eps
    ds = geo.direction_space(net.base)
    cand = ds.grid(eps)
    dmat = ds.cross(np.atleast_1d(cand) if np.ndim(cand) == 1 else cand, net.coords())
    return bool(np.all(dmat.min(axis=1) <= eps))


def covering_number(base: Point, eps: float) -> int:
    """Upper estimate of the covering number N(eps).

    N(eps) is the minimal cardinality of an (eps/2)-cover; the uniform
    net at nominal scale eps has covering radius eps/2, so its
    cardinality is a certified upper bound.
    """
    return len(build_net(base, eps, weights=False))


def covering_number_bounds(base: Point, eps: float) -> tuple[int, int]:
    """(lower, upper) sandwich for N(eps).

    The upper bound is the (eps/2)-net cardinality; the lower bound is
    the cardinality of a family with pairwise distances > eps (each
    (eps/2)-ball contains at most one of its members).
    """
    upper = covering_number(base, eps)
    packed = build_net(base, 2.0 * eps, weights=False)
    dmat = packed.pairwise_distances()
    m = len(packed)
    if m > 1:
        off = dmat[~np.eye(m, dtype=bool)]
        if off.min() <= eps:
            # uniform spacing did not exceed eps; thin to every other point
            keep = packed.coords()[::2]
            ds = geo.direction_space(base)
            sub = ds.cross(keep, keep)
            nsub = len(keep)
            if nsub > 1 and sub[~np.eye(nsub, dtype=bool)].min() <= eps:
                return 1, upper
            return nsub, upper
    return m, upper


@dataclass(frozen=True)
class CoveringProfile:
    """Dyadic covering counts and the fitted growth exponent."""

    base: Point
    scales: tuple  # eps = 2^-n for n = 1..n_max
    counts: tuple
    d_estimate: float
    stratum_dim_bound: float

    def to_csv_rows(self):
        yield ("scale", "count")
        for s, c in zip(self.scales, self.counts):
            yield (f"{s:.17g}", str(c))


def stratum_dimension_bound(base: Point) -> float:
    """Sum over incident strata of their direction-space dimensions."""
    return float(sum(max(d - 1, 0) for _sid, d in geo.incident_strata(base)))


def dimension_constant(base: Point, n_max: int) -> CoveringProfile:
    """Covering counts N(2^-n) for n = 1..n_max and the log2 growth slope.

    Counts come from nested nets (each scale refines the previous), and
    the slope is the least-squares fit over the finer half of the
    scales.  Constant counts short-circuit to an exact zero estimate.
    """
    if n_max < 4:
        raise DomainError("need n_max >= 4 for a meaningful slope")
    scales, counts = [], []
    net = None
    for n in range(1, n_max + 1):
        eps = 2.0 ** (-n)
        if net is None:
            net = build_net(base, eps)
        else:
            net = _refine_net(base, net, eps)
            while net.covering_radius > eps / 2.0 + 1e-15:
                net = _refine_net(base, net, eps)
        scales.append(eps)
        counts.append(len(net))
    counts_arr = np.array(counts, dtype=float)
    if counts_arr.max() == counts_arr.min():
        slope = 0.0
    else:
        half = len(counts) // 2
        ns = np.arange(1, n_max + 1, dtype=float)[half:]
        ys = np.log2(counts_arr[half:])
        slope = float(np.polyfit(ns, ys, 1)[0])
    return CoveringProfile(base, tuple(scales), tuple(counts), slope,
                           stratum_dimension_bound(base))


# ---------------------------------------------------------------------------
# Modulus of continuity


def _pair_lists(net: DirectionNet, radii) -> list[tuple[np.ndarray, np.ndarray]]:
    """Index pairs (i < j) within each radius, for vectorized moduli."""
    dmat = net.pairwise_distances()
    iu, ju = np.triu_indices(len(net), k=1)
    dvals = dmat[iu, ju]
    out = []
    for r in radii:
        mask = dvals <= r
        out.append((iu[mask], ju[mask]))
    return out


def modulus_many(values: np.ndarray, net: DirectionNet, radii) -> np.ndarray:
    """w(h, r) per row of ``values`` and per radius (rows are fields)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    for r in radii:
        if net.covering_radius > r / 4.0:
            raise DomainError(
                f"net covering radius {net.covering_radius:.3g} too coarse for "
                f"modulus radius {r:.3g}"
            )
    pairs = _pair_lists(net, radii)
    nrows = values.shape[0]
    out = np.zeros((nrows, len(pairs)))
    chunk = max(1, int(2e7 // max(1, max(len(i) for i, _ in pairs) or 1)))
    for c, (i_idx, j_idx) in enumerate(pairs):
        if len(i_idx) == 0:
            continue
        for lo in range(0, nrows, chunk):
            hi = min(nrows, lo + chunk)
            diffs = np.abs(values[lo:hi][:, i_idx] - values[lo:hi][:, j_idx])
            out[lo:hi, c] = diffs.max(axis=1)
    return out


def modulus(field, r: float) -> float:
    """w(h, r): sup of |h(V) - h(U)| over net pairs within angular r."""
    return float(modulus_many(field.values, field.net, [r])[0, 0])


@dataclass(frozen=True)
class ModulusTable:
    """Per-replicate modulus values and the truncated-mean aggregate."""

    label: str
    radii: tuple
    w: np.ndarray  # (replicates, radii)
    aggregate: tuple  # E[w /\ 1] per radius

    @staticmethod
    def from_fields(label: str, values: np.ndarray, net: DirectionNet,
                    radii) -> "ModulusTable":
        w = modulus_many(values, net, radii)
        agg = np.minimum(w, 1.0).mean(axis=0)
        return ModulusTable(label, tuple(float(r) for r in radii), w,
                            tuple(float(a) for a in agg))

    def to_csv_rows(self):
        yield ("radius", "replicate", "w", "aggregate")
        for c, r in enumerate(self.radii):
            for rep in range(self.w.shape[0]):
                yield (f"{r:.17g}", str(rep), f"{self.w[rep, c]:.17g}",
                       f"{self.aggregate[c]:.17g}")


def holder_estimate(values: np.ndarray, net: DirectionNet,
                    radii) -> tuple[float, float]:
    """Slope of log E[w(., r)] against log r, with the fit residual.

    The estimate describes how fast the expected modulus shrinks with
    the radius; no pass/fail threshold is attached.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise DomainError("need at least 4 radii for a slope estimate")
    w = modulus_many(values, net, radii)
    means = w.mean(axis=0)
    if np.all(means == 0.0):
        raise DomainError("degenerate (all-zero) fields have no modulus slope")
    if np.any(means <= 0.0):
        raise DomainError("zero expected modulus at some radius; refine the net")
    x = np.log(radii)
    y = np.log(means)
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(residuals[0]) if len(residuals) else 0.0
    return float(coeffs[0]), resid
