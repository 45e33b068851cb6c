"""Tangent fields on direction nets.

The central object is the pairing matrix P[i, j] = <log x_i, V_j>
between the atoms of a pushed-forward measure and the directions of a
net.  Because measures are finitely supported, the tangent mean vector,
the covariance kernel, centered fields and their exact moments are all
small dense computations on P.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import DomainError, NumericalConsistencyError, SpaceMismatchError
from .geometry import DirectionNet, Point, TangentVector
from .measures import DiscreteMeasure, TangentMeasure, pushforward

CLT_SCALING = "clt"  # 1/sqrt(n)
LLN_SCALING = "lln"  # 1/n


def _stacked_coords(ds, vectors) -> np.ndarray | None:
    """Direction coords of tangent vectors, zero vectors filled with a
    placeholder (their rows are masked out by the caller); None if all
    vectors are zero."""
    coords = []
    template = None
    for v in vectors:
        if v.is_zero:
            coords.append(None)
        else:
            c = ds.to_coord(v.direction)
            coords.append(c)
            template = c
    if template is None:
        return None
    return np.array([template if c is None else c for c in coords])


def pairing_matrix(tm: TangentMeasure, net: DirectionNet) -> np.ndarray:
    """P[i, j] = <log x_i, V_j> for atoms i and net directions j."""
    if net.base != tm.base:
        raise SpaceMismatchError("net and tangent measure have different bases")
    ds = geo.direction_space(tm.base)
    lengths = tm.lengths
    coords = _stacked_coords(ds, [v for v, _ in tm.atoms])
    if coords is None:
        return np.zeros((len(tm.atoms), len(net)))
    dmat = ds.cross(coords, net.coords())
    pair = lengths[:, None] * np.cos(np.minimum(dmat, math.pi))
    pair[lengths == 0.0, :] = 0.0
    return pair


def tangent_mean_vector(measure: DiscreteMeasure, tm: TangentMeasure,
                        net: DirectionNet) -> np.ndarray:
    return measure.weights @ pairing_matrix(tm, net)


def tangent_mean(measure: DiscreteMeasure, base: Point, v: TangentVector) -> float:
    """m(mu, V) = E<log x, V>; equals minus the directional derivative."""
    _require_unit(v)
    tm = pushforward(measure, base)
    return float(sum(w * geo.angular_pairing(x, v) for x, w in tm.atoms))


def _require_unit(v: TangentVector):
    if abs(v.length - 1.0) > 1e-9:
        raise DomainError("field arguments must be unit tangent vectors")


def tangent_cov(measure: DiscreteMeasure, base: Point, v: TangentVector,
                w: TangentVector) -> float:
    """Centered covariance kernel of the pairing field at (v, w)."""
    _require_unit(v)
    _require_unit(w)
    tm = pushforward(measure, base)
    weights = measure.weights
    pv = np.array([geo.angular_pairing(x, v) for x, _ in tm.atoms])
    pw = np.array([geo.angular_pairing(x, w) for x, _ in tm.atoms])
    mv = float(weights @ pv)
    mw = float(weights @ pw)
    return float(weights @ ((pv - mv) * (pw - mw)))


def centered_pairing(x: Point, measure: DiscreteMeasure, base: Point,
                     v: TangentVector) -> float:
    """<log x, V> minus the tangent mean: one draw of the centered field."""
    _require_unit(v)
    value = geo.angular_pairing(geo.log_map(base, x), v)
    return float(value - tangent_mean(measure, base, v))


@dataclass(frozen=True, eq=False)
class FieldOnNet:
    """Real values of one field realization on the directions of a net."""

    net: DirectionNet
    values: np.ndarray
    label: str

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.net),):
            raise DomainError("field values must match the net length")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", vals)


def empirical_field(samples: list[Point], measure: DiscreteMeasure, base: Point,
                    net: DirectionNet, scaling: str = CLT_SCALING) -> FieldOnNet:
    """Scaled sum of centered pairings over a realized sample list.

    ``clt`` scaling divides by sqrt(n), ``lln`` by n; the two differ by
    exactly sqrt(n) for the same samples.
    """
    n = len(samples)
    if n == 0:
        raise DomainError("empirical field needs at least one sample")
    if scaling not in (CLT_SCALING, LLN_SCALING):
        raise DomainError(f"unknown scaling {scaling!r}")
    tm = pushforward(measure, base)
    mean_vec = tangent_mean_vector(measure, tm, net)
    ds = geo.direction_space(base)
    logs = [geo.log_map(base, x) for x in samples]
    lengths = np.array([v.length for v in logs])
    coords = _stacked_coords(ds, logs)
    if coords is None:
        sums = -n * mean_vec
    else:
        dmat = ds.cross(coords, net.coords())
        pair = lengths[:, None] * np.cos(np.minimum(dmat, math.pi))
        pair[lengths == 0.0, :] = 0.0
        sums = pair.sum(axis=0) - n * mean_vec
    norm = 1.0 / math.sqrt(n) if scaling == CLT_SCALING else 1.0 / n
    label = f"empirical_{scaling}(n={n})"
    return FieldOnNet(net, norm * sums, label)


# ---------------------------------------------------------------------------
# Covariance matrices and Gaussian fields


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Covariance kernel evaluated on a net, with a PSD audit trail.

    ``entries`` are the exact (symmetrized) kernel values; eigenvalues
    in [-tol, 0) are recorded in ``psd_repair`` and treated as zero by
    the sampler factorization.
    """

    net: DirectionNet
    entries: np.ndarray
    psd_repair: tuple
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def cov_matrix(measure: DiscreteMeasure, base: Point, net: DirectionNet,
               psd_tol: float = 1e-8) -> CovMatrix:
    """Entrywise tangent covariance on the net.

    The matrix is symmetrized by averaging; eigenvalues below
    ``-psd_tol * max(eig)`` raise, slightly negative ones are clipped
    with a log entry (exactly singular kernels are expected, e.g. on a
    spider net the all-ones vector is a null direction).
    """
    tm = pushforward(measure, base)
    pair = pairing_matrix(tm, net)
    w = measure.weights
    mean_vec = w @ pair
    centered = pair - mean_vec
    cov = centered.T @ (w[:, None] * centered)
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    scale_ref = max(float(vals.max(initial=0.0)), 0.0)
    floor = -psd_tol * max(scale_ref, 1e-300)
    if vals.min(initial=0.0) < floor:
        raise NumericalConsistencyError(
            f"covariance matrix indefinite: min eigenvalue {vals.min():.3e}"
        )
    repaired = tuple(float(v) for v in vals[vals < 0.0])
    vals = np.maximum(vals, 0.0)
    return CovMatrix(net, cov, repaired, vals, vecs)


@dataclass(frozen=True, eq=False)
class GaussianFieldSampler:
    """Centered Gaussian field on a net with a fixed covariance factor."""

    cov: CovMatrix
    factor: np.ndarray

    @staticmethod
    def build(cov: CovMatrix) -> "GaussianFieldSampler":
        factor = cov.eigenvectors @ np.diag(np.sqrt(cov.eigenvalues))
        return GaussianFieldSampler(cov, factor)

    def draw_matrix(self, stream: np.random.Generator, draws: int) -> np.ndarray:
        z = stream.standard_normal((draws, self.factor.shape[1]))
        return z @ self.factor.T

    def draw(self, stream: np.random.Generator) -> "FieldOnNet":
        return FieldOnNet(self.cov.net, self.draw_matrix(stream, 1)[0], "gaussian")


def sample_gaussian_field(sampler: GaussianFieldSampler,
                          stream: np.random.Generator) -> FieldOnNet:
    return sampler.draw(stream)


def l2_norm_expectation(cov: CovMatrix) -> float:
    """Quadrature of the diagonal kernel against the net weights."""
    if cov.net.weights is None:
        raise DomainError("l2 norm expectation needs net quadrature weights")
    w = np.asarray(cov.net.weights)
    return float(w @ np.diag(cov.entries))


# ---------------------------------------------------------------------------
# CSV export (17 significant digits round-trips 64-bit floats)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_fields_csv(path, net: DirectionNet, values: np.ndarray):
    values = np.atleast_2d(values)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(net.descriptors()) + "\n")
        for row in values:
            fh.write(",".join(format_float(x) for x in row) + "\n")


def write_cov_csv(path, cov: CovMatrix):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cov.net.descriptors()) + "\n")
        for row in cov.entries:
            fh.write(",".join(format_float(x) for x in row) + "\n")
