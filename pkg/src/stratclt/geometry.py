"""Model stratified CAT(0) spaces: points, geodesics, tangent cones.

Four concrete spaces are implemented:

* ``euclidean(d)`` -- flat d-dimensional space, one stratum;
* ``spider(k)`` -- k half-lines glued at an apex (k >= 3);
* ``open_book(k)`` -- k half-planes glued along a common line, the
  spine (k >= 2);
* ``flat_cone(alpha)`` -- the cone over a circle of circumference
  ``alpha >= 2*pi``, flat away from the apex.

All are complete, locally compact CAT(0) geodesic spaces with
closed-form distances, unique geodesics, and explicit tangent cones.
Tangent vectors carry a base point, a direction descriptor and a
nonnegative length; directions at a point are metrized by the angular
(length) metric, which on a flat-cone apex is the arc metric of a
circle of circumference ``alpha`` and may exceed pi.

Conventions fixed here and relied on everywhere else:

* boundary identifications are canonicalized (spider radius 0 => leg 0,
  open-book height 0 => page 0, cone radius 0 => angle 0), so point
  equality is tuple equality;
* the angle used in the angular pairing is ``min(d_s, pi)`` even where
  the angular metric itself exceeds pi;
* a flat-cone pair with both radii positive and circle gap exactly pi
  raises :class:`AmbiguousGeodesicError` from the geodesic and log
  operations rather than tie-breaking (distance is still defined);
* geodesic continuation through a singular stratum is deterministic:
  through a spider apex or across a spine the path continues into the
  lowest-index other leg/page, and through a cone apex it continues at
  circle offset +pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousGeodesicError, DomainError, SpaceMismatchError

EUCLIDEAN = "euclidean"
SPIDER = "spider"
OPEN_BOOK = "open_book"
FLAT_CONE = "flat_cone"

_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Spaces and points


@dataclass(frozen=True)
class SpaceSpec:
    """One of the four model spaces, with its defining parameter."""

    kind: str
    dim: int = 0
    legs: int = 0
    pages: int = 0
    circumference: float = 0.0

    def __post_init__(self):
        if self.kind == EUCLIDEAN:
            if self.dim < 1:
                raise DomainError("euclidean dim must be >= 1")
        elif self.kind == SPIDER:
            if self.legs < 3:
                raise DomainError("spider needs at least 3 legs")
        elif self.kind == OPEN_BOOK:
            if self.pages < 2:
                raise DomainError("open book needs at least 2 pages")
        elif self.kind == FLAT_CONE:
            if not self.circumference >= _TWO_PI:
                raise DomainError("flat cone circumference must be >= 2*pi for CAT(0)")
        else:
            raise DomainError(f"unknown space kind {self.kind!r}")

    @staticmethod
    def euclidean(dim: int) -> "SpaceSpec":
        return SpaceSpec(EUCLIDEAN, dim=int(dim))

    @staticmethod
    def spider(legs: int) -> "SpaceSpec":
        return SpaceSpec(SPIDER, legs=int(legs))

    @staticmethod
    def open_book(pages: int) -> "SpaceSpec":
        return SpaceSpec(OPEN_BOOK, pages=int(pages))

    @staticmethod
    def flat_cone(circumference: float) -> "SpaceSpec":
        return SpaceSpec(FLAT_CONE, circumference=float(circumference))

    def to_json(self) -> dict:
        if self.kind == EUCLIDEAN:
            return {"kind": EUCLIDEAN, "dim": self.dim}
        if self.kind == SPIDER:
            return {"kind": SPIDER, "legs": self.legs}
        if self.kind == OPEN_BOOK:
            return {"kind": OPEN_BOOK, "pages": self.pages}
        return {"kind": FLAT_CONE, "circumference": self.circumference}

    @staticmethod
    def from_json(obj: dict) -> "SpaceSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise DomainError("space spec must be an object with a 'kind' field")
        kind = obj["kind"]
        if kind == EUCLIDEAN:
            return SpaceSpec.euclidean(obj["dim"])
        if kind == SPIDER:
            return SpaceSpec.spider(obj["legs"])
        if kind == OPEN_BOOK:
            return SpaceSpec.open_book(obj["pages"])
        if kind == FLAT_CONE:
            return SpaceSpec.flat_cone(obj["circumference"])
        raise DomainError(f"unknown space kind {kind!r}")


def _check_finite(values):
    for v in values:
        if not math.isfinite(v):
            raise DomainError("coordinates must be finite")


@dataclass(frozen=True)
class Point:
    """A point of a model space, stored in canonical coordinates.

    Coordinate layout: euclidean ``(x1, .., xd)``; spider ``(leg, r)``;
    open book ``(page, s, t)``; flat cone ``(r, phi)`` with phi reduced
    into ``[0, alpha)``.
    """

    space: SpaceSpec
    coords: tuple

    def __post_init__(self):
        sp = self.space
        c = self.coords
        if sp.kind == EUCLIDEAN:
            if len(c) != sp.dim:
                raise DomainError(f"expected {sp.dim} coordinates, got {len(c)}")
            c = tuple(float(x) for x in c)
            _check_finite(c)
        elif sp.kind == SPIDER:
            leg, r = int(c[0]), float(c[1])
            _check_finite((r,))
            if len(c) != 2 or not 0 <= leg < sp.legs:
                raise DomainError("spider point is (leg, r) with 0 <= leg < k")
            if r < 0:
                raise DomainError("spider radius must be >= 0")
            if r == 0.0:
                leg = 0
            c = (leg, r)
        elif sp.kind == OPEN_BOOK:
            page, s, t = int(c[0]), float(c[1]), float(c[2])
            _check_finite((s, t))
            if len(c) != 3 or not 0 <= page < sp.pages:
                raise DomainError("open book point is (page, s, t) with 0 <= page < k")
            if t < 0:
                raise DomainError("open book height t must be >= 0")
            if t == 0.0:
                page = 0
            c = (page, s, t)
        elif sp.kind == FLAT_CONE:
            r, phi = float(c[0]), float(c[1])
            _check_finite((r, phi))
            if len(c) != 2:
                raise DomainError("flat cone point is (r, phi)")
            if r < 0:
                raise DomainError("cone radius must be >= 0")
            phi = phi % sp.circumference if r > 0.0 else 0.0
            c = (r, phi)
        object.__setattr__(self, "coords", c)

    @staticmethod
    def of(space: SpaceSpec, coords) -> "Point":
        return Point(space, tuple(coords))

    def to_coords(self) -> list:
        return list(self.coords)


def apex(space: SpaceSpec) -> Point:
    """The singular point of a spider or flat cone."""
    if space.kind == SPIDER:
        return Point(space, (0, 0.0))
    if space.kind == FLAT_CONE:
        return Point(space, (0.0, 0.0))
    raise DomainError(f"{space.kind} has no apex")


# ---------------------------------------------------------------------------
# Strata


def stratum_of(p: Point) -> tuple[str, int]:
    """Identify the stratum containing p and its dimension."""
    sp = p.space
    if sp.kind == EUCLIDEAN:
        return (EUCLIDEAN, sp.dim)
    if sp.kind == SPIDER:
        leg, r = p.coords
        return ("apex", 0) if r == 0.0 else (f"leg{leg}", 1)
    if sp.kind == OPEN_BOOK:
        page, _s, t = p.coords
        return ("spine", 1) if t == 0.0 else (f"page{page}", 2)
    r, _phi = p.coords
    return ("apex", 0) if r == 0.0 else ("cone", 2)


def incident_strata(p: Point) -> list[tuple[str, int]]:
    """All strata whose closure contains p (including p's own)."""
    sp = p.space
    sid, d = stratum_of(p)
    if sp.kind == SPIDER and sid == "apex":
        return [("apex", 0)] + [(f"leg{i}", 1) for i in range(sp.legs)]
    if sp.kind == OPEN_BOOK and sid == "spine":
        return [("spine", 1)] + [(f"page{i}", 2) for i in range(sp.pages)]
    if sp.kind == FLAT_CONE and sid == "apex":
        return [("apex", 0), ("cone", 2)]
    return [(sid, d)]


# ---------------------------------------------------------------------------
# Distance


def _same_space(p: Point, q: Point):
    if p.space != q.space:
        raise SpaceMismatchError("points live in different spaces")


def _cone_gap(space: SpaceSpec, phi1: float, phi2: float) -> float:
    d = abs(phi1 - phi2)
    return min(d, space.circumference - d)


def distance(p: Point, q: Point) -> float:
    """Geodesic distance between two points of the same model space."""
    _same_space(p, q)
    sp = p.space
    if sp.kind == EUCLIDEAN:
        return math.dist(p.coords, q.coords)
    if sp.kind == SPIDER:
        l1, r1 = p.coords
        l2, r2 = q.coords
        if l1 == l2 or r1 == 0.0 or r2 == 0.0:
            return abs(r1 - r2) if l1 == l2 else r1 + r2
        return r1 + r2
    if sp.kind == OPEN_BOOK:
        p1, s1, t1 = p.coords
        p2, s2, t2 = q.coords
        if p1 == p2 or t1 == 0.0 or t2 == 0.0:
            # within one page chart (spine points belong to every page)
            return math.hypot(s1 - s2, t1 - t2)
        return math.hypot(s1 - s2, t1 + t2)
    r1, phi1 = p.coords
    r2, phi2 = q.coords
    if r1 == 0.0 or r2 == 0.0:
        return r1 + r2
    gap = _cone_gap(sp, phi1, phi2)
    ang = min(gap, math.pi)
    # law of cosines in development form: stable when the points nearly agree
    return math.hypot(r1 - r2 * math.cos(ang), r2 * math.sin(ang))


# ---------------------------------------------------------------------------
# Geodesics


def _check_fraction(t: float):
    if not 0.0 <= t <= 1.0:
        raise DomainError("geodesic fraction must lie in [0, 1]")


def _cone_signed_gap(space: SpaceSpec, phi_from: float, phi_to: float) -> float:
    """Signed circle offset of the shorter route from phi_from to phi_to."""
    alpha = space.circumference
    delta = (phi_to - phi_from) % alpha
    return delta if delta <= alpha / 2.0 else delta - alpha


def geodesic_point(p: Point, q: Point, t: float) -> Point:
    """The point at arclength fraction t along the geodesic from p to q."""
    _same_space(p, q)
    _check_fraction(t)
    if p.coords == q.coords:
        return p
    if t == 0.0:
        return p
    if t == 1.0:
        return q
    sp = p.space
    if sp.kind == EUCLIDEAN:
        return Point(sp, tuple(a + t * (b - a) for a, b in zip(p.coords, q.coords)))
    if sp.kind == SPIDER:
        l1, r1 = p.coords
        l2, r2 = q.coords
        if l1 == l2 or r1 == 0.0 or r2 == 0.0:
            if r1 == 0.0:
                return Point(sp, (l2, t * r2))
            if r2 == 0.0:
                return Point(sp, (l1, (1.0 - t) * r1))
            return Point(sp, (l1, r1 + t * (r2 - r1)))
        arc = t * (r1 + r2)
        if arc <= r1:
            return Point(sp, (l1, r1 - arc))
        return Point(sp, (l2, arc - r1))
    if sp.kind == OPEN_BOOK:
        p1, s1, t1 = p.coords
        p2, s2, t2 = q.coords
        if p1 == p2 or t1 == 0.0 or t2 == 0.0:
            page = p1 if t1 > 0.0 else p2
            s = s1 + t * (s2 - s1)
            h = t1 + t * (t2 - t1)
            return Point(sp, (page, s, h))
        # unfold page of q across the spine into h < 0
        s = s1 + t * (s2 - s1)
        h = t1 + t * (-t2 - t1)
        if h >= 0.0:
            return Point(sp, (p1, s, h))
        return Point(sp, (p2, s, -h))
    r1, phi1 = p.coords
    r2, phi2 = q.coords
    if r1 == 0.0:
        return Point(sp, (t * r2, phi2))
    if r2 == 0.0:
        return Point(sp, ((1.0 - t) * r1, phi1))
    gap = _cone_gap(sp, phi1, phi2)
    if gap == math.pi:
        raise AmbiguousGeodesicError(
            "flat cone geodesic is treated as ambiguous at circle gap exactly pi"
        )
    if gap > math.pi:
        arc = t * (r1 + r2)
        if arc <= r1:
            return Point(sp, (r1 - arc, phi1))
        return Point(sp, (arc - r1, phi2))
    # develop the wedge: p at angle 0, q at signed angle delta
    delta = _cone_signed_gap(sp, phi1, phi2)
    x1, y1 = r1, 0.0
    x2, y2 = r2 * math.cos(delta), r2 * math.sin(delta)
    x, y = x1 + t * (x2 - x1), y1 + t * (y2 - y1)
    r = math.hypot(x, y)
    if r == 0.0:
        return apex(sp)
    psi = math.atan2(y, x)
    return Point(sp, (r, (phi1 + psi) % sp.circumference))


# ---------------------------------------------------------------------------
# Directions and tangent vectors

# descriptor tags
D_LEG = "leg"          # spider apex: leg index
D_SIGN = "sign"        # spider leg interior / 1-d line: +1 away from apex
D_PAGE_ANGLE = "page_angle"  # open-book spine point: (page, theta in [0, pi])
D_ANGLE = "angle"      # flat cone apex: circle coordinate in [0, alpha)
D_VECTOR = "vector"    # smooth 2-d charts and euclidean: unit vector


@dataclass(frozen=True)
class Direction:
    """A unit direction at a base point (an element of the direction space)."""

    base: Point
    kind: str
    data: tuple

    def __post_init__(self):
        sp = self.base.space
        sid, _ = stratum_of(self.base)
        k, d = self.kind, self.data
        if k == D_LEG:
            if not (sp.kind == SPIDER and sid == "apex"):
                raise DomainError("leg directions only exist at a spider apex")
            leg = int(d[0])
            if not 0 <= leg < sp.legs:
                raise DomainError("leg index out of range")
            d = (leg,)
        elif k == D_SIGN:
            if not (sp.kind == SPIDER and sid != "apex"):
                raise DomainError("sign directions only exist on a spider leg")
            s = int(d[0])
            if s not in (-1, 1):
                raise DomainError("sign direction must be +1 or -1")
            d = (s,)
        elif k == D_PAGE_ANGLE:
            if not (sp.kind == OPEN_BOOK and sid == "spine"):
                raise DomainError("page-angle directions only exist on the spine")
            page, theta = int(d[0]), float(d[1])
            if not 0.0 <= theta <= math.pi:
                raise DomainError("page angle must lie in [0, pi]")
            if not 0 <= page < sp.pages:
                raise DomainError("page index out of range")
            if theta == 0.0 or theta == math.pi:
                page = 0  # the two spine poles belong to every page
            d = (page, theta)
        elif k == D_ANGLE:
            if not (sp.kind == FLAT_CONE and sid == "apex"):
                raise DomainError("circle directions only exist at the cone apex")
            d = (float(d[0]) % sp.circumference,)
        elif k == D_VECTOR:
            if sp.kind == SPIDER or sid in ("apex", "spine"):
                raise DomainError("vector directions only exist at smooth points")
            v = np.asarray(d, dtype=float)
            expected = sp.dim if sp.kind == EUCLIDEAN else 2
            if v.shape != (expected,):
                raise DomainError(f"direction vector must have {expected} components")
            n = float(np.linalg.norm(v))
            if not math.isfinite(n) or n == 0.0:
                raise DomainError("direction vector must be nonzero and finite")
            d = tuple(float(x) for x in v / n)
        else:
            raise DomainError(f"unknown direction kind {k!r}")
        object.__setattr__(self, "data", d)

    def describe(self) -> str:
        """Compact printable descriptor (used in CSV headers)."""
        if self.kind == D_LEG:
            return f"leg:{self.data[0]}"
        if self.kind == D_SIGN:
            return f"sign:{self.data[0]:+d}"
        if self.kind == D_PAGE_ANGLE:
            return f"page:{self.data[0]},theta:{self.data[1]:.17g}"
        if self.kind == D_ANGLE:
            return f"angle:{self.data[0]:.17g}"
        return "vec:" + ",".join(f"{x:.17g}" for x in self.data)


@dataclass(frozen=True)
class TangentVector:
    """Element of the tangent cone: direction plus nonnegative length.

    Length zero is the cone apex; all zero vectors at a base point are
    equal and carry no direction.
    """

    base: Point
    direction: Direction | None
    length: float

    def __post_init__(self):
        ln = float(self.length)
        if not math.isfinite(ln) or ln < 0.0:
            raise DomainError("tangent vector length must be finite and >= 0")
        if ln == 0.0:
            object.__setattr__(self, "direction", None)
        else:
            if self.direction is None:
                raise DomainError("nonzero tangent vector needs a direction")
            if self.direction.base != self.base:
                raise SpaceMismatchError("direction is based at a different point")
        object.__setattr__(self, "length", ln)

    @property
    def is_zero(self) -> bool:
        return self.length == 0.0


def zero_vector(base: Point) -> TangentVector:
    return TangentVector(base, None, 0.0)


def scale(v: TangentVector, t: float) -> TangentVector:
    """Homogeneous scaling on the tangent cone; only t >= 0 is defined."""
    t = float(t)
    if t < 0.0:
        raise DomainError("cone scaling requires t >= 0")
    if t == 0.0 or v.is_zero:
        return zero_vector(v.base)
    return TangentVector(v.base, v.direction, t * v.length)


# ---------------------------------------------------------------------------
# Angular metric, pairing, conical metric


def angular_distance(u: Direction, v: Direction) -> float:
    """Length metric on the space of directions at a common base point.

    On a flat-cone apex this is the arc metric of a circle of
    circumference alpha and may exceed pi.
    """
    if u.base != v.base:
        raise SpaceMismatchError("directions are based at different points")
    k = u.kind
    if k != v.kind:
        raise SpaceMismatchError("incompatible direction descriptors")
    if k == D_LEG or k == D_SIGN:
        return 0.0 if u.data == v.data else math.pi
    if k == D_PAGE_ANGLE:
        p1, a1 = u.data
        p2, a2 = v.data
        if p1 == p2:
            return abs(a1 - a2)
        return min(a1 + a2, (math.pi - a1) + (math.pi - a2))
    if k == D_ANGLE:
        return _cone_gap(u.base.space, u.data[0], v.data[0])
    dot = float(np.dot(u.data, v.data))
    return math.acos(min(1.0, max(-1.0, dot)))


def angular_pairing(v: TangentVector, w: TangentVector) -> float:
    """<V,W> = |V||W| cos(angle), with the angle capped at pi."""
    if v.base != w.base:
        raise SpaceMismatchError("tangent vectors are based at different points")
    if v.is_zero or w.is_zero:
        return 0.0
    ang = min(angular_distance(v.direction, w.direction), math.pi)
    return v.length * w.length * math.cos(ang)


def conical_distance(v: TangentVector, w: TangentVector) -> float:
    """Cone metric sqrt(|V|^2 + |W|^2 - 2<V,W>) on the tangent cone,
    evaluated in development form for numerical stability."""
    if v.base != w.base:
        raise SpaceMismatchError("tangent vectors are based at different points")
    if v.is_zero or w.is_zero:
        return v.length + w.length
    ang = min(angular_distance(v.direction, w.direction), math.pi)
    return math.hypot(v.length - w.length * math.cos(ang),
                      w.length * math.sin(ang))


# ---------------------------------------------------------------------------
# Log and exp maps


def log_map(base: Point, x: Point) -> TangentVector:
    """Initial direction and length of the unique shortest path base -> x."""
    _same_space(base, x)
    if base.coords == x.coords:
        return zero_vector(base)
    sp = base.space
    if sp.kind == EUCLIDEAN:
        diff = np.asarray(x.coords) - np.asarray(base.coords)
        ln = float(np.linalg.norm(diff))
        return TangentVector(base, Direction(base, D_VECTOR, tuple(diff)), ln)
    if sp.kind == SPIDER:
        l0, r0 = base.coords
        l1, r1 = x.coords
        if r0 == 0.0:
            return TangentVector(base, Direction(base, D_LEG, (l1,)), r1)
        if l1 == l0 and r1 > 0.0:
            sign = 1 if r1 > r0 else -1
            return TangentVector(base, Direction(base, D_SIGN, (sign,)), abs(r1 - r0))
        # through the apex (or to it)
        return TangentVector(base, Direction(base, D_SIGN, (-1,)), r0 + r1)
    if sp.kind == OPEN_BOOK:
        pg0, s0, t0 = base.coords
        pg1, s1, t1 = x.coords
        if t0 == 0.0:
            ln = math.hypot(s1 - s0, t1)
            theta = math.atan2(t1, s1 - s0)
            return TangentVector(base, Direction(base, D_PAGE_ANGLE, (pg1, theta)), ln)
        if pg1 == pg0 or t1 == 0.0:
            vec = (s1 - s0, t1 - t0)
        else:
            vec = (s1 - s0, -t1 - t0)  # unfold x's page across the spine
        ln = math.hypot(*vec)
        return TangentVector(base, Direction(base, D_VECTOR, vec), ln)
    r0, phi0 = base.coords
    r1, phi1 = x.coords
    if r0 == 0.0:
        return TangentVector(base, Direction(base, D_ANGLE, (phi1,)), r1)
    if r1 == 0.0:
        return TangentVector(base, Direction(base, D_VECTOR, (-1.0, 0.0)), r0)
    gap = _cone_gap(sp, phi0, phi1)
    if gap == math.pi:
        raise AmbiguousGeodesicError(
            "log map is ambiguous on a flat cone at circle gap exactly pi"
        )
    if gap > math.pi:
        return TangentVector(base, Direction(base, D_VECTOR, (-1.0, 0.0)), r0 + r1)
    delta = _cone_signed_gap(sp, phi0, phi1)
    vx = r1 * math.cos(delta) - r0
    vy = r1 * math.sin(delta)
    ln = math.hypot(vx, vy)
    return TangentVector(base, Direction(base, D_VECTOR, (vx, vy)), ln)


def _other_index(i: int) -> int:
    """Deterministic continuation target: lowest index different from i."""
    return 1 if i == 0 else 0


def exp_map(base: Point, v: TangentVector) -> Point:
    """Point reached by following v from its base for length |v|.

    At smooth base points a geodesic that hits a singular stratum is
    continued deterministically (lowest-index other leg/page, or +pi
    around a cone apex).
    """
    if v.base != base:
        raise SpaceMismatchError("tangent vector is based at a different point")
    if v.is_zero:
        return base
    sp = base.space
    d = v.direction
    ln = v.length
    if sp.kind == EUCLIDEAN:
        out = np.asarray(base.coords) + ln * np.asarray(d.data)
        return Point(sp, tuple(float(x) for x in out))
    if sp.kind == SPIDER:
        l0, r0 = base.coords
        if d.kind == D_LEG:
            return Point(sp, (d.data[0], ln))
        if d.data[0] == 1:
            return Point(sp, (l0, r0 + ln))
        if ln <= r0:
            return Point(sp, (l0, r0 - ln))
        return Point(sp, (_other_index(l0), ln - r0))
    if sp.kind == OPEN_BOOK:
        pg0, s0, t0 = base.coords
        if d.kind == D_PAGE_ANGLE:
            page, theta = d.data
            return Point(sp, (page, s0 + ln * math.cos(theta), ln * math.sin(theta)))
        us, ut = d.data
        s1 = s0 + ln * us
        t1 = t0 + ln * ut
        if t1 >= 0.0:
            return Point(sp, (pg0, s1, t1))
        return Point(sp, (_other_index(pg0), s1, -t1))
    r0, phi0 = base.coords
    alpha = sp.circumference
    if d.kind == D_ANGLE:
        return Point(sp, (ln, d.data[0]))
    a, b = d.data
    if b == 0.0 and a == -1.0:
        if ln <= r0:
            return Point(sp, (r0 - ln, phi0))
        return Point(sp, (ln - r0, (phi0 + math.pi) % alpha))
    x = r0 + ln * a
    y = ln * b
    r = math.hypot(x, y)
    psi = math.atan2(y, x)
    return Point(sp, (r, (phi0 + psi) % alpha))


# ---------------------------------------------------------------------------
# Vectorized direction spaces
#
# The unit tangent sphere at every base point of the model spaces is one
# of: a finite set of pi-separated points, a circle with the arc metric,
# or k semicircles glued at two poles.  The classes below hold direction
# coordinates in numpy arrays so nets, pairing matrices and covariance
# kernels can be computed without per-element Python work.


class DiscreteDirections:
    """Finitely many pairwise pi-separated directions (spider apex, lines)."""

    def __init__(self, base: Point, labels: list, make):
        self.base = base
        self.labels = list(labels)
        self._make = make

    @property
    def total_measure(self) -> float:
        return float(len(self.labels))  # counting measure

    def to_coord(self, d: Direction) -> float:
        return float(self.labels.index(d.data[0]))

    def from_coord(self, c) -> Direction:
        return self._make(self.labels[int(round(c))])

    def cross(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return np.where(a[:, None] == b[None, :], 0.0, math.pi)

    def grid(self, eps: float) -> np.ndarray:
        return np.arange(len(self.labels), dtype=float)

    def net_coords(self, eps: float) -> tuple[np.ndarray, np.ndarray, float]:
        coords = np.arange(len(self.labels), dtype=float)
        weights = np.ones(len(self.labels))
        return coords, weights, 0.0

    def refine(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        return coords, np.ones(len(coords)), 0.0


class CircleDirections:
    """Directions forming a circle of circumference L with the arc metric."""

    def __init__(self, base: Point, length: float, make):
        self.base = base
        self.length = float(length)
        self._make = make

    @property
    def total_measure(self) -> float:
        return self.length

    def to_coord(self, d: Direction) -> float:
        return self._coord_of(d)

    def _coord_of(self, d: Direction) -> float:
        if d.kind == D_ANGLE:
            return d.data[0]
        return math.atan2(d.data[1], d.data[0]) % _TWO_PI

    def from_coord(self, c) -> Direction:
        return self._make(float(c))

    def cross(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = np.abs(a[:, None] - b[None, :])
        return np.minimum(d, self.length - d)

    def grid(self, eps: float) -> np.ndarray:
        m = max(1, math.ceil(self.length / (eps / 4.0)))
        return self.length * np.arange(m) / m

    def net_coords(self, eps: float) -> tuple[np.ndarray, np.ndarray, float]:
        m = max(1, math.ceil(self.length / eps))
        coords = self.length * np.arange(m) / m
        spacing = self.length / m
        weights = np.full(m, spacing)
        return coords, weights, spacing / 2.0

    def refine(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        m = len(coords)
        out = self.length * np.arange(2 * m) / (2 * m)
        spacing = self.length / (2 * m)
        return out, np.full(2 * m, spacing), spacing / 2.0


class SpineDirections:
    """Directions at a spine point: k semicircles glued at two poles.

    Coordinates are (page, theta) rows; the poles are (0, 0) and
    (0, pi) and belong to every page.
    """

    def __init__(self, base: Point, pages: int):
        self.base = base
        self.pages = int(pages)

    @property
    def total_measure(self) -> float:
        return self.pages * math.pi

    def to_coord(self, d: Direction) -> np.ndarray:
        return np.array([float(d.data[0]), float(d.data[1])])

    def from_coord(self, c) -> Direction:
        return Direction(self.base, D_PAGE_ANGLE, (int(round(c[0])), float(c[1])))

    def cross(self, a, b) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        pa, ta = a[:, 0][:, None], a[:, 1][:, None]
        pb, tb = b[None, :, 0], b[None, :, 1]
        same = pa == pb
        within = np.abs(ta - tb)
        through = np.minimum(ta + tb, (math.pi - ta) + (math.pi - tb))
        return np.where(same, within, through)

    def grid(self, eps: float) -> np.ndarray:
        m = max(2, math.ceil(math.pi / (eps / 4.0)))
        thetas = math.pi * np.arange(1, m) / m
        rows = [np.array([[0.0, 0.0], [0.0, math.pi]])]
        for p in range(self.pages):
            rows.append(np.column_stack([np.full(len(thetas), float(p)), thetas]))
        return np.vstack(rows)

    def net_coords(self, eps: float) -> tuple[np.ndarray, np.ndarray, float]:
        m = max(1, math.ceil(math.pi / eps))
        return self._uniform(m)

    def _uniform(self, m: int) -> tuple[np.ndarray, np.ndarray, float]:
        h = math.pi / m
        rows = [np.array([[0.0, 0.0], [0.0, math.pi]])]
        weights = [np.full(2, self.pages * h / 2.0)]
        if m > 1:
            thetas = h * np.arange(1, m)
            for p in range(self.pages):
                rows.append(np.column_stack([np.full(m - 1, float(p)), thetas]))
                weights.append(np.full(m - 1, h))
        coords = np.vstack(rows)
        return coords, np.concatenate(weights), h / 2.0

    def refine(self, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        per_page = (len(coords) - 2) // self.pages
        return self._uniform(2 * (per_page + 1))


class SphereDirections:
    """Unit sphere in euclidean d >= 2, great-circle metric (no net grids
    beyond d = 2, which is handled by CircleDirections)."""

    def __init__(self, base: Point, dim: int):
        self.base = base
        self.dim = int(dim)

    @property
    def total_measure(self) -> float | None:
        return None

    def to_coord(self, d: Direction) -> np.ndarray:
        return np.asarray(d.data, dtype=float)

    def from_coord(self, c) -> Direction:
        return Direction(self.base, D_VECTOR, tuple(float(x) for x in c))

    def cross(self, a, b) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        dots = np.clip(a @ b.T, -1.0, 1.0)
        return np.arccos(dots)

    def grid(self, eps: float):
        raise DomainError(
            "direction grids on spheres of dimension >= 2 are not supported; "
            "provide an explicit net instead"
        )

    def net_coords(self, eps: float):
        self.grid(eps)

    def refine(self, coords):
        self.grid(0.0)


def direction_space(base: Point):
    """The vectorized direction-space model at a base point."""
    sp = base.space
    sid, _ = stratum_of(base)
    if sp.kind == SPIDER:
        if sid == "apex":
            return DiscreteDirections(
                base,
                list(range(sp.legs)),
                lambda leg: Direction(base, D_LEG, (leg,)),
            )
        return DiscreteDirections(
            base, [1, -1], lambda s: Direction(base, D_SIGN, (s,))
        )
    if sp.kind == EUCLIDEAN:
        if sp.dim == 1:
            return DiscreteDirections(
                base, [1, -1], lambda s: Direction(base, D_VECTOR, (float(s),))
            )
        if sp.dim == 2:
            return CircleDirections(
                base,
                _TWO_PI,
                lambda a: Direction(base, D_VECTOR, (math.cos(a), math.sin(a))),
            )
        return SphereDirections(base, sp.dim)
    if sp.kind == OPEN_BOOK:
        if sid == "spine":
            return SpineDirections(base, sp.pages)
        return CircleDirections(
            base,
            _TWO_PI,
            lambda a: Direction(base, D_VECTOR, (math.cos(a), math.sin(a))),
        )
    if sid == "apex":
        return CircleDirections(
            base,
            sp.circumference,
            lambda a: Direction(base, D_ANGLE, (a,)),
        )
    return CircleDirections(
        base,
        _TWO_PI,
        lambda a: Direction(base, D_VECTOR, (math.cos(a), math.sin(a))),
    )


# ---------------------------------------------------------------------------
# Direction nets


@dataclass(frozen=True)
class DirectionNet:
    """Finite ordered eps-net on the unit tangent sphere at a base point.

    ``resolution`` is the requested covering scale; ``covering_radius``
    is the achieved max distance from any direction to the net (0 for
    the finite direction spaces).  ``weights``, when present, are
    quadrature weights summing to the total measure of the sphere of
    directions (counting measure on legs, arclength on circles).
    """

    base: Point
    directions: tuple
    resolution: float
    covering_radius: float
    weights: tuple | None = None
    _coords: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.directions)

    def space(self):
        return direction_space(self.base)

    def coords(self) -> np.ndarray:
        if self._coords is not None:
            return self._coords
        ds = self.space()
        arr = np.array([ds.to_coord(d) for d in self.directions])
        object.__setattr__(self, "_coords", arr)
        return arr

    def pairwise_distances(self) -> np.ndarray:
        c = self.coords()
        return self.space().cross(c, c)

    def descriptors(self) -> list[str]:
        return [d.describe() for d in self.directions]


def net_from_directions(base: Point, directions, weights=None,
                        probe_eps: float = 0.01) -> DirectionNet:
    """Wrap an explicit list of directions as a net (counting weights).

    The covering radius is measured against a fine candidate grid where
    one exists (it is exactly 0 for a complete net on a finite direction
    space); on spheres without grids the diameter pi is recorded.
    """
    dirs = tuple(directions)
    if not dirs:
        raise DomainError("a direction net needs at least one direction")
    for d in dirs:
        if d.base != base:
            raise SpaceMismatchError("net directions must share the base point")
    if weights is None:
        weights = tuple(1.0 for _ in dirs)
    ds = direction_space(base)
    coords = np.array([ds.to_coord(d) for d in dirs])
    try:
        cand = ds.grid(probe_eps)
        cov_radius = float(ds.cross(np.asarray(cand), coords).min(axis=1).max())
    except DomainError:
        cov_radius = math.pi
    return DirectionNet(base, dirs, max(cov_radius, 1e-12), cov_radius,
                        tuple(float(w) for w in weights), coords)
