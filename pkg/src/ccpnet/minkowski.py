"""
Minkowski - Causal geometry of regions in 1+1 and 1+3 dimensional Minkowski space.

Regions are immutable symbolic expressions with vectorised, strict (open)
membership. Double cones and wedges have closed forms for their backward
light cone, causal complement and causal completion. In 1+1 dimensions every
expression also compiles to a finite union of convex pieces in null
coordinates u = t - x, v = t + x, which makes complements, completions and
emptiness exact there.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .config_manager import ToleranceConfig, default_tolerances, get_config
from .errors import (
    DegenerateBox,
    DimensionMismatch,
    MalformedRegion,
    NotSpacelikeSeparated,
    NoValidSlab,
)

logger = logging.getLogger(__name__)

CausalRelation = Literal["timelike+", "timelike-", "lightlike+", "lightlike-", "spacelike"]
Principle = Literal["strong", "common", "weak", "none"]

# Points drawn per vectorised batch when sampling.
SAMPLE_CHUNK = 100_000

# Pieces whose largest inscribed slack is at most this are empty.
_SLACK_EPS = 1e-9

# Most sampled points per region when checking spacelike separation pairwise.
_PAIR_SAMPLES = 2000


@dataclass(frozen=True)
class Event:
    """Spacetime point (t, x1, ..., xd) with d in {1, 3}."""

    coords: Tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if len(coords) not in (2, 4):
            raise MalformedRegion(f"Events need 1 or 3 spatial coordinates, got {len(coords) - 1}")
        if not all(np.isfinite(coords)):
            raise MalformedRegion(f"Event has non-finite coordinates {coords}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def at(cls, t: float, *x: float) -> "Event":
        return cls((t, *x))

    @property
    def t(self) -> float:
        return self.coords[0]

    @property
    def dim(self) -> int:
        return len(self.coords) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def interval(x: Event, y: Event) -> float:
    """(t_x - t_y)^2 - |x - y|^2; positive for timelike separation."""
    if x.dim != y.dim:
        raise DimensionMismatch(f"Events of dimension {x.dim} and {y.dim}")
    d = x.as_array() - y.as_array()
    return float(d[0] ** 2 - np.sum(d[1:] ** 2))


def causal_relation(x: Event, y: Event, tol: Optional[ToleranceConfig] = None) -> CausalRelation:
    """
    Where x lies relative to y.

    Coincident events classify as "lightlike+".
    """
    tol = tol or default_tolerances()
    s = interval(x, y)
    d = x.as_array() - y.as_array()
    scale_sq = float(np.sum(d ** 2))
    sign = "+" if d[0] >= 0 else "-"
    if abs(s) <= tol.tol_geo * scale_sq:
        return f"lightlike{sign}"
    if s > 0:
        return f"timelike{sign}"
    return "spacelike"


# Vectorised light-cone predicates

def _in_future(points: np.ndarray, apex: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    """Open future cone V+(apex)."""
    dt = points[:, 0] - apex[0]
    dx2 = np.sum((points[:, 1:] - apex[1:]) ** 2, axis=1)
    return (dt > 0) & (dt ** 2 - dx2 > tol.tol_geo * (dt ** 2 + dx2))


def _in_past(points: np.ndarray, apex: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    """Open past cone V-(apex)."""
    dt = apex[0] - points[:, 0]
    dx2 = np.sum((points[:, 1:] - apex[1:]) ** 2, axis=1)
    return (dt > 0) & (dt ** 2 - dx2 > tol.tol_geo * (dt ** 2 + dx2))


def _spacelike_to(points: np.ndarray, apex: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    dt = points[:, 0] - apex[0]
    dx2 = np.sum((points[:, 1:] - apex[1:]) ** 2, axis=1)
    return dx2 - dt ** 2 > tol.tol_geo * (dt ** 2 + dx2)


def _positive(values: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    return values > tol.tol_geo * (1.0 + np.abs(values))


# Null-coordinate convex pieces (1+1 exact calculus)

@dataclass(frozen=True, eq=False)
class NullPiece:
    """Open convex polygon {(u, v) : a @ (u, v) < b}."""

    a: np.ndarray
    b: np.ndarray

    @classmethod
    def plane(cls) -> "NullPiece":
        return cls(np.zeros((0, 2)), np.zeros(0))

    @classmethod
    def box(cls, u_lo: float = -np.inf, u_hi: float = np.inf,
            v_lo: float = -np.inf, v_hi: float = np.inf) -> "NullPiece":
        rows, rhs = [], []
        for normal, bound in (((-1.0, 0.0), -u_lo), ((1.0, 0.0), u_hi),
                              ((0.0, -1.0), -v_lo), ((0.0, 1.0), v_hi)):
            if np.isfinite(bound):
                rows.append(normal)
                rhs.append(bound)
        return cls(np.array(rows, dtype=float).reshape(-1, 2), np.array(rhs, dtype=float))

    def meet(self, other: "NullPiece") -> "NullPiece":
        return NullPiece(np.vstack([self.a, other.a]), np.concatenate([self.b, other.b]))

    def sup(self, direction: Sequence[float]) -> float:
        """Supremum of direction . (u, v) over the piece (inf when unbounded)."""
        c = -np.asarray(direction, dtype=float)
        if self.a.shape[0] == 0:
            return 0.0 if not np.any(c) else np.inf
        result = linprog(c, A_ub=self.a, b_ub=self.b, bounds=[(None, None)] * 2, method="highs")
        if result.status == 3:
            return np.inf
        if result.status == 2:
            return -np.inf
        return float(-result.fun)

    @cached_property
    def bounds(self) -> Tuple[float, float, float, float]:
        """(inf u, sup u, inf v, sup v)."""
        return (
            -self.sup((-1.0, 0.0)),
            self.sup((1.0, 0.0)),
            -self.sup((0.0, -1.0)),
            self.sup((0.0, 1.0)),
        )

    @cached_property
    def is_empty(self) -> bool:
        k = self.a.shape[0]
        if k == 0:
            return False
        norms = np.linalg.norm(self.a, axis=1)
        result = linprog(
            np.array([0.0, 0.0, -1.0]),
            A_ub=np.hstack([self.a, norms[:, None]]),
            b_ub=self.b,
            bounds=[(None, None), (None, None), (None, 1.0)],
            method="highs",
        )
        if result.status != 0:
            return True
        return float(-result.fun) <= _SLACK_EPS

    def mask_uv(self, u: np.ndarray, v: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
        if self.a.shape[0] == 0:
            return np.ones(u.shape, dtype=bool)
        values = self.a @ np.vstack([u, v])
        margin = tol.tol_geo * (1.0 + np.abs(self.b))
        return np.all(values < (self.b - margin)[:, None], axis=0)

    def x_interval(self, t: float) -> Optional[Tuple[float, float]]:
        """Spatial cross-section at time t, or None when empty."""
        lo, hi = -np.inf, np.inf
        for (a_u, a_v), bound in zip(self.a, self.b):
            coefficient = a_v - a_u
            rhs = bound - (a_u + a_v) * t
            if abs(coefficient) < 1e-15:
                if rhs <= 0:
                    return None
            elif coefficient > 0:
                hi = min(hi, rhs / coefficient)
            else:
                lo = max(lo, rhs / coefficient)
        if lo >= hi:
            return None
        return lo, hi


def _nonempty(pieces: Sequence[NullPiece]) -> List[NullPiece]:
    return [p for p in pieces if not p.is_empty]


def _intersect_all(first: Sequence[NullPiece], second: Sequence[NullPiece]) -> List[NullPiece]:
    return _nonempty([p.meet(q) for p in first for q in second])


def _set_complement(pieces: Sequence[NullPiece]) -> List[NullPiece]:
    """Open set complement of a union of pieces (boundaries dropped)."""
    result = [NullPiece.plane()]
    for piece in pieces:
        flipped = [NullPiece(-row[None, :], np.array([-bound])) for row, bound in zip(piece.a, piece.b)]
        result = _intersect_all(result, flipped)
    return result


def _down_closure(piece: NullPiece) -> NullPiece:
    """All (u, v) strictly dominated by some point of the piece: its backward light cone."""
    normals = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    normals += [row for row in piece.a if np.all(row >= -1e-15) and np.any(row > 0)]
    rows, rhs = [], []
    for normal in normals:
        h = piece.sup(normal)
        if np.isfinite(h):
            rows.append(normal)
            rhs.append(h)
    return NullPiece(np.array(rows, dtype=float).reshape(-1, 2), np.array(rhs, dtype=float))


def _causal_complement(pieces: Sequence[NullPiece]) -> List[NullPiece]:
    """
    Points spacelike to every point of every piece.

    For one connected piece these are the two null quadrants beyond its
    null-coordinate bounding box.
    """
    result = [NullPiece.plane()]
    for piece in pieces:
        u_lo, u_hi, v_lo, v_hi = piece.bounds
        quadrants = []
        if np.isfinite(u_lo) and np.isfinite(v_hi):
            quadrants.append(NullPiece.box(u_hi=u_lo, v_lo=v_hi))
        if np.isfinite(u_hi) and np.isfinite(v_lo):
            quadrants.append(NullPiece.box(u_lo=u_hi, v_hi=v_lo))
        result = _intersect_all(result, quadrants)
        if not result:
            break
    return result


# Region expressions

class Region(ABC):
    """Open spacetime region."""

    @property
    @abstractmethod
    def dim(self) -> Optional[int]:
        """Spatial dimension, or None when it cannot be inferred."""

    @abstractmethod
    def _mask(self, points: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
        """Boolean membership of each row (t, x...)."""

    @abstractmethod
    def _compile(self) -> List[NullPiece]:
        """Convex pieces in null coordinates (1+1 only)."""

    def mask(self, points: np.ndarray, tol: Optional[ToleranceConfig] = None) -> np.ndarray:
        tol = tol or default_tolerances()
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dim is not None and pts.shape[1] != self.dim + 1:
            raise DimensionMismatch(f"Points have {pts.shape[1] - 1} spatial coordinates, region has {self.dim}")
        return self._mask(pts, tol)

    def contains(self, event, tol: Optional[ToleranceConfig] = None) -> bool:
        coords = event.coords if isinstance(event, Event) else event
        return bool(self.mask(np.asarray(coords, dtype=float)[None, :], tol)[0])

    @cached_property
    def null_pieces(self) -> Tuple[NullPiece, ...]:
        if self.dim not in (1, None):
            raise MalformedRegion("Null-coordinate pieces exist only in 1+1 dimensions")
        return tuple(self._compile())

    def _exact_mask(self, points: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
        if self.dim not in (1, None):
            raise MalformedRegion(f"{type(self).__name__} has no closed form in 1+3 dimensions")
        u = points[:, 0] - points[:, 1]
        v = points[:, 0] + points[:, 1]
        result = np.zeros(len(points), dtype=bool)
        for piece in self.null_pieces:
            result |= piece.mask_uv(u, v, tol)
        return result

    def exact_mask(self, points: np.ndarray, tol: Optional[ToleranceConfig] = None) -> np.ndarray:
        """Membership read off the compiled null-coordinate pieces, skipping closed-form shortcuts (1+1 only)."""
        tol = tol or default_tolerances()
        return self._exact_mask(np.atleast_2d(np.asarray(points, dtype=float)), tol)


def _common_dim(regions: Sequence[Region]) -> Optional[int]:
    dims = {r.dim for r in regions if r.dim is not None}
    if len(dims) > 1:
        raise MalformedRegion(f"Regions of different dimensions combined: {sorted(dims)}")
    return dims.pop() if dims else None


@dataclass(frozen=True)
class DoubleCone(Region):
    """V+(bottom) intersected with V-(top)."""

    bottom: Event
    top: Event

    def __post_init__(self):
        if self.bottom.dim != self.top.dim:
            raise MalformedRegion("Double cone apexes have different dimensions")
        if causal_relation(self.top, self.bottom) != "timelike+":
            raise MalformedRegion(f"Top {self.top.coords} is not in the open future of bottom {self.bottom.coords}")

    @classmethod
    def centered(cls, t: float, x: float, radius: float = 1.0) -> "DoubleCone":
        """1+1 double cone with base centre (t, x) and the given half-height."""
        return cls(Event.at(t - radius, x), Event.at(t + radius, x))

    @property
    def dim(self) -> int:
        return self.bottom.dim

    def bounding_box(self) -> "SamplingBox":
        a, b = self.bottom.as_array(), self.top.as_array()
        height = b[0] - a[0]
        low = np.maximum(a[1:] - height, b[1:] - height)
        high = np.minimum(a[1:] + height, b[1:] + height)
        return SamplingBox((a[0], *low), (b[0], *high))

    def _mask(self, points, tol):
        return _in_future(points, self.bottom.as_array(), tol) & _in_past(points, self.top.as_array(), tol)

    def _compile(self):
        a, b = self.bottom.as_array(), self.top.as_array()
        return _nonempty([NullPiece.box(a[0] - a[1], b[0] - b[1], a[0] + a[1], b[0] + b[1])])


def _boost(rapidity: float, dim: int) -> np.ndarray:
    matrix = np.eye(dim + 1)
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    matrix[0, 0] = matrix[1, 1] = c
    matrix[0, 1] = matrix[1, 0] = s
    return matrix


@dataclass(frozen=True)
class Wedge(Region):
    """
    Poincare image a + L(W) of the right wedge {x1 > |t|} (or left wedge {x1 < -|t|}).
    """

    right: bool
    lorentz: Tuple[Tuple[float, ...], ...]
    translation: Tuple[float, ...]

    def __post_init__(self):
        matrix = np.asarray(self.lorentz, dtype=float)
        n = len(self.translation)
        if n not in (2, 4) or matrix.shape != (n, n):
            raise MalformedRegion(f"Wedge transform must be {n}x{n} with 1 or 3 spatial dimensions")
        eta = np.diag([1.0] + [-1.0] * (n - 1))
        if np.max(np.abs(matrix.T @ eta @ matrix - eta)) > 1e-9:
            raise MalformedRegion("Wedge transform is not a Lorentz transformation")
        if np.linalg.det(matrix) <= 0 or matrix[0, 0] < 1 - 1e-9:
            raise MalformedRegion("Wedge transform is not proper orthochronous")
        object.__setattr__(self, "lorentz", tuple(tuple(float(v) for v in row) for row in matrix))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    @classmethod
    def standard(cls, right: bool = True, apex: Optional[Event] = None, dim: int = 1,
                 rapidity: float = 0.0) -> "Wedge":
        apex = apex or Event(tuple([0.0] * (dim + 1)))
        return cls(right, tuple(map(tuple, _boost(rapidity, apex.dim))), apex.coords)

    @property
    def dim(self) -> int:
        return len(self.translation) - 1

    @property
    def apex(self) -> Event:
        return Event(self.translation)

    def reflected(self) -> "Wedge":
        """The causal complement: the opposite wedge with the same edge."""
        return Wedge(not self.right, self.lorentz, self.translation)

    def to_standard(self, points: np.ndarray) -> np.ndarray:
        inverse = np.linalg.inv(np.asarray(self.lorentz))
        return (points - np.asarray(self.translation)) @ inverse.T

    def _mask(self, points, tol):
        y = self.to_standard(points)
        x1 = y[:, 1] if self.right else -y[:, 1]
        return _positive(x1 - np.abs(y[:, 0]), tol)

    def _compile(self):
        t, x = self.translation
        u0, v0 = t - x, t + x
        if self.right:
            return [NullPiece.box(u_hi=u0, v_lo=v0)]
        return [NullPiece.box(u_lo=u0, v_hi=v0)]


@dataclass(frozen=True)
class TimeSlab(Region):
    """{t_min < t < t_max}."""

    t_min: float
    t_max: float
    spatial_dim: int = 1

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise MalformedRegion(f"Empty time slab ({self.t_min}, {self.t_max})")

    @property
    def dim(self) -> int:
        return self.spatial_dim

    def _mask(self, points, tol):
        return (points[:, 0] > self.t_min) & (points[:, 0] < self.t_max)

    def _compile(self):
        rows, rhs = [], []
        if np.isfinite(self.t_min):
            rows.append((-0.5, -0.5))
            rhs.append(-self.t_min)
        if np.isfinite(self.t_max):
            rows.append((0.5, 0.5))
            rhs.append(self.t_max)
        return _nonempty([NullPiece(np.array(rows, dtype=float).reshape(-1, 2), np.array(rhs, dtype=float))])


@dataclass(frozen=True)
class EmptyRegion(Region):
    spatial_dim: Optional[int] = None

    @property
    def dim(self) -> Optional[int]:
        return self.spatial_dim

    def _mask(self, points, tol):
        return np.zeros(len(points), dtype=bool)

    def _compile(self):
        return []


@dataclass(frozen=True)
class Union(Region):
    parts: Tuple[Region, ...]

    @classmethod
    def of(cls, *parts: Region) -> "Union":
        return cls(tuple(parts))

    @property
    def dim(self):
        return _common_dim(self.parts)

    def _mask(self, points, tol):
        result = np.zeros(len(points), dtype=bool)
        for part in self.parts:
            result |= part._mask(points, tol)
        return result

    def _compile(self):
        return [piece for part in self.parts for piece in part.null_pieces]


@dataclass(frozen=True)
class Intersection(Region):
    parts: Tuple[Region, ...]

    @classmethod
    def of(cls, *parts: Region) -> "Intersection":
        return cls(tuple(parts))

    @property
    def dim(self):
        return _common_dim(self.parts)

    def _mask(self, points, tol):
        result = np.ones(len(points), dtype=bool)
        for part in self.parts:
            result &= part._mask(points, tol)
        return result

    def _compile(self):
        pieces = [NullPiece.plane()]
        for part in self.parts:
            pieces = _intersect_all(pieces, part.null_pieces)
            if not pieces:
                break
        return pieces


@dataclass(frozen=True)
class Difference(Region):
    base: Region
    removed: Region

    @property
    def dim(self):
        return _common_dim((self.base, self.removed))

    def _mask(self, points, tol):
        return self.base._mask(points, tol) & ~self.removed._mask(points, tol)

    def _compile(self):
        return _intersect_all(self.base.null_pieces, _set_complement(self.removed.null_pieces))


@dataclass(frozen=True)
class BLCOf(Region):
    """Union of the open backward light cones of all points of the inner region."""

    inner: Region

    @property
    def dim(self):
        return self.inner.dim

    def _mask(self, points, tol):
        inner = self.inner
        if isinstance(inner, DoubleCone):
            return _in_past(points, inner.top.as_array(), tol)
        if isinstance(inner, Wedge):
            y = inner.to_standard(points)
            x1 = y[:, 1] if inner.right else -y[:, 1]
            return _positive(x1 - y[:, 0], tol)
        if isinstance(inner, TimeSlab):
            return points[:, 0] < inner.t_max
        if isinstance(inner, EmptyRegion):
            return np.zeros(len(points), dtype=bool)
        if isinstance(inner, Union):
            return Union(tuple(BLCOf(p) for p in inner.parts))._mask(points, tol)
        if isinstance(inner, BLCOf):
            return inner._mask(points, tol)
        if isinstance(inner, CommonPastOf):
            return inner._mask(points, tol)
        return self._exact_mask(points, tol)

    def _compile(self):
        return _nonempty([_down_closure(piece) for piece in self.inner.null_pieces])


@dataclass(frozen=True)
class ComplementOf(Region):
    """Causal complement: points spacelike to every point of the inner region."""

    inner: Region

    @property
    def dim(self):
        return self.inner.dim

    def _mask(self, points, tol):
        inner = self.inner
        if isinstance(inner, DoubleCone):
            return (_spacelike_to(points, inner.bottom.as_array(), tol)
                    & _spacelike_to(points, inner.top.as_array(), tol))
        if isinstance(inner, Wedge):
            return inner.reflected()._mask(points, tol)
        if isinstance(inner, TimeSlab):
            return np.zeros(len(points), dtype=bool)
        if isinstance(inner, EmptyRegion):
            return np.ones(len(points), dtype=bool)
        if isinstance(inner, ComplementOf):
            return CompletionOf(inner.inner)._mask(points, tol)
        if isinstance(inner, CompletionOf):
            return ComplementOf(inner.inner)._mask(points, tol)
        return self._exact_mask(points, tol)

    def _compile(self):
        return _causal_complement(self.inner.null_pieces)


@dataclass(frozen=True)
class CompletionOf(Region):
    """Causal completion: the complement of the complement."""

    inner: Region

    @property
    def dim(self):
        return self.inner.dim

    def _mask(self, points, tol):
        inner = self.inner
        if isinstance(inner, (DoubleCone, Wedge)):
            return inner._mask(points, tol)
        if isinstance(inner, EmptyRegion):
            return np.zeros(len(points), dtype=bool)
        if isinstance(inner, TimeSlab):
            return np.ones(len(points), dtype=bool)
        if isinstance(inner, ComplementOf):
            return inner._mask(points, tol)
        if isinstance(inner, CompletionOf):
            return inner._mask(points, tol)
        return self._exact_mask(points, tol)

    def _compile(self):
        return _causal_complement(_causal_complement(self.inner.null_pieces))


@dataclass(frozen=True)
class CommonPastOf(Region):
    """Intersection of the open backward light cones of all points of the inner region."""

    inner: Region

    @property
    def dim(self):
        return self.inner.dim

    def _mask(self, points, tol):
        inner = self.inner
        if isinstance(inner, DoubleCone):
            return _in_past(points, inner.bottom.as_array(), tol)
        if isinstance(inner, (Wedge, TimeSlab)):
            return np.zeros(len(points), dtype=bool)
        if isinstance(inner, EmptyRegion):
            return np.ones(len(points), dtype=bool)
        if isinstance(inner, Union):
            return Intersection(tuple(CommonPastOf(p) for p in inner.parts))._mask(points, tol)
        return self._exact_mask(points, tol)

    def _compile(self):
        pieces = self.inner.null_pieces
        if not pieces:
            return [NullPiece.plane()]
        u_lo = min(p.bounds[0] for p in pieces)
        v_lo = min(p.bounds[2] for p in pieces)
        if not (np.isfinite(u_lo) and np.isfinite(v_lo)):
            return []
        return [NullPiece.box(u_hi=u_lo, v_hi=v_lo)]


# Past regions of a pair

def wpast(v1: Region, v2: Region) -> Region:
    """(BLC(V1) minus V1) union (BLC(V2) minus V2)."""
    return Union.of(Difference(BLCOf(v1), v1), Difference(BLCOf(v2), v2))


def cpast(v1: Region, v2: Region) -> Region:
    """(BLC(V1) minus V1) intersected with (BLC(V2) minus V2)."""
    return Intersection.of(Difference(BLCOf(v1), v1), Difference(BLCOf(v2), v2))


def spast(v1: Region, v2: Region) -> Region:
    """Points in the backward light cone of every point of V1 and V2."""
    return Intersection.of(CommonPastOf(v1), CommonPastOf(v2))


def is_empty_analytic(region: Region) -> Optional[bool]:
    """
    Symbolic emptiness: True or False when decidable, None otherwise.

    Exact for every 1+1 expression; in 1+3 only closed forms are recognised.
    """
    if isinstance(region, EmptyRegion):
        return True
    if isinstance(region, CommonPastOf) and isinstance(region.inner, (Wedge, TimeSlab)):
        return True
    if isinstance(region, Intersection) and any(is_empty_analytic(p) is True for p in region.parts):
        return True
    if isinstance(region, Union) and region.parts and all(is_empty_analytic(p) is True for p in region.parts):
        return True
    if isinstance(region, (Difference,)) and is_empty_analytic(region.base) is True:
        return True
    if isinstance(region, (BLCOf, CompletionOf)) and is_empty_analytic(region.inner) is True:
        return True
    if isinstance(region, (DoubleCone, Wedge, TimeSlab)):
        return False
    if region.dim in (1, None):
        try:
            return len(region.null_pieces) == 0
        except MalformedRegion:
            return None
    return None


def cross_section(region: Region, t: float) -> List[Tuple[float, float]]:
    """Merged spatial intervals of a 1+1 region at time t."""
    intervals = sorted(
        iv for iv in (piece.x_interval(t) for piece in region.null_pieces) if iv is not None
    )
    merged: List[Tuple[float, float]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


# Sampling oracle

@dataclass(frozen=True)
class SamplingBox:
    low: Tuple[float, ...]
    high: Tuple[float, ...]

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        if len(low) != len(high):
            raise DegenerateBox("Box corners have different dimensions")
        if any(not h > l for l, h in zip(low, high)) or not all(np.isfinite(low + high)):
            raise DegenerateBox(f"Box {low} - {high} has no volume")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def around(cls, *cones: DoubleCone, margin: float = 0.0) -> "SamplingBox":
        boxes = [c.bounding_box() for c in cones]
        low = np.min([b.low for b in boxes], axis=0) - margin
        high = np.max([b.high for b in boxes], axis=0) + margin
        return cls(tuple(low), tuple(high))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=(n, len(self.low)))


@dataclass(frozen=True)
class GeometryVerdict:
    """
    Outcome of a sampled or analytic region predicate.

    ``holds`` is the predicate's answer (empty / subset / separated);
    ``witness`` is a point (or pair of points) refuting or exhibiting it.
    """

    query: str
    holds: bool
    samples: int
    method: str = "sampled"
    witness: Optional[Tuple[float, ...]] = None
    hits: int = 0
    upper_bound: Optional[float] = None


def _chunks(n: int):
    done = 0
    while done < n:
        size = min(SAMPLE_CHUNK, n - done)
        yield size
        done += size


def is_empty_sampled(region: Region, box: SamplingBox, n: int, seed: int,
                     tol: Optional[ToleranceConfig] = None) -> GeometryVerdict:
    """
    Sample the box uniformly; nonempty on the first hit.

    An empty verdict carries the rule-of-three bound 3/n on the region's
    volume fraction of the box.
    """
    if n < 1:
        raise DegenerateBox("At least one sample is required")
    rng = np.random.default_rng(seed)
    drawn = 0
    for size in _chunks(n):
        points = box.sample(rng, size)
        inside = region.mask(points, tol)
        if np.any(inside):
            index = int(np.argmax(inside))
            return GeometryVerdict("empty", False, drawn + index + 1, witness=tuple(points[index]))
        drawn += size
    return GeometryVerdict("empty", True, drawn, upper_bound=3.0 / drawn)


def is_subset_sampled(inner: Region, outer: Region, box: SamplingBox, n: int, seed: int,
                      tol: Optional[ToleranceConfig] = None) -> GeometryVerdict:
    """Every sampled point of ``inner`` must lie in ``outer``; a counterexample is the witness."""
    if n < 1:
        raise DegenerateBox("At least one sample is required")
    rng = np.random.default_rng(seed)
    hits = 0
    drawn = 0
    for size in _chunks(n):
        points = box.sample(rng, size)
        in_inner = inner.mask(points, tol)
        bad = in_inner & ~outer.mask(points, tol)
        if np.any(bad):
            index = int(np.argmax(bad))
            return GeometryVerdict("subset", False, drawn + size, witness=tuple(points[index]),
                                   hits=hits + int(np.sum(in_inner[:index])))
        hits += int(np.sum(in_inner))
        drawn += size
    return GeometryVerdict("subset", True, drawn, hits=hits)


def _sample_inside(region: Region, box: SamplingBox, n: int, rng: np.random.Generator,
                   tol: ToleranceConfig) -> np.ndarray:
    collected: List[np.ndarray] = []
    count = 0
    for _ in range(100):
        points = box.sample(rng, max(4 * n, 1000))
        inside = points[region.mask(points, tol)]
        collected.append(inside)
        count += len(inside)
        if count >= n:
            break
    return np.vstack(collected)[:n] if collected else np.zeros((0, len(box.low)))


def double_cones_spacelike(v1: DoubleCone, v2: DoubleCone, tol: Optional[ToleranceConfig] = None) -> bool:
    """
    Exact test: open double cones are spacelike separated iff neither top apex
    lies in the open future of the other cone's bottom apex.
    """
    tol = tol or default_tolerances()
    return (causal_relation(v2.top, v1.bottom, tol) != "timelike+"
            and causal_relation(v1.top, v2.bottom, tol) != "timelike+")


def spacelike_separated(v1: Region, v2: Region, n: int, seed: int, box: Optional[SamplingBox] = None,
                        tol: Optional[ToleranceConfig] = None) -> GeometryVerdict:
    """
    Check that no sampled point of V1 is causally related to a sampled point of V2.

    Pairs of double cones are decided analytically first; the sampled pairs
    then confirm the verdict.
    """
    tol = tol or default_tolerances()
    if n < 1:
        raise DegenerateBox("At least one sample is required")
    cones = isinstance(v1, DoubleCone) and isinstance(v2, DoubleCone)
    if box is None:
        if not cones:
            raise DegenerateBox("A sampling box is required for regions other than double cones")
        box = SamplingBox.around(v1, v2)

    rng = np.random.default_rng(seed)
    per_side = min(n, _PAIR_SAMPLES)
    first = _sample_inside(v1, v1.bounding_box() if isinstance(v1, DoubleCone) else box, per_side, rng, tol)
    second = _sample_inside(v2, v2.bounding_box() if isinstance(v2, DoubleCone) else box, per_side, rng, tol)
    pairs = len(first) * len(second)

    for start in range(0, len(first), 200):
        block = first[start:start + 200]
        d = block[:, None, :] - second[None, :, :]
        s = d[..., 0] ** 2 - np.sum(d[..., 1:] ** 2, axis=-1)
        causal = s >= -tol.tol_geo * np.sum(d ** 2, axis=-1)
        if np.any(causal):
            i, j = np.unravel_index(int(np.argmax(causal)), causal.shape)
            witness = tuple(block[i]) + tuple(second[j])
            return GeometryVerdict("separated", False, pairs, witness=witness)

    if cones:
        separated = double_cones_spacelike(v1, v2, tol)
        return GeometryVerdict("separated", separated, pairs, method="analytic")
    return GeometryVerdict("separated", True, pairs)


def principle_strength(v: Region, v1: Region, v2: Region, box: SamplingBox, n: int, seed: int,
                       tol: Optional[ToleranceConfig] = None) -> Principle:
    """
    Which past region a candidate localization V fits into: strong (spast),
    common (cpast), weak (wpast) or none.
    """
    for name, region in (("strong", spast(v1, v2)), ("common", cpast(v1, v2)), ("weak", wpast(v1, v2))):
        if is_subset_sampled(v, region, box, n, seed, tol).holds:
            return name
    return "none"


# Localization of a common cause (1+1)

@dataclass(frozen=True)
class Localization:
    """Slab region under two double cones plus its checkable claims."""

    region: Region
    t0: float
    epsilon: float
    cross_sections: Tuple[Tuple[float, float], ...]
    checks: Dict[str, bool] = field(default_factory=dict)
    subset_verdict: Optional[GeometryVerdict] = None
    # Bottom cross-section of each cone's backward cone, before merging.
    branch_sections: Tuple[Tuple[float, float], ...] = ()

    @property
    def box(self) -> SamplingBox:
        lows = [lo for lo, _ in self.cross_sections]
        highs = [hi for _, hi in self.cross_sections]
        return SamplingBox((self.t0, min(lows)), (self.t0 + self.epsilon, max(highs)))


def _covered(cone: DoubleCone, intervals: Sequence[Tuple[float, float]], s: float) -> bool:
    """Whether the cone lies in the future domain of dependence of one interval at time s."""
    t_top, x_top = cone.top.coords
    if cone.bottom.t <= s:
        return False
    return any(x_top - lo >= t_top - s and hi - x_top >= t_top - s for lo, hi in intervals)


def localization_region(v1: DoubleCone, v2: DoubleCone, samples: Optional[int] = None, seed: int = 0,
                        tol: Optional[ToleranceConfig] = None) -> Localization:
    """
    Slab W = (BLC(V1) u BLC(V2)) n {t0 < t < t0 + eps} below two spacelike separated cones.

    t0 lies two cone heights below the lower bottom apex and eps is half the
    remaining gap, so W stays inside wpast(V1, V2) while the domain of
    dependence of its top cross-section covers both cones.

    ``cross_sections`` is the merged bottom cross-section of W. At this depth
    the two backward cones usually overlap, so it is often a single interval
    even for well separated cones; ``branch_sections`` keeps one interval per
    cone (V1 first) before merging.

    Raises:
        MalformedRegion: If the cones are not 1+1 double cones
        NotSpacelikeSeparated: If the cones are causally related
    """
    tol = tol or default_tolerances()
    if not (isinstance(v1, DoubleCone) and isinstance(v2, DoubleCone)) or v1.dim != 1 or v2.dim != 1:
        raise MalformedRegion("localization_region needs two 1+1 double cones")
    if not double_cones_spacelike(v1, v2, tol):
        raise NotSpacelikeSeparated("Double cones are causally related")

    lowest = min(v1.bottom.t, v2.bottom.t)
    height = max(v1.top.t - v1.bottom.t, v2.top.t - v2.bottom.t)
    t0 = lowest - 2.0 * height
    epsilon = (lowest - t0) / 2.0
    if not epsilon > 0:
        raise NoValidSlab(f"Slab thickness {epsilon} is not positive")

    region = Intersection.of(Union.of(BLCOf(v1), BLCOf(v2)), TimeSlab(t0, t0 + epsilon))
    # Cross-sections of the backward cones; the slab itself is open at both ends.
    cones_past = Union.of(BLCOf(v1), BLCOf(v2))
    top_sections = cross_section(cones_past, t0 + epsilon)
    bottom_sections = cross_section(cones_past, t0)
    checks = {
        "covers_v1": _covered(v1, top_sections, t0 + epsilon),
        "covers_v2": _covered(v2, top_sections, t0 + epsilon),
    }
    box = SamplingBox(
        (t0, min(lo for lo, _ in bottom_sections)),
        (t0 + epsilon, max(hi for _, hi in bottom_sections)),
    )
    n = samples if samples is not None else get_config().geometry_samples
    verdict = is_subset_sampled(region, wpast(v1, v2), box, n, seed, tol)
    checks["subset_of_wpast"] = verdict.holds
    branches = tuple(iv for cone in (v1, v2) for iv in cross_section(BLCOf(cone), t0))
    logger.info(f"Localization slab ({t0:g}, {t0 + epsilon:g}): checks {checks}")
    return Localization(region, t0, epsilon, tuple(bottom_sections), checks, verdict, branches)


def refinement_regions(v1: Region, v2: Region, w: Region) -> Tuple[Region, Region]:
    """The parts of W under only one of the two cones."""
    shared = Intersection.of(BLCOf(v1), BLCOf(v2))
    return (
        Difference(Intersection.of(BLCOf(v1), w), shared),
        Difference(Intersection.of(BLCOf(v2), w), shared),
    )
