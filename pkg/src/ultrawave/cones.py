"""Open cones in frequency space and direction covers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cone:
    """Open cone ``{xi != 0 : angle(xi, axis) < half_angle}``.

    In 1D the axis is ``(+1,)`` or ``(-1,)`` and the half-angle is ignored.
    """

    axis: tuple
    half_angle: float = math.pi / 2

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=np.float64).ravel()
        n = float(np.linalg.norm(a))
        if a.size not in (1, 2) or n == 0:
            raise ValueError("cone axis must be a nonzero 1D or 2D vector")
        object.__setattr__(self, "axis", tuple(float(v) for v in a / n))
        if a.size == 2 and not 0 < self.half_angle < math.pi:
            raise ValueError("half_angle must lie in (0, pi)")

    @property
    def dimension(self) -> int:
        return len(self.axis)

    @property
    def angle(self) -> float:
        """Polar angle of the axis (1D: 0 or pi)."""
        if self.dimension == 1:
            return 0.0 if self.axis[0] > 0 else math.pi
        return math.atan2(self.axis[1], self.axis[0])

    def contains(self, xi) -> np.ndarray:
        """Vectorized membership; ``xi`` has shape ``(..., d)``."""
        xi = np.asarray(xi, dtype=np.float64)
        if self.dimension == 1:
            if xi.ndim == 0:
                xi = xi[None]
            return xi[..., 0] * self.axis[0] > 0
        nrm = np.sqrt(np.sum(xi * xi, axis=-1))
        dot = xi @ np.asarray(self.axis)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.where(nrm > 0, dot / np.where(nrm > 0, nrm, 1.0), -2.0)
        # compare angles rather than cosines so boundary points stay outside
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        return (nrm > 0) & (ang < self.half_angle) & (cosang > -2.0)

    def angular_distance(self, theta) -> np.ndarray:
        d = np.abs(np.mod(np.asarray(theta) - self.angle + math.pi, 2 * math.pi) - math.pi)
        return d

    def shrink(self, factor: float) -> "Cone":
        return Cone(self.axis, self.half_angle / factor)

    def to_dict(self) -> dict:
        return {"axis": list(self.axis), "half_angle": self.half_angle}


def cone_from_dict(d: dict) -> Cone:
    return Cone(tuple(d["axis"]), float(d.get("half_angle", math.pi / 2)))


def membership(xi, cone: Cone) -> bool:
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    return bool(cone.contains(xi))


@dataclass(frozen=True)
class DirectionCover:
    cones: tuple
    overlap: float
    dimension: int

    def __len__(self) -> int:
        return len(self.cones)

    def __iter__(self):
        return iter(self.cones)

    def __getitem__(self, i) -> Cone:
        return self.cones[i]

    def inner(self) -> "DirectionCover":
        """Cones shrunk by the overlap factor; their closures sit inside the cover cones."""
        if self.dimension == 1:
            return self
        return DirectionCover(tuple(c.shrink(self.overlap) for c in self.cones), 1.0, 2)

    def angles(self) -> list:
        return [c.angle for c in self.cones]

    def to_dict(self) -> dict:
        return {"dimension": self.dimension, "overlap": self.overlap,
                "cones": [c.to_dict() for c in self.cones]}


def cover(n_dir: int = 16, overlap: float = 1.5, dimension: int = 2) -> DirectionCover:
    """Direction cover: ``{+, -}`` in 1D, ``n_dir`` equal sectors in 2D."""
    if overlap < 1:
        raise ValueError("overlap must be >= 1")
    if dimension == 1:
        if n_dir not in (2, None):
            raise ValueError("the 1D cover has exactly two cones")
        return DirectionCover((Cone((1.0,)), Cone((-1.0,))), overlap, 1)
    if dimension != 2:
        raise ValueError("only 1D and 2D covers are supported")
    if n_dir < 2:
        raise ValueError("n_dir must be >= 2")
    half = overlap * math.pi / n_dir
    if half >= math.pi:
        raise ValueError("overlap too large for the number of directions")
    cones = tuple(Cone((math.cos(2 * math.pi * k / n_dir), math.sin(2 * math.pi * k / n_dir)), half)
                  for k in range(n_dir))
    return DirectionCover(cones, float(overlap), 2)


def cover_from_dict(d: dict) -> DirectionCover:
    cones = tuple(cone_from_dict(c) for c in d["cones"])
    return DirectionCover(cones, float(d.get("overlap", 1.0)), int(d.get("dimension", len(cones[0].axis))))


def nested_cones(cone: Cone, ratio: float = 1.5):
    """``(inner, outer)`` with ``closure(inner)`` contained in ``outer``."""
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    return cone.shrink(ratio), cone


def closure_contained(inner: Cone, outer: Cone, n_samples: int = 4096) -> bool:
    """Check ``closure(inner) subset outer`` on sampled directions, boundary included."""
    if inner.dimension == 1:
        return inner.axis == outer.axis
    th = inner.angle + np.linspace(-inner.half_angle, inner.half_angle, n_samples)
    pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
    return bool(np.all(outer.contains(pts)))


def grid_directions(n: int = 32) -> np.ndarray:
    """Nonzero integer frequency vectors in ``[-n, n]^2`` (for exhaustive checks)."""
    k = np.arange(-n, n + 1)
    a, b = np.meshgrid(k, k, indexing="ij")
    pts = np.stack([a.ravel(), b.ravel()], axis=-1).astype(np.float64)
    return pts[np.any(pts != 0, axis=1)]


def coverage_counts(cov: DirectionCover, points: np.ndarray) -> np.ndarray:
    return np.sum([c.contains(points) for c in cov.cones], axis=0)


def separation_constant(inner: Cone, outer: Cone, points: np.ndarray) -> float:
    """Smallest ``|xi - eta| / (|xi| + |eta|)`` over grid ``xi`` in ``inner``, ``eta`` outside ``outer``.

    Returns ``inf`` if either set is empty. A positive value witnesses the
    separation estimate for the nested pair on that grid.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    a = pts[inner.contains(pts)]
    b = pts[~outer.contains(pts) & np.any(pts != 0, axis=1)]
    if len(a) == 0 or len(b) == 0:
        return math.inf
    best = math.inf
    nb = np.linalg.norm(b, axis=1)
    for chunk in np.array_split(a, max(1, len(a) // 512)):
        diff = np.linalg.norm(chunk[:, None, :] - b[None, :, :], axis=-1)
        ratio = diff / (np.linalg.norm(chunk, axis=1)[:, None] + nb[None, :])
        best = min(best, float(ratio.min()))
    return best


def separation_bound(inner: Cone, outer: Cone) -> float:
    """Analytic lower bound ``sin(gap / 2)`` for the separation constant (2D)."""
    if inner.dimension == 1:
        return 1.0
    gap = outer.half_angle - inner.half_angle
    return math.sin(max(gap, 0.0) / 2)
