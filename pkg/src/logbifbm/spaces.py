"""Metric spaces with measure-definite-kernel representations.

Each supported space carries a family of sets ``A_x`` in a measure space
``(E, mu)`` such that the metric is the measure of the symmetric difference,
``d(x, y) = mu(A_x \\Delta A_y)``.  The quantities the covariance kernels
need are the metric itself and the masses ``mu(A_x)``:

* half-line / full line: ``A_x = [0, x]`` (or ``(-x, 0]`` for ``x < 0``),
  Lebesgue measure, so ``mu(A_x) = |x|`` and ``d = |x - y|``.
* R^n: hyperplanes separating 0 and x, normalized so ``mu(A_x) = ||x||``
  and ``d`` is the Euclidean metric.
* sphere S^n: hemispheres, geodesic metric, base measure ``pi * dA / w_n``
  where ``w_n`` is the total surface area.  Pinned mode uses
  ``A_x = H_x \\Delta H_o`` (``mu(A_x) = d(o, x)``); rotation-invariant mode
  uses ``A_x = H_x`` (``mu(A_x) = pi / 2`` for every x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Space",
    "SpacePoint",
    "half_line",
    "full_line",
    "euclidean",
    "sphere",
    "distance",
    "mu_A",
    "parse_space",
    "parse_point",
]

_KINDS = ("half-line", "full-line", "rn", "sphere")
_SPHERE_MODES = ("pinned", "rotinv")
_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class Space:
    """A supported metric space together with its base measure lambda.

    ``dimension`` is the point dimension: 1 for the lines, n for R^n, and n
    for S^n (points of S^n are unit vectors in R^{n+1}).  ``sphere_mode``
    selects the pinned or rotation-invariant set family and is None off the
    sphere.  The sphere's base measure is stored as the density multiplier
    ``lambda_density = pi / w_n`` against uniform surface measure, which is
    what Poisson sampling needs.
    """

    kind: str
    dimension: int
    sphere_mode: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown space kind {self.kind!r}")
        if self.kind == "sphere":
            if self.sphere_mode not in _SPHERE_MODES:
                raise ValueError(f"sphere mode must be one of {_SPHERE_MODES}")
        elif self.sphere_mode is not None:
            raise ValueError("sphere_mode only applies to spheres")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def lambda_density(self) -> float:
        """Density of lambda against the natural uniform measure.

        Lebesgue spaces have density 1.  On S^n the base measure is
        ``pi / w_n`` times the surface measure, so that the geodesic equals
        the measure of the hemisphere symmetric difference.
        """
        if self.kind != "sphere":
            return 1.0
        return math.pi / self.surface_area

    @property
    def surface_area(self) -> float:
        if self.kind != "sphere":
            raise ValueError("surface_area only defined for spheres")
        n = self.dimension  # S^n lives in R^{n+1}
        return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)

    @property
    def lambda_total(self) -> float:
        """Total lambda mass; pi for every sphere, infinite otherwise."""
        if self.kind != "sphere":
            return math.inf
        return math.pi

    def point(self, coords) -> "SpacePoint":
        return SpacePoint(self, np.atleast_1d(np.asarray(coords, dtype=float)))

    def __str__(self):
        if self.kind == "sphere":
            return f"sphere{self.dimension}@{self.sphere_mode}"
        if self.kind == "rn":
            return f"rn[{self.dimension}]"
        return self.kind


@dataclass(frozen=True)
class SpacePoint:
    """A point of a :class:`Space`.

    Line points store a single coordinate; R^n points the coordinate vector;
    sphere points the embedding unit vector in R^{n+1}.
    """

    space: Space
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = self.coords
        kind = self.space.kind
        if kind in ("half-line", "full-line"):
            if c.shape != (1,):
                raise ValueError("line points take a single coordinate")
            if kind == "half-line" and c[0] < 0:
                raise ValueError("half-line coordinate must be nonnegative")
        elif kind == "rn":
            if c.shape != (self.space.dimension,):
                raise ValueError(
                    f"expected {self.space.dimension} coordinates, got {c.shape}"
                )
        elif kind == "sphere":
            if c.shape != (self.space.dimension + 1,):
                raise ValueError(
                    f"S^{self.space.dimension} points are unit vectors in "
                    f"R^{self.space.dimension + 1}"
                )
            if abs(np.linalg.norm(c) - 1.0) > _UNIT_TOL:
                raise ValueError("sphere points must be unit vectors (1e-12)")

    @property
    def x(self) -> float:
        """Scalar coordinate for line points."""
        return float(self.coords[0])


def half_line() -> Space:
    return Space("half-line", 1)


def full_line() -> Space:
    return Space("full-line", 1)


def euclidean(dim: int) -> Space:
    return Space("rn", dim)


def sphere(dim: int = 2, mode: str = "pinned") -> Space:
    return Space("sphere", dim, sphere_mode=mode)


def sphere_origin(space: Space) -> SpacePoint:
    """The pinned reference point o: the north pole (last coordinate 1)."""
    v = np.zeros(space.dimension + 1)
    v[-1] = 1.0
    return SpacePoint(space, v)


def _check_same_space(x: SpacePoint, y: SpacePoint):
    if x.space != y.space:
        raise ValueError(f"points live in different spaces: {x.space} vs {y.space}")


def geodesic(u: np.ndarray, v: np.ndarray) -> float:
    # clamp the inner product so antipodal/coincident pairs cannot NaN
    return math.acos(min(1.0, max(-1.0, float(np.dot(u, v)))))


def distance(space: Space, x: SpacePoint, y: SpacePoint) -> float:
    """The metric d(x, y) = mu(A_x symdiff A_y) of the space."""
    _check_same_space(x, y)
    if x.space != space:
        raise ValueError("points do not belong to the given space")
    kind = space.kind
    if kind in ("half-line", "full-line"):
        return abs(x.x - y.x)
    if kind == "rn":
        return float(np.linalg.norm(x.coords - y.coords))
    return geodesic(x.coords, y.coords)


def mu_A(space: Space, x: SpacePoint) -> float:
    """Mass mu(A_x) of the representing set of x.

    Reduces to d(o, x) whenever the set family is pinned at an origin with
    mu(A_o) = 0; the rotation-invariant sphere family has constant mass
    pi/2 instead.
    """
    if x.space != space:
        raise ValueError("point does not belong to the given space")
    kind = space.kind
    if kind in ("half-line", "full-line"):
        return abs(x.x)
    if kind == "rn":
        return float(np.linalg.norm(x.coords))
    if space.sphere_mode == "rotinv":
        return math.pi / 2.0
    return geodesic(x.coords, sphere_origin(space).coords)


# ---------------------------------------------------------------------------
# CLI literals
#
#   half-line:1.5    full-line:-2    rn:1,2,2
#   sphere2:theta,phi@pinned   sphere2:theta,phi@rotinv   sphere1:theta@rotinv
#
# Sphere points are given by angles: colatitude theta (from the north pole,
# which is the pinned origin) and, for S^2, azimuth phi.
# ---------------------------------------------------------------------------


def parse_space(text: str) -> Space:
    """Parse a space descriptor such as ``half-line`` or ``sphere2@rotinv``."""
    text = text.strip()
    if text in ("half-line", "full-line"):
        return Space(text, 1)
    if text.startswith("rn"):
        if text == "rn":
            raise ValueError("rn needs a dimension, e.g. rn2")
        try:
            dim = int(text[2:])
        except ValueError:
            raise ValueError(f"bad Euclidean space spec {text!r}") from None
        return euclidean(dim)
    if text.startswith("sphere"):
        body = text[len("sphere"):]
        mode = "pinned"
        if "@" in body:
            body, mode = body.split("@", 1)
        try:
            dim = int(body)
        except ValueError:
            raise ValueError(f"bad sphere spec {text!r}") from None
        return sphere(dim, mode)
    raise ValueError(f"unknown space {text!r}")


def angles_to_unit(angles: np.ndarray) -> np.ndarray:
    """Spherical angles (colatitudes..., azimuth) to a unit vector.

    For S^1 a single angle theta maps to (sin theta, cos theta); for S^2,
    (theta, phi) maps to (sin t cos p, sin t sin p, cos t).  The north pole
    (last coordinate 1) is theta = 0.
    """
    if angles.size == 1:
        t = float(angles[0])
        return np.array([math.sin(t), math.cos(t)])
    if angles.size == 2:
        t, p = float(angles[0]), float(angles[1])
        return np.array(
            [math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t)]
        )
    raise ValueError("only S^1 and S^2 angle parsing is supported")


def parse_point(space: Space, text: str) -> SpacePoint:
    """Parse point coordinates for ``space`` from a CLI literal.

    Accepts either bare coordinates (``1.5``, ``1,2,2``, ``theta,phi``) or a
    fully qualified literal like ``half-line:1.5`` or
    ``sphere2:0.3,0.4@pinned`` whose declared space must match ``space``.
    """
    text = text.strip()
    if ":" in text and not _looks_numeric(text.split(",")[0]):
        prefix, payload = text.split(":", 1)
        if "@" in payload:
            payload, mode = payload.rsplit("@", 1)
            prefix = f"{prefix}@{mode}"
        declared = parse_space(prefix)
        if declared != space:
            raise ValueError(
                f"point literal {text!r} declares space {declared}, expected {space}"
            )
        text = payload
    try:
        vals = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise ValueError(f"bad point literal {text!r}") from None
    if space.kind == "sphere":
        if vals.size == space.dimension:
            vals = angles_to_unit(vals)
        elif vals.size != space.dimension + 1:
            raise ValueError(
                f"sphere point needs {space.dimension} angles or "
                f"{space.dimension + 1} embedding coordinates"
            )
    return SpacePoint(space, vals)


def _looks_numeric(tok: str) -> bool:
    try:
        float(tok.split(":")[0])
        return True
    except ValueError:
        return False
