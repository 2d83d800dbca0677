"""Punctured domains D = R^d minus a single hard obstacle.

The supported obstacles are an open Euclidean ball, an open axis-aligned
hypercube (the l-infinity ball), a two-piece non-convex "trap" in the plane,
and the complement of a closed annulus ("shell": here the *domain* is the
annulus and everything outside it is excluded).

Conventions:

* the domain is closed: boundary points belong to D;
* ``signed_distance`` is positive outside the obstacle (inside D), zero on
  the obstacle boundary and negative inside the obstacle;
* normals point *into* D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "Ball",
    "Hypercube",
    "Shell",
    "Trap",
    "DomainSpec",
    "GeometryError",
    "ProjectionError",
    "contains",
    "signed_distance",
    "project_to_domain",
    "inward_normal",
    "rescale_to_unit_lambda",
    "rescale",
]


class GeometryError(ValueError):
    """Invalid geometric input (dimension mismatch, off-boundary normal, ...)."""


class ProjectionError(GeometryError):
    """The nearest-point projection is not unique (e.g. the ball center)."""


# --------------------------------------------------------------------------
# obstacle variants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    """Excluded open Euclidean ball of radius ``r`` around ``center``."""

    center: tuple
    r: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.r > 0:
            raise GeometryError(f"ball radius must be positive, got {self.r}")

    @property
    def dim(self):
        return len(self.center)

    @property
    def outer_radius(self):
        return self.r


@dataclass(frozen=True)
class Hypercube:
    """Excluded open axis-aligned cube of half-width ``r`` around ``center``."""

    center: tuple
    r: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.r > 0:
            raise GeometryError(f"hypercube half-width must be positive, got {self.r}")

    @property
    def dim(self):
        return len(self.center)

    @property
    def outer_radius(self):
        # circumscribed ball
        return self.r * math.sqrt(len(self.center))


@dataclass(frozen=True)
class Shell:
    """Domain restricted to the closed annulus ``r <= |x - center| <= R``.

    The excluded region is the complement of the annulus, so this variant
    models a process confined between two concentric spheres.
    """

    center: tuple
    r: float
    R: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.r > 0:
            raise GeometryError(f"shell inner radius must be positive, got {self.r}")
        if not self.R > self.r:
            raise GeometryError(f"shell needs R > r, got r={self.r}, R={self.R}")

    @property
    def dim(self):
        return len(self.center)

    @property
    def outer_radius(self):
        return self.R


@dataclass(frozen=True)
class Trap:
    """Planar non-convex trap around the point ``(y, 0)`` with arm width ``alpha``.

    The excluded set is the union of a back wall and two arms,

        {0 <= y - x1 <= alpha, |x2| <= alpha}
        union {0 <= x1 - y <= alpha, alpha/2 <= |x2| <= alpha},

    leaving an open notch {y < x1, |x2| < alpha/2} that belongs to the domain.
    """

    y: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not self.alpha > 0:
            raise GeometryError(f"trap arm width must be positive, got {self.alpha}")

    @property
    def dim(self):
        return 2

    @property
    def center(self):
        return (self.y, 0.0)

    @property
    def outer_radius(self):
        return self.alpha * math.sqrt(2.0)

    def rectangles(self):
        """The three closed axis-aligned rectangles whose union is the trap."""
        y, a = self.y, self.alpha
        return (
            ((y - a, y), (-a, a)),          # back wall
            ((y, y + a), (a / 2, a)),       # upper arm
            ((y, y + a), (-a, -a / 2)),     # lower arm
        )


Obstacle = Ball | Hypercube | Shell | Trap


@dataclass(frozen=True)
class DomainSpec:
    """Problem instance: dimension, Gaussian stiffness and obstacle.

    The invariant measure is proportional to exp(-lam |x|^2) restricted to the
    punctured domain.  ``obstacle`` may be None for the full Gaussian.
    """

    d: int
    lam: float
    obstacle: Obstacle | None = None

    def __post_init__(self):
        if self.d < 2:
            raise GeometryError(f"dimension must be >= 2, got {self.d}")
        if not self.lam > 0:
            raise GeometryError(f"stiffness lam must be positive, got {self.lam}")
        if self.obstacle is not None and self.obstacle.dim != self.d:
            raise GeometryError(
                f"obstacle dimension {self.obstacle.dim} != spec dimension {self.d}"
            )


def _check_point(obstacle, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != obstacle.dim:
        raise GeometryError(
            f"point dimension {x.shape[-1]} != obstacle dimension {obstacle.dim}"
        )
    return x


# --------------------------------------------------------------------------
# signed distance (positive in D, negative inside the obstacle)
# --------------------------------------------------------------------------

def _rect_sdist(x, xlim, ylim):
    # standard box SDF, negative inside; vectorized over leading axes
    cx = 0.5 * (xlim[0] + xlim[1])
    cy = 0.5 * (ylim[0] + ylim[1])
    hx = 0.5 * (xlim[1] - xlim[0])
    hy = 0.5 * (ylim[1] - ylim[0])
    q = np.stack([np.abs(x[..., 0] - cx) - hx, np.abs(x[..., 1] - cy) - hy], axis=-1)
    outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
    inside = np.minimum(np.max(q, axis=-1), 0.0)
    return outside + inside


def signed_distance(obstacle, x):
    """Signed Euclidean distance to the obstacle boundary.

    Exact for ball, hypercube and shell.  For the trap it is the minimum of
    the three constituent rectangle distances, which is exact outside the trap
    and carries the correct (negative) sign inside.
    """
    x = _check_point(obstacle, x)
    if isinstance(obstacle, Ball):
        return np.linalg.norm(x - np.asarray(obstacle.center), axis=-1) - obstacle.r
    if isinstance(obstacle, Hypercube):
        q = np.abs(x - np.asarray(obstacle.center)) - obstacle.r
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside
    if isinstance(obstacle, Shell):
        rho = np.linalg.norm(x - np.asarray(obstacle.center), axis=-1)
        # positive inside the annulus (the domain), negative outside it
        return np.minimum(rho - obstacle.r, obstacle.R - rho)
    if isinstance(obstacle, Trap):
        sd = None
        for xlim, ylim in obstacle.rectangles():
            s = _rect_sdist(x, xlim, ylim)
            sd = s if sd is None else np.minimum(sd, s)
        return sd
    raise GeometryError(f"unknown obstacle type {type(obstacle)!r}")


def contains(spec, x):
    """True iff ``x`` lies in the closed domain (boundary points included)."""
    if spec.obstacle is None:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != spec.d:
            raise GeometryError(f"point dimension {x.shape[-1]} != spec dimension {spec.d}")
        if not np.all(np.isfinite(x)):
            raise GeometryError("point must be finite")
        return np.broadcast_to(True, x.shape[:-1])[()] if x.ndim > 1 else True
    x = _check_point(spec.obstacle, x)
    if not np.all(np.isfinite(x)):
        raise GeometryError("point must be finite")
    ob = spec.obstacle
    if isinstance(ob, Trap):
        return _trap_contains(ob, x)
    return signed_distance(ob, x) >= 0


def _trap_contains(trap, x):
    """Membership in closure(D) for the trap: the complement of int(trap union).

    The interior of the union is the union of the three open rectangles plus
    the two open segments where the back wall meets the arms (x1 = y,
    alpha/2 < |x2| < alpha).
    """
    y, a = trap.y, trap.alpha
    x1, x2 = x[..., 0], x[..., 1]
    in_wall = (y - a < x1) & (x1 < y) & (np.abs(x2) < a)
    in_arm = (y < x1) & (x1 < y + a) & (a / 2 < np.abs(x2)) & (np.abs(x2) < a)
    on_seam = (x1 == y) & (a / 2 < np.abs(x2)) & (np.abs(x2) < a)
    return ~(in_wall | in_arm | on_seam)


# --------------------------------------------------------------------------
# projection onto the closed domain
# --------------------------------------------------------------------------

def _trap_boundary_segments(trap):
    """Axis-aligned segments forming the boundary of the trap union.

    Each entry is (axis, level, lo, hi): the segment {x_axis = level,
    lo <= x_other <= hi}.
    """
    y, a = trap.y, trap.alpha
    return [
        (0, y - a, -a, a),            # left face of back wall
        (1, a, y - a, y + a),         # merged top face
        (1, -a, y - a, y + a),        # merged bottom face
        (0, y + a, a / 2, a),         # right face of upper arm
        (0, y + a, -a, -a / 2),       # right face of lower arm
        (1, a / 2, y, y + a),         # inner wall of upper arm (notch side)
        (1, -a / 2, y, y + a),        # inner wall of lower arm (notch side)
        (0, y, -a / 2, a / 2),        # back of the notch
    ]


def project_to_domain(obstacle, x):
    """Nearest point of the closed domain; identity if ``x`` already belongs.

    Raises ProjectionError when the nearest point is not unique (the exact
    center of a ball, or the center of a shell).
    """
    x = np.asarray(_check_point(obstacle, x), dtype=float)
    if isinstance(obstacle, Ball):
        c = np.asarray(obstacle.center)
        v = x - c
        rho = float(np.linalg.norm(v))
        if rho >= obstacle.r:
            return x
        if rho == 0.0:
            raise ProjectionError("ball center is equidistant from the whole sphere")
        return c + v * (obstacle.r / rho)
    if isinstance(obstacle, Hypercube):
        c = np.asarray(obstacle.center)
        q = np.abs(x - c) - obstacle.r
        if np.max(q) >= 0:
            return x
        # push out through the closest face; ties break toward the highest axis
        i = int(np.flatnonzero(q == np.max(q))[-1])
        out = x.copy()
        out[i] = c[i] + math.copysign(obstacle.r, x[i] - c[i]) if x[i] != c[i] \
            else c[i] + obstacle.r
        return out
    if isinstance(obstacle, Shell):
        c = np.asarray(obstacle.center)
        v = x - c
        rho = float(np.linalg.norm(v))
        if obstacle.r <= rho <= obstacle.R:
            return x
        if rho == 0.0:
            raise ProjectionError("shell center is equidistant from the inner sphere")
        target = obstacle.r if rho < obstacle.r else obstacle.R
        return c + v * (target / rho)
    if isinstance(obstacle, Trap):
        if _trap_contains(obstacle, x):
            return x
        best, best_d2 = None, np.inf
        for axis, level, lo, hi in _trap_boundary_segments(obstacle):
            p = x.copy()
            p[axis] = level
            p[1 - axis] = min(max(p[1 - axis], lo), hi)
            d2 = float(np.sum((p - x) ** 2))
            if d2 < best_d2:
                best, best_d2 = p, d2
        return best
    raise GeometryError(f"unknown obstacle type {type(obstacle)!r}")


# --------------------------------------------------------------------------
# inward normals
# --------------------------------------------------------------------------

def default_boundary_tol(obstacle):
    """Boundary tolerance scaled to the obstacle size."""
    return 1e-9 * max(1.0, obstacle.outer_radius,
                      float(np.max(np.abs(obstacle.center))))


def inward_normal(obstacle, x, tol=None):
    """Unit normal at a boundary point, pointing into the domain.

    Hypercube edges and corners return the normalized sum of the adjacent
    face normals.  Raises GeometryError when ``x`` is not on the boundary
    within ``tol``.
    """
    x = np.asarray(_check_point(obstacle, x), dtype=float)
    if tol is None:
        tol = default_boundary_tol(obstacle)
    sd = float(signed_distance(obstacle, x))
    if abs(sd) > tol:
        raise GeometryError(f"point is not on the boundary: signed distance {sd}")
    if isinstance(obstacle, Ball):
        v = x - np.asarray(obstacle.center)
        return v / np.linalg.norm(v)
    if isinstance(obstacle, Hypercube):
        c = np.asarray(obstacle.center)
        q = np.abs(x - c) - obstacle.r
        on_face = q >= -tol
        n = np.zeros_like(x)
        n[on_face] = np.sign(x[on_face] - c[on_face])
        # a boundary point lies on at least one face, but guard against
        # sign(0) on a face crossing the center plane
        if not np.any(n):
            raise GeometryError("degenerate hypercube boundary point")
        return n / np.linalg.norm(n)
    if isinstance(obstacle, Shell):
        v = x - np.asarray(obstacle.center)
        rho = float(np.linalg.norm(v))
        if abs(rho - obstacle.r) <= abs(obstacle.R - rho):
            return v / rho          # inner wall: outward from center
        return -v / rho             # outer wall: toward center
    if isinstance(obstacle, Trap):
        # accumulate face normals over all boundary segments within tol
        n = np.zeros(2)
        for axis, level, lo, hi in _trap_boundary_segments(obstacle):
            p = x.copy()
            p[axis] = level
            p[1 - axis] = min(max(p[1 - axis], lo), hi)
            if np.linalg.norm(p - x) <= tol:
                probe = x.copy()
                probe[axis] = level
                step = np.zeros(2)
                step[axis] = 2 * tol + 1e-12
                # orient toward the domain side
                if _trap_contains(obstacle, probe + step):
                    n[axis] += 1.0
                elif _trap_contains(obstacle, probe - step):
                    n[axis] -= 1.0
        norm = np.linalg.norm(n)
        if norm == 0:
            raise GeometryError("could not orient trap boundary normal")
        return n / norm
    raise GeometryError(f"unknown obstacle type {type(obstacle)!r}")


# --------------------------------------------------------------------------
# homogeneity rescaling
# --------------------------------------------------------------------------

def rescale(obstacle, factor):
    """Scale all lengths of an obstacle by ``factor``."""
    if obstacle is None:
        return None
    if isinstance(obstacle, Ball):
        return Ball(tuple(c * factor for c in obstacle.center), obstacle.r * factor)
    if isinstance(obstacle, Hypercube):
        return Hypercube(tuple(c * factor for c in obstacle.center), obstacle.r * factor)
    if isinstance(obstacle, Shell):
        return Shell(tuple(c * factor for c in obstacle.center),
                     obstacle.r * factor, obstacle.R * factor)
    if isinstance(obstacle, Trap):
        return Trap(obstacle.y * factor, obstacle.alpha * factor)
    raise GeometryError(f"unknown obstacle type {type(obstacle)!r}")


def rescale_to_unit_lambda(spec):
    """Equivalent problem with unit stiffness.

    Lengths scale by sqrt(lam); the Poincare constant of the input equals
    1/lam times that of the output.
    """
    if spec.lam == 1.0:
        return spec
    s = math.sqrt(spec.lam)
    return replace(spec, lam=1.0, obstacle=rescale(spec.obstacle, s))
