"""Masses, surface masses and Cheeger-type ratios for candidate sets.

The catalogued candidate families are the slab in the shadow of a cube
obstacle, the spherical-cap slab next to a ball obstacle, the notch boxes of
the planar trap, and plain halfspaces.  Surface measure follows the
relative-boundary convention: pieces of a set boundary glued to the obstacle
boundary do not count, which the closed forms below implement and the
finite-enlargement quotients confirm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import ncx2

from .geometry import Ball, Hypercube, Shell, Trap
from .reporting import BoundReport, LOWER
from .special_functions import gaussian_tail

__all__ = [
    "SquareShadow",
    "Cap",
    "NotchBox",
    "Halfspace",
    "set_mass",
    "surface_mass",
    "surface_mass_enlargement",
    "cheeger_ratio",
    "trap_lower_bound",
    "cap_lower_scan",
    "CapScanResult",
    "cheeger_to_poincare",
    "shadow_ratio_floor",
]

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SquareShadow:
    """{x1 >= a + r, |x_i| <= u for i >= 2} behind a cube at (a, 0, ..., 0)."""
    a: float
    r: float
    u: float

    def __post_init__(self):
        if not 0 < self.u <= self.r:
            raise ValueError("shadow half-width must satisfy 0 < u <= r")


@dataclass(frozen=True)
class Cap:
    """{x1 >= a, |x_perp| <= u} next to a ball of radius r at (a, 0, ..., 0)."""
    a: float
    r: float
    u: float

    def __post_init__(self):
        if not 0 < self.u <= self.r:
            raise ValueError("cap needs 0 < u <= r")


@dataclass(frozen=True)
class NotchBox:
    """{0 <= x1 - y <= depth, |x2| <= alpha/2} inside the trap notch."""
    y: float
    alpha: float
    depth: float

    def __post_init__(self):
        if not 0 < self.depth <= self.alpha:
            raise ValueError("notch depth must lie in (0, alpha]")


@dataclass(frozen=True)
class Halfspace:
    """{x1 >= t} in the unobstructed Gaussian."""
    t: float


def _g1(lo, hi, lam):
    """Integral of exp(-lam t^2) over [lo, hi]."""
    s = math.sqrt(lam)
    if math.isinf(hi):
        return gaussian_tail(lo * s) / s
    return gaussian_tail(lo * s, hi * s) / s


def domain_normalizer(spec):
    """Integral of exp(-lam |x|^2) over the punctured domain."""
    lam, d, ob = spec.lam, spec.d, spec.obstacle
    full = (math.pi / lam) ** (d / 2.0)
    if ob is None:
        return full
    if isinstance(ob, Ball):
        nc = 2.0 * lam * float(np.sum(np.asarray(ob.center) ** 2))
        return full * float(ncx2.sf(2.0 * lam * ob.r ** 2, d, nc))
    if isinstance(ob, Shell):
        nc = 2.0 * lam * float(np.sum(np.asarray(ob.center) ** 2))
        inner = float(ncx2.sf(2.0 * lam * ob.r ** 2, d, nc))
        outer = float(ncx2.sf(2.0 * lam * ob.R ** 2, d, nc))
        return full * (inner - outer)
    if isinstance(ob, Hypercube):
        cube = 1.0
        for ci in ob.center:
            cube *= _g1(ci - ob.r, ci + ob.r, lam)
        return full - cube
    if isinstance(ob, Trap):
        y, a = ob.y, ob.alpha
        wall = _g1(y - a, y, lam) * _g1(-a, a, lam)
        arms = _g1(y, y + a, lam) * 2.0 * _g1(a / 2.0, a, lam)
        return full - wall - arms
    raise ValueError(f"unknown obstacle {type(ob)!r}")


def _sphere_area(k):
    """Surface measure of the unit sphere S^k."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def _require(spec, cset):
    ob = spec.obstacle
    if isinstance(cset, SquareShadow) and not isinstance(ob, Hypercube):
        raise ValueError("square shadow needs a hypercube obstacle")
    if isinstance(cset, Cap) and not isinstance(ob, Ball):
        raise ValueError("cap needs a ball obstacle")
    if isinstance(cset, NotchBox) and not isinstance(ob, Trap):
        raise ValueError("notch box needs a trap obstacle")
    if isinstance(cset, Halfspace) and ob is not None:
        raise ValueError("halfspace sets are catalogued for the free Gaussian")


def set_mass(spec, cset):
    """Restricted-Gaussian probability of the candidate set."""
    _require(spec, cset)
    lam, d = spec.lam, spec.d
    Z = domain_normalizer(spec)
    if isinstance(cset, Halfspace):
        return _g1(cset.t, math.inf, lam) * (math.pi / lam) ** ((d - 1) / 2.0) / Z
    if isinstance(cset, SquareShadow):
        return (_g1(cset.a + cset.r, math.inf, lam)
                * _g1(-cset.u, cset.u, lam) ** (d - 1)) / Z
    if isinstance(cset, NotchBox):
        a = cset.alpha
        return (_g1(cset.y, cset.y + cset.depth, lam)
                * _g1(-a / 2.0, a / 2.0, lam)) / Z
    if isinstance(cset, Cap):
        a, r, u = cset.a, cset.r, cset.u

        def integrand(s):
            return (s ** (d - 2) * math.exp(-lam * s * s)
                    * _g1(a + math.sqrt(max(r * r - s * s, 0.0)), math.inf, lam))

        val, _ = integrate.quad(integrand, 0.0, u, epsabs=1e-14, epsrel=1e-11,
                                limit=200)
        return _sphere_area(d - 2) * val / Z
    raise ValueError(f"unknown candidate set {type(cset)!r}")


def surface_mass(spec, cset):
    """Surface measure of the set boundary inside the domain (closed forms)."""
    _require(spec, cset)
    lam, d = spec.lam, spec.d
    Z = domain_normalizer(spec)
    if isinstance(cset, Halfspace):
        return math.exp(-lam * cset.t ** 2) * (math.pi / lam) ** ((d - 1) / 2.0) / Z
    if isinstance(cset, SquareShadow):
        # 2(d-1) flat faces at |x_i| = u; the face on the cube wall is glued
        return (2.0 * (d - 1) * math.exp(-lam * cset.u ** 2)
                * _g1(cset.a + cset.r, math.inf, lam)
                * _g1(-cset.u, cset.u, lam) ** (d - 2)) / Z
    if isinstance(cset, NotchBox):
        # only the lid at x1 = y + depth lies in the domain
        a = cset.alpha
        lid = cset.y + cset.depth
        return math.exp(-lam * lid * lid) * _g1(-a / 2.0, a / 2.0, lam) / Z
    if isinstance(cset, Cap):
        a, r, u = cset.a, cset.r, cset.u
        x_min = a + math.sqrt(max(r * r - u * u, 0.0))
        return (_sphere_area(d - 2) * u ** (d - 2) * math.exp(-lam * u * u)
                * _g1(x_min, math.inf, lam)) / Z
    raise ValueError(f"unknown candidate set {type(cset)!r}")


def surface_mass_enlargement(spec, cset, h=1e-4):
    """Finite-enlargement quotient (mass(A_h) - mass(A))/h; cross-checks the
    closed forms to first order in h."""
    _require(spec, cset)
    if isinstance(cset, Halfspace):
        grown = Halfspace(cset.t - h)
    elif isinstance(cset, SquareShadow):
        # the widened slab stays in the domain even past u = r, since the
        # whole slab already clears the cube in the first coordinate
        lam, d = spec.lam, spec.d
        Z = domain_normalizer(spec)
        grown_mass = (_g1(cset.a + cset.r, math.inf, lam)
                      * _g1(-(cset.u + h), cset.u + h, lam) ** (d - 1)) / Z
        return (grown_mass - set_mass(spec, cset)) / h
    elif isinstance(cset, NotchBox):
        grown = NotchBox(cset.y, cset.alpha, min(cset.depth + h, cset.alpha))
    elif isinstance(cset, Cap):
        grown = Cap(cset.a, cset.r, min(cset.u + h, cset.r))
    else:
        raise ValueError(f"unknown candidate set {type(cset)!r}")
    return (set_mass(spec, grown) - set_mass(spec, cset)) / h


def cheeger_ratio(spec, cset):
    """mass / surface-mass, evaluated on the complement when the set holds
    more than half of the measure (a warning flags the convention switch)."""
    m = set_mass(spec, cset)
    s = surface_mass(spec, cset)
    if m > 0.5:
        warnings.warn("set mass exceeds 1/2; evaluating the complement ratio")
        m = 1.0 - m
    if s == 0.0:
        return math.inf
    return m / s


def shadow_ratio_floor(lam, r, d=2):
    """Closed-form floor for the shadow-slab ratio at full width u = r:

        (1 / (2 (d-1) sqrt(lam))) e^{lam r^2} (1 - e^{-lam r^2}/(r sqrt(lam))),

    meaningful for r sqrt(lam) >= 1."""
    rt = r * math.sqrt(lam)
    return (math.exp(rt * rt) * (1.0 - math.exp(-rt * rt) / rt)
            / (2.0 * (d - 1) * math.sqrt(lam)))


# --------------------------------------------------------------------------
# trap lower bound
# --------------------------------------------------------------------------

def trap_lower_bound(y, alpha):
    """Two-set variational lower bound for the planar trap at unit stiffness.

    With A and B the half-depth and full-depth notch boxes and f the
    2/alpha-Lipschitz interpolation between their indicators,

        C_P >= Var(f)/E(f) >= (alpha^2/8) mu(A) / (mu(B) - mu(A))

    once mu(B)^2 <= mu(A)/2 (checked numerically, not assumed).  The mass
    ratio itself dominates the closed chain
    (2y^2/(1+2y^2)) e^{alpha(y+alpha/4)} (1-e^{-alpha(y+alpha/4)}) /
    (1-e^{-alpha(y+3alpha/4)}), so the bound explodes like e^{alpha y}.
    """
    from .geometry import DomainSpec
    spec = DomainSpec(2, 1.0, Trap(y, alpha))
    A = NotchBox(y, alpha, alpha / 2.0)
    B = NotchBox(y, alpha, alpha)
    mu_a = set_mass(spec, A)
    mu_b = set_mass(spec, B)
    var_ok = bool(mu_b * mu_b <= mu_a / 2.0) and mu_b > mu_a
    # "alpha y large enough" gate: the exponential separation of the two
    # depth integrals must be a real factor (at least 2) for the chain to
    # carry any content
    deep_ok = alpha * (y + alpha / 4.0) >= math.log(2.0)
    ok = var_ok and deep_ok
    ratio = mu_a / (mu_b - mu_a) if mu_b > mu_a else math.inf
    chain = (2.0 * y * y / (1.0 + 2.0 * y * y)
             * math.exp(alpha * (y + alpha / 4.0))
             * (-math.expm1(-alpha * (y + alpha / 4.0)))
             / (-math.expm1(-alpha * (y + 3.0 * alpha / 4.0))))
    value = alpha * alpha / 8.0 * ratio
    return BoundReport(
        side=LOWER, value=value if ok else math.inf, applicable=ok,
        condition=f"mu(A)={mu_a:.6g}, mu(B)={mu_b:.6g}, variance floor "
                  f"mu(B)^2 <= mu(A)/2: {var_ok}; depth gate "
                  f"alpha(y+alpha/4) >= ln 2: {deep_ok}; "
                  f"mass ratio {ratio:.6g} >= chain {chain:.6g}",
        anchor="trap two-set lower", explicit=True)


# --------------------------------------------------------------------------
# spherical-cap scan
# --------------------------------------------------------------------------

@dataclass
class CapScanResult:
    best: BoundReport
    envelope: BoundReport
    rows: list  # (u, eps, value)


def _cap_chain_value(a, r, u, eps, d):
    """Explicit cap lower-bound expression at unit stiffness; None when the
    derivation's side conditions fail."""
    if not (0.0 < 2.0 * eps < u <= r):
        return None
    s0 = math.sqrt(r * r - u * u)
    s1 = math.sqrt(r * r - (u - eps) ** 2)
    s2 = math.sqrt(r * r - (u - 2.0 * eps) ** 2)
    if a + s0 < 1.0:
        return None
    x_num = 2.0 * a * eps * (2.0 * u - 3.0 * eps) / (s1 + s2)
    x_den = 2.0 * a * eps * (2.0 * u - eps) / (s1 + s0)
    if x_den > 700.0:
        log_h = math.log(-math.expm1(-x_num)) - x_den - math.log1p(-math.exp(-x_den))
        h = math.exp(log_h)
    else:
        h = (-math.expm1(-x_num)) / math.expm1(x_den)
    pref = ((a + s0) * (a + s1) / (1.0 + 2.0 * (a + s2) ** 2)
            * ((u - eps) / u) ** (d - 2))
    return eps * eps * pref * h


def cap_lower_scan(lam, d, a, r, n_u=16, n_eps=12, ratio_cap=8.0,
                   constants=None):
    """Scan the cap parameters (u, eps) of order sqrt(r/|y|) and return the
    best explicit lower bound found, together with the non-explicit
    dimensional envelope (C_d/lam)(1 + r sqrt(lam)/(|y| sqrt(lam) v 1)).

    Restricted to a/r <= ``ratio_cap``: far obstacles make the comparison
    factor collapse and the scan returns nothing useful there.
    """
    from .bounds import DEFAULT_CONSTANTS
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    s = math.sqrt(lam)
    at, rt = abs(a) * s, r * s
    envelope = BoundReport(
        side=LOWER, value=cst["C_d"] * (1.0 + rt / max(at, 1.0)) / lam,
        applicable=True,
        condition="ball obstacle, any position (free constant C_d)",
        anchor="spherical-cap scan envelope lower", explicit=False,
        free_constant="C_d", constant_value=cst["C_d"])
    rows = []
    best_val, best_ue = -math.inf, None
    if at > 0 and at / rt <= ratio_cap:
        scale = math.sqrt(rt / at)
        for fu in np.linspace(0.4, 3.0, n_u):
            u = min(fu * scale, rt)
            for fe in np.linspace(0.05, 0.49, n_eps):
                eps = fe * u
                val = _cap_chain_value(at, rt, u, eps, d)
                if val is None:
                    continue
                rows.append((u, eps, val / lam))
                if val > best_val:
                    best_val, best_ue = val, (u, eps)
    if best_ue is None:
        best = BoundReport(
            side=LOWER, value=math.inf, applicable=False,
            condition=f"empty scan range (|y|/r = {at / rt if rt else math.inf:.4g} "
                      f"vs cap {ratio_cap})",
            anchor="spherical-cap scan lower", explicit=True)
    else:
        best = BoundReport(
            side=LOWER, value=best_val / lam, applicable=True,
            condition=f"best over the (u, eps) grid at u={best_ue[0]:.4g}, "
                      f"eps={best_ue[1]:.4g} (unit-stiffness lengths)",
            anchor="spherical-cap scan lower", explicit=True)
    return CapScanResult(best, envelope, rows)


def cheeger_to_poincare(c_c, source="profile_upper"):
    """Poincare upper bound 4 c_c^2 from a Cheeger-constant upper bound.

    Single-set ratios are evidence about the profile from below only; passing
    source="single_set" emits a semantics warning and the number must not be
    read as a certified upper bound.
    """
    if source == "single_set":
        warnings.warn("a single-set ratio bounds the Cheeger constant from "
                      "below; 4 c^2 is not a certified upper bound")
    return 4.0 * c_c * c_c
