"""Closed-form bounds on the Poincare constant of the restricted Gaussian.

Every evaluator states its validity condition, whether its constant is pinned
down ("explicit") or a named universal constant left free (reported with a
user-suppliable value, default 1, and excluded from the certified envelope),
and which side it bounds.

All bounds are evaluated internally at unit stiffness on the rescaled
geometry (lengths multiplied by sqrt(lam)) and divided by lam afterwards, so
the scaling identity

    bound(lam, y, r) = bound(1, y sqrt(lam), r sqrt(lam)) / lam

holds to the last floating-point digit by construction.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Ball, Hypercube, Shell, Trap
from .reporting import (BoundReport, BoundCatalogue, LOWER, UPPER,
                        Q_CONJECTURE, Q_EXIT_RATE, Q_POINCARE, Q_SHELL)
from .special_functions import (exit_moment_threshold, ThresholdNotFoundError,
                                log_radial_gaussian_mass, xi_second_moment,
                                gaussian_tail)

__all__ = [
    "centered_bounds",
    "perturbation_upper",
    "small_displacement_upper",
    "decomposition_upper",
    "lyapunov_small_radius_upper",
    "far_or_small_upper",
    "verify_local_lyapunov",
    "hitting_lower",
    "square_obstacle_bounds",
    "isoperimetric_lower_reports",
    "shell_and_2d_reports",
    "radial_test_function_lower",
    "aggregate",
    "DEFAULT_CONSTANTS",
]

# names of the universal constants that no catalogued derivation pins down
DEFAULT_CONSTANTS = {
    "c": 1.0, "C": 1.0, "c_d": 1.0, "C_d": 1.0, "c(d)": 1.0,
    "c_small": 1.0, "C_small": 1.0, "c_big": 1.0, "C_big": 1.0,
    "C_plus": 1.0,
}


def _unit(lam, y, r):
    s = math.sqrt(lam)
    return abs(y) * s, r * s


def _exp_or_inf(x):
    return math.inf if x > 709.0 else math.exp(x)


# --------------------------------------------------------------------------
# centered ball
# --------------------------------------------------------------------------

def centered_bounds(lam, d, r):
    """Two-sided sandwich for a ball centered at the origin.

    Returns (lower, upper, upper_safe): max(1/(2 lam), r^2/d) from below,
    1/lam + r^2/d from above, and the defensive variant 1/lam + r^2/(d-1)
    whose last factor matches the sphere gap 1/(d-1) reached as the radius
    grows.  Both variants are reported; only the safe one takes part in
    planar sandwich assertions.
    """
    _, rt = _unit(lam, 0.0, r)
    lower = BoundReport(
        side=LOWER, value=max(0.5, rt * rt / d) / lam, applicable=True,
        condition="obstacle centered at the origin",
        anchor="centered sandwich lower", explicit=True)
    upper = BoundReport(
        side=UPPER, value=(1.0 + rt * rt / d) / lam, applicable=True,
        condition="obstacle centered at the origin",
        anchor="centered sandwich upper (1/d form)", explicit=True)
    upper_safe = BoundReport(
        side=UPPER, value=(1.0 + rt * rt / (d - 1)) / lam, applicable=True,
        condition="obstacle centered at the origin; sphere-limit-safe factor",
        anchor="centered sandwich upper (1/(d-1) form)", explicit=True)
    return lower, upper, upper_safe


def radial_test_function_lower(lam, d, r, R=None):
    """Lower bound E(xi^2)/d from the coordinate-sum test function.

    Valid for any rotation-invariant domain (centered ball, centered shell):
    the variance of sum_j x_j equals the radial second moment and its energy
    is d.  Dominates both terms of the centered sandwich lower bound.
    """
    _, rt = _unit(lam, 0.0, r)
    if R is None:
        second = xi_second_moment(d, 1.0, rt)
    else:
        Rt = R * math.sqrt(lam)
        log_a = _log_diff(log_radial_gaussian_mass(d, 1.0, rt),
                          log_radial_gaussian_mass(d, 1.0, Rt))
        num = (math.exp(d * math.log(rt) - rt * rt - log_a) if rt > 0 else 0.0) \
            - math.exp(d * math.log(Rt) - Rt * Rt - log_a)
        second = d / 2.0 + num / 2.0
    return BoundReport(
        side=LOWER, value=second / d / lam, applicable=True,
        condition="rotation-invariant domain; coordinate-sum test function",
        anchor="radial test-function lower", explicit=True)


def _log_diff(la, lb):
    # log(e^la - e^lb) for la > lb
    return la + math.log1p(-math.exp(lb - la))


def centered_shell_upper(lam, d, r, R):
    """Radial/spherical split upper bound for a centered shell domain:
    1/(2 lam) + E(xi^2)/d with the exact truncated radial second moment."""
    _, rt = _unit(lam, 0.0, r)
    Rt = R * math.sqrt(lam)
    log_a = _log_diff(log_radial_gaussian_mass(d, 1.0, rt),
                      log_radial_gaussian_mass(d, 1.0, Rt))
    num = (math.exp(d * math.log(rt) - rt * rt - log_a) if rt > 0 else 0.0) \
        - math.exp(d * math.log(Rt) - Rt * Rt - log_a)
    second = d / 2.0 + num / 2.0
    return BoundReport(
        side=UPPER, value=(0.5 + second / d) / lam, applicable=True,
        condition="shell centered at the origin; log-concave radial law",
        anchor="centered shell upper (radial-spherical split)", explicit=True,
        quantity=Q_POINCARE)


# --------------------------------------------------------------------------
# general position: perturbation and small displacement
# --------------------------------------------------------------------------

def perturbation_upper(lam, d, y, r):
    """Position-dependent upper bound from a log-bounded change of measure.

    Value (2/lam) (2 + 3 (1 + r^2 lam / d) e^{4 sqrt(lam)|y| (1 + (|y| sqrt(lam)
    + sqrt(d)) v r sqrt(lam))}); always valid for a ball obstacle, explicit,
    but exponentially bad for distant obstacles.  Overflow is reported as an
    infinite (valid, useless) bound.
    """
    yt, rt = _unit(lam, y, r)
    expo = 4.0 * yt * (1.0 + max(yt + math.sqrt(d), rt))
    value = 2.0 * (2.0 + 3.0 * (1.0 + rt * rt / d) * _exp_or_inf(expo)) / lam
    return BoundReport(
        side=UPPER, value=value, applicable=True,
        condition="ball obstacle, any position",
        anchor="translation-perturbation upper", explicit=True)


def small_displacement_upper(lam, d, y, r):
    """Upper bound 4 (1/lam + r^2/d) under 4 lam |y|^2 (1 + r^2 lam/d) <= 1."""
    yt, rt = _unit(lam, y, r)
    cond = 4.0 * yt * yt * (1.0 + rt * rt / d)
    ok = cond <= 1.0
    return BoundReport(
        side=UPPER, value=4.0 * (1.0 + rt * rt / d) / lam if ok else math.inf,
        applicable=ok,
        condition=f"4 lam |y|^2 (1 + r^2 lam/d) = {cond:.6g} <= 1",
        anchor="small-displacement upper", explicit=True)


# --------------------------------------------------------------------------
# variance decomposition (d >= 3)
# --------------------------------------------------------------------------

def decomposition_upper(lam, d, y, r, constants=None):
    """Upper bound by conditioning on the obstacle axis, d >= 3.

    Value (1 + r^2/(d-1)) + C1 max(2, C2) at unit stiffness, with the
    marginal constant C1 selected by position/size cases and the
    conjugate-direction factor C2 always carrying an unpinned universal
    constant; the report is therefore never explicit.
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    if d < 3:
        return BoundReport(side=UPPER, value=math.inf, applicable=False,
                           condition="requires d >= 3",
                           anchor="variance-decomposition upper",
                           explicit=False, free_constant="c")
    yt, rt = _unit(lam, y, r)
    c1_candidates = []
    if yt == 0.0:
        c1_candidates.append((1.0 + rt * rt / d, "centered"))
    if rt <= math.sqrt((d - 2) / 2.0):
        c1_candidates.append((0.5 + rt * rt, "small obstacle"))
    if c1_candidates:
        c1, c1_case = min(c1_candidates, key=lambda t: t[0])
    elif yt > rt + math.sqrt(2.0):
        c1, c1_case = cst["c"], "far obstacle (free constant c)"
    else:
        c1 = cst["c(d)"] * _exp_or_inf(rt * rt) / rt ** (d - 3)
        c1_case = "generic (free constant c(d))"
    c2_candidates = []
    if rt <= math.sqrt((d - 1) / 2.0) or yt >= 3.0 * rt:
        c2_candidates.append(cst["c"] * rt * rt)
    if d > 3 or (d == 3 and rt >= 1.0 and yt > 2.0 * rt):
        c2_candidates.append(cst["c"] * rt * rt * (1.0 + rt * rt / (d - 1)))
    if d == 3 and rt >= 1.0 and yt <= 2.0 * rt:
        c2_candidates.append(cst["c"] * rt * rt
                             * max(rt * rt, _exp_or_inf(yt * (2 * rt - yt))))
    c2 = min(c2_candidates) if c2_candidates else math.inf
    value = ((1.0 + rt * rt / (d - 1)) + c1 * max(2.0, c2)) / lam
    return BoundReport(
        side=UPPER, value=value, applicable=True,
        condition=f"d >= 3; marginal case: {c1_case}; conjugate factor uses "
                  "a free universal constant",
        anchor="variance-decomposition upper", explicit=False,
        free_constant="c", constant_value=cst["c"])


# --------------------------------------------------------------------------
# local Lyapunov constructions
# --------------------------------------------------------------------------

def lyapunov_small_radius_upper(lam, d, r, b):
    """Position-independent upper bound b^2 (3 b^2 + 2) / ((2 b^4 - 1) lam).

    Requires 2 b^4 > 1 and r sqrt(lam) <= sqrt((d-1)/2) - 2b, which forces
    d >= 7; holds for every obstacle position.
    """
    _, rt = _unit(lam, 0.0, r)
    ok = 2.0 * b ** 4 > 1.0 and rt <= math.sqrt((d - 1) / 2.0) - 2.0 * b
    value = b * b * (3.0 * b * b + 2.0) / (2.0 * b ** 4 - 1.0) / lam if ok else math.inf
    return BoundReport(
        side=UPPER, value=value, applicable=ok,
        condition=f"2 b^4 > 1 and r sqrt(lam) <= sqrt((d-1)/2) - 2b "
                  f"(b={b:.6g})",
        anchor="transverse-Lyapunov small-radius upper", explicit=True)


def far_or_small_upper(lam, d, y, r, b):
    """Upper bound (1 + 6 K)/lam for a small obstacle far from the origin.

    K = 3 + b^2 (d-1)/9 + 27/(2 b^2 (d-1)); needs 0 < b < 1,
    r sqrt(lam) <= (1-b) sqrt((d-1)/2) and |y| sqrt(lam) beyond
    sqrt(d) + sqrt((d-1)/2) + 81/(b^3 sqrt(2) (d-1)^{3/2}).  Also returns the
    blanket small-radius report (free constant) that merges all regimes.
    """
    if not 0.0 < b < 1.0:
        raise ValueError(f"need 0 < b < 1, got b={b}")
    yt, rt = _unit(lam, y, r)
    need_y = math.sqrt(d) + math.sqrt((d - 1) / 2.0) \
        + 81.0 / (b ** 3 * math.sqrt(2.0) * (d - 1) ** 1.5)
    ok = rt <= (1.0 - b) * math.sqrt((d - 1) / 2.0) and yt > need_y
    K = 3.0 + b * b * (d - 1) / 9.0 + 27.0 / (2.0 * b * b * (d - 1))
    main = BoundReport(
        side=UPPER, value=(1.0 + 6.0 * K) / lam if ok else math.inf,
        applicable=ok,
        condition=f"r sqrt(lam) <= (1-b) sqrt((d-1)/2) and |y| sqrt(lam) > "
                  f"{need_y:.6g} (b={b:.6g})",
        anchor="far-obstacle Lyapunov upper", explicit=True)
    blanket_ok = rt <= 0.5 * math.sqrt((d - 1) / 2.0)
    blanket = BoundReport(
        side=UPPER, value=1.0 / lam, applicable=blanket_ok,
        condition="r sqrt(lam) <= sqrt((d-1)/2)/2; merges all regimes",
        anchor="small-radius blanket upper", explicit=False,
        free_constant="c", constant_value=1.0)
    return main, blanket


def verify_local_lyapunov(lam, d, y, r, h, eps, grid_step=1e-4, n_radial=24,
                          n_angles=17):
    """Numeric check of the transverse Lyapunov function near the obstacle.

    W(x) = (r + 2h + eps)^2 - |x_perp|^2 (x_perp orthogonal to the obstacle
    direction) must satisfy (L W)(x) <= -2 lam W(x) on the collar
    {|x - y| <= r + 2h} in the domain, and its normal derivative must be
    nonpositive on the obstacle sphere.  Both are evaluated by central finite
    differences of W (exact for quadratics up to rounding) on a polar sample
    of the collar; the closed-form criterion is d - 1 >= 2 lam (r + 2h + eps)^2
    and the worst sampled margin must agree with it in sign.
    """
    if h <= 0 or eps < 0:
        raise ValueError("need h > 0 and eps >= 0")
    a = abs(y)
    width = r + 2.0 * h + eps
    holds = (d - 1) >= 2.0 * lam * width * width

    def w_fun(x):
        return width * width - float(np.sum(x[1:] ** 2))

    def lw_fd(x):
        lap = 0.0
        grad = np.zeros(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = grid_step
            wp, wm = w_fun(x + e), w_fun(x - e)
            lap += (wp - 2.0 * w_fun(x) + wm) / grid_step ** 2
            grad[i] = (wp - wm) / (2.0 * grid_step)
        return 0.5 * lap - lam * float(np.dot(x, grad))

    # polar samples of the collar in the (obstacle axis, one transverse) plane
    worst = -math.inf
    center = np.zeros(d)
    center[0] = a
    radii = np.linspace(r + 1e-3 * h, r + 2.0 * h, n_radial)
    angles = np.linspace(0.0, math.pi, n_angles)
    boundary_max = -math.inf
    for phi in angles:
        u = np.zeros(d)
        u[0], u[1] = math.cos(phi), math.sin(phi)
        for rho in radii:
            x = center + rho * u
            margin = lw_fd(x) + 2.0 * lam * w_fun(x)
            worst = max(worst, margin)
        xb = center + r * u
        nvec = u
        wp = w_fun(xb + grid_step * nvec)
        wm = w_fun(xb - grid_step * nvec)
        boundary_max = max(boundary_max, (wp - wm) / (2.0 * grid_step))
    return {"holds": bool(holds), "worst_margin": worst,
            "boundary_normal_max": boundary_max,
            "criterion_value": (d - 1) - 2.0 * lam * width * width}


# --------------------------------------------------------------------------
# hitting-time route and square obstacles
# --------------------------------------------------------------------------

def hitting_lower(mass_u, beta_star):
    """Lower bound mass/(32 beta*) from an infinite exponential moment.

    ``mass_u`` is the invariant mass of the set whose hitting time has an
    infinite moment of order beta*; any process rate whose moment diverges
    certifies the bound.
    """
    if not 0.0 < mass_u <= 1.0:
        raise ValueError(f"mass must lie in (0, 1], got {mass_u}")
    if beta_star <= 0:
        raise ValueError(f"rate must be positive, got {beta_star}")
    return BoundReport(
        side=LOWER, value=mass_u / (32.0 * beta_star), applicable=True,
        condition=f"exponential moment of the hitting time diverges at rate "
                  f"{beta_star:.6g}; target mass {mass_u:.6g}",
        anchor="hitting-time lower", explicit=True)


def _hypercube_shadow_mass_floor(lam, d, center, r):
    """Computable lower bound for the mass of the complement of the shadow
    set {x1 >= a + r, |x_i - c_i| <= r} behind an axis-aligned cube."""
    a = center[0]
    s = math.sqrt(lam)
    tail = gaussian_tail((a + r) * s) / math.sqrt(math.pi)
    cube = 1.0
    for ci in center:
        cube *= (gaussian_tail((ci - r) * s) - gaussian_tail((ci + r) * s)) \
            / math.sqrt(math.pi)
    dom = 1.0 - cube
    if dom <= 0:
        return 0.0
    return max(0.0, 1.0 - tail / dom)


def square_obstacle_bounds(lam, d, r, center=None, constants=None,
                           include_threshold_route=True):
    """Phase-transition reports for the axis-aligned cube obstacle.

    Planar case: below r sqrt(lam) = 1/8 the constant stays of Gaussian order
    (free constant); above pi/(2 sqrt 2) it explodes at least like
    (e^{lam r^2} - 1)/(32 lam).  In higher dimension the same transition holds
    with unpinned constants and an extra 1/d in the lower rate.  When
    ``include_threshold_route`` is set, a fully computed lower bound from the
    interval-exit root and the exact shadow mass is appended.
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    _, rt = _unit(lam, 0.0, r)
    out = []
    if d == 2:
        out.append(BoundReport(
            side=UPPER, value=cst["c"] / lam, applicable=rt <= 0.125,
            condition=f"r sqrt(lam) = {rt:.6g} <= 1/8",
            anchor="square small-obstacle upper", explicit=False,
            free_constant="c", constant_value=cst["c"]))
        out.append(BoundReport(
            side=LOWER, value=math.expm1(rt * rt) / 32.0 / lam,
            applicable=rt > math.pi / (2.0 * math.sqrt(2.0)),
            condition=f"r sqrt(lam) = {rt:.6g} > pi/(2 sqrt 2)",
            anchor="square trapped-shadow lower", explicit=True))
    else:
        out.append(BoundReport(
            side=UPPER, value=cst["C_small"] / lam,
            applicable=rt <= cst["c_small"] * 0.125,
            condition=f"r sqrt(lam) <= c (reference threshold {0.125:.6g})",
            anchor="cube small-obstacle upper", explicit=False,
            free_constant="C_small", constant_value=cst["C_small"]))
        out.append(BoundReport(
            side=LOWER,
            value=cst["C_big"] * _exp_or_inf(rt * rt) / (d * lam),
            applicable=rt > cst["c_big"] * math.pi / (2.0 * math.sqrt(2.0)),
            condition="r sqrt(lam) > c' (reference threshold pi/(2 sqrt 2))",
            anchor="cube trapped-shadow lower", explicit=False,
            free_constant="C_big", constant_value=cst["C_big"]))
    if include_threshold_route:
        try:
            thr = exit_moment_threshold(lam, r)
            # the shadow exit is the minimum of d-1 independent interval exits
            rate = (d - 1) * thr.beta_star
            mass = _hypercube_shadow_mass_floor(
                lam, d, center if center is not None else (0.0,) * d, r)
            if mass > 0:
                rep = hitting_lower(mass, rate)
                out.append(BoundReport(
                    side=LOWER, value=rep.value, applicable=True,
                    condition=f"computed exit-moment root {thr.beta_star:.6g} "
                              f"(x{d - 1} coordinates), shadow-complement "
                              f"mass >= {mass:.6g}",
                    anchor="square shadow computed-root lower", explicit=True))
        except ThresholdNotFoundError:
            pass
    return out


# --------------------------------------------------------------------------
# isoperimetric and planar reports
# --------------------------------------------------------------------------

def isoperimetric_lower_reports(lam, d, y, r, eps=1.0, c_min=1.0,
                                constants=None):
    """Lower bounds from near-indicator test functions.

    For the cube shadow slab (explicit, with the eps-sharpening carrying its
    eps^2 price):

        eps^2 (s/((d-1) lam)) e^{s^2} (1/(4 sqrt(pi))) (1 - e^{-s^2}/s)^{d-2},
        s = r sqrt(lam) - eps,

    valid once r sqrt(lam) exceeds both eps and the guard ``c_min``.  The
    spherical counterpart only survives with an unpinned dimensional constant
    C_d: (C_d/lam) (1 + r sqrt(lam) / (|y| sqrt(lam) v 1)).
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"need 0 < eps <= 1, got {eps}")
    yt, rt = _unit(lam, y, r)
    s = rt - eps
    ok = s > 0.0 and rt >= c_min
    value = math.inf
    if ok:
        last = 1.0 - math.exp(-s * s) / s
        if last <= 0.0 and d > 2:
            ok = False
        else:
            value = (eps * eps * s / ((d - 1) * lam) * _exp_or_inf(s * s)
                     / (4.0 * math.sqrt(math.pi)) * last ** (d - 2))
    slab = BoundReport(
        side=LOWER, value=value if ok else math.inf, applicable=ok,
        condition=f"r sqrt(lam) = {rt:.6g} > eps = {eps:.6g} and >= guard "
                  f"{c_min:.6g}",
        anchor="shadow-slab isoperimetric lower", explicit=True)
    spherical = BoundReport(
        side=LOWER, value=cst["C_d"] * (1.0 + rt / max(yt, 1.0)) / lam,
        applicable=True,
        condition="ball obstacle, any position (free constant C_d)",
        anchor="spherical-cap scan envelope lower", explicit=False,
        free_constant="C_d", constant_value=cst["C_d"])
    return [slab, spherical]


def shell_and_2d_reports(r, q, s, y, lam=1.0, constants=None):
    """Planar shell and far-ball reports.

    * explicit Poincare bound for the measure restricted to the shell
      {r <= |x - y| <= r + q}: 64 (r+q)^2 + (1 + 64 (r+q)^2 / s^2)(5/2 + 1/s^2),
      valid when (r+s)^2 + s^2 < (r+q)^2 and |y| > 1 + r + s (unit stiffness
      lengths, output rescaled by 1/lam);
    * the winding exit-rate threshold 1/(32 (r+q)^2) (native lengths);
    * the far-ball upper C (1 + r^2 lam)/lam with free constants.
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    sfac = math.sqrt(lam)
    rt, qt, st_, yt = r * sfac, q * sfac, s * sfac, abs(y) * sfac
    geo_ok = (rt + st_) ** 2 + st_ ** 2 < (rt + qt) ** 2 and yt > 1.0 + rt + st_
    shell_val = (64.0 * (rt + qt) ** 2
                 + (1.0 + 64.0 * (rt + qt) ** 2 / st_ ** 2)
                 * (2.5 + 1.0 / st_ ** 2)) / lam
    shell = BoundReport(
        side=UPPER, value=shell_val, applicable=geo_ok,
        condition=f"(r+s)^2 + s^2 < (r+q)^2 and |y| > 1 + r + s "
                  f"(unit-stiffness lengths, s={st_:.6g})",
        anchor="shell restricted-measure upper", explicit=True,
        quantity=Q_SHELL)
    theta_max = BoundReport(
        side=UPPER, value=1.0 / (32.0 * (r + q) ** 2), applicable=True,
        condition="winding time to the far marker segment has finite "
                  "exponential moments below this rate",
        anchor="winding exit-rate threshold", explicit=True,
        quantity=Q_EXIT_RATE)
    far_ok = yt > 1.0 + rt + cst["c"] * (1.0 + math.sqrt(rt))
    far_ball = BoundReport(
        side=UPPER, value=cst["C"] * (1.0 + rt * rt) / lam, applicable=far_ok,
        condition="planar ball with |y| sqrt(lam) > 1 + r sqrt(lam) + "
                  "c (1 + sqrt(r sqrt(lam)))",
        anchor="planar far-ball winding upper", explicit=False,
        free_constant="C", constant_value=cst["C"])
    return [shell, theta_max, far_ball]


# --------------------------------------------------------------------------
# catalogue assembly
# --------------------------------------------------------------------------

def _conjecture_line(lam, d, rt, constants):
    return BoundReport(
        side=UPPER, value=constants["C_plus"] * (1.0 + rt * rt / d) / lam,
        applicable=True,
        condition="conjectured position-independent envelope (free constant)",
        anchor="position-free conjectured upper", explicit=False,
        quantity=Q_CONJECTURE, free_constant="C_plus",
        constant_value=constants["C_plus"])


def _gaussian_baseline(lam):
    yield BoundReport(side=LOWER, value=0.5 / lam, applicable=True,
                      condition="no obstacle: exact Gaussian constant",
                      anchor="gaussian baseline", explicit=True)
    yield BoundReport(side=UPPER, value=0.5 / lam, applicable=True,
                      condition="no obstacle: exact Gaussian constant",
                      anchor="gaussian baseline", explicit=True)


def aggregate(spec, constants=None, b_grid=None, s_grid=None, eps_grid=None,
              include_conjecture=True, include_threshold_route=True):
    """Catalogue of every applicable closed-form bound for one instance.

    Scans the free Lyapunov parameters over small grids, keeps the best value
    of each family, appends the conjectured envelope as a labeled
    non-certifiable line, and computes the best explicit two-sided envelope.
    """
    cst = dict(DEFAULT_CONSTANTS, **(constants or {}))
    lam, d, ob = spec.lam, spec.d, spec.obstacle
    b_grid = b_grid if b_grid is not None else [x / 20.0 for x in range(1, 60)]
    s_grid = s_grid if s_grid is not None else [x / 8.0 for x in range(1, 41)]
    reports = []
    if ob is None:
        reports.extend(_gaussian_baseline(lam))
        cat = BoundCatalogue.from_reports(reports)
        return cat
    if isinstance(ob, Ball):
        yabs = float(np.linalg.norm(ob.center))
        r = ob.r
        yt, rt = _unit(lam, yabs, r)
        if yabs == 0.0:
            reports.extend(centered_bounds(lam, d, r))
            reports.append(radial_test_function_lower(lam, d, r))
        reports.append(perturbation_upper(lam, d, yabs, r))
        reports.append(small_displacement_upper(lam, d, yabs, r))
        if d >= 3:
            reports.append(decomposition_upper(lam, d, yabs, r, cst))
        best_small = min((lyapunov_small_radius_upper(lam, d, r, b)
                          for b in b_grid if b > (0.5) ** 0.25),
                         key=lambda rep: rep.value if rep.applicable else math.inf,
                         default=None)
        if best_small is not None and best_small.applicable:
            reports.append(best_small)
        far_candidates = []
        blanket = None
        for b in b_grid:
            if 0 < b < 1:
                main, blanket = far_or_small_upper(lam, d, yabs, r, b)
                if main.applicable:
                    far_candidates.append(main)
        if far_candidates:
            reports.append(min(far_candidates, key=lambda rep: rep.value))
        if blanket is not None:
            reports.append(blanket)
        if yabs - r > 0:
            reports.append(BoundReport(
                side=LOWER, value=cst["c"] / lam, applicable=True,
                condition="origin in the domain (free constant c)",
                anchor="origin-side hitting lower", explicit=False,
                free_constant="c", constant_value=cst["c"]))
        if rt <= 0.5 * math.sqrt((d - 1) / 2.0):
            reports.append(BoundReport(
                side=LOWER, value=cst["c_d"] / lam, applicable=True,
                condition="small obstacle (free dimensional constant c_d)",
                anchor="small-radius hitting lower", explicit=False,
                free_constant="c_d", constant_value=cst["c_d"]))
        reports.extend(isoperimetric_lower_reports(lam, d, yabs, r,
                                                   constants=cst)[1:])
        if d == 2:
            sfac = math.sqrt(lam)
            reports.append(shell_and_2d_reports(
                r, (1.0 + math.sqrt(rt)) / sfac, 1.0 / sfac, yabs,
                lam=lam, constants=cst)[2])
        if include_conjecture:
            reports.append(_conjecture_line(lam, d, rt, cst))
    elif isinstance(ob, Hypercube):
        yabs = float(np.linalg.norm(ob.center))
        reports.extend(square_obstacle_bounds(
            lam, d, ob.r, center=ob.center, constants=cst,
            include_threshold_route=include_threshold_route))
        reports.extend(isoperimetric_lower_reports(lam, d, yabs, ob.r,
                                                   constants=cst)[:1])
    elif isinstance(ob, Shell):
        yabs = float(np.linalg.norm(ob.center))
        r, q = ob.r, ob.R - ob.r
        if yabs == 0.0:
            reports.append(centered_shell_upper(lam, d, ob.r, ob.R))
            reports.append(radial_test_function_lower(lam, d, ob.r, ob.R))
        elif d == 2:
            shell_reports = []
            for s in s_grid:
                cand = shell_and_2d_reports(r, q, s, yabs, lam=lam,
                                            constants=cst)
                if cand[0].applicable:
                    shell_reports.append(cand[0])
            if shell_reports:
                reports.append(min(shell_reports, key=lambda rep: rep.value))
            reports.append(shell_and_2d_reports(r, q, max(q / 4, 1e-3), yabs,
                                                lam=lam, constants=cst)[1])
    elif isinstance(ob, Trap):
        from .isoperimetry import trap_lower_bound
        if spec.lam == 1.0 and spec.d == 2:
            reports.append(trap_lower_bound(ob.y, ob.alpha))
        reports.append(BoundReport(
            side=LOWER, value=cst["c"] / lam, applicable=True,
            condition="origin in the domain (free constant c)",
            anchor="origin-side hitting lower", explicit=False,
            free_constant="c", constant_value=cst["c"]))
    return BoundCatalogue.from_reports(reports)
