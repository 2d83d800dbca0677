"""Scalar special functions backing the bound catalogue and the simulator.

Contents: the Kummer confluent hypergeometric series 1F1(a, 1/2, z), the first
positive root in beta of 1F1(-beta/(2 lam), 1/2, lam r^2) (the exponential-moment
threshold of the interval exit time of a mean-reverting linear diffusion), the
corresponding Laplace transform, Brownian analogues, Gaussian tail integrals,
radial incomplete-gamma masses, and the closed-form hitting-time density of the
unit-stiffness mean-reverting diffusion.

The Kummer series is summed with double-double compensated arithmetic whenever
cancellation would spoil plain double accumulation; root residuals are then
reliable down to ~1e-12 in absolute terms for z <= ~40.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy import special as sps

__all__ = [
    "EvaluationError",
    "ThresholdNotFoundError",
    "ExitThreshold",
    "kummer_1f1",
    "ou_exit_laplace",
    "exit_moment_threshold",
    "brownian_exit_moment",
    "gaussian_tail",
    "radial_gaussian_mass",
    "log_radial_gaussian_mass",
    "xi_second_moment",
    "ou_hitting_density",
    "ou_hitting_cdf",
]

_MAX_TERMS = 10_000
_DD_SWITCH = 1e6  # cancellation ratio beyond which double-double kicks in


class EvaluationError(ArithmeticError):
    """A series failed to converge within the term budget."""


class ThresholdNotFoundError(EvaluationError):
    """No sign change of the Kummer function in the searched parameter range."""


# --------------------------------------------------------------------------
# double-double primitives (Dekker/Bailey, no FMA required)
# --------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    e += xl + yl
    return _two_sum(s, e)


def _dd_mul(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e += xh * yl + xl * yh
    return _two_sum(p, e)


def _dd_div_f(xh, xl, f):
    q1 = xh / f
    ph, pl = _two_prod(q1, f)
    rh, rl = _dd_add(xh, xl, -ph, -pl)
    return _two_sum(q1, (rh + rl) / f)


# --------------------------------------------------------------------------
# Kummer 1F1 with second parameter fixed to 1/2
# --------------------------------------------------------------------------

def _kummer_series_float(a, z):
    """Plain-double series; returns (sum, max |term|)."""
    s = 1.0
    t = 1.0
    tmax = 1.0
    for k in range(1, _MAX_TERMS + 1):
        t *= (a + k - 1.0) * z / ((k - 0.5) * k)
        if t == 0.0:
            return s, tmax  # polynomial case: exact truncation
        s += t
        at = abs(t)
        if at > tmax:
            tmax = at
        if k > z and at <= 1e-18 * max(1.0, abs(s)):
            return s, tmax
    raise EvaluationError(f"Kummer series did not converge for a={a}, z={z}")


def _kummer_series_dd(a, z):
    """Double-double series; term recurrence carried in double-double too."""
    sh, sl = 1.0, 0.0
    th, tl = 1.0, 0.0
    tmax = 1.0
    for k in range(1, _MAX_TERMS + 1):
        fh, fl = _two_sum(a, float(k - 1))
        th, tl = _dd_mul(th, tl, fh, fl)
        th, tl = _dd_mul(th, tl, z, 0.0)
        # (k - 1/2) * k is exactly representable for the k range used here
        th, tl = _dd_div_f(th, tl, (k - 0.5) * k)
        if th == 0.0:
            return sh + sl, tmax
        sh, sl = _dd_add(sh, sl, th, tl)
        at = abs(th)
        if at > tmax:
            tmax = at
        if k > z and at <= 1e-25 * max(1.0, abs(sh)):
            return sh + sl, tmax
    raise EvaluationError(f"Kummer series did not converge for a={a}, z={z}")


def kummer_1f1(a, z):
    """1F1(a, 1/2, z) = sum_k (a)_k / (1/2)_k * z^k / k! for z >= 0.

    Automatically re-sums in double-double arithmetic when the running maximal
    term exceeds 1e6 times the partial sum, which is the regime (a < 0, z not
    small) where the alternating Pochhammer products cancel massively; this is
    what makes sign evaluations near the first zero trustworthy.
    """
    if z < 0:
        raise ValueError(f"argument must be nonnegative, got z={z}")
    if abs(a) > 50:
        raise ValueError(f"first parameter out of the supported range |a| <= 50: {a}")
    if z == 0.0 or a == 0.0:
        return 1.0
    s, tmax = _kummer_series_float(a, z)
    if tmax > _DD_SWITCH * max(abs(s), 1e-300):
        s, _ = _kummer_series_dd(a, z)
    return s


def _kummer_vec(a_values, z):
    """Float-path series over a vector of ``a`` values (sign scans only)."""
    a = np.asarray(a_values, dtype=float)
    s = np.ones_like(a)
    t = np.ones_like(a)
    for k in range(1, _MAX_TERMS + 1):
        t = t * ((a + (k - 1.0)) * (z / ((k - 0.5) * k)))
        s = s + t
        if k > z and np.max(np.abs(t)) <= 1e-18 * max(1.0, float(np.max(np.abs(s)))):
            break
    return s


# --------------------------------------------------------------------------
# exit-rate threshold and Laplace transform of the interval exit time
# --------------------------------------------------------------------------

class ExitThreshold:
    """First positive root beta* of beta -> 1F1(-beta/(2 lam), 1/2, lam r^2).

    ``bracket`` is the (lo, hi) interval in beta that the bisection started
    from, ``residual`` the absolute value of the Kummer function at the root.
    E[exp(beta S)] of the exit time S of [-r, r] is finite exactly for
    beta < beta_star.
    """

    def __init__(self, beta_star, bracket, residual):
        self.beta_star = float(beta_star)
        self.bracket = (float(bracket[0]), float(bracket[1]))
        self.residual = float(residual)

    def __repr__(self):
        return (f"ExitThreshold(beta_star={self.beta_star!r}, "
                f"bracket={self.bracket!r}, residual={self.residual!r})")


_SCAN_STEP = 0.01
_SCAN_LIMIT = 50.0


@functools.lru_cache(maxsize=4096)
def _threshold_cached(lam, r):
    z = lam * r * r
    n = int(round(_SCAN_LIMIT / _SCAN_STEP))
    grid = -_SCAN_STEP * np.arange(1, n + 1)
    vals = _kummer_vec(grid, z)
    neg = np.flatnonzero(vals <= 0.0)
    if neg.size == 0:
        raise ThresholdNotFoundError(
            f"no zero of 1F1(a, 1/2, {z}) for a in (-{_SCAN_LIMIT}, 0); "
            "the product lam*r^2 is outside the catalogued regime"
        )
    k = int(neg[0])
    a_neg = float(grid[k])
    if kummer_1f1(a_neg, z) == 0.0:
        # landed exactly on a polynomial root (e.g. a=-1 when z=1/2)
        return ExitThreshold(-2.0 * lam * a_neg,
                             (-2.0 * lam * a_neg, -2.0 * lam * a_neg), 0.0)
    a_pos = float(grid[k - 1]) if k > 0 else 0.0
    lo, hi = a_neg, a_pos  # f(lo) <= 0 < f(hi)
    # bisect to interval collapse: near a tiny root the Kummer slope can be
    # huge, so only ulp-level resolution in a keeps the residual below 1e-10
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        f = kummer_1f1(mid, z)
        if f == 0.0:
            lo = hi = mid
            break
        if f < 0.0:
            lo = mid
        else:
            hi = mid
    a_star = 0.5 * (lo + hi)
    residual = abs(kummer_1f1(a_star, z))
    return ExitThreshold(-2.0 * lam * a_star,
                         (-2.0 * lam * a_pos, -2.0 * lam * a_neg), residual)


def exit_moment_threshold(lam, r):
    """Smallest beta > 0 with 1F1(-beta/(2 lam), 1/2, lam r^2) = 0.

    Sign-scan in steps of 0.01 over the first Kummer parameter followed by
    bisection.  Raises ThresholdNotFoundError when no sign change occurs for
    a in (-50, 0).
    """
    if not (lam > 0 and r > 0):
        raise ValueError(f"need lam > 0 and r > 0, got lam={lam}, r={r}")
    return _threshold_cached(float(lam), float(r))


def ou_exit_laplace(theta, lam, r):
    """E[exp(-theta S)] for the exit time S of [-r, r], started at the center.

    Equals 1/1F1(theta/(2 lam), 1/2, lam r^2) for theta >= 0 and extends by
    analytic continuation to negative theta while the Kummer value stays
    positive; returns math.inf once -theta reaches the exit-rate threshold.
    """
    if not (lam > 0 and r > 0):
        raise ValueError(f"need lam > 0 and r > 0, got lam={lam}, r={r}")
    z = lam * r * r
    a = theta / (2.0 * lam)
    if theta >= 0:
        return 1.0 / kummer_1f1(a, z)
    try:
        thr = exit_moment_threshold(lam, r)
        if -theta >= thr.beta_star:
            return math.inf
    except ThresholdNotFoundError:
        pass  # no root in range: the continuation is valid wherever 1F1 > 0
    f = kummer_1f1(a, z)
    if f <= 0.0:
        return math.inf
    return 1.0 / f


def brownian_exit_moment(theta, r):
    """E[exp(theta S)] for Brownian exit of [-r, r] from 0: 1/cos(r sqrt(2 theta)).

    Finite exactly for theta < pi^2 / (8 r^2); math.inf beyond.
    """
    if r <= 0:
        raise ValueError(f"need r > 0, got {r}")
    if theta < 0:
        raise ValueError(f"negative rates are not supported, got theta={theta}")
    if theta == 0.0:
        return 1.0
    x = r * math.sqrt(2.0 * theta)
    if x >= math.pi / 2 * (1.0 - 4e-16):
        return math.inf
    return 1.0 / math.cos(x)


# --------------------------------------------------------------------------
# Gaussian tails and radial masses
# --------------------------------------------------------------------------

_SQRT_PI_2 = math.sqrt(math.pi) / 2.0


def gaussian_tail(b, c=math.inf):
    """Integral of exp(-u^2) over [b, c] through the error-function kernel.

    Requires b <= c; b <= 0 is handled by the same formula (the integrand is
    a full Gaussian there, no restriction applies).  Absolute error is at the
    1e-15 level, comfortably inside the 1e-13 contract.
    """
    if c < b:
        raise ValueError(f"need b <= c, got b={b}, c={c}")
    if b == c:
        return 0.0
    if b > 0.5:
        hi = 0.0 if math.isinf(c) else sps.erfc(c)
        return _SQRT_PI_2 * (sps.erfc(b) - hi)
    hi = 1.0 if math.isinf(c) else sps.erf(c)
    return _SQRT_PI_2 * (hi - sps.erf(b))


def _log_upper_gamma(a, x):
    """log of the upper incomplete gamma Gamma(a, x) for large x (Lentz CF)."""
    tiny = 1e-300
    b0 = x + 1.0 - a
    c = 1e300
    d = 1.0 / max(b0, tiny)
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b0 += 2.0
        d = an * d + b0
        if abs(d) < tiny:
            d = tiny
        c = b0 + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return -x + a * math.log(x) + math.log(h)


def log_radial_gaussian_mass(d, lam, r):
    """log of integral_r^infty rho^(d-1) exp(-lam rho^2) drho."""
    if d < 1 or lam <= 0 or r < 0:
        raise ValueError(f"need d >= 1, lam > 0, r >= 0; got d={d}, lam={lam}, r={r}")
    a = d / 2.0
    x = lam * r * r
    log_norm = -math.log(2.0) - a * math.log(lam)
    if x > 700.0:
        return log_norm + _log_upper_gamma(a, x)
    q = sps.gammaincc(a, x)  # regularized
    return log_norm + math.log(q) + sps.gammaln(a)


def radial_gaussian_mass(d, lam, r):
    """Integral of rho^(d-1) exp(-lam rho^2) over (r, infinity).

    Evaluates Gamma(d/2, lam r^2) / (2 lam^(d/2)); switches to a log-scale
    continued fraction for lam r^2 > 700 to dodge underflow of the regularized
    gamma.
    """
    return math.exp(log_radial_gaussian_mass(d, lam, r))


def xi_second_moment(d, lam, r):
    """Second moment of the radial law rho^(d-1) exp(-lam rho^2) on (r, inf).

    Closed form d/(2 lam) + r^d exp(-lam r^2) / (2 lam A) with A the radial
    mass; always bounded by d/(2 lam) + r^2.
    """
    base = d / (2.0 * lam)
    if r == 0.0:
        return base
    log_term = d * math.log(r) - lam * r * r - math.log(2.0 * lam) \
        - log_radial_gaussian_mass(d, lam, r)
    return base + math.exp(log_term)


# --------------------------------------------------------------------------
# hitting-time density of the unit-stiffness mean-reverting diffusion
# --------------------------------------------------------------------------

def ou_hitting_density(t, b):
    """Density at t of the first hitting time of 0 from -b (unit stiffness).

    p(t) = b/sqrt(2 pi) * sinh(t)^(-3/2) * exp(-b^2 e^(-t) / (2 sinh t) + t/2).
    Vectorized in t; integrates to one over (0, infinity).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the density is supported on t > 0")
    if b <= 0:
        raise ValueError(f"need b > 0, got {b}")
    with np.errstate(over="ignore", under="ignore"):
        sh = np.sinh(t)
        # sinh^{-3/2} e^{t/2} computed in log form to survive large t
        logp = (math.log(b) - 0.5 * math.log(2 * math.pi)
                - 1.5 * np.log(sh) + 0.5 * t - b * b * np.exp(-t) / (2.0 * sh))
        out = np.exp(logp)
    return out if out.ndim else float(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def ou_hitting_cdf(t, b, t_max=None):
    """CDF of the hitting time, by composite Gauss-Legendre integration.

    ``t`` may be an array; values beyond ``t_max`` clamp to the mass
    accumulated up to ``t_max`` (the tail decays exponentially).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t_max is None:
        # the density tail decays like exp(-t/4); 200 leaves ~1e-22 outside
        t_max = min(max(40.0, float(np.max(t))), 200.0)
    # panels refined near 0 where the density turns on sharply
    edges = np.concatenate([
        [0.0],
        np.geomspace(1e-6, 1.0, 400),
        np.linspace(1.0, t_max, 1600)[1:],
    ])
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    dens = np.where(nodes > 0, ou_hitting_density(np.maximum(nodes, 1e-300), b), 0.0)
    panel = (dens * _GL_WEIGHTS[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    out = np.interp(np.clip(t, 0.0, t_max), edges, cum)
    return out if len(out) > 1 else float(out[0])
