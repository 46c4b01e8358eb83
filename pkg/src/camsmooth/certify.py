"""Exact binomial confidence bounds and certified motion radii.

The certification pipeline estimates the smoothed classifier's top-class
probability from Monte-Carlo counts, lower-bounds it (and upper-bounds the
runner-up) with exact one-sided Clopper-Pearson bounds at confidence
1 - alpha/2 each, and converts the bound gap into a radius of camera
motions the prediction provably survives: along a single smoothed axis
with noise scale sigma the radius is

    radius = sigma / 2 * (quantile(pA_lower) - quantile(pB_upper))

and a general motion (translation plus rotation about the smoothing axis)
is certified when its sigma-normalized Euclidean length is strictly below
(quantile(pA_lower) - quantile(pB_upper)) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import special

from .geometry import MotionParams
from .motion import MotionAxis, SmoothingSpec

if TYPE_CHECKING:  # pragma: no cover
    from .smoothing import SampleCounts

_BISECT_TOL = 1e-12
_QUANTILE_CLAMP = 1e-15


class NotCertifiableError(ValueError):
    """The motion lies outside what the smoothing distribution can certify
    (e.g. a perturbed coordinate that was never smoothed)."""


def binomial_tail_probability(k: int, n: int, p: float) -> float:
    """P[Binomial(n, p) >= k], exact via the regularized incomplete beta."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return float(special.betainc(k, n - k + 1, p))


def _check_bound_args(k: int, n: int, alpha: float) -> None:
    if n < 1:
        raise ValueError(f"need at least one trial, got n={n}")
    if not 0 <= k <= n:
        raise ValueError(f"successes must satisfy 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"tail mass must lie in (0, 1), got {alpha}")


def binom_lower_bound(k: int, n: int, alpha: float) -> float:
    """One-sided Clopper-Pearson lower bound on a binomial proportion.

    Returns the p with P[Binomial(n, p) >= k] = alpha, found by bisection
    on the exact CDF; 0 when k = 0. The true proportion is >= the returned
    value with probability at least 1 - alpha.
    """
    _check_bound_args(k, n, alpha)
    if k == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    # tail probability is increasing in p
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if binomial_tail_probability(k, n, mid) < alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binom_upper_bound(k: int, n: int, alpha: float) -> float:
    """One-sided Clopper-Pearson upper bound: p with P[Binomial(n,p) <= k] = alpha.

    Returns 1 when k = n. The true proportion is <= the returned value with
    probability at least 1 - alpha.
    """
    _check_bound_args(k, n, alpha)
    if k == n:
        return 1.0
    lo, hi = 0.0, 1.0
    # P[X <= k] = 1 - P[X >= k+1] is decreasing in p
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if 1.0 - binomial_tail_probability(k + 1, n, mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# AS241 / PPND16 rational approximations for the standard normal quantile
# (absolute error below 1e-13 on (0, 1) in double precision).
_A = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_B = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
    5.3941960214247511077e3, 2.1213794301586595867e4, 3.9307895800092710610e4,
    2.8729085735721942674e4, 5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_D = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
    6.89767334985100004550e-1, 1.48103976427480074590e-1,
    1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2,
    1.24266094738807843860e-3, 2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
    1.48753612908506148525e-2, 7.86869131145613259100e-4,
    1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, x: float) -> float:
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF via the AS241 rational approximation."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile argument must lie strictly in (0, 1), got {p}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


@dataclass(frozen=True, eq=False)
class Certificate:
    """Outcome of certifying one pose along one smoothed axis.

    When not abstained, the smoothed prediction provably stays unchanged
    (with confidence >= ``confidence``) for every 1-axis motion of
    magnitude strictly below ``radius`` on the certified axis. The bounds
    say nothing about abstention under perturbation, only about the top
    class.
    """

    pA_lower: float
    pB_upper: float
    radius: float | None
    abstained: bool
    sigma_used: SmoothingSpec
    confidence: float

    def __post_init__(self):
        for name in ("pA_lower", "pB_upper"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be a probability, got {val}")
        if not self.abstained:
            if not self.pA_lower > self.pB_upper:
                raise ValueError("non-abstaining certificate needs pA_lower > pB_upper")
            if self.radius is None or not self.radius > 0:
                raise ValueError("non-abstaining certificate needs a positive radius")
        elif self.radius is not None:
            raise ValueError("abstaining certificate must not carry a radius")


def certify_one_axis(
    counts: "SampleCounts",
    top2: tuple[int, int],
    axis: MotionAxis,
    spec: SmoothingSpec,
    alpha_conf: float,
) -> Certificate:
    """Certificate for 1-axis motions from estimation-run counts.

    ``top2`` is the (top, runner-up) pair identified by the separate
    selection run. The confidence budget splits evenly: the top class gets
    a lower bound at alpha/2, the runner-up an upper bound at alpha/2, so
    the joint statement holds with confidence 1 - alpha. Abstains when the
    bounds do not separate.
    """
    sigma = spec.sigma_for(axis)
    if not sigma > 0:
        raise ValueError(f"axis {axis.value} has zero smoothing sigma; cannot certify")
    if not 0.0 < alpha_conf < 1.0:
        raise ValueError(f"alpha_conf must lie in (0, 1), got {alpha_conf}")
    top, runner = top2
    if top == runner:
        raise ValueError("top and runner-up class must differ")
    n = counts.n
    pa = binom_lower_bound(int(counts.counts[top]), n, alpha_conf / 2.0)
    pb = binom_upper_bound(int(counts.counts[runner]), n, alpha_conf / 2.0)
    if pa <= pb:
        return Certificate(
            pA_lower=pa, pB_upper=pb, radius=None, abstained=True,
            sigma_used=spec, confidence=1.0 - alpha_conf,
        )
    pa_c = min(max(pa, _QUANTILE_CLAMP), 1.0 - _QUANTILE_CLAMP)
    pb_c = min(max(pb, _QUANTILE_CLAMP), 1.0 - _QUANTILE_CLAMP)
    radius = 0.5 * sigma * (std_normal_quantile(pa_c) - std_normal_quantile(pb_c))
    return Certificate(
        pA_lower=pa, pB_upper=pb, radius=radius, abstained=False,
        sigma_used=spec, confidence=1.0 - alpha_conf,
    )


def certify_motion(
    alpha: MotionParams,
    spec: SmoothingSpec,
    pA_lower: float,
    pB_upper: float,
) -> bool:
    """Whether a specific motion is certified by the given probability bounds.

    The motion's rotation must be zero or about ``spec.fixed_axis``; every
    perturbed coordinate must have a positive smoothing sigma, otherwise
    NotCertifiableError is raised (the framework cannot say anything about
    such motions, which is different from answering False).
    """
    lhs_sq = 0.0
    sigmas = spec.translation_sigmas
    for i in range(3):
        coord = float(alpha.translation[i])
        if coord == 0.0:
            continue
        if sigmas[i] == 0.0:
            raise NotCertifiableError(
                f"translation component {'xyz'[i]} = {coord} is perturbed but "
                "its smoothing sigma is 0"
            )
        lhs_sq += (coord / sigmas[i]) ** 2
    angle = alpha.angle
    if angle > 0.0:
        if spec.fixed_axis is None or spec.sigma_theta == 0.0:
            raise NotCertifiableError(
                f"rotation of {angle} rad is perturbed but rotational smoothing is off"
            )
        unit = alpha.rotvec / angle
        if min(
            np.linalg.norm(unit - spec.fixed_axis),
            np.linalg.norm(unit + spec.fixed_axis),
        ) > 1e-9:
            raise NotCertifiableError(
                "rotation axis differs from the smoothing axis; the fixed-axis "
                "certificate does not apply"
            )
        lhs_sq += (angle / spec.sigma_theta) ** 2
    pa = min(max(pA_lower, _QUANTILE_CLAMP), 1.0 - _QUANTILE_CLAMP)
    pb = min(max(pB_upper, _QUANTILE_CLAMP), 1.0 - _QUANTILE_CLAMP)
    rhs = 0.5 * (std_normal_quantile(pa) - std_normal_quantile(pb))
    return math.sqrt(lhs_sq) < rhs
