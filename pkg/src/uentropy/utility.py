"""Utility functions on the positive half-line.

A utility is strictly increasing, strictly concave, smooth, with marginal
utility running from +inf at 0 down to 0 at +inf. Built-ins carry closed
forms for everything; custom utilities only need ``value`` and ``deriv`` and
fall back to monotone bisection for the inverse marginal and the inverse.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import (
    BadGamma,
    BadScale,
    BracketFailure,
    InadmissibleUtility,
    NotEstimable,
    OutOfRange,
)

Fn = Callable[[np.ndarray], np.ndarray]

# initial bracket in log-space: [2**-40, 2**40]
_LOG_LO = -40 * math.log(2.0)
_LOG_HI = 40 * math.log(2.0)
# expansion stops here; exp(+-700) is still finite
_LOG_LIMIT = 700.0
_MAX_BISECT = 200


class Elasticity(NamedTuple):
    value: float
    estimated: bool


@dataclass(frozen=True, eq=False)
class UtilityFunction:
    """Behavioural contract for a utility ``u``.

    Only ``value`` and ``deriv`` are required. The optional fields hold
    closed forms; ``None`` means "use the numeric fallback".

    Attributes
    ----------
    name : str
        Descriptor used in reports and CSV headers. Must not contain commas.
    value, deriv : callable
        ``u`` and ``u'``, vectorised over numpy arrays of positive reals.
    deriv2 : callable, optional
        ``u''``; used by :func:`relative_risk_aversion`.
    inv_marginal : callable, optional
        ``I = (u')^{-1}``.
    dual : callable, optional
        Convex dual ``u*(y) = sup_x u(x) - xy``.
    inverse : callable, optional
        ``u^{-1}`` on the open range ``(u_zero, u_inf)``.
    elasticity : float, optional
        Exact asymptotic elasticity.
    u_zero, u_inf : float
        Limits of ``u`` at 0 and at infinity (may be infinite).
    renyi_order : float, optional
        Set for (affine maps of) isoelastic utilities, whose entropy is the
        Renyi entropy of this order.
    """

    name: str
    value: Fn
    deriv: Fn
    deriv2: Optional[Fn] = None
    inv_marginal: Optional[Fn] = None
    dual: Optional[Fn] = None
    inverse: Optional[Fn] = None
    elasticity: Optional[float] = None
    u_zero: float = -math.inf
    u_inf: float = math.inf
    renyi_order: Optional[float] = None
    is_log: bool = field(default=False, repr=False)

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"UtilityFunction({self.name})"


@dataclass(frozen=True)
class RiskProfile:
    """Parameters of a built-in utility, ``a * u_gamma + b``.

    ``gamma = 0`` selects the logarithmic utility.
    """

    gamma: float = 0.0
    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if not self.gamma < 1:
            raise BadGamma(f"gamma must be < 1, got {self.gamma!r}")
        if not self.a > 0:
            raise BadScale(f"scale a must be > 0, got {self.a!r}")

    def build(self) -> UtilityFunction:
        base = log_utility() if self.gamma == 0 else isoelastic_utility(self.gamma)
        if self.a == 1 and self.b == 0:
            return base
        return affine_utility(base, self.a, self.b)


def _fmt(x: float) -> str:
    return f"{x:g}"


def log_utility() -> UtilityFunction:
    """``u(x) = ln x``."""
    return UtilityFunction(
        name="log",
        value=np.log,
        deriv=lambda x: 1.0 / x,
        deriv2=lambda x: -1.0 / (x * x),
        inv_marginal=lambda y: 1.0 / y,
        dual=lambda y: -np.log(y) - 1.0,
        inverse=np.exp,
        elasticity=0.0,
        u_zero=-math.inf,
        u_inf=math.inf,
        is_log=True,
    )


def isoelastic_utility(gamma: float) -> UtilityFunction:
    """``u(x) = x**gamma / gamma`` for ``gamma < 1``, ``gamma != 0``."""
    gamma = float(gamma)
    if not gamma < 1 or gamma == 0:
        raise BadGamma(
            f"isoelastic order must satisfy gamma < 1 and gamma != 0, got {gamma!r}"
        )
    g = gamma
    inv_exp = 1.0 / (g - 1.0)
    dual_exp = g / (g - 1.0)
    return UtilityFunction(
        name=f"isoelastic({_fmt(g)})",
        value=lambda x: x**g / g,
        deriv=lambda x: x ** (g - 1.0),
        deriv2=lambda x: (g - 1.0) * x ** (g - 2.0),
        inv_marginal=lambda y: y**inv_exp,
        dual=lambda y: (1.0 - g) / g * y**dual_exp,
        inverse=lambda v: (g * v) ** (1.0 / g),
        elasticity=g,
        u_zero=0.0 if g > 0 else -math.inf,
        u_inf=math.inf if g > 0 else 0.0,
        renyi_order=1.0 / (1.0 - g),
    )


def affine_utility(u: UtilityFunction, a: float, b: float) -> UtilityFunction:
    """``a * u + b`` for ``a > 0``; entropy is invariant under this map."""
    a = float(a)
    b = float(b)
    if not a > 0:
        raise BadScale(f"scale a must be > 0, got {a!r}")

    d2 = u.deriv2
    u_zero = a * u.u_zero + b
    u_inf = a * u.u_inf + b

    # AE is preserved when the limit at infinity is infinite, or when the map
    # is a pure rescaling; a finite nonzero limit forces AE = 0.
    ae = None
    if u.elasticity is not None:
        if math.isinf(u.u_inf) or b == 0:
            ae = u.elasticity
        elif u_inf != 0:
            ae = 0.0

    return UtilityFunction(
        name=f"affine(a={_fmt(a)};b={_fmt(b)};{u.name})",
        value=lambda x: a * u.value(x) + b,
        deriv=lambda x: a * u.deriv(x),
        deriv2=None if d2 is None else (lambda x: a * d2(x)),
        inv_marginal=lambda y: inverse_marginal(u, np.asarray(y) / a),
        dual=lambda y: a * dual_value(u, np.asarray(y) / a) + b,
        inverse=lambda v: inverse_utility(u, (np.asarray(v) - b) / a),
        elasticity=ae,
        u_zero=u_zero,
        u_inf=u_inf,
        renyi_order=u.renyi_order,
    )


def _scalar_or_array(x, like):
    if np.ndim(like) == 0:
        return float(np.asarray(x).reshape(()))
    return x


def _bisect_log(fun: Fn, target: np.ndarray, decreasing: bool) -> np.ndarray:
    """Solve ``fun(x) = target`` for x > 0 elementwise, ``fun`` strictly monotone.

    Bisection runs on ``z = ln x``, starting from ``[2**-40, 2**40]`` and
    widening the bracket by 40 binary orders per step until it straddles the
    target. Raises :class:`BracketFailure` if that never happens.
    """
    t = np.atleast_1d(np.asarray(target, dtype=float))
    sign = -1.0 if decreasing else 1.0

    def g(z):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return sign * (fun(np.exp(z)) - t)

    lo = np.full(t.shape, _LOG_LO)
    hi = np.full(t.shape, _LOG_HI)
    step = -_LOG_LO
    # g increasing in z: need g(lo) <= 0 <= g(hi)
    while True:
        bad = ~(g(lo) <= 0)
        if not bad.any():
            break
        if lo[bad].min() - step < -_LOG_LIMIT:
            raise BracketFailure(
                f"{'decreasing' if decreasing else 'increasing'} map does not reach "
                f"{t[bad][0]!r} near 0"
            )
        lo[bad] -= step
    while True:
        bad = ~(g(hi) >= 0)
        if not bad.any():
            break
        if hi[bad].max() + step > _LOG_LIMIT:
            raise BracketFailure(
                f"{'decreasing' if decreasing else 'increasing'} map does not reach "
                f"{t[bad][0]!r} near infinity"
            )
        hi[bad] += step

    for _ in range(_MAX_BISECT):
        mid = 0.5 * (lo + hi)
        below = g(mid) <= 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid))):
            break
    return np.exp(0.5 * (lo + hi))


def inverse_marginal(u: UtilityFunction, y):
    """``I(y) = (u')^{-1}(y)`` for ``y > 0``."""
    y_arr = np.asarray(y, dtype=float)
    if u.inv_marginal is not None:
        return _scalar_or_array(u.inv_marginal(y_arr), y)
    x = _bisect_log(u.deriv, y_arr, decreasing=True).reshape(y_arr.shape)
    return _scalar_or_array(x, y)


def dual_value(u: UtilityFunction, y):
    """Convex dual ``u*(y) = u(I(y)) - y I(y)``."""
    y_arr = np.asarray(y, dtype=float)
    if u.dual is not None:
        return _scalar_or_array(u.dual(y_arr), y)
    x = np.asarray(inverse_marginal(u, y_arr))
    return _scalar_or_array(u.value(x) - y_arr * x, y)


def inverse_utility(u: UtilityFunction, v):
    """``u^{-1}(v)`` for ``v`` in the open range ``(u(0), u(inf))``."""
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr <= u.u_zero) or np.any(v_arr >= u.u_inf) or np.any(np.isnan(v_arr)):
        raise OutOfRange(
            f"{u.name}: value {v!r} outside the range ({u.u_zero}, {u.u_inf})"
        )
    if u.inverse is not None:
        return _scalar_or_array(u.inverse(v_arr), v)
    try:
        x = _bisect_log(u.value, v_arr, decreasing=False).reshape(v_arr.shape)
    except BracketFailure as exc:
        raise OutOfRange(f"{u.name}: value {v!r} not attained ({exc})") from exc
    return _scalar_or_array(x, v)


_AE_PROBE = 2.0 ** np.arange(10, 41)


def asymptotic_elasticity(u: UtilityFunction) -> Elasticity:
    """Asymptotic elasticity ``limsup x u'(x) / u(x)``.

    Exact for built-ins. Otherwise the maximum of ``x u'(x) / u(x)`` over
    ``x = 2**10 ... 2**40`` restricted to points where ``u(x) > 0``, flagged
    as an estimate. Shift ``u`` with :func:`affine_utility` first if it is
    not positive out there.
    """
    if u.elasticity is not None:
        return Elasticity(float(u.elasticity), False)
    x = _AE_PROBE
    ux = np.asarray(u.value(x), dtype=float)
    ok = ux > 0
    if not ok.any():
        raise NotEstimable(f"{u.name}: u(x) <= 0 on the whole probe range")
    ratio = x[ok] * np.asarray(u.deriv(x[ok])) / ux[ok]
    return Elasticity(float(ratio.max()), True)


@lru_cache(maxsize=256)
def _admissibility(u: UtilityFunction) -> Elasticity:
    try:
        return asymptotic_elasticity(u)
    except NotEstimable:
        # AE < 1 is invariant under affine maps, so shift u to be positive
        shift = 1.0 - float(u.value(np.array(_AE_PROBE[0])))
        return asymptotic_elasticity(affine_utility(u, 1.0, shift))


def check_admissible(u: UtilityFunction) -> Elasticity:
    """Ensure AE(u) < 1, warning when only an estimate near 1 is available."""
    try:
        ae = _admissibility(u)
    except NotEstimable:
        warnings.warn(f"{u.name}: asymptotic elasticity could not be estimated", RuntimeWarning)
        return Elasticity(math.nan, True)
    if not ae.estimated and ae.value >= 1:
        raise InadmissibleUtility(f"{u.name}: asymptotic elasticity {ae.value} >= 1")
    if ae.estimated and ae.value >= 1 - 1e-3:
        warnings.warn(
            f"{u.name}: estimated asymptotic elasticity {ae.value:.6g} is not safely below 1",
            RuntimeWarning,
        )
    return ae


def relative_risk_aversion(u: UtilityFunction, x):
    """Arrow-Pratt index ``-x u''(x) / u'(x)``.

    Uses ``u.deriv2`` when present, else a central difference of ``u'`` with
    step ``h = 1e-5 x``.
    """
    x_arr = np.asarray(x, dtype=float)
    if u.deriv2 is not None:
        d2 = u.deriv2(x_arr)
    else:
        h = 1e-5 * x_arr
        d2 = (u.deriv(x_arr + h) - u.deriv(x_arr - h)) / (2 * h)
    return _scalar_or_array(-x_arr * d2 / u.deriv(x_arr), x)


def without_closed_forms(u: UtilityFunction) -> UtilityFunction:
    """Copy of ``u`` that forces every numeric fallback path."""
    return replace(
        u,
        name=f"numeric({u.name})",
        deriv2=None,
        inv_marginal=None,
        dual=None,
        inverse=None,
        elasticity=None,
        is_log=False,
    )


BUILTINS = {
    "log": log_utility,
    "isoelastic": isoelastic_utility,
}
