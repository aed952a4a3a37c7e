"""Utility maximizing entropy.

For a density ``f`` and utility ``u`` the maximal expected utility is

    N_u(f) = sup { sum_i u(w_i) f_i mu_i : w a density }

and the entropy is ``H_u(f) = ln u^{-1}(N_u(f))``. On a finite space the
supremum is attained at ``w* = I(Lambda / f)`` where the multiplier
``Lambda`` is the unique root of ``sum_{f_i > 0} I(Lambda / f_i) mu_i = 1``.
Atoms with ``f_i = 0`` are dropped from the multiplier equation and get
``w*_i = 0``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZero,
    BadC,
    BadExponent,
    BracketFailure,
    Degenerate,
    DimensionTooLarge,
    NonConvergence,
    NumericalError,
)
from .measure import Density, l1_to_uniform, normalize
from .utility import (
    UtilityFunction,
    check_admissible,
    dual_value,
    inverse_marginal,
    inverse_utility,
)

_MAX_EXPANSIONS = 100
_MAX_ITER = 500
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class EntropyResult:
    """Output of :func:`n_u`.

    ``dual_check`` is the gap between the primal value and the dual
    expression ``sum u*(Lambda/f) f mu + Lambda``; it should be ~0.
    """

    n_value: float
    h_value: float
    multiplier: float
    optimizer: Density
    dual_check: float

    def to_record(self) -> dict:
        return {
            "n_value": self.n_value,
            "h_value": self.h_value,
            "lambda": self.multiplier,
            "optimizer": self.optimizer.values.tolist(),
            "dual_check": self.dual_check,
        }


def _positive_part(f: Density):
    pos = f.values > 0
    if not pos.any():
        raise AllZero("density has no positive atom")
    return f.values[pos], f.space.weights[pos], pos


def budget(f: Density, u: UtilityFunction, lam: float) -> float:
    """``sum_{f_i > 0} I(lam / f_i) mu_i``, strictly decreasing in ``lam``."""
    fp, mp, _ = _positive_part(f)
    with np.errstate(over="ignore", divide="ignore"):
        y = lam / fp
    return float(np.asarray(inverse_marginal(u, y)) @ mp)


def solve_lambda(f: Density, u: UtilityFunction) -> float:
    """Multiplier ``Lambda_f`` solving the budget equation.

    Starts from ``u'(1)``, which is exact for the uniform density, widens the
    bracket by a factor 4 per step and then bisects on ``ln Lambda``.
    """
    check_admissible(u)
    fp, mp, _ = _positive_part(f)

    def resid(lam):
        with np.errstate(over="ignore", divide="ignore"):
            y = lam / fp
        return float(np.asarray(inverse_marginal(u, y)) @ mp) - 1.0

    lam0 = float(u.deriv(np.array(1.0)))
    r0 = resid(lam0)
    if r0 == 0.0:
        return lam0
    lo = hi = lam0
    # residual decreases in lam: need resid(lo) > 0 > resid(hi)
    for _ in range(_MAX_EXPANSIONS):
        if r0 > 0:
            lo, hi = hi, hi * 4.0
            r = resid(hi)
            if r <= 0:
                if r == 0:
                    return hi
                break
        else:
            lo, hi = lo / 4.0, lo
            r = resid(lo)
            if r >= 0:
                if r == 0:
                    return lo
                break
    else:
        raise BracketFailure(f"{u.name}: no bracket for the multiplier after {_MAX_EXPANSIONS} expansions")

    zlo, zhi = math.log(lo), math.log(hi)
    best, best_r = None, math.inf
    for _ in range(_MAX_ITER):
        zm = 0.5 * (zlo + zhi)
        lam = math.exp(zm)
        r = resid(lam)
        if abs(r) < best_r:
            best, best_r = lam, abs(r)
        if r == 0.0 or zhi - zlo <= 2e-16 * max(1.0, abs(zm)):
            break
        if r > 0:
            zlo = zm
        else:
            zhi = zm
    if best_r > _RESIDUAL_TOL:
        raise NonConvergence(f"{u.name}: multiplier residual {best_r:.3g} after bisection")
    return best


def n_u(f: Density, u: UtilityFunction) -> EntropyResult:
    """Maximal expected utility, entropy, multiplier and optimizer of ``f``."""
    fp, mp, pos = _positive_part(f)
    lam = solve_lambda(f, u)
    with np.errstate(over="ignore", divide="ignore"):
        y = lam / fp
    w = np.asarray(inverse_marginal(u, y), dtype=float)
    fm = fp * mp
    primal = _vanishing_sum(lambda: u.value(w), fm, y)
    dual = _vanishing_sum(lambda: dual_value(u, y), fm, y) + lam
    full = np.zeros(f.n)
    full[pos] = w
    h = _entropy_from_n(primal, u)
    return EntropyResult(
        n_value=primal,
        h_value=h,
        multiplier=lam,
        optimizer=normalize(full, f.space),
        dual_check=abs(primal - dual),
    )


def _vanishing_sum(terms, fm: np.ndarray, y: np.ndarray) -> float:
    """``sum terms * fm`` where atoms with ``Lambda / f`` overflowing count as 0.

    Both ``u(I(Lambda/f)) f`` and ``u*(Lambda/f) f`` tend to 0 as ``f -> 0``;
    subnormal ``f`` would otherwise produce ``0 * inf``.
    """
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        t = np.asarray(terms(), dtype=float) * fm
    t = np.where(np.isinf(y) & ~np.isfinite(t), 0.0, t)
    return float(t.sum())


def _entropy_from_n(n_value: float, u: UtilityFunction) -> float:
    if u.is_log:
        h = n_value
    else:
        h = math.log(inverse_utility(u, n_value))
    if h < -1e-9:
        raise NumericalError(f"{u.name}: negative entropy {h!r}")
    return max(h, 0.0)


def h_u(f: Density, u: UtilityFunction) -> float:
    return n_u(f, u).h_value


def entropy_from_n(n_value: float, u: UtilityFunction) -> float:
    """``ln u^{-1}(N)``; +inf when ``N`` reaches ``u(inf)``."""
    if n_value >= u.u_inf:
        return math.inf
    if u.is_log:
        return n_value
    return math.log(inverse_utility(u, n_value))


def shannon_entropy(f: Density) -> float:
    """``sum f_i ln f_i mu_i`` with ``0 ln 0 = 0``."""
    v = f.values
    pos = v > 0
    return float((v[pos] * np.log(v[pos])) @ f.space.weights[pos])


def renyi_entropy(f: Density, alpha: float) -> float:
    """Renyi entropy ``ln(sum f^alpha mu) / (alpha - 1)``."""
    if not alpha > 0 or alpha == 1 or math.isinf(alpha):
        raise BadExponent(f"Renyi order must lie in (0,1) or (1,inf), got {alpha!r}")
    v = f.values
    pos = v > 0
    return float(math.log((v[pos] ** alpha) @ f.space.weights[pos]) / (alpha - 1.0))


def pinsker_gap(f: Density) -> float:
    """``H(f) - ||f - 1||_1^2 / 2``; nonnegative by Pinsker's inequality."""
    return shannon_entropy(f) - 0.5 * l1_to_uniform(f) ** 2


def bound_lambda(f: Density, u: UtilityFunction, lam: float) -> float:
    """Upper bound ``sum u*(lam/f) f mu + lam`` on ``N_u(f)`` for any ``lam > 0``."""
    fp, mp, _ = _positive_part(f)
    with np.errstate(over="ignore", divide="ignore"):
        y = lam / fp
    return _vanishing_sum(lambda: dual_value(u, y), fp * mp, y) + lam


def bound_linf(f: Density, u: UtilityFunction | None = None) -> float:
    """``ln max f``, an upper bound on every ``H_u(f)``."""
    return math.log(float(np.max(f.values)))


def quantitative_bound(f: Density, u: UtilityFunction, c: float = 0.5) -> float:
    """Upper bound on ``N_u(f)`` linear in ``||f - 1||_1``.

    ``u'(1) I(u'((K - c)/(1 - c)) c / K) ||f - 1||_1 + u(1)`` with
    ``K = max f``.
    """
    if not 0 < c < 1:
        raise BadC(f"C must lie in (0, 1), got {c!r}")
    check_admissible(u)
    k = float(np.max(f.values))
    return _bound_coefficient(u, k, c) * l1_to_uniform(f) + float(u.value(np.array(1.0)))


def _bound_coefficient(u: UtilityFunction, k: float, c: float) -> float:
    k = max(k, 1.0)
    arg = float(u.deriv(np.array((k - c) / (1.0 - c)))) * c / k
    return float(u.deriv(np.array(1.0))) * float(inverse_marginal(u, arg))


def two_point_value(p: float, q: float, u: UtilityFunction) -> float:
    """Best expected utility on a two-atom space.

    Maximises ``u(w1) p + u(w2) (1 - p)`` subject to
    ``w1 q + w2 (1 - q) = 1`` with ``w1, w2 >= 0``.
    """
    if not 0 < q < 1:
        raise Degenerate(f"q must lie in (0, 1), got {q!r}")
    if not 0 <= p <= 1:
        raise Degenerate(f"p must lie in [0, 1], got {p!r}")

    def val(x):
        return float(u.value(np.array(x)))

    if p == 0:
        return val(1.0 / (1.0 - q))
    if p == 1:
        return val(1.0 / q)

    def slope(w1):
        w2 = (1.0 - w1 * q) / (1.0 - q)
        return p * float(u.deriv(np.array(w1))) - (1.0 - p) * q / (1.0 - q) * float(
            u.deriv(np.array(w2))
        )

    lo, hi = 0.0, 1.0 / q
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    w1 = 0.5 * (lo + hi)
    w2 = (1.0 - w1 * q) / (1.0 - q)
    return p * val(w1) + (1.0 - p) * val(w2)


# ---------------------------------------------------------------------------
# brute-force oracle


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    if parts == 2:
        i = np.arange(total + 1)
        return np.column_stack([i, total - i])
    if parts == 3:
        i = np.arange(total + 1)
        counts = total + 1 - i
        a = np.repeat(i, counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        b = np.arange(a.size) - starts
        return np.column_stack([a, b, total - a - b])
    raise ValueError("parts must be <= 3")


def _objective(u: UtilityFunction, w: np.ndarray, fm: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.asarray(u.value(w), dtype=float)
    val = np.where(w > 0, val, u.u_zero)
    # 0 * (-inf) is taken as 0 only where the weight is zero, which never
    # happens here since fm > 0 on the support
    return np.where(np.isnan(val), -np.inf, val) @ fm


def oracle_n_u(f: Density, u: UtilityFunction, resolution: int = 1000) -> float:
    """Brute-force ``N_u(f)`` for tiny spaces.

    Evaluates the objective on the lattice of densities whose masses on the
    support of ``f`` are multiples of ``1 / resolution``, then polishes the
    best lattice point with pairwise mass exchanges of shrinking size.
    Independent of the multiplier machinery: only ``u`` itself is called.
    """
    if f.n > 4:
        raise DimensionTooLarge(f"oracle supports at most 4 atoms, got {f.n}")
    if resolution < 100:
        raise ValueError(f"resolution must be >= 100, got {resolution}")
    pos = f.values > 0
    mu = f.space.weights[pos]
    fm = f.values[pos] * mu
    k = int(pos.sum())
    R = int(resolution)

    best_val, best_m = -np.inf, None
    heads = [()] if k <= 3 else [(c,) for c in range(R + 1)]
    for head in heads:
        rest = R - sum(head)
        tail = _compositions(rest, min(k, 3))
        if head:
            tail = np.column_stack([np.full(tail.shape[0], head[0]), tail])
        masses = tail / R
        vals = _objective(u, masses / mu, fm)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_m = float(vals[j]), masses[j].copy()

    m = best_m
    cur = best_val
    step = 1.0 / R
    for _ in range(50):
        for i, j in itertools.permutations(range(k), 2):
            for _move in range(10_000):
                if m[i] < step:
                    break
                trial = m.copy()
                trial[i] -= step
                trial[j] += step
                v = float(_objective(u, trial / mu, fm))
                if v > cur:
                    m, cur = trial, v
                else:
                    break
        step *= 0.5
    return cur
