"""Doubly stochastic operators on finite probability spaces.

An operator is stored as a dense kernel ``M`` acting on density values,
``(Pf)_i = sum_j M_ij f_j``. Preserving integrals and fixing the uniform
density translate into two families of linear constraints:

* columns: ``sum_i mu_i M_ij = mu_j``
* rows:    ``sum_j M_ij = 1``

plus entrywise nonnegativity. All three are checked on construction.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadLambda,
    IoFailure,
    LengthMismatch,
    NonConvergence,
    NotAPartition,
    NotDoublyStochastic,
    NotIntegralPreserving,
    NotMeasurePreserving,
    NotPositive,
    SpaceMismatch,
    ValidationError,
)
from .measure import REJECT_TOL, Density, MeasureSpace, _frozen, make_space

DRIFT_TOL = 1e-12
POISSON_TAIL = 1e-12
# uniformization is applied in slices with rate * dt at most this large,
# keeping exp(-rate * dt) well away from underflow
_MAX_RT = 50.0


@dataclass(frozen=True, eq=False)
class StochasticOperator:
    kernel: np.ndarray
    space: MeasureSpace
    descriptor: str = "operator"

    @property
    def n(self) -> int:
        return self.space.n

    def __matmul__(self, f: Density) -> Density:
        return apply(self, f)

    def __repr__(self):
        return f"StochasticOperator({self.descriptor}, n={self.n})"


def _residuals(m: np.ndarray, mu: np.ndarray):
    col = np.abs(mu @ m - mu)
    row = np.abs(m.sum(axis=1) - 1.0)
    return col, row


def _validate(m: np.ndarray, mu: np.ndarray, tol: float) -> None:
    if m.min(initial=0.0) < -tol:
        i, j = np.unravel_index(int(np.argmin(m)), m.shape)
        raise NotPositive(f"kernel entry ({i},{j}) is {m[i, j]!r} < 0")
    col, row = _residuals(m, mu)
    if col.max() > tol:
        j = int(np.argmax(col))
        raise NotIntegralPreserving(
            f"column {j}: sum_i mu_i M_ij - mu_j has residual {col[j]:.3g}"
        )
    if row.max() > tol:
        i = int(np.argmax(row))
        raise NotDoublyStochastic(f"row {i} sums to {m[i].sum()!r} (residual {row[i]:.3g})")


def _rebalance(m: np.ndarray, mu: np.ndarray, sweeps: int = 5) -> np.ndarray:
    """Remove rounding drift with a few Sinkhorn sweeps on ``diag(mu) M``."""
    m = np.clip(m, 0.0, None)
    for _ in range(sweeps):
        col, row = _residuals(m, mu)
        if max(col.max(), row.max()) <= DRIFT_TOL:
            break
        m = m / m.sum(axis=1, keepdims=True)
        m = m * (mu / (mu @ m))[None, :]
    return m


def make_operator(kernel, space: MeasureSpace, descriptor: str = "kernel") -> StochasticOperator:
    """Validate ``kernel`` as a doubly stochastic operator on ``space``.

    Violations beyond 1e-9 raise an error naming the first failed constraint
    family and its residual; smaller drift is rebalanced away.
    """
    m = np.asarray(kernel, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LengthMismatch(f"kernel must be square, got shape {m.shape}")
    if m.shape[0] != space.n:
        raise LengthMismatch(f"kernel is {m.shape[0]}x{m.shape[0]} but space has {space.n} atoms")
    if not np.all(np.isfinite(m)):
        raise NotPositive("kernel has non-finite entries")
    mu = space.weights
    _validate(m, mu, REJECT_TOL)
    m = _rebalance(m, mu)
    return StochasticOperator(_frozen(m), space, descriptor)


def identity_operator(space: MeasureSpace) -> StochasticOperator:
    return StochasticOperator(_frozen(np.eye(space.n)), space, "identity")


def mixing_operator(lam: float, space: MeasureSpace) -> StochasticOperator:
    """``Pf = (1 - lam) f + lam * 1``; exact for ``lam > 0``."""
    if not 0 <= lam <= 1:
        raise BadLambda(f"mixing weight must lie in [0, 1], got {lam!r}")
    n = space.n
    m = (1.0 - lam) * np.eye(n) + lam * np.tile(space.weights, (n, 1))
    return make_operator(m, space, f"mixing({lam:g})")


def conditional_expectation(partition: Sequence[Sequence[int]], space: MeasureSpace) -> StochasticOperator:
    """Averaging over the blocks of a partition of the atoms (0-based indices)."""
    n = space.n
    seen = np.zeros(n, dtype=int)
    for block in partition:
        for i in block:
            if not 0 <= int(i) < n:
                raise NotAPartition(f"atom index {i} out of range for {n} atoms")
            seen[int(i)] += 1
    if np.any(seen != 1) or any(len(b) == 0 for b in partition):
        raise NotAPartition("blocks must be nonempty, disjoint and cover every atom exactly once")
    mu = space.weights
    m = np.zeros((n, n))
    for block in partition:
        idx = np.array([int(i) for i in block])
        m[np.ix_(idx, idx)] = mu[idx] / mu[idx].sum()
    desc = "partition(" + "|".join(" ".join(str(int(i) + 1) for i in b) for b in partition) + ")"
    return make_operator(m, space, desc)


def permutation_operator(sigma: Sequence[int], space: MeasureSpace) -> StochasticOperator:
    """Transport the value at atom ``j`` to atom ``sigma[j]`` (0-based).

    Then ``Pf = f o sigma^{-1}`` and the adjoint is ``P*g = g o sigma``.
    """
    sigma = np.asarray(sigma, dtype=int)
    n = space.n
    if sigma.shape != (n,) or sorted(sigma.tolist()) != list(range(n)):
        raise ValidationError(f"{sigma.tolist()} is not a permutation of {n} atoms")
    mu = space.weights
    if np.any(np.abs(mu[sigma] - mu) > DRIFT_TOL):
        j = int(np.argmax(np.abs(mu[sigma] - mu)))
        raise NotMeasurePreserving(
            f"atom {j} (weight {mu[j]:g}) maps to atom {sigma[j]} (weight {mu[sigma[j]]:g})"
        )
    m = np.zeros((n, n))
    m[sigma, np.arange(n)] = 1.0
    return make_operator(m, space, "permutation(" + " ".join(str(s + 1) for s in sigma) + ")")


def parse_cycles(text: str, n: int) -> list[int]:
    """Parse 1-based cycle notation such as ``"(1 2)(3 4 5)"`` into a 0-based map."""
    sigma = list(range(n))
    body = text.strip()
    if body and not re.fullmatch(r"(\(\s*\d+(?:[\s,]+\d+)*\s*\)\s*)+", body):
        raise ValidationError(f"bad cycle notation {text!r}")
    used = set()
    for group in re.findall(r"\(([^)]*)\)", body):
        cyc = [int(t) - 1 for t in re.split(r"[\s,]+", group.strip()) if t]
        for a in cyc:
            if not 0 <= a < n or a in used:
                raise ValidationError(f"cycle {group!r} repeats or exceeds atom range 1..{n}")
            used.add(a)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            sigma[a] = b
    return sigma


def sinkhorn_random(space: MeasureSpace, seed: int, max_sweeps: int = 10_000) -> StochasticOperator:
    """Random strictly positive doubly stochastic operator, deterministic per seed.

    Kernel entries start uniform on [0.1, 1]; rows and columns are then
    rescaled alternately until both residuals drop below 1e-11.
    """
    rng = np.random.default_rng(seed)
    n = space.n
    mu = space.weights
    m = rng.uniform(0.1, 1.0, size=(n, n))
    for _ in range(max_sweeps):
        m = m / m.sum(axis=1, keepdims=True)
        m = m * (mu / (mu @ m))[None, :]
        col, row = _residuals(m, mu)
        if col.max() < 1e-11 and row.max() < 1e-11:
            break
    else:
        raise NonConvergence("Sinkhorn balancing did not converge")
    return make_operator(m, space, f"sinkhorn(seed={seed})")


def _check_same(p: StochasticOperator, q) -> None:
    if not p.space.same_as(q.space):
        raise SpaceMismatch("operator and argument live on different spaces")


def apply(p: StochasticOperator, f: Density) -> Density:
    """``Pf``, renormalised to remove rounding drift."""
    _check_same(p, f)
    v = np.clip(p.kernel @ f.values, 0.0, None)
    total = float(v @ f.space.weights)
    return Density(_frozen(v / total), f.space)


def adjoint_apply(p: StochasticOperator, g) -> np.ndarray:
    """``(P*g)_j = sum_i mu_i M_ij g_i / mu_j``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (p.n,):
        raise LengthMismatch(f"expected {p.n} values, got shape {g.shape}")
    mu = p.space.weights
    return ((mu * g) @ p.kernel) / mu


def compose(p: StochasticOperator, q: StochasticOperator) -> StochasticOperator:
    """``P o Q`` (apply ``Q`` first)."""
    _check_same(p, q)
    m = _rebalance(p.kernel @ q.kernel, p.space.weights)
    _validate(m, p.space.weights, REJECT_TOL)
    return StochasticOperator(_frozen(m), p.space, f"{p.descriptor}*{q.descriptor}")


def power(p: StochasticOperator, n: int) -> StochasticOperator:
    """``P^n`` by repeated squaring."""
    if n < 0:
        raise ValidationError(f"power must be >= 0, got {n}")
    mu = p.space.weights
    result = np.eye(p.n)
    base = p.kernel.copy()
    k = n
    while k:
        if k & 1:
            result = _rebalance(result @ base, mu)
        k >>= 1
        if k:
            base = _rebalance(base @ base, mu)
    _validate(result, mu, REJECT_TOL)
    return StochasticOperator(_frozen(result), p.space, f"{p.descriptor}^{n}")


# ---------------------------------------------------------------------------
# continuous time


@dataclass(frozen=True, eq=False)
class Semigroup:
    """``P_t = exp(t Q)`` with generator ``Q = rate * (M - I)``."""

    base: StochasticOperator
    rate: float

    @property
    def space(self) -> MeasureSpace:
        return self.base.space

    @property
    def generator(self) -> np.ndarray:
        return self.rate * (self.base.kernel - np.eye(self.base.n))

    @property
    def descriptor(self) -> str:
        return f"semigroup(rate={self.rate:g};{self.base.descriptor})"


def make_semigroup(base: StochasticOperator, rate: float = 1.0) -> Semigroup:
    if not rate > 0 or math.isinf(rate):
        raise ValidationError(f"rate must be a positive finite number, got {rate!r}")
    s = Semigroup(base, float(rate))
    q = s.generator
    if np.abs(q.sum(axis=1)).max() > REJECT_TOL:
        raise NotDoublyStochastic("generator rows do not sum to zero")
    for t in (0.1, 1.0, 10.0):
        k = _uniformized(s, t, np.eye(base.n))
        _validate(k, base.space.weights, REJECT_TOL)
    return s


def _poisson_weights(mean: float) -> np.ndarray:
    """Poisson(mean) probabilities up to a tail mass below 1e-12."""
    w = [math.exp(-mean)]
    total = w[0]
    k = 0
    while 1.0 - total >= POISSON_TAIL and k < 10_000:
        k += 1
        w.append(w[-1] * mean / k)
        total += w[-1]
    return np.array(w)


def _uniformized(s: Semigroup, t: float, x: np.ndarray) -> np.ndarray:
    """``exp(t Q) x`` for a vector or matrix ``x``."""
    if t < 0:
        raise ValidationError(f"time must be >= 0, got {t!r}")
    if t == 0:
        return x.copy()
    m = s.base.kernel
    slices = max(1, math.ceil(s.rate * t / _MAX_RT))
    weights = _poisson_weights(s.rate * t / slices)
    for _ in range(slices):
        term = x
        acc = weights[0] * term
        for w in weights[1:]:
            term = m @ term
            acc = acc + w * term
        x = acc / weights.sum()
    return x


def semigroup_apply(s: Semigroup, t: float, f: Density) -> Density:
    """``P_t f`` via uniformization, a Poisson mixture of powers of ``M``."""
    _check_same(s.base, f)
    v = np.clip(_uniformized(s, float(t), f.values), 0.0, None)
    return Density(_frozen(v / float(v @ f.space.weights)), f.space)


def semigroup_operator(s: Semigroup, t: float) -> StochasticOperator:
    k = _rebalance(_uniformized(s, float(t), np.eye(s.base.n)), s.space.weights)
    _validate(k, s.space.weights, REJECT_TOL)
    return StochasticOperator(_frozen(k), s.space, f"{s.descriptor}@t={t:g}")


# ---------------------------------------------------------------------------
# kernel CSV


def load_kernel_csv(path) -> StochasticOperator:
    """Read a dense kernel whose first line is ``n,mu_1,...,mu_n``."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise IoFailure(f"cannot read kernel file {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty kernel file")
    try:
        header = [float(c) for c in rows[0]]
        n = int(header[0])
        if n != header[0] or len(header) != n + 1:
            raise ValueError("header must be n followed by n weights")
        body = np.array([[float(c) for c in r] for r in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed kernel CSV ({exc})") from exc
    if body.shape != (n, n):
        raise LengthMismatch(f"{path}: expected {n}x{n} kernel, got shape {body.shape}")
    space = make_space(header[1:])
    return make_operator(body, space, f"kernel({Path(path).name})")


def save_kernel_csv(p: StochasticOperator, path) -> None:
    from .numfmt import fmt

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(p.n)] + [fmt(x) for x in p.space.weights])
        for row in p.kernel:
            w.writerow([fmt(x) for x in row])
