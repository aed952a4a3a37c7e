"""Finite probability spaces and densities on them.

A :class:`MeasureSpace` is a finite set of atoms carrying strictly positive
weights ``mu`` that sum to one. A :class:`Density` stores the raw values
``f_i`` (the Radon-Nikodym derivative with respect to ``mu``), not the
masses ``f_i * mu_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZero,
    BadExponent,
    EmptySpace,
    LengthMismatch,
    NegativeValue,
    NonpositiveWeight,
    NotADensity,
    NotNormalized,
    SpaceMismatch,
)

#: user-facing rejection threshold
REJECT_TOL = 1e-9
#: internal invariant threshold, enforced after renormalisation
INVARIANT_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite probability space; build with :func:`make_space`."""

    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __len__(self) -> int:
        return self.n

    def same_as(self, other: "MeasureSpace") -> bool:
        return self is other or (
            self.n == other.n and np.array_equal(self.weights, other.weights)
        )

    def __eq__(self, other):
        if not isinstance(other, MeasureSpace):
            return NotImplemented
        return self.same_as(other)

    def __hash__(self):
        return hash(self.weights.tobytes())

    def __repr__(self):
        return f"MeasureSpace(n={self.n}, weights={np.array2string(self.weights, precision=6)})"


@dataclass(frozen=True, eq=False)
class Density:
    """A nonnegative function with unit integral; build with :func:`make_density`."""

    values: np.ndarray
    space: MeasureSpace

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.space.weights

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of atoms where the density is strictly positive."""
        return self.values > 0

    def __repr__(self):
        return f"Density({np.array2string(self.values, precision=6)})"


def make_space(weights) -> MeasureSpace:
    """Validate weights and return a :class:`MeasureSpace`.

    Weights whose sum deviates from one by at most 1e-9 are renormalised
    exactly; larger deviations raise :class:`NotNormalized`.
    """
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0:
        raise EmptySpace("measure space needs at least one atom")
    if not np.all(np.isfinite(w)):
        raise NonpositiveWeight("weights must be finite")
    if np.any(w <= 0):
        i = int(np.argmax(w <= 0))
        raise NonpositiveWeight(f"weight {i} is {w[i]!r}; all weights must be > 0")
    total = w.sum()
    if abs(total - 1.0) > REJECT_TOL:
        raise NotNormalized(f"weights sum to {total!r}, expected 1")
    return MeasureSpace(_frozen(w / total))


def uniform_space(n: int) -> MeasureSpace:
    return make_space(np.full(n, 1.0 / n))


def _check_space(a: MeasureSpace, b: MeasureSpace) -> None:
    if not a.same_as(b):
        raise SpaceMismatch("objects live on different measure spaces")


def make_density(values, space: MeasureSpace) -> Density:
    """Validate ``values`` as a density on ``space``.

    The integral must equal one within 1e-9; the stored values are then
    rescaled so the integral is one to rounding.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.shape[0] != space.n:
        raise LengthMismatch(f"got {v.shape[0]} values for a space with {space.n} atoms")
    if not np.all(np.isfinite(v)):
        raise NegativeValue("density values must be finite")
    if np.any(v < 0):
        i = int(np.argmax(v < 0))
        raise NegativeValue(f"value {i} is {v[i]!r}; densities are nonnegative")
    total = float(v @ space.weights)
    if abs(total - 1.0) > REJECT_TOL:
        raise NotADensity(f"integral is {total!r}, expected 1")
    return Density(_frozen(v / total), space)


def normalize(values, space: MeasureSpace) -> Density:
    """Rescale nonnegative ``values`` to unit integral."""
    v = np.asarray(values, dtype=float).ravel()
    if v.shape[0] != space.n:
        raise LengthMismatch(f"got {v.shape[0]} values for a space with {space.n} atoms")
    if np.any(v < 0):
        raise NegativeValue("cannot normalise negative values")
    total = float(v @ space.weights)
    if not total > 0:
        raise AllZero("all values are zero")
    return Density(_frozen(v / total), space)


def uniform_density(space: MeasureSpace) -> Density:
    return Density(_frozen(np.ones(space.n)), space)


def point_density(space: MeasureSpace, k: int) -> Density:
    """All mass on atom ``k``: value ``1 / mu_k`` there, zero elsewhere."""
    v = np.zeros(space.n)
    v[k] = 1.0 / space.weights[k]
    return Density(_frozen(v), space)


def random_density(space: MeasureSpace, rng: np.random.Generator, max_value=None) -> Density:
    """Draw a density whose masses are Dirichlet(1, ..., 1).

    If ``max_value`` is given, redraw until ``max f_i <= max_value``.
    """
    for _ in range(10_000):
        masses = rng.dirichlet(np.ones(space.n))
        v = masses / space.weights
        if max_value is None or v.max() <= max_value:
            return normalize(v, space)
    raise ValueError(f"could not draw a density bounded by {max_value}")


def l1_distance(f: Density, g: Density) -> float:
    """``sum_i mu_i |f_i - g_i|``."""
    _check_space(f.space, g.space)
    return float(np.abs(f.values - g.values) @ f.space.weights)


def l1_to_uniform(f: Density) -> float:
    return float(np.abs(f.values - 1.0) @ f.space.weights)


def lp_norm(f: Density, alpha: float) -> float:
    """L^alpha norm (a pseudonorm for alpha < 1); ``alpha=np.inf`` gives the max."""
    if not alpha > 0:
        raise BadExponent(f"exponent must be > 0, got {alpha!r}")
    if np.isinf(alpha):
        return float(np.max(np.abs(f.values)))
    return float((np.abs(f.values) ** alpha @ f.space.weights) ** (1.0 / alpha))


def expectation(f: Density, g) -> float:
    """Integral of ``g`` against the probability measure ``f mu``."""
    g = np.asarray(g, dtype=float).ravel()
    if g.shape[0] != f.n:
        raise LengthMismatch(f"got {g.shape[0]} values for a space with {f.n} atoms")
    return float(g @ f.masses)
