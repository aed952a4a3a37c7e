"""Entropy along trajectories of doubly stochastic dynamics.

Provides discrete and continuous-time evolution with per-step entropies, a
checker for monotone entropy, a finite-horizon exactness probe that
cross-checks the L1 and entropy criteria, and a side-by-side report of the
L1 distance, the entropy and the linear upper bound on the entropy.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .entropy import _bound_coefficient, entropy_from_n, n_u, quantitative_bound
from .errors import CriteriaDisagreement, UEntropyError, ValidationError
from .markov import Semigroup, StochasticOperator, apply, semigroup_apply
from .measure import Density, l1_to_uniform, lp_norm, point_density, random_density
from .numfmt import fmt, jsonable
from .utility import UtilityFunction, check_admissible

H_THEOREM_TOL = 1e-10
# beyond this many steps, only every k-th density is kept
DENSE_HORIZON = 10_000
MAX_STORED_REALS = 100_000


@dataclass(frozen=True)
class TrajectoryStep:
    index: float
    density: Density
    entropies: dict
    l1: float

    @property
    def bound(self) -> float:
        """``ln max f``, an upper bound on every entropy column."""
        return math.log(float(np.max(self.density.values)))


@dataclass
class Trajectory:
    steps: list
    operator_descriptor: str
    utilities: list
    time_based: bool = False

    def __len__(self):
        return len(self.steps)

    @property
    def indices(self) -> np.ndarray:
        return np.array([s.index for s in self.steps])

    @property
    def l1(self) -> np.ndarray:
        return np.array([s.l1 for s in self.steps])

    def entropy(self, name: str) -> np.ndarray:
        return np.array([s.entropies[name] for s in self.steps])

    def header(self) -> list:
        first = "time" if self.time_based else "step"
        return [first, "l1"] + [f"H:{u}" for u in self.utilities] + ["bound"]

    def rows(self) -> list:
        out = []
        for s in self.steps:
            idx = fmt(s.index) if self.time_based else str(int(s.index))
            out.append(
                [idx, fmt(s.l1)] + [fmt(s.entropies[u]) for u in self.utilities] + [fmt(s.bound)]
            )
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            w.writerows(self.rows())


def read_trajectory_csv(path) -> dict:
    """Load a trajectory CSV into ``{column name: float array}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = list(zip(*[[float(c) for c in row] for row in reader]))
    return {h: np.array(c) for h, c in zip(header, cols)}


def _entropies(f: Density, utilities: Sequence[UtilityFunction], where: str) -> dict:
    out = {}
    for u in utilities:
        try:
            out[u.name] = n_u(f, u).h_value
        except UEntropyError as exc:
            raise type(exc)(f"{where}: {exc}") from exc
    return out


def _stride(n_steps: int, n_atoms: int) -> int:
    if n_steps <= DENSE_HORIZON:
        return 1
    return max(1, math.ceil((n_steps + 1) * n_atoms / MAX_STORED_REALS))


def evolve(
    p: StochasticOperator,
    f: Density,
    n_steps: int,
    utilities: Sequence[UtilityFunction],
) -> Trajectory:
    """Iterate ``f, Pf, P^2 f, ...`` recording entropies and L1 distances.

    Horizons above 10^4 keep only every k-th step, with k chosen so at most
    ~10^5 density values are stored; the final step is always kept.
    """
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    names = [u.name for u in utilities]
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate utility descriptors: {names}")
    stride = _stride(n_steps, f.n)
    steps = []
    g = f
    for k in range(n_steps + 1):
        if k > 0:
            g = apply(p, g)
        if k % stride == 0 or k == n_steps:
            steps.append(TrajectoryStep(k, g, _entropies(g, utilities, f"step {k}"), l1_to_uniform(g)))
    return Trajectory(steps, p.descriptor, names)


def semigroup_evolve(
    s: Semigroup,
    f: Density,
    times: Sequence[float],
    utilities: Sequence[UtilityFunction],
) -> Trajectory:
    """Sample ``P_t f`` at increasing ``times``, stepping by time differences."""
    times = [float(t) for t in times]
    if not times:
        raise ValidationError("times must be nonempty")
    if times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError("times must be >= 0 and strictly increasing")
    names = [u.name for u in utilities]
    steps = []
    g, t_prev = f, 0.0
    for t in times:
        g = semigroup_apply(s, t - t_prev, g)
        t_prev = t
        steps.append(TrajectoryStep(t, g, _entropies(g, utilities, f"t={t:g}"), l1_to_uniform(g)))
    return Trajectory(steps, s.descriptor, names, time_based=True)


@dataclass
class HTheoremReport:
    passed: bool
    max_increase: dict
    max_decrease: dict
    worst_step: dict
    tol: float = H_THEOREM_TOL

    def failures(self) -> list:
        return [
            f"{u}: entropy rises by {inc:.3g} at step {self.worst_step[u]}"
            for u, inc in self.max_increase.items()
            if inc > self.tol
        ]


def h_theorem_check(traj: Trajectory, tol: float = H_THEOREM_TOL) -> HTheoremReport:
    """Largest one-step entropy increase per utility; passes iff all <= ``tol``."""
    if not traj.steps:
        raise ValidationError("empty trajectory")
    inc, dec, where = {}, {}, {}
    idx = traj.indices
    for u in traj.utilities:
        h = traj.entropy(u)
        d = np.diff(h)
        if d.size == 0:
            inc[u], dec[u], where[u] = 0.0, 0.0, idx[0]
            continue
        j = int(np.argmax(d))
        inc[u] = max(float(d[j]), 0.0)
        dec[u] = max(float(-d.min()), 0.0)
        where[u] = idx[j + 1]
    passed = all(v <= tol for v in inc.values())
    return HTheoremReport(passed, inc, dec, where, tol)


# ---------------------------------------------------------------------------
# exactness


def entropy_threshold(u: UtilityFunction, k: float, l1_threshold: float, c: float = 0.5) -> float:
    """Image of an L1 threshold under the linear entropy bound.

    Any density with ``max f <= k`` and ``||f - 1||_1 <= l1_threshold`` has
    ``H_u(f)`` at most this value.
    """
    n_thr = _bound_coefficient(u, k, c) * l1_threshold + float(u.value(np.array(1.0)))
    return entropy_from_n(n_thr, u)


def _stalled(series: np.ndarray, tol: float = 1e-10) -> bool:
    mid = series[len(series) // 2]
    return bool(series[-1] >= mid - tol)


@dataclass
class ProbeVerdict:
    classification: str
    evidence: dict
    horizon: int
    witnesses: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "classification": self.classification,
            "evidence": self.evidence,
            "horizon": self.horizon,
            "witnesses": self.witnesses,
        }

    def to_json(self) -> str:
        return json.dumps(jsonable(self.to_record()), indent=2, sort_keys=True)


def probe_family(space, seed: int = 0, n_random: int = 20) -> list:
    """Point-mass densities on every atom followed by seeded random densities."""
    rng = np.random.default_rng(seed)
    probes = [(f"point:{k + 1}", point_density(space, k)) for k in range(space.n)]
    probes += [(f"random:{i}", random_density(space, rng)) for i in range(n_random)]
    return probes


def exactness_probe(
    p: StochasticOperator,
    horizon: int,
    threshold: float,
    utilities: Sequence[UtilityFunction],
    seed: int = 0,
    n_random: int = 20,
) -> ProbeVerdict:
    """Finite-horizon evidence on whether ``P^n f -> 1`` for every density.

    Every probe is evolved for ``horizon`` steps and judged twice: by its
    final L1 distance against ``threshold``, and by its final entropies
    against the mapped entropy thresholds. The two judgements must not
    contradict each other.

    Returns
    -------
    ProbeVerdict
        ``exact-consistent`` if every probe ends within both thresholds,
        ``not-exact`` if some probe's L1 distance stalls above the threshold
        over the last half of the horizon, ``inconclusive`` otherwise.
    """
    if horizon < 10:
        raise ValidationError(f"horizon must be >= 10, got {horizon}")
    if not threshold > 0:
        raise ValidationError(f"threshold must be > 0, got {threshold!r}")
    for u in utilities:
        check_admissible(u)
    names = [u.name for u in utilities]

    l1_ok, h_ok = True, True
    l1_witnesses, h_witnesses = [], []
    max_l1 = 0.0
    max_h = {u: 0.0 for u in names}
    h_thr_min = {u: math.inf for u in names}
    for label, f in probe_family(p.space, seed, n_random):
        traj = evolve(p, f, horizon, utilities)
        l1 = traj.l1
        max_l1 = max(max_l1, float(l1[-1]))
        if not l1[-1] < threshold:
            l1_ok = False
            if _stalled(l1):
                l1_witnesses.append({"probe": label, "values": f.values.tolist(), "final_l1": float(l1[-1])})
        k0 = float(np.max(f.values))
        for u in utilities:
            h = traj.entropy(u.name)
            thr = entropy_threshold(u, k0, threshold)
            h_thr_min[u.name] = min(h_thr_min[u.name], thr)
            max_h[u.name] = max(max_h[u.name], float(h[-1]))
            if not h[-1] <= thr:
                h_ok = False
                if _stalled(h):
                    h_witnesses.append({"probe": label, "utility": u.name, "final_entropy": float(h[-1])})

    l1_class = "exact-consistent" if l1_ok else ("not-exact" if l1_witnesses else "inconclusive")
    h_class = "exact-consistent" if h_ok else ("not-exact" if h_witnesses else "inconclusive")
    if l1_ok and not h_ok:
        raise CriteriaDisagreement(
            "every probe is within the L1 threshold but some entropy exceeds its mapped threshold"
        )
    if {l1_class, h_class} == {"exact-consistent", "not-exact"}:
        raise CriteriaDisagreement(f"L1 criterion says {l1_class}, entropy criterion says {h_class}")

    if l1_ok and h_ok:
        classification = "exact-consistent"
    elif l1_witnesses:
        classification = "not-exact"
    else:
        classification = "inconclusive"
    evidence = {
        "max_final_l1": max_l1,
        "max_final_entropy": max_h,
        "entropy_threshold": h_thr_min,
        "l1_threshold": threshold,
        "l1_criterion": l1_class,
        "entropy_criterion": h_class,
        "operator": p.descriptor,
    }
    return ProbeVerdict(classification, evidence, horizon, l1_witnesses)


# ---------------------------------------------------------------------------
# side-by-side report


def _trend(series: np.ndarray, zero_tol: float) -> str:
    if abs(series[-1]) <= zero_tol:
        return "zero"
    mid = series[len(series) // 2]
    if series[-1] < mid * (1 - 1e-6):
        return "decaying"
    return "stalled"


@dataclass
class EquivalenceReport:
    utility: str
    rows: list
    l1_trend: str
    entropy_trend: str

    @property
    def columns(self) -> list:
        return ["step", "l1", "n_value", "h_value", "n_bound", "h_bound", "norm_alpha"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow(
                    [str(r["step"])]
                    + [fmt(r[c]) if r[c] is not None else "" for c in self.columns[1:]]
                )


def equivalence_report(
    p: StochasticOperator, f: Density, u: UtilityFunction, horizon: int
) -> EquivalenceReport:
    """Pair ``||P^n f - 1||_1`` with ``H_u(P^n f)`` and its linear upper bound.

    Raises :class:`CriteriaDisagreement` if at some step ``N_u`` leaves the
    interval ``[u(1), bound]``, or if one column tends to zero while the
    other stalls.
    """
    check_admissible(u)
    traj = evolve(p, f, horizon, [u])
    u1 = float(u.value(np.array(1.0)))
    alpha = u.renyi_order
    rows = []
    for s in traj.steps:
        res = n_u(s.density, u)
        nb = quantitative_bound(s.density, u, 0.5)
        if res.n_value < u1 - 1e-9 * max(1.0, abs(u1)) or res.n_value > nb + 1e-9 * max(1.0, abs(nb)):
            raise CriteriaDisagreement(
                f"step {s.index}: N_u = {res.n_value!r} outside [u(1), bound] = [{u1!r}, {nb!r}]"
            )
        rows.append(
            {
                "step": int(s.index),
                "l1": s.l1,
                "n_value": res.n_value,
                "h_value": res.h_value,
                "n_bound": nb,
                "h_bound": entropy_from_n(nb, u),
                "norm_alpha": None if alpha is None else lp_norm(s.density, alpha),
            }
        )
    l1_trend = _trend(np.array([r["l1"] for r in rows]), 1e-12)
    h_trend = _trend(np.array([r["h_value"] for r in rows]), 1e-12)
    if (l1_trend == "stalled") != (h_trend == "stalled"):
        raise CriteriaDisagreement(f"L1 column is {l1_trend} but entropy column is {h_trend}")
    return EquivalenceReport(u.name, rows, l1_trend, h_trend)
