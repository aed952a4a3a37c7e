"""Command-line experiments.

Every run is described by one JSON config file; scalar flags override the
corresponding config fields. Exit status is 0 on success, 1 on invalid
input (config, files, parameters) and 2 on numerical failure.

Example config::

    {
      "space": {"uniform": 2},
      "density": {"values": [1.5, 0.5]},
      "utilities": [{"type": "log"}, {"type": "isoelastic", "gamma": 0.5}],
      "operator": {"type": "mixing", "lambda": 0.3},
      "horizon": 20
    }
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import dynamics, entropy, markov, measure, utility
from .errors import ConfigParse, IoFailure, NumericalError, UEntropyError, ValidationError
from .numfmt import fmt, jsonable

MODES = ("entropy", "evolve", "semigroup", "probe", "oracle-check", "equivalence")

# fixed consumer ids for per-consumer random streams
_DENSITY_STREAM = 1
_OPERATOR_STREAM = 2
_PROBE_STREAM = 3

_REQUIRED = {
    "entropy": ("density", "utilities"),
    "evolve": ("density", "utilities", "operator", "horizon"),
    "semigroup": ("density", "utilities", "operator", "times"),
    "probe": ("utilities", "operator", "horizon"),
    "oracle-check": ("density", "utilities"),
    "equivalence": ("density", "utilities", "operator", "horizon"),
}


def stream_seed(seed: int, consumer: int) -> int:
    """Independent seed for one consumer; adding consumers leaves others unchanged."""
    return int(np.random.SeedSequence([int(seed), consumer]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    mode: str
    space: Optional[measure.MeasureSpace] = None
    density: Optional[measure.Density] = None
    utilities: list = field(default_factory=list)
    operator: Optional[markov.StochasticOperator] = None
    rate: float = 1.0
    horizon: Optional[int] = None
    times: Optional[list] = None
    threshold: float = 1e-6
    resolution: int = 1000
    seed: int = 0
    n_random: int = 20
    out_dir: Path = Path(".")


# ---------------------------------------------------------------------------
# parsing


def _parse_utility(spec) -> utility.UtilityFunction:
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigParse(f"utility entry must be an object with a 'type', got {spec!r}")
    kind = spec["type"]
    if kind == "log":
        return utility.log_utility()
    if kind == "isoelastic":
        if "gamma" not in spec:
            raise ConfigParse("isoelastic utility needs 'gamma'")
        g = float(spec["gamma"])
        if not g < 1:
            raise ValidationError(f"isoelastic gamma = {g:g} violates the requirement gamma < 1")
        if g == 0:
            return utility.log_utility()
        return utility.isoelastic_utility(g)
    if kind == "affine":
        if "base" not in spec:
            raise ConfigParse("affine utility needs a 'base' utility")
        base = _parse_utility(spec["base"])
        return utility.affine_utility(base, float(spec.get("a", 1.0)), float(spec.get("b", 0.0)))
    raise ConfigParse(f"unknown utility type {kind!r} (expected log, isoelastic or affine)")


def _parse_space(spec) -> measure.MeasureSpace:
    if isinstance(spec, dict) and "uniform" in spec:
        n = int(spec["uniform"])
        if n < 1:
            raise ValidationError(f"space.uniform must be >= 1, got {n}")
        return measure.uniform_space(n)
    if isinstance(spec, dict) and "weights" in spec:
        return measure.make_space(spec["weights"])
    raise ConfigParse("space must be {'uniform': n} or {'weights': [...]}")


def _parse_density(spec, space, seed) -> measure.Density:
    if not isinstance(spec, dict):
        raise ConfigParse(f"density entry must be an object, got {spec!r}")
    if "values" in spec:
        return measure.make_density(spec["values"], space)
    if "preset" in spec:
        name = spec["preset"]
        if name == "uniform":
            return measure.uniform_density(space)
        if name == "point":
            k = int(spec.get("atom", 1)) - 1
            if not 0 <= k < space.n:
                raise ValidationError(f"density.atom must lie in 1..{space.n}")
            return measure.point_density(space, k)
        if name == "ramp":
            return measure.normalize(np.arange(1, space.n + 1, dtype=float), space)
        raise ConfigParse(f"unknown density preset {name!r} (expected uniform, point or ramp)")
    if "random" in spec:
        opts = spec["random"] if isinstance(spec["random"], dict) else {}
        rng = np.random.default_rng(stream_seed(seed, _DENSITY_STREAM))
        return measure.random_density(space, rng, opts.get("max_value"))
    raise ConfigParse("density must contain 'values', 'preset' or 'random'")


def _parse_operator(spec, space, seed, base_dir) -> markov.StochasticOperator:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigParse(f"operator entry must be an object with a 'type', got {spec!r}")
    kind = spec["type"]
    if kind == "identity":
        return markov.identity_operator(space)
    if kind == "mixing":
        return markov.mixing_operator(float(spec.get("lambda", 0.5)), space)
    if kind == "permutation":
        cycles = spec.get("cycles")
        if not isinstance(cycles, str):
            raise ConfigParse("permutation operator needs 'cycles' in cycle notation, e.g. \"(1 2)\"")
        return markov.permutation_operator(markov.parse_cycles(cycles, space.n), space)
    if kind == "partition":
        blocks = spec.get("blocks")
        if not isinstance(blocks, list):
            raise ConfigParse("partition operator needs 'blocks' (lists of 1-based atoms)")
        return markov.conditional_expectation([[int(i) - 1 for i in b] for b in blocks], space)
    if kind == "sinkhorn":
        s = int(spec["seed"]) if "seed" in spec else stream_seed(seed, _OPERATOR_STREAM)
        return markov.sinkhorn_random(space, s)
    if kind == "kernel_csv":
        op = markov.load_kernel_csv(_resolve(spec.get("path"), base_dir))
        if space is not None and not op.space.same_as(space):
            raise ValidationError("kernel CSV weights disagree with the configured space")
        return op
    raise ConfigParse(f"unknown operator type {kind!r}")


def _resolve(path, base_dir) -> Path:
    if not isinstance(path, str):
        raise ConfigParse("kernel_csv operator needs a 'path'")
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    if not p.is_file() or not os.access(p, os.R_OK):
        raise IoFailure(f"kernel file {p} is not readable")
    return p


def _check_out_dir(path: Path) -> None:
    target = path if path.exists() else path.parent
    if path.exists() and not path.is_dir():
        raise IoFailure(f"output path {path} is not a directory")
    if not target.exists() or not os.access(target, os.W_OK):
        raise IoFailure(f"output directory {path} is not writable")


def load_raw(config_path) -> dict:
    try:
        text = Path(config_path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read config {config_path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{config_path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigParse(f"{config_path}: top level must be a JSON object")
    return raw


def build_config(raw: dict, mode: Optional[str], base_dir=None) -> tuple:
    """Build an :class:`ExperimentConfig`, collecting every problem found.

    Returns ``(config, diagnostics)``; the config is only usable when the
    diagnostics list is empty.
    """
    diags: list = []

    def attempt(label, fn, *args):
        try:
            return fn(*args)
        except UEntropyError as exc:
            diags.append(f"{label}: {exc}")
        except (TypeError, ValueError, KeyError) as exc:
            diags.append(f"{label}: malformed value ({exc})")
        return None

    mode = mode or raw.get("mode")
    if mode not in MODES:
        diags.append(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
        mode = None
    known = {
        "mode", "space", "density", "utilities", "operator", "rate", "horizon", "times",
        "threshold", "resolution", "seed", "n_random", "out",
    }
    for key in sorted(set(raw) - known):
        diags.append(f"{key}: unknown field")

    seed = attempt("seed", int, raw.get("seed", 0))
    seed = 0 if seed is None else seed
    cfg = ExperimentConfig(mode=mode or "entropy", seed=seed)

    for name in _REQUIRED.get(mode, ()):
        if name not in raw or raw[name] is None:
            diags.append(f"{name}: required for mode {mode!r}")

    if "space" in raw:
        cfg.space = attempt("space", _parse_space, raw["space"])
    op_spec = raw.get("operator")
    if cfg.space is None and isinstance(op_spec, dict) and op_spec.get("type") == "kernel_csv":
        op = attempt("operator", _parse_operator, op_spec, None, seed, base_dir)
        if op is not None:
            cfg.space, cfg.operator = op.space, op
    if cfg.space is None and "space" not in raw and mode is not None:
        if not (isinstance(op_spec, dict) and op_spec.get("type") == "kernel_csv"):
            diags.append("space: required ({'uniform': n} or {'weights': [...]})")

    if cfg.space is not None:
        if "density" in raw:
            cfg.density = attempt("density", _parse_density, raw["density"], cfg.space, seed)
        if op_spec is not None and cfg.operator is None:
            cfg.operator = attempt("operator", _parse_operator, op_spec, cfg.space, seed, base_dir)

    specs = raw.get("utilities", [])
    if not isinstance(specs, list):
        diags.append("utilities: must be a list")
        specs = []
    for i, spec in enumerate(specs):
        u = attempt(f"utilities[{i}]", _parse_utility, spec)
        if u is not None:
            cfg.utilities.append(u)
    names = [u.name for u in cfg.utilities]
    if len(set(names)) != len(names):
        diags.append(f"utilities: duplicate entries {names}")
    if mode in _REQUIRED and "utilities" in raw and not specs:
        diags.append("utilities: at least one utility is required")

    def positive_int(label, lo):
        def f(v):
            iv = int(v)
            if iv != v or iv < lo:
                raise ValidationError(f"must be an integer >= {lo}, got {v!r}")
            return iv
        return f

    if raw.get("horizon") is not None:
        lo = 10 if mode == "probe" else 1
        cfg.horizon = attempt("horizon", positive_int("horizon", lo), raw["horizon"])
    if raw.get("rate") is not None:
        cfg.rate = attempt("rate", _positive_float, raw["rate"]) or cfg.rate
    if raw.get("threshold") is not None:
        cfg.threshold = attempt("threshold", _positive_float, raw["threshold"]) or cfg.threshold
    if raw.get("resolution") is not None:
        r = attempt("resolution", positive_int("resolution", 100), raw["resolution"])
        cfg.resolution = r or cfg.resolution
    if raw.get("n_random") is not None:
        r = attempt("n_random", positive_int("n_random", 0), raw["n_random"])
        cfg.n_random = cfg.n_random if r is None else r
    if raw.get("times") is not None:
        cfg.times = attempt("times", _parse_times, raw["times"])
    if mode == "oracle-check" and cfg.space is not None and cfg.space.n > 4:
        diags.append(f"space: oracle-check supports at most 4 atoms, got {cfg.space.n}")
    if mode == "semigroup" and cfg.operator is not None:
        sg = attempt("operator", markov.make_semigroup, cfg.operator, cfg.rate)
        if sg is None:
            cfg.operator = None

    out = raw.get("out", ".")
    cfg.out_dir = Path(out)
    attempt("out", _check_out_dir, cfg.out_dir)
    return cfg, diags


def _positive_float(v) -> float:
    x = float(v)
    if not x > 0:
        raise ValidationError(f"must be > 0, got {v!r}")
    return x


def _parse_times(v) -> list:
    if not isinstance(v, list) or not v:
        raise ValidationError("must be a nonempty list of times")
    t = [float(x) for x in v]
    if t[0] < 0 or any(b <= a for a, b in zip(t, t[1:])):
        raise ValidationError("times must be >= 0 and strictly increasing")
    return t


def validate(config_path, mode: Optional[str] = None) -> list:
    """Every problem in a config file, without running anything."""
    raw = load_raw(config_path)
    _, diags = build_config(raw, mode, Path(config_path).parent)
    return diags


# ---------------------------------------------------------------------------
# execution


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", name).strip("_")


def _write_json(path: Path, record) -> None:
    path.write_text(json.dumps(jsonable(record), indent=2, sort_keys=True) + "\n")


def run(cfg: ExperimentConfig, quiet: bool = False) -> dict:
    """Execute a validated config; returns ``{artifact name: path}``."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    say = (lambda *a: None) if quiet else print
    written = {}

    if cfg.mode == "entropy":
        results = []
        for u in cfg.utilities:
            rec = entropy.n_u(cfg.density, u).to_record()
            rec["utility"] = u.name
            results.append(rec)
        record = {"density": cfg.density.values.tolist(), "results": results}
        path = out / "entropy.json"
        _write_json(path, record)
        say(json.dumps(jsonable(record), indent=2, sort_keys=True))
        written["entropy"] = path

    elif cfg.mode in ("evolve", "semigroup"):
        if cfg.mode == "evolve":
            traj = dynamics.evolve(cfg.operator, cfg.density, cfg.horizon, cfg.utilities)
        else:
            sg = markov.make_semigroup(cfg.operator, cfg.rate)
            traj = dynamics.semigroup_evolve(sg, cfg.density, cfg.times, cfg.utilities)
        path = out / "trajectory.csv"
        traj.to_csv(path)
        report = dynamics.h_theorem_check(traj)
        say(f"wrote {path} ({len(traj)} rows); entropy nonincreasing: {report.passed}")
        for line in report.failures():
            say("  " + line)
        written["trajectory"] = path

    elif cfg.mode == "probe":
        verdict = dynamics.exactness_probe(
            cfg.operator,
            cfg.horizon,
            cfg.threshold,
            cfg.utilities,
            seed=stream_seed(cfg.seed, _PROBE_STREAM),
            n_random=cfg.n_random,
        )
        path = out / "verdict.json"
        path.write_text(verdict.to_json() + "\n")
        say(f"{verdict.classification} (wrote {path})")
        written["verdict"] = path

    elif cfg.mode == "oracle-check":
        path = out / "oracle_check.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["utility", "n_value", "oracle", "abs_diff"])
            for u in cfg.utilities:
                nv = entropy.n_u(cfg.density, u).n_value
                ov = entropy.oracle_n_u(cfg.density, u, cfg.resolution)
                w.writerow([u.name, fmt(nv), fmt(ov), fmt(abs(nv - ov))])
                say(f"{u.name}: n_u={fmt(nv)} oracle={fmt(ov)} diff={fmt(abs(nv - ov))}")
        written["oracle_check"] = path

    elif cfg.mode == "equivalence":
        for u in cfg.utilities:
            rep = dynamics.equivalence_report(cfg.operator, cfg.density, u, cfg.horizon)
            path = out / f"equivalence_{_slug(u.name)}.csv"
            rep.to_csv(path)
            say(f"{u.name}: l1 {rep.l1_trend}, entropy {rep.entropy_trend} (wrote {path})")
            written[f"equivalence:{u.name}"] = path
    return written


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="experiment JSON file")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config 'out')")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--quiet", action="store_true", help="suppress console output")
    common.add_argument("--horizon", type=int)
    common.add_argument("--threshold", type=float)
    common.add_argument("--resolution", type=int)
    common.add_argument("--rate", type=float)

    parser = argparse.ArgumentParser(prog="uentropy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for mode in MODES:
        sub.add_parser(mode, parents=[common], help=f"run a {mode} experiment")
    v = sub.add_parser("validate", parents=[common], help="check a config without running it")
    v.add_argument("--mode", choices=MODES, help="mode to validate against (default: config 'mode')")
    return parser


def _apply_overrides(raw: dict, args) -> dict:
    raw = dict(raw)
    for key in ("seed", "horizon", "threshold", "resolution", "rate"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    if args.out is not None:
        raw["out"] = args.out
    return raw


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        raw = _apply_overrides(load_raw(args.config), args)
        base_dir = Path(args.config).parent
        if args.command == "validate":
            _, diags = build_config(raw, args.mode, base_dir)
            for d in diags:
                print(d)
            if not diags and not args.quiet:
                print("config OK")
            return 1 if diags else 0
        cfg, diags = build_config(raw, args.command, base_dir)
        if diags:
            for d in diags:
                print(f"error: {d}", file=sys.stderr)
            return 1
        run(cfg, quiet=args.quiet)
        return 0
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {IoFailure(str(exc))}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
