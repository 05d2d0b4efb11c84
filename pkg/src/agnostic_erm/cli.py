"""Command-line scenario runner.

Subcommands: analyze, construct, simulate, classify, checkpoints, bounds.
Every JSON record carries ``schema_version``; failures print an error record
and exit non-zero (2 for invalid input, 1 for failed verification).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import bounds as bnd
from .combinatorics import (Budget, find_eluder, find_star_set, find_vc_eluder, vc_dimension,
                            verify_eluder, verify_star, verify_vc_eluder)
from .concept_class import ClassKind, ConceptClass, class_from_spec, resolve_hypothesis
from .curves import (LearningCurve, classify_rate, checkpoint_compare, estimate_checkpoints,
                     estimate_curve, parse_grid)
from .design import DesignMode
from .distributions import (AdversarialConstruction, build_eluder_adversarial,
                            build_vc_eluder_adversarial, construction_from_dict,
                            distribution_from_spec, finite_gap_fixture, thresholds_benign_fixture)
from .erm import TiePolicy
from .errors import AgnosticErmError, InvalidParams, ValidationError
from .rates import RateFunction

SCHEMA_VERSION = 1
log = logging.getLogger("agnostic_erm")

_FIXTURE_CLASSES = {"finite_gap": finite_gap_fixture, "thresholds_benign": thresholds_benign_fixture}


@dataclass
class Scenario:
    """Resolved run configuration (config file merged with flags)."""

    class_spec: Optional[dict] = None
    dist_spec: Optional[dict] = None
    policy: str = "adversarial"
    prefix: Optional[int] = None
    grid: object = "geom:10:1000:8"
    reps: int = 1000
    seed: int = 0
    out: Optional[str] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def load(cls, args) -> "Scenario":
        cfg = {}
        if getattr(args, "config", None):
            try:
                cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InvalidParams(f"cannot read config: {exc}", path=args.config) from exc
            if not isinstance(cfg, dict):
                raise InvalidParams("config must be a JSON object")
        sc = cls(class_spec=cfg.get("class"), dist_spec=cfg.get("distribution"),
                 policy=cfg.get("policy", "adversarial"), prefix=cfg.get("prefix"),
                 grid=cfg.get("grid", "geom:10:1000:8"), reps=cfg.get("reps", 1000),
                 seed=cfg.get("seed", 0), out=cfg.get("out"),
                 extra={k: v for k, v in cfg.items() if k not in
                        {"class", "distribution", "policy", "prefix", "grid", "reps", "seed", "out"}})
        for name in ("policy", "prefix", "grid", "reps", "seed", "out"):
            v = getattr(args, name, None)
            if v is not None:
                setattr(sc, name, v)
        if getattr(args, "cls", None):
            sc.class_spec = _class_flag(args.cls)
        return sc

    def validate(self) -> None:
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be an unsigned 64-bit integer", seed=self.seed)
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ValidationError("reps must be a positive integer", reps=self.reps)
        TiePolicy.parse(self.policy)
        if self.prefix is not None and (not isinstance(self.prefix, int) or self.prefix < 1):
            raise ValidationError("prefix must be a positive integer", prefix=self.prefix)



def _int_like(text: str) -> int:
    """Parse an integer, also accepting exact scientific notation such as 1e15."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if not val.is_integer() or abs(val) > 2 ** 53:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    return int(val)

def _class_flag(v: str) -> dict:
    if v.strip().startswith("{"):
        return json.loads(v)
    return {"kind": v}


def _class(spec) -> ConceptClass:
    if spec is None:
        raise ValidationError("scenario needs a class spec")
    spec = dict(spec)
    if spec.get("kind") == ClassKind.POWERSET_UNION.value:
        spec.setdefault("max_block", None)
    return class_from_spec(spec)


def _emit(record: dict, out: Optional[str], name: str) -> None:
    record = {"schema_version": SCHEMA_VERSION, **record}
    text = json.dumps(record, indent=2, default=str)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n")
    print(text)


def _search(cls: ConceptClass, center, mode: str, target: int, budget: Budget, candidates=None):
    if mode == "eluder":
        found = find_eluder(cls, center, target, budget, candidates)
        return found, (verify_eluder(found, cls) if found else None)
    if mode == "star":
        found = find_star_set(cls, center, target, budget, candidates)
        return found, (verify_star(found, cls) if found else None)
    if mode == "vc_eluder":
        found = find_vc_eluder(cls, center, target, budget, candidates)
        return found, (verify_vc_eluder(found, cls) if found else None)
    raise InvalidParams(f"unknown search mode {mode!r}")


def cmd_analyze(args) -> int:
    sc = Scenario.load(args)
    cls = _class(sc.class_spec)
    budget = Budget(args.max_prefix, args.max_instance)
    if args.mode == "vc":
        res = vc_dimension(cls.enumerate(budget.max_prefix), range(budget.max_instance), args.target)
        _emit({"command": "analyze", "class": cls.describe(), "budget": budget.to_dict(),
               "result": res.to_dict()}, sc.out, "certificate.json")
        return 0
    center = resolve_hypothesis(cls, args.center if args.center is not None else sc.extra.get("center", 0))
    candidates = range(args.start, budget.max_instance) if args.start is not None else None
    found, errs = _search(cls, center, args.mode, args.target, budget, candidates)
    rec = {"command": "analyze", "class": cls.describe(), "mode": args.mode, "target": args.target,
           "budget": budget.to_dict(), "found": found is not None,
           "certificate": found.to_dict() if found else None, "verifier_errors": errs}
    _emit(rec, sc.out, "certificate.json")
    if found is None:
        return 1
    return 0 if not errs else 1


def _build_construction(sc: Scenario, spec: dict) -> AdversarialConstruction:
    if "file" in spec:
        return construction_from_dict(json.loads(Path(spec["file"]).read_text()))
    cls = _class(sc.class_spec)
    mode = DesignMode(spec.get("mode", DesignMode.ELUDER.value))
    rate = RateFunction.from_spec(spec.get("rate", "inverse_log"))
    t_max = int(spec.get("t_max", 3))
    center = resolve_hypothesis(cls, spec.get("center", 0))
    budget = Budget(int(spec.get("max_prefix", 64)), int(spec.get("max_instance", 64)))
    start = spec.get("start")
    candidates = range(int(start), budget.max_instance) if start is not None else None
    if mode is DesignMode.ELUDER:
        seq = find_eluder(cls, center, t_max, budget, candidates)
        if seq is None:
            raise ValidationError("no eluder sequence of the horizon length within budget", t_max=t_max)
        return build_eluder_adversarial(seq, rate, t_max, cls)
    from .design import sequence_design
    k_last = sequence_design(rate, t_max, mode).k[-1]
    if not isinstance(k_last, int) or k_last > 16:
        raise ValidationError("block k_{t_max} is too large to search", k_last=str(k_last))
    seq = find_vc_eluder(cls, center, k_last, budget, candidates)
    if seq is None:
        raise ValidationError("no VC-eluder sequence within budget", k=k_last)
    return build_vc_eluder_adversarial(seq, rate, t_max, cls)


def _adversarial_spec(sc: Scenario, args) -> dict:
    spec = dict((sc.dist_spec or {}).get("adversarial", {}))
    if getattr(args, "construction", None):
        spec = {"file": args.construction}
    if not spec:
        raise ValidationError("scenario needs distribution.adversarial or --construction")
    return spec


def cmd_construct(args) -> int:
    sc = Scenario.load(args)
    con = _build_construction(sc, _adversarial_spec(sc, args))
    _emit({"command": "construct", **con.to_dict()}, sc.out, "construction.json")
    return 0 if con.passed else 1


def _resolve_dist(sc: Scenario, args):
    """Return (class or None, prefix, distribution, construction or None)."""
    spec = sc.dist_spec or {}
    if "adversarial" in spec or getattr(args, "construction", None):
        con = _build_construction(sc, _adversarial_spec(sc, args))
        need = con.required_prefix
        prefix_len = sc.prefix if sc.prefix is not None else need
        if prefix_len < need:
            raise ValidationError("prefix shorter than the construction's checkpoint requirement",
                                  prefix=prefix_len, required=need)
        prefix = con.cls.enumerate(prefix_len)
        log.info("ERM prefix of length %d covers every witness up to the horizon", prefix_len)
        return con.cls, prefix, con.dist, con
    builtin = spec.get("builtin")
    if builtin in _FIXTURE_CLASSES and sc.class_spec is None:
        cls, dist = _FIXTURE_CLASSES[builtin]()
    else:
        cls = _class(sc.class_spec)
        dist = distribution_from_spec(spec) if spec else None
        if dist is None:
            raise ValidationError("scenario needs a distribution spec")
    if sc.prefix is None and cls.cardinality is None:
        raise ValidationError("infinite classes need an explicit prefix length")
    prefix = cls.enumerate(sc.prefix if sc.prefix is not None else cls.cardinality)
    return cls, prefix, dist, None


def cmd_simulate(args) -> int:
    sc = Scenario.load(args)
    if sc.reps < 30:
        raise ValidationError("reps must be >= 30", reps=sc.reps)
    sc.validate()
    cls, prefix, dist, con = _resolve_dist(sc, args)
    grid = parse_grid(sc.grid)
    curve = estimate_curve(cls, dist, sc.policy, grid, sc.reps, sc.seed, len(prefix), prefix=prefix)
    if sc.out:
        Path(sc.out).mkdir(parents=True, exist_ok=True)
        curve.write_csv(Path(sc.out) / "curve.csv")
    rec = {"command": "simulate", **curve.to_dict()}
    if args.json or not sc.out:
        _emit(rec, sc.out, "curve.json")
    return 0


def cmd_classify(args) -> int:
    sc = Scenario.load(args)
    curve = LearningCurve.read_csv(args.curve)
    verdict = classify_rate(curve)
    _emit({"command": "classify", **verdict.to_dict()}, sc.out, "verdict.json")
    return 0


def cmd_checkpoints(args) -> int:
    sc = Scenario.load(args)
    sc.validate()
    if sc.reps < 30:
        raise ValidationError("reps must be >= 30", reps=sc.reps)
    con = _build_construction(sc, _adversarial_spec(sc, args))
    if args.curve:
        report = checkpoint_compare(LearningCurve.read_csv(args.curve), con)
    else:
        report = estimate_checkpoints(con, sc.reps, sc.seed, sc.prefix, sc.policy, args.max_n)
    _emit({"command": "checkpoints", **report.to_dict()}, sc.out, "checkpoints.json")
    return 0 if report.passed else 1


def _parse_value(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def cmd_bounds(args) -> int:
    if args.calc not in bnd.CALCULATORS:
        raise InvalidParams(f"unknown calculator {args.calc!r}", known=sorted(bnd.CALCULATORS))
    kw = {}
    for item in args.param or []:
        if "=" not in item:
            raise InvalidParams(f"parameters are key=value, got {item!r}")
        k, v = item.split("=", 1)
        kw[k.strip()] = _parse_value(v.strip())
    try:
        value = bnd.CALCULATORS[args.calc](**kw)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from exc
    if args.json:
        _emit({"command": "bounds", "calculator": args.calc, "params": kw, "value": value,
               "constants_note": "universal constants default to 1.0"}, None, "bounds.json")
    else:
        for k, v in kw.items():
            print(f"{k}={v}")
        print(f"{args.calc}={value!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="agnostic-erm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON scenario file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--reps", type=int)
        sp.add_argument("--grid", help='e.g. "geom:20:800:8" or "2,4,6"')
        sp.add_argument("--policy", choices=["first", "random", "adversarial"])
        sp.add_argument("--prefix", type=int)
        sp.add_argument("--class", dest="cls", help="class kind or JSON class spec")
        sp.add_argument("--json", action="store_true", help="emit JSON records")
        sp.add_argument("-v", "--verbose", action="store_true")

    a = sub.add_parser("analyze", help="combinatorial certificates")
    common(a)
    a.add_argument("--mode", choices=["eluder", "star", "vc_eluder", "vc"], default="eluder")
    a.add_argument("--center", help="center hypothesis (id or name)")
    a.add_argument("--target", type=int, default=5, help="sequence length, star size, k_max or VC cap")
    a.add_argument("--start", type=int, help="first candidate instance")
    a.add_argument("--max-prefix", type=int, default=64)
    a.add_argument("--max-instance", type=int, default=64)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("construct", help="build and verify an adversarial construction")
    common(c)
    c.add_argument("--construction", help="reload and re-verify a construction dump")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("simulate", help="Monte Carlo learning curve")
    common(s)
    s.add_argument("--construction", help="construction dump to simulate on")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("classify", help="classify a learning-curve CSV")
    common(k)
    k.add_argument("--curve", required=True)
    k.set_defaults(func=cmd_classify)

    q = sub.add_parser("checkpoints", help="compare checkpoints with predicted lower bounds")
    common(q)
    q.add_argument("--construction", help="construction dump")
    q.add_argument("--curve", help="compare an existing curve CSV instead of simulating")
    q.add_argument("--max-n", type=_int_like, default=None, help="waive checkpoints above this n")
    q.set_defaults(func=cmd_checkpoints)

    b = sub.add_parser("bounds", help="evaluate a calculator")
    b.add_argument("calc", help="|".join(sorted(bnd.CALCULATORS)))
    b.add_argument("--param", action="append", help="key=value (repeatable)")
    b.add_argument("--json", action="store_true")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AgnosticErmError as exc:
        print(json.dumps({"schema_version": SCHEMA_VERSION, "status": "error", **exc.to_record()}))
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(json.dumps({"schema_version": SCHEMA_VERSION, "status": "error",
                          "error": "invalid-input", "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
