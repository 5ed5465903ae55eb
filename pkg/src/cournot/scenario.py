"""Scenario files: parsing, validation, serialisation and execution.

A scenario names a sample space, some measures and experiments, and a list
of tasks. Running it writes one JSON report per task (plus CSV files for
profiles and governance violations) and a summary; wall-clock data is kept
apart in ``run_metadata.json`` so reports are byte-identical across runs.
"""

from __future__ import annotations

import csv
import json
import logging
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cclass import (
    blackbox,
    check_axioms,
    custom_cclass,
    trivial_cclass,
    typicality_cclass,
    union_lift,
)
from .cmeasure import (
    DEFAULT_HORIZON,
    DEFAULT_TOL,
    c_measure,
    default_probe_events,
    equivalent,
    verify_theorem1,
)
from .errors import CournotError, ParseError, ValidationError
from .experiment import ExperimentModel, empirical_cclass
from .freq import bernoulli_limit_profile
from .governance import experimental_ambiguity_check, governs, probabilistic_ambiguity_witness
from .measure import ProbabilityMeasure, SampleSpace, as_fraction, extended_prob
from .serialize import event_from_json, event_to_json, rational_str

log = logging.getLogger(__name__)

TASK_TYPES = ("axioms", "cmeasure", "equivalence", "theorem1", "govern", "ambiguity", "profile")
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 2, 3


@dataclass
class Scenario:
    space: SampleSpace
    measures: dict = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    output: dict = field(default_factory=dict)


def _rational(value, where):
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ValidationError(f"{where}: expected a rational as 'num/den' string or integer, "
                              f"got {value!r}")
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{where}: cannot parse {value!r} as a rational") from None


def _distribution(space, obj, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected a mapping from outcome label to probability")
    unknown = set(obj) - set(space.labels)
    if unknown:
        raise ValidationError(f"{where}: unknown outcomes {sorted(unknown)}")
    return [_rational(obj.get(label, "0"), f"{where}.{label}") for label in space.labels]


def _experiment(space, obj, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValidationError(f"{where}.seed: expected an integer")
    kind = obj.get("kind")
    try:
        if kind == "iid":
            return ExperimentModel.iid(space, _distribution(space, obj.get("dist"), f"{where}.dist"),
                                       seed)
        if kind == "markov":
            trans = obj.get("trans")
            if not isinstance(trans, list):
                raise ValidationError(f"{where}.trans: expected a matrix")
            rows = [[_rational(v, f"{where}.trans[{i}][{j}]") for j, v in enumerate(row)]
                    for i, row in enumerate(trans)]
            init = _distribution(space, obj.get("init"), f"{where}.init")
            return ExperimentModel.markov(space, init, rows, seed)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{where}: {exc}") from None
    raise ValidationError(f"{where}.kind: expected 'iid' or 'markov', got {kind!r}")


def _check_class_spec(spec, s: Scenario, where):
    if not isinstance(spec, dict):
        raise ValidationError(f"{where}: expected a class object")
    kind = spec.get("kind")
    if kind == "trivial":
        return
    if kind in ("typicality", "at_least"):
        _need_name(spec, "measure", s.measures, where)
        _rational(spec.get("delta" if kind == "typicality" else "bound"),
                  f"{where}.{'delta' if kind == 'typicality' else 'bound'}")
        return
    if kind == "empirical":
        _need_name(spec, "experiment", s.experiments, where)
        return
    if kind == "union":
        parts = spec.get("of")
        if not isinstance(parts, list) or len(parts) != 2:
            raise ValidationError(f"{where}.of: union needs exactly two classes")
        for i, part in enumerate(parts):
            _check_class_spec(part, s, f"{where}.of[{i}]")
        return
    if kind == "blackbox":
        _check_class_spec(spec.get("of"), s, f"{where}.of")
        return
    raise ValidationError(f"{where}.kind: unknown class kind {kind!r}")


def _need_name(task, key, table, where):
    name = task.get(key)
    if name not in table:
        raise ValidationError(f"{where}.{key}: unknown name {name!r}")
    return name


def _validate_task(task, s: Scenario, where):
    if not isinstance(task, dict):
        raise ValidationError(f"{where}: expected an object")
    ttype = task.get("type")
    if ttype not in TASK_TYPES:
        raise ValidationError(f"{where}.type: expected one of {TASK_TYPES}, got {ttype!r}")
    if task.get("expect", "pass") not in ("pass", "fail"):
        raise ValidationError(f"{where}.expect: expected 'pass' or 'fail'")
    if ttype in ("axioms", "cmeasure"):
        _check_class_spec(task.get("class"), s, f"{where}.class")
    elif ttype == "equivalence":
        classes = task.get("classes")
        if not isinstance(classes, list) or len(classes) != 2:
            raise ValidationError(f"{where}.classes: need exactly two classes")
        for i, c in enumerate(classes):
            _check_class_spec(c, s, f"{where}.classes[{i}]")
    elif ttype == "theorem1":
        _need_name(task, "measure", s.measures, where)
        _rational(task.get("delta"), f"{where}.delta")
        if "class" in task:
            _check_class_spec(task["class"], s, f"{where}.class")
    elif ttype == "govern":
        _need_name(task, "measure", s.measures, where)
        _need_name(task, "experiment", s.experiments, where)
        for i, d in enumerate(task.get("deltas", [])):
            _rational(d, f"{where}.deltas[{i}]")
    elif ttype == "ambiguity":
        mode = task.get("mode", "probabilistic")
        if mode == "probabilistic":
            names = task.get("measures")
            if not isinstance(names, list) or len(names) != 2:
                raise ValidationError(f"{where}.measures: need two measure names")
            for i, n in enumerate(names):
                if n not in s.measures:
                    raise ValidationError(f"{where}.measures[{i}]: unknown name {n!r}")
            _rational(task.get("delta"), f"{where}.delta")
        elif mode == "experimental":
            _need_name(task, "measure", s.measures, where)
            names = task.get("experiments")
            if not isinstance(names, list) or len(names) != 2:
                raise ValidationError(f"{where}.experiments: need two experiment names")
            for i, n in enumerate(names):
                if n not in s.experiments:
                    raise ValidationError(f"{where}.experiments[{i}]: unknown name {n!r}")
        else:
            raise ValidationError(f"{where}.mode: expected 'probabilistic' or 'experimental'")
    elif ttype == "profile":
        if "p" in task:
            _rational(task["p"], f"{where}.p")
        else:
            _need_name(task, "measure", s.measures, where)
            if "event" not in task:
                raise ValidationError(f"{where}: profile needs 'p' or 'measure' + 'event'")
        _rational(task.get("sigma"), f"{where}.sigma")
        if task.get("side", "upper") not in ("upper", "lower", "both"):
            raise ValidationError(f"{where}.side: expected upper, lower or both")
        k_max = task.get("k_max")
        if not isinstance(k_max, int) or k_max < 1:
            raise ValidationError(f"{where}.k_max: expected a positive integer")
    for key in ("events", "event"):
        if key in task:
            items = task[key] if key == "events" else [task[key]]
            for i, ev in enumerate(items):
                try:
                    event_from_json(s.space, ev)
                except (KeyError, ValueError, TypeError) as exc:
                    raise ValidationError(f"{where}.{key}[{i}]: {exc}") from None


def parse_scenario(text: str) -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ValidationError("scenario: top level must be an object")
    labels = raw.get("space")
    if not isinstance(labels, list) or not labels:
        raise ValidationError("space: expected a non-empty list of outcome labels")
    try:
        space = SampleSpace(tuple(labels))
    except ValueError as exc:
        raise ValidationError(f"space: {exc}") from None
    s = Scenario(space)
    measures = dict(raw.get("measures", {}))
    if "measure" in raw:
        measures.setdefault("P", raw["measure"])
    for name, obj in measures.items():
        weights = _distribution(space, obj, f"measures.{name}")
        try:
            s.measures[name] = ProbabilityMeasure(space, tuple(weights))
        except ValueError as exc:
            raise ValidationError(f"measures.{name}: {exc}") from None
    for name, obj in raw.get("experiments", {}).items():
        s.experiments[name] = _experiment(space, obj, f"experiments.{name}")
    tasks = raw.get("tasks", [])
    if not isinstance(tasks, list):
        raise ValidationError("tasks: expected a list")
    for i, task in enumerate(tasks):
        _validate_task(task, s, f"tasks[{i}]")
    s.tasks = tasks
    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ValidationError("output: expected an object")
    s.output = output
    return s


def serialize_scenario(s: Scenario) -> str:
    doc = {
        "space": list(s.space.labels),
        "measures": {
            name: {label: rational_str(w) for label, w in zip(s.space.labels, P.weights)}
            for name, P in s.measures.items()
        },
        "experiments": {name: E.to_json() for name, E in s.experiments.items()},
        "tasks": s.tasks,
        "output": s.output,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def override_seeds(s: Scenario, seed: int) -> Scenario:
    """Re-seed every experiment from one root seed, distinct per experiment name."""
    experiments = {}
    for name, E in s.experiments.items():
        ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),))
        experiments[name] = E.with_seed(int(ss.generate_state(1, np.uint64)[0]))
    return Scenario(s.space, s.measures, experiments, s.tasks, s.output)


@dataclass
class RunOptions:
    out: Path
    fail_fast: bool = False
    tol: float | None = None
    horizon: int | None = None
    parallel: bool = False


class _Runner:
    def __init__(self, s: Scenario, opts: RunOptions):
        self.s = s
        self.opts = opts

    def build_class(self, spec):
        s, kind = self.s, spec["kind"]
        if kind == "trivial":
            return trivial_cclass(s.space)
        if kind == "typicality":
            return typicality_cclass(s.measures[spec["measure"]], as_fraction(spec["delta"]))
        if kind == "at_least":
            P, bound = s.measures[spec["measure"]], as_fraction(spec["bound"])
            return custom_cclass(s.space, lambda A: extended_prob(P, A) >= bound,
                                 note=f"events with probability >= {bound}")
        if kind == "empirical":
            return empirical_cclass(s.experiments[spec["experiment"]], spec.get("N", 10_000),
                                    spec.get("epsilon", 0.02), spec.get("alpha", 0.01))
        if kind == "union":
            return union_lift(*(self.build_class(part) for part in spec["of"]))
        return blackbox(self.build_class(spec["of"]))

    def events(self, task, **probe_kw):
        if "events" in task:
            return [event_from_json(self.s.space, ev) for ev in task["events"]]
        return default_probe_events(self.s.space, **probe_kw)

    def tol(self, task):
        return self.opts.tol if self.opts.tol is not None else task.get("tol", DEFAULT_TOL)

    def horizon(self, task):
        if self.opts.horizon is not None:
            return self.opts.horizon
        return task.get("horizon", DEFAULT_HORIZON)

    # Each task handler returns (ok, report dict, extra files {suffix: rows}).

    def axioms(self, task):
        C = self.build_class(task["class"])
        levels = task.get("levels") or [
            n for n in range(1, 13) if self.s.space.cardinality(n) <= 12
        ]
        reports = [check_axioms(C, n, task.get("budget", 100_000), task.get("seed", 0))
                   for n in levels]
        ok = all(r.passed for r in reports)
        scope = {"levels": list(levels), "budget": task.get("budget", 100_000)}
        return ok, {"class": C.describe(), "levels": [r.to_dict() for r in reports],
                    "passed": ok, "scope": scope}, {}

    def cmeasure(self, task):
        C = self.build_class(task["class"])
        tol, horizon = self.tol(task), self.horizon(task)
        rows = [{"event": event_to_json(ev), "measure": c_measure(C, ev, tol, horizon).to_dict()}
                for ev in self.events(task)]
        scope = {"tol": tol, "horizon": horizon, "probe_count": len(rows)}
        return True, {"class": C.describe(), "rows": rows, "scope": scope}, {}

    def equivalence(self, task):
        C1, C2 = (self.build_class(c) for c in task["classes"])
        rep = equivalent(C1, C2, self.events(task), self.tol(task), self.horizon(task))
        return rep.equivalent, {"classes": [C1.describe(), C2.describe()], **rep.to_dict()}, {}

    def theorem1(self, task):
        P = self.s.measures[task["measure"]]
        delta = as_fraction(task["delta"])
        spec = task.get("class", {"kind": "typicality", "measure": task["measure"],
                                  "delta": task["delta"]})
        C = self.build_class(spec)
        rep = verify_theorem1(P, delta, C, self.events(task), self.tol(task), self.horizon(task))
        return rep.consistent, {"class": C.describe(), **rep.to_dict()}, {}

    def _govern_params(self, task):
        params = {k: task[k] for k in ("levels", "event_budget", "N", "epsilon", "alpha")
                  if k in task}
        if "deltas" in task:
            params["delta_grid"] = [as_fraction(d) for d in task["deltas"]]
        return params

    def govern(self, task):
        rep = governs(self.s.measures[task["measure"]], self.s.experiments[task["experiment"]],
                      measure_id=task["measure"], experiment_id=task["experiment"],
                      **self._govern_params(task))
        extra = {}
        if rep.violations:
            extra["violations.csv"] = (
                ["delta", "level", "event", "typicality", "verdict", "observed_frequency"],
                [[rational_str(v.delta), v.event.level,
                  " ".join("".join(t) for t in v.event.labels()),
                  rational_str(v.typicality), v.verdict, v.observed_frequency]
                 for v in rep.violations],
            )
        return rep.governs, rep.to_dict(), extra

    def ambiguity(self, task):
        if task.get("mode", "probabilistic") == "probabilistic":
            P1, P2 = (self.s.measures[n] for n in task["measures"])
            k_cap = task.get("k_cap", 10**6)
            w = probabilistic_ambiguity_witness(P1, P2, as_fraction(task["delta"]), k_cap=k_cap)
            checks = w.verify()
            ok = all(v for key, v in checks.items()
                     if key not in ("disjointness_method", "exact_tails"))
            return ok, {"mode": "probabilistic", "witness": w.to_dict(),
                        "verification": checks, "scope": {"k_cap": k_cap}}, {}
        E1, E2 = (self.s.experiments[n] for n in task["experiments"])
        rep = experimental_ambiguity_check(self.s.measures[task["measure"]], E1, E2,
                                           ids=tuple(task["experiments"]),
                                           **self._govern_params(task))
        return rep.outcome != "inconsistent", {"mode": "experimental", **rep.to_dict()}, {}

    def profile(self, task):
        sigma = as_fraction(task["sigma"])
        if "p" in task:
            p = as_fraction(task["p"])
        else:
            p = extended_prob(self.s.measures[task["measure"]],
                              event_from_json(self.s.space, task["event"]))
        side = task.get("side", "upper")
        sides = ("upper", "lower") if side == "both" else (side,)
        exact_max_k = task.get("exact_max_k", 200)
        rows = []
        for sd in sides:
            for k, prob in bernoulli_limit_profile(p, sigma, task["k_max"], sd, exact_max_k):
                rows.append([k, float(prob), sd])
        limit = {"upper": int(sigma < p), "lower": int(sigma > p)} if sigma != p else None
        report = {"p": rational_str(p), "sigma": rational_str(sigma), "k_max": task["k_max"],
                  "sides": list(sides), "limits": limit,
                  "final": {sd: [r for r in rows if r[2] == sd][-1][1] for sd in sides},
                  "scope": {"k_max": task["k_max"], "exact_max_k": exact_max_k}}
        return True, report, {"profile.csv": (["k", "probability", "side"], rows)}

    def run_task(self, index, task):
        stem = f"{index:02d}_{task['type']}" + (f"_{task['name']}" if task.get("name") else "")
        try:
            ok, report, extra = getattr(self, task["type"])(task)
            error = None
        except (CournotError, ValueError) as exc:
            ok, report, extra, error = False, {}, {}, f"{type(exc).__name__}: {exc}"
        expect = task.get("expect", "pass")
        passed = ok if expect == "pass" else (not ok and error is None)
        return {"stem": stem, "task": task, "ok": ok, "passed": passed, "error": error,
                "report": report, "extra": extra}


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_scenario(s: Scenario, opts: RunOptions) -> int:
    """Run every task, write reports under ``opts.out``, return the exit code."""
    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)
    runner = _Runner(s, opts)
    started = time.time()
    indexed = list(enumerate(s.tasks))
    if opts.parallel and not opts.fail_fast:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda it: runner.run_task(*it), indexed))
    else:
        results = []
        for i, task in indexed:
            res = runner.run_task(i, task)
            results.append(res)
            if opts.fail_fast and not res["passed"]:
                log.warning("stopping after failed task %s", res["stem"])
                break

    summary = []
    for res in results:
        report = {"task": res["task"], "ok": res["ok"], "passed": res["passed"],
                  "error": res["error"], "result": res["report"]}
        _write_json(out / f"{res['stem']}.json", report)
        for suffix, (header, rows) in res["extra"].items():
            with open(out / f"{res['stem']}_{suffix}", "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        summary.append({"stem": res["stem"], "type": res["task"]["type"],
                        "passed": res["passed"], "error": res["error"]})
        log.info("%s: %s", res["stem"], "pass" if res["passed"] else "FAIL")
    code = EXIT_OK if all(r["passed"] for r in summary) and len(summary) == len(s.tasks) \
        else EXIT_VIOLATION
    _write_json(out / "summary.json", {"tasks": summary, "exit_code": code,
                                       "tasks_skipped": len(s.tasks) - len(summary)})
    _write_json(out / "run_metadata.json", {
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "elapsed_seconds": round(time.time() - started, 3),
    })
    return code
