"""Scenario files: declarative batches of classification and theorem tasks.

A scenario is a TOML document::

    [scale]
    gauges = ["lambda"]        # base gauges, fastest-decaying first
    lambda0 = 0.5              # first schedule point
    ratio = 0.5                # geometric ratio, 0 < ratio < 1
    count = 40                 # number of schedule points
    tail = 10                  # last `tail` points stand for "eventually"

    [defaults]                 # optional
    degree = 10                # frontier / ideal degree D
    grid = 401                 # grid points per axis
    order = 3                  # derivative order L

    [nets]
    u = "exp(-1/lambda)*sin(x1/lambda)"               # dimension 1
    w = { expr = "sin(x1*x2/lambda)", dim = 2 }

    [boxes]
    K = [[0, 1]]
    Q = [[0, 1], [0, 1]]

    [[tasks]]
    kind = "theorem"           # moderate | negligible | theorem | equality | embedding | dominate
    net = "u"
    boxes = ["K"]
    expect = "holds"           # optional: holds (default) | fails | unknown
    csv = true                 # optional: write seminorm series

Task arguments: ``net`` and ``boxes`` for moderate, negligible, theorem and
embedding; ``net``, ``other`` and ``boxes`` for equality; ``left`` and
``right`` (gauge expressions) for dominate.  ``order``, ``degree``, ``grid``
and ``name`` may be given per task.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .classifier import (
    ClassificationReport, TheoremReport, difference_net, embedding_injectivity_check,
    equality_in_algebra, is_moderate, is_negligible, zero_order_reduction,
)
from .expr import ExprError, NetExpr, parse_expr
from .scale import (
    SampledNet, ScaleError, ScaleFamily, Status, Verdict, declare_scale, dominates,
    format_element, geometric_schedule, normalize, sample_gauge,
)
from .seminorm import Box, Grid, SampledSeminormNet

KINDS = ("moderate", "negligible", "theorem", "equality", "embedding", "dominate")
TASK_KEYS = {"kind", "name", "net", "other", "boxes", "left", "right", "order", "degree",
             "grid", "expect", "csv"}
REQUIRED = {
    "moderate": ("net", "boxes"),
    "negligible": ("net", "boxes"),
    "theorem": ("net", "boxes"),
    "embedding": ("net", "boxes"),
    "equality": ("net", "other", "boxes"),
    "dominate": ("left", "right"),
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    name: str
    kind: str
    args: dict[str, Any]
    expect: Status = Status.HOLDS
    csv: bool = False


@dataclass
class Scenario:
    name: str
    family: ScaleFamily
    scale_text: str
    degree: int
    grid: int
    order: int
    nets: dict[str, NetExpr]
    boxes: dict[str, Box]
    tasks: list[Task]


def _require(table: dict, key: str, kind, where: str):
    if key not in table:
        raise ScenarioError(f"[{where}] is missing {key!r}")
    value = table[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise ScenarioError(f"[{where}] {key!r} has the wrong type")
    return value


def load_scenario(path: str | Path, *, degree: int | None = None, grid: int | None = None,
                  tail: int | None = None) -> Scenario:
    """Read and validate a scenario file; keyword arguments override its defaults."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as err:
        line = getattr(err, "lineno", None)
        where = f" line {line}" if line else ""
        raise ScenarioError(f"{path.name}:{where} parse error: {err}") from err
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err}") from err

    scale = data.get("scale")
    if not isinstance(scale, dict):
        raise ScenarioError("missing [scale] section")
    gauges = _require(scale, "gauges", list, "scale")
    lambda0 = float(scale.get("lambda0", 0.5))
    ratio = float(scale.get("ratio", 0.5))
    count = int(scale.get("count", 40))
    tail_len = int(tail if tail is not None else scale.get("tail", 10))
    try:
        schedule = geometric_schedule(lambda0, ratio, count)
    except ScaleError as err:
        raise ScenarioError(f"invalid schedule: {err}") from err
    try:
        family = declare_scale([parse_expr(g, 0) for g in gauges], schedule, tail_len)
    except (ScaleError, ExprError) as err:
        raise ScenarioError(f"invalid scale: {err}") from err

    defaults = data.get("defaults", {})
    nets: dict[str, NetExpr] = {}
    for name, spec in data.get("nets", {}).items():
        if isinstance(spec, str):
            text, dim = spec, 1
        elif isinstance(spec, dict):
            text, dim = spec.get("expr"), spec.get("dim", 1)
        else:
            raise ScenarioError(f"net {name!r} must be a string or a table")
        if not isinstance(text, str) or not isinstance(dim, int):
            raise ScenarioError(f"net {name!r} needs a string expr and an integer dim")
        try:
            nets[name] = NetExpr.parse(text, dim)
        except ExprError as err:
            raise ScenarioError(f"net {name!r}: {err}") from err

    boxes: dict[str, Box] = {}
    for name, intervals in data.get("boxes", {}).items():
        try:
            boxes[name] = Box(tuple(tuple(iv) for iv in intervals), name)
        except (TypeError, ValueError) as err:
            raise ScenarioError(f"box {name!r}: {err}") from err

    tasks = []
    for i, raw in enumerate(data.get("tasks", []), start=1):
        tasks.append(_task(i, raw, nets, boxes))
    if not tasks:
        raise ScenarioError("scenario declares no tasks")
    names = [t.name for t in tasks]
    if len(set(names)) != len(names):
        raise ScenarioError("task names must be unique")

    text = (f"gauges=[{', '.join(gauges)}] schedule={count} points from {lambda0:g} "
            f"ratio {ratio:g} tail={tail_len}")
    return Scenario(
        name=path.stem,
        family=family,
        scale_text=text,
        degree=int(degree if degree is not None else defaults.get("degree", 10)),
        grid=int(grid if grid is not None else defaults.get("grid", 401)),
        order=int(defaults.get("order", 1)),
        nets=nets,
        boxes=boxes,
        tasks=tasks,
    )


def _task(i: int, raw: dict, nets: dict, boxes: dict) -> Task:
    where = f"task {i}"
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ScenarioError(f"{where}: unknown kind {kind!r}")
    unknown = set(raw) - TASK_KEYS
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")
    for key in REQUIRED[kind]:
        if key not in raw:
            raise ScenarioError(f"{where} ({kind}) is missing {key!r}")
    for key in ("net", "other"):
        if key in raw and raw[key] not in nets:
            raise ScenarioError(f"{where}: undeclared net {raw[key]!r}")
    for b in raw.get("boxes", []):
        if b not in boxes:
            raise ScenarioError(f"{where}: undeclared box {b!r}")
    if "net" in raw:
        for b in raw.get("boxes", []):
            if boxes[b].d != nets[raw["net"]].dimension:
                raise ScenarioError(f"{where}: box {b!r} does not match the dimension of {raw['net']!r}")
    try:
        expect = Status(raw.get("expect", "holds"))
    except ValueError:
        raise ScenarioError(f"{where}: expect must be holds, fails or unknown") from None
    args = {k: v for k, v in raw.items() if k not in ("kind", "name", "expect", "csv")}
    return Task(str(raw.get("name", f"task{i}")), kind, args, expect, bool(raw.get("csv", False)))


# ------------------------------------------------------------------ running

@dataclass
class TaskResult:
    task: Task
    outcome: Status
    result: str  # pass | fail | unknown
    lines: list[str] = field(default_factory=list)
    series: list[tuple[str, SampledSeminormNet]] = field(default_factory=list)
    seconds: float = 0.0


@dataclass
class Report:
    scenario: Scenario
    results: list[TaskResult]

    @property
    def exit_code(self) -> int:
        outcomes = [r.result for r in self.results]
        if "fail" in outcomes:
            return 1
        if "unknown" in outcomes:
            return 2
        return 0

    def text(self, timing: bool = True) -> str:
        s = self.scenario
        out = [f"scenario {s.name}", f"scale {s.scale_text}",
               f"defaults degree={s.degree} grid={s.grid} order={s.order}", ""]
        for r in self.results:
            out.append(f"[{r.task.name}] kind={r.task.kind} "
                       + " ".join(f"{k}={_arg(v)}" for k, v in sorted(r.task.args.items())))
            out.extend("    " + line for line in r.lines)
            if timing:
                out.append(f"    elapsed: {r.seconds:.3f}s")
            out.append(f"RESULT {r.task.name} kind={r.task.kind} outcome={r.outcome.value} "
                       f"expect={r.task.expect.value} status={r.result}")
            out.append("")
        counts = {k: sum(r.result == k for r in self.results) for k in ("pass", "fail", "unknown")}
        out.append(f"SUMMARY pass={counts['pass']} fail={counts['fail']} unknown={counts['unknown']} "
                   f"exit={self.exit_code}")
        return "\n".join(out) + "\n"


def _arg(v) -> str:
    return ",".join(map(str, v)) if isinstance(v, list) else str(v)


def _g(x: float) -> str:
    return f"{x:.6g}"


def _verdict_text(v: Verdict, family: ScaleFamily) -> str:
    parts = [v.status.value]
    if v.witness is not None:
        parts.append(f"witness={format_element(v.witness, family)}")
    if v.lambda0 is not None:
        parts.append(f"lambda0={_g(v.lambda0)}")
    if v.failing_n is not None:
        parts.append(f"failing n={v.failing_n}")
    if v.counterexamples:
        parts.append(f"at lambda={_g(v.counterexamples[0])}")
    if v.numeric:
        parts.append("(numeric)")
    if v.degree is not None:
        parts.append(f"degree={v.degree}")
    if v.detail:
        parts.append(f"[{v.detail}]")
    return " ".join(parts)


def _classification_lines(rep: ClassificationReport, family: ScaleFamily) -> list[str]:
    lines = []
    for c in rep.checks:
        last = c.net.values[-1]
        lines.append(f"{rep.kind} K={c.box.name} l={c.order}: {_verdict_text(c.verdict, family)}"
                     f" (P at lambda={_g(c.net.lambdas[-1])}: {_g(last)})")
    lines.append(f"overall {rep.overall.value}")
    return lines


def _theorem_lines(rep: TheoremReport, family: ScaleFamily) -> list[str]:
    lines = []
    if rep.moderate is not None:
        lines.append(f"hypothesis moderate (orders <= {rep.order + 2}): {rep.moderate.overall.value}")
        bad = rep.moderate.first_failure()
        if bad is not None:
            lines.append(f"  K={bad.box.name} l={bad.order}: {_verdict_text(bad.verdict, family)}")
    if rep.c0 is not None:
        lines.append(f"hypothesis C0 ideal: {rep.c0.overall.value}")
        bad = rep.c0.first_failure()
        if bad is not None:
            lines.append(f"  K={bad.box.name}: {_verdict_text(bad.verdict, family)}")
    if rep.aborted:
        lines.append(f"aborted: {rep.aborted}")
        return lines
    for c in rep.direct.checks:
        if c.order >= 1:
            lines.append(f"direct K={c.box.name} l={c.order}: {_verdict_text(c.verdict, family)}")
    for s in rep.replay:
        head = f"replay K={s.box.name} l={s.order} alpha={s.alpha} axis={s.axis}:"
        if s.failure:
            lines.append(f"{head} failed [{s.failure}]")
            continue
        margin = min((bd - m for m, bd in zip(s.measured, s.bound)), default=float("nan"))
        lines.append(f"{head} beta={format_element(s.beta, family)} b={format_element(s.b, family)} "
                     f"step_ok={s.step_ok} dominated={s.dominated} min(bound-measured)={_g(margin)} "
                     f"bound in ideal: {_verdict_text(s.bound_verdict, family)} sharpened={s.sharpened}")
    lines.append(f"agreement {rep.agreement}")
    return lines


def _as_gauge(text: str, family: ScaleFamily):
    e = parse_expr(text, 0)
    element = normalize(e, family)
    if element is not None:
        return element, format_element(element, family)
    return sample_gauge(e, family), f"{text} (sampled)"


def _run_task(task: Task, s: Scenario, full: bool) -> TaskResult:
    a = task.args
    family = s.family
    degree = int(a.get("degree", s.degree))
    grid = Grid(int(a.get("grid", s.grid)))
    order = int(a.get("order", s.order))
    boxes = [s.boxes[b] for b in a.get("boxes", [])]
    lines: list[str] = []
    series: list[tuple[str, SampledSeminormNet]] = []

    if task.kind in ("moderate", "negligible"):
        fn = is_moderate if task.kind == "moderate" else is_negligible
        rep = fn(s.nets[a["net"]], boxes, order, family, degree, grid, full_schedule=full)
        lines += _classification_lines(rep, family)
        series += [(task.kind, c.net) for c in rep.checks]
        outcome = rep.status
    elif task.kind == "theorem":
        rep = zero_order_reduction(s.nets[a["net"]], boxes, order, family, degree, grid, full_schedule=full)
        lines += _theorem_lines(rep, family)
        for tag, part in (("moderate", rep.moderate), ("c0", rep.c0), ("direct", rep.direct)):
            if part is not None:
                series += [(tag, c.net) for c in part.checks]
        outcome = rep.status
    elif task.kind == "equality":
        u, v = s.nets[a["net"]], s.nets[a["other"]]
        verdict = equality_in_algebra(u, v, boxes, order, family, degree, grid)
        lines.append(f"[u] = [v]: {_verdict_text(verdict, family)}")
        if task.csv:
            rep = is_negligible(difference_net(u, v), boxes, order, family, degree, grid, full_schedule=full)
            series += [("difference", c.net) for c in rep.checks]
        outcome = verdict.status
    elif task.kind == "embedding":
        f = s.nets[a["net"]]
        injective = embedding_injectivity_check(f, boxes, family, degree, grid)
        rep = is_negligible(f, boxes, 0, family, degree, grid, full_schedule=full)
        lines += _classification_lines(rep, family)
        lines.append(f"injectivity consistent: {injective}")
        series += [("embedding", c.net) for c in rep.checks]
        outcome = Status.HOLDS if injective else Status.FAILS
    else:
        left, ltext = _as_gauge(a["left"], family)
        right, rtext = _as_gauge(a["right"], family)
        verdict = dominates(left, right, family)
        lines.append(f"{ltext} << {rtext}: {_verdict_text(verdict, family)}")
        outcome = verdict.status

    if outcome is task.expect:
        result = "pass"
    elif outcome is Status.UNKNOWN:
        result = "unknown"
    else:
        result = "fail"
    return TaskResult(task, outcome, result, lines, series)


def run_scenario(s: Scenario, csv_dir: str | Path | None = None) -> Report:
    """Run every task in declaration order; a failing task does not stop the rest."""
    results = []
    for task in s.tasks:
        start = time.perf_counter()
        try:
            res = _run_task(task, s, full=task.csv and csv_dir is not None)
        except Exception as err:  # per-task isolation
            res = TaskResult(task, Status.FAILS, "fail", [f"error: {type(err).__name__}: {err}"])
        if task.csv:
            if csv_dir is None:
                res.lines.append("csv: skipped (no csv directory given)")
            else:
                try:
                    for path in write_series(res.series, Path(csv_dir), task.name):
                        res.lines.append(f"csv: {path.name}")
                except OSError as err:
                    res.lines.append(f"csv error: {err}")
                    res.result = "fail"
        res.seconds = time.perf_counter() - start
        results.append(res)
    return Report(s, results)


def series_csv(net: SampledNet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "value"])
    for lam, value in zip(net.lambdas, net.values):
        writer.writerow([repr(float(lam)), repr(float(value))])
    return buf.getvalue()


def write_series(series: list[tuple[str, SampledSeminormNet]], directory: Path, task_name: str) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for tag, net in series:
        stem = f"{task_name}__{tag}__{net.box.name or 'box'}__l{net.order}"
        path = directory / f"{stem}.csv"
        path.write_text(series_csv(net), encoding="utf-8")
        written.append(path)
    return written

