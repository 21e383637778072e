"""Source characteristics, inheritance and product-line measures.

Traditional measures (CLD, DIT, NOC) are per class and reported as sums;
product-line measures (NIT, NOA, CIR) are aggregate counts over the whole
model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Mapping, Sequence

from .model import CodeModel

CHARACTERISTICS = (
    "artifacts", "namespaces", "components", "decisions", "define_macros",
    "pragma_directives", "macro_expressions", "classes", "includes",
)
CHARACTERISTIC_LABELS = {
    "artifacts": "Artifacts",
    "namespaces": "Namespaces",
    "components": "Components",
    "decisions": "Decisions",
    "define_macros": "Define Macros",
    "pragma_directives": "Pragma Directives",
    "macro_expressions": "Macro Expressions",
    "classes": "Classes",
    "includes": "Include",
}
TRADITIONAL = ("CLD", "DIT", "NOC")
PRODUCT_LINE = ("NIT", "NOA", "CIR")
MEASURES = TRADITIONAL + PRODUCT_LINE
ALL_METRICS = CHARACTERISTICS + MEASURES


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class CharacteristicCounts:
    artifacts: int = 0
    namespaces: int = 0
    components: int = 0
    decisions: int = 0
    define_macros: int = 0
    pragma_directives: int = 0
    macro_expressions: int = 0
    classes: int = 0
    includes: int = 0

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class MetricValue:
    name: str
    per_entity: Mapping[int, int] = field(default_factory=dict)
    aggregate_sum: int = 0
    # None for aggregate-only measures (NIT, NOA, CIR).
    aggregate_max: int | None = None
    aggregate_mean: float | None = None

    @classmethod
    def from_per_entity(cls, name: str, values: Mapping[int, int]) -> "MetricValue":
        values = dict(sorted(values.items()))
        total = sum(values.values())
        return cls(name, values, total,
                   max(values.values(), default=0),
                   total / len(values) if values else 0.0)

    @classmethod
    def aggregate(cls, name: str, value: int) -> "MetricValue":
        return cls(name, {}, value, None, None)


def count_characteristics(model: CodeModel) -> CharacteristicCounts:
    classes = len(model.internal_classes)
    function_macros = {m.name for m in model.macro_defs if m.is_function_like}
    return CharacteristicCounts(
        artifacts=len(model.artifacts),
        namespaces=len(model.namespaces),
        components=classes + len(function_macros),
        decisions=len(model.decision_events),
        define_macros=len(model.macro_defs),
        pragma_directives=len(model.pragmas),
        macro_expressions=len(model.macro_expansions),
        classes=classes,
        includes=len(model.include_edges),
    )


def _graph(model: CodeModel):
    internal = {c.id for c in model.classes if not c.is_external}
    bases: dict[int, list[int]] = {c.id: [] for c in model.classes}
    children: dict[int, list[int]] = {c.id: [] for c in model.classes}
    for e in model.inheritance_edges:
        bases[e.derived_id].append(e.base_id)
        children[e.base_id].append(e.derived_id)
    return internal, bases, children


def _longest(adjacency: Mapping[int, list[int]], nodes) -> dict[int, int]:
    """Longest path length (in edges) from each node along ``adjacency``."""
    depth: dict[int, int] = {}
    for start in nodes:
        if start in depth:
            continue
        # Iterative post-order DFS; the graph is acyclic by construction.
        stack = [(start, iter(adjacency[start]))]
        while stack:
            node, it = stack[-1]
            for nxt in it:
                if nxt not in depth:
                    stack.append((nxt, iter(adjacency[nxt])))
                    break
            else:
                stack.pop()
                depth[node] = max((depth[m] + 1 for m in adjacency[node]), default=0)
    return depth


def cld(model: CodeModel) -> MetricValue:
    """Levels of hierarchy below each internal class."""
    internal, _, children = _graph(model)
    depth = _longest(children, sorted(internal))
    return MetricValue.from_per_entity("CLD", {c: depth[c] for c in internal})


def dit(model: CodeModel) -> MetricValue:
    """Longest base-edge path from each internal class to a root.

    An external base counts as one level and ends the path.
    """
    internal, bases, _ = _graph(model)
    depth = _longest(bases, sorted(internal))
    return MetricValue.from_per_entity("DIT", {c: depth[c] for c in internal})


def noc(model: CodeModel) -> MetricValue:
    internal, _, children = _graph(model)
    return MetricValue.from_per_entity("NOC", {c: len(children[c]) for c in internal})


def nit(model: CodeModel) -> MetricValue:
    return MetricValue.aggregate("NIT", sum(1 for n in model.namespaces if n.parent_id is not None))


def noa(model: CodeModel) -> MetricValue:
    non_root = sum(1 for n in model.namespaces if n.parent_id is not None)
    return MetricValue.aggregate("NOA", len(model.artifacts) + non_root)


def cir(model: CodeModel) -> MetricValue:
    return MetricValue.aggregate("CIR", len(model.internal_edges))


MEASURE_FUNCS = {"CLD": cld, "DIT": dit, "NOC": noc, "NIT": nit, "NOA": noa, "CIR": cir}


# -- reports -----------------------------------------------------------------

@dataclass
class MetricsReport:
    characteristics: dict[str, int] = field(default_factory=dict)
    traditional: dict[str, MetricValue] = field(default_factory=dict)
    product_line: dict[str, MetricValue] = field(default_factory=dict)
    model_path: str = ""
    plan_name: str = ""

    def metric_names(self) -> list[str]:
        return [*self.characteristics, *self.traditional, *self.product_line]

    def value(self, name: str):
        if name in self.characteristics:
            return self.characteristics[name]
        measure = self.traditional.get(name) or self.product_line.get(name)
        if measure is None:
            raise KeyError(name)
        return measure.aggregate_sum


def measure_all(model: CodeModel, names: Sequence[str] = ALL_METRICS,
                model_path: str = "", plan_name: str = "") -> MetricsReport:
    unknown = [n for n in names if n not in ALL_METRICS]
    if unknown:
        raise MetricsError(f"unknown metric name(s): {', '.join(unknown)}")
    wanted = set(names)
    report = MetricsReport(model_path=model_path, plan_name=plan_name)
    if wanted & set(CHARACTERISTICS):
        counts = count_characteristics(model).as_dict()
        report.characteristics = {k: counts[k] for k in CHARACTERISTICS if k in wanted}
    report.traditional = {k: MEASURE_FUNCS[k](model) for k in TRADITIONAL if k in wanted}
    report.product_line = {k: MEASURE_FUNCS[k](model) for k in PRODUCT_LINE if k in wanted}
    return report


def run_plan(model: CodeModel, plan, model_path: str = "") -> MetricsReport:
    """Compute exactly the metrics a GQM plan references."""
    return measure_all(model, plan.metric_names(), model_path, plan.name)


# -- comparison --------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    name: str
    old_value: float
    new_value: float
    absolute_improvement: float
    relative_improvement_pct: float | None

    @property
    def relative_text(self) -> str:
        if self.relative_improvement_pct is None:
            return "n/a"
        return f"{format_pct(self.old_value, self.new_value)} %"


def relative_improvement(old, new) -> Fraction | float | None:
    if old == 0:
        return None
    if isinstance(old, int) and isinstance(new, int):
        return Fraction(100 * (old - new), old)
    return 100.0 * (old - new) / old


def round_half_up(value, places: int = 2) -> Decimal:
    if isinstance(value, Fraction):
        scaled = value * 10 ** places
        sign = -1 if scaled < 0 else 1
        q = (abs(scaled) + Fraction(1, 2)).__floor__()
        return Decimal(sign * q).scaleb(-places)
    quantum = Decimal(1).scaleb(-places)
    return Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP)


def format_pct(old, new, places: int = 2) -> str:
    rel = relative_improvement(old, new)
    if rel is None:
        return "n/a"
    return f"{round_half_up(rel, places):.{places}f}"


def _as_int(v):
    return int(v) if isinstance(v, float) and v.is_integer() else v


def compare(old: MetricsReport, new: MetricsReport) -> list[ComparisonRow]:
    old_names, new_names = set(old.metric_names()), set(new.metric_names())
    if old_names != new_names:
        diff = sorted(old_names ^ new_names)
        raise MetricsError(f"reports were computed with different plans; "
                           f"metrics not in both: {', '.join(diff)}")
    rows = []
    for name in ALL_METRICS:
        if name not in old_names:
            continue
        o, n = _as_int(old.value(name)), _as_int(new.value(name))
        rel = relative_improvement(o, n)
        rows.append(ComparisonRow(name, o, n, o - n, None if rel is None else float(rel)))
    return rows


# -- correlation -------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    r: float
    pairs: tuple[tuple[str, float, float], ...] = ()


class CorrelationError(ValueError):
    pass


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Pearson product-moment correlation of two equal-length samples."""
    if len(xs) != len(ys):
        raise CorrelationError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise CorrelationError("need at least two pairs")
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise CorrelationError("zero variance in " + ("xs" if sxx == 0 else "ys"))
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return CorrelationResult(r, tuple((str(i), x, y) for i, (x, y) in enumerate(zip(xs, ys))))


# Traditional measure paired with the product-line measure in the same row
# of the measure tables.
MEASURE_PAIRING = (("CLD", "NIT"), ("DIT", "NOA"), ("NOC", "CIR"))


def six_point_pairs(old: MetricsReport, new: MetricsReport,
                    labels: tuple[str, str] = ("old", "new")) -> list[tuple[str, float, float]]:
    pairs = []
    for tag, report in zip(labels, (old, new)):
        for trad, pl in MEASURE_PAIRING:
            try:
                pairs.append((f"{trad}/{pl} {tag}", report.value(trad), report.value(pl)))
            except KeyError as exc:
                raise MetricsError(f"report lacks measure {exc.args[0]}") from None
    return pairs


def correlate(old: MetricsReport, new: MetricsReport) -> CorrelationResult:
    pairs = six_point_pairs(old, new)
    result = pearson([p[1] for p in pairs], [p[2] for p in pairs])
    return CorrelationResult(result.r, tuple(pairs))


# -- text rendering ----------------------------------------------------------

def label(name: str) -> str:
    return CHARACTERISTIC_LABELS.get(name, name)


def _table(headers, rows) -> str:
    cells = [list(map(str, headers))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    out = []
    for k, r in enumerate(cells):
        out.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                             for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


def _num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def render_report(report: MetricsReport) -> str:
    parts = []
    if report.characteristics:
        parts.append(_table(["Characteristic", "Value"],
                            [(label(k), v) for k, v in report.characteristics.items()]))
    for title, group in (("Traditional Measure", report.traditional),
                         ("PL Measure", report.product_line)):
        if group:
            parts.append(_table([title, "Sum", "Max", "Mean"],
                                [(m.name, m.aggregate_sum, _num(m.aggregate_max),
                                  _num(m.aggregate_mean)) for m in group.values()]))
    return "\n\n".join(parts) + "\n"


def render_comparison(rows: Sequence[ComparisonRow], old_label: str = "Old",
                      new_label: str = "New") -> str:
    body = [(label(r.name), _num(r.old_value), _num(r.new_value),
             _num(r.absolute_improvement), r.relative_text) for r in rows]
    return _table(["Name", old_label, new_label, "Absolute Improvement",
                   "Relative Improvement"], body) + "\n"
