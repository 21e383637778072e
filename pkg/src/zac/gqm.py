"""Goal/Question/Metric measurement plans.

A plan is a small YAML document::

    version: zac-plan/1
    name: my-plan
    goals:
      - goal: text
        questions:
          - question: text
            metrics: [CLD, classes]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import yaml

from .metrics import ALL_METRICS

PLAN_VERSION = "zac-plan/1"


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Question:
    text: str
    metrics: tuple[str, ...]


@dataclass(frozen=True)
class Goal:
    text: str
    questions: tuple[Question, ...] = ()


@dataclass(frozen=True)
class GqmPlan:
    name: str
    goals: tuple[Goal, ...] = field(default=())

    def __post_init__(self):
        unknown = [m for g in self.goals for q in g.questions for m in q.metrics
                   if m not in ALL_METRICS]
        if unknown:
            raise PlanError(f"unknown metric name(s) in plan {self.name!r}: {', '.join(unknown)}")

    def metric_names(self) -> list[str]:
        """Referenced metrics in canonical order, each once."""
        used = {m for g in self.goals for q in g.questions for m in q.metrics}
        return [m for m in ALL_METRICS if m in used]

    @classmethod
    def selecting(cls, *metrics: str, name: str = "adhoc") -> "GqmPlan":
        return cls(name, (Goal("ad hoc", (Question("ad hoc", tuple(metrics)),)),))


def plan_from_dict(doc) -> GqmPlan:
    if not isinstance(doc, dict):
        raise PlanError("plan document must be a mapping")
    version = doc.get("version")
    if version != PLAN_VERSION:
        raise PlanError(f"unsupported plan version {version!r} (expected {PLAN_VERSION!r})")
    try:
        goals = tuple(
            Goal(str(g["goal"]), tuple(
                Question(str(q["question"]), tuple(str(m) for m in q.get("metrics") or ()))
                for q in g.get("questions") or ()))
            for g in doc.get("goals") or ()
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise PlanError(f"malformed plan: {exc}") from exc
    return GqmPlan(str(doc.get("name", "unnamed")), goals)


def parse_plan(text: str) -> GqmPlan:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise PlanError(f"plan is not valid YAML: {exc}") from exc
    return plan_from_dict(doc)


def load_plan(path) -> GqmPlan:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_plan(fh.read())
    except OSError as exc:
        raise PlanError(f"cannot read plan {path}: {exc.strerror}") from exc


def default_plan() -> GqmPlan:
    text = resources.files("zac").joinpath("data/default-plan.yaml").read_text("utf-8")
    return parse_plan(text)
