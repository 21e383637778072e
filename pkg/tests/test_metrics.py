import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from oracles import (
    PRODUCT_LINE_SIX, R_ORACLE, TRADITIONAL_SIX, brute_force_measures, exact_pearson,
    random_hierarchy, random_tree_model,
)
from test_model import model_of
from zac.gqm import GqmPlan, PlanError, default_plan, parse_plan
from zac.metrics import (
    ALL_METRICS, CHARACTERISTICS, CharacteristicCounts, CorrelationError, MetricsError,
    MetricsReport, MetricValue, cir, cld, compare, correlate, count_characteristics, dit,
    format_pct, measure_all, nit, noa, noc, pearson, relative_improvement, render_comparison,
    render_report, round_half_up, run_plan, six_point_pairs,
)
from zac.model import CodeModel, derive_namespaces, Artifact


def per_name(model, value):
    q = {c.id: c.qualified_name for c in model.classes}
    return {q[k]: v for k, v in value.per_entity.items()}


CHAIN = {"a.h": "class A {}; class B : public A {}; class C : public B {};"}
STAR = {"a.h": "class A {}; class B : A {}; class C : A {}; class D : A {};"}
DIAMOND = {"a.h": "class A {}; class B : A {}; class C : A {}; class D : B, C {};"}


def test_empty_model_counts():
    assert count_characteristics(CodeModel()) == CharacteristicCounts()
    for f in (cld, dit, noc, nit, noa, cir):
        assert f(CodeModel()).aggregate_sum == 0


def test_no_inheritance():
    m = model_of({"a.h": "class A {}; class B {};"})
    for f in (cld, dit, noc):
        v = f(m)
        assert v.aggregate_sum == 0 and set(v.per_entity.values()) == {0}
    assert cir(m).aggregate_sum == 0


def test_chain():
    m = model_of(CHAIN)
    assert per_name(m, cld(m)) == {"A": 2, "B": 1, "C": 0}
    assert per_name(m, dit(m)) == {"A": 0, "B": 1, "C": 2}
    assert per_name(m, noc(m)) == {"A": 1, "B": 1, "C": 0}
    assert (cld(m).aggregate_sum, dit(m).aggregate_sum, noc(m).aggregate_sum) == (3, 3, 2)
    assert cir(m).aggregate_sum == 2


def test_star():
    m = model_of(STAR)
    assert per_name(m, cld(m))["A"] == 1 and cld(m).aggregate_sum == 1
    assert per_name(m, noc(m))["A"] == 3 and noc(m).aggregate_sum == 3


def test_diamond():
    m = model_of(DIAMOND)
    assert per_name(m, dit(m))["D"] == 2
    assert cir(m).aggregate_sum == 4


def test_external_base_counts_one_level():
    m = model_of({"a.h": "class A : public std::string {}; class B : public A {};"})
    assert per_name(m, dit(m)) == {"A": 1, "B": 2}
    assert cir(m).aggregate_sum == 1
    assert noc(m).per_entity.keys() == {c.id for c in m.internal_classes}


def test_aggregates():
    m = model_of(CHAIN)
    v = dit(m)
    assert (v.aggregate_max, v.aggregate_mean) == (2, 1.0)
    assert nit(m).aggregate_max is None and nit(m).per_entity == {}


@pytest.mark.parametrize("n", [1, 2, 5])
def test_chain_of_n(n):
    src = "class C0 {};" + "".join(f"class C{i} : C{i - 1} {{}};" for i in range(1, n))
    assert cir(model_of({"a.h": src})).aggregate_sum == n - 1


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_graph_measures_match_brute_force(seed):
    m = random_hierarchy(random.Random(seed))
    ref = brute_force_measures(m)
    assert cld(m).per_entity == ref["CLD"]
    assert dit(m).per_entity == ref["DIT"]
    assert noc(m).per_entity == ref["NOC"]
    assert cir(m).aggregate_sum == ref["CIR"]
    assert noc(m).aggregate_sum == sum(
        1 for e in m.inheritance_edges if e.base_id in noc(m).per_entity) == ref["CIR"]
    for c, d in dit(m).per_entity.items():
        assert (d == 0) == (not any(e.derived_id == c for e in m.inheritance_edges))
    for c, d in cld(m).per_entity.items():
        assert (d == 0) == (not any(e.base_id == c for e in m.inheritance_edges))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_namespace_measures_on_random_trees(seed):
    m, files, dirs = random_tree_model(random.Random(seed))
    assert nit(m).aggregate_sum == len(m.namespaces) - 1 == dirs
    assert noa(m).aggregate_sum == files + dirs


def _fig_10a_model(files: int) -> CodeModel:
    subdirs = ["jpeglib/x", "libpng/x", "zlib/x", "include/x", "MacOSX/MacOSX.xcodeproj/x",
               "MacOSX/MainMenu.nib/x"]
    paths = subdirs + [f"f{i}.cpp" for i in range(files - len(subdirs))]
    ns = derive_namespaces(paths)
    ids = {n.path: n.id for n in ns}
    arts = [Artifact(i, p, "source", 1, ids[p.rpartition("/")[0]])
            for i, p in enumerate(sorted(paths))]
    return CodeModel(artifacts=arts, namespaces=ns)


def test_fig10a_reconciliation():
    m = _fig_10a_model(776)
    assert len(m.namespaces) == 8
    assert nit(m).aggregate_sum == 7
    assert noa(m).aggregate_sum == 783


def test_single_namespace():
    m = model_of({"a.h": ""})
    assert nit(m).aggregate_sum == 0 and noa(m).aggregate_sum == 1


def test_corpus_characteristics(corpus_model, corpus_oracle):
    assert count_characteristics(corpus_model).as_dict() == corpus_oracle["characteristics"]
    counts = count_characteristics(corpus_model)
    assert counts.classes <= counts.components


def test_corpus_measures(corpus_model, corpus_oracle):
    report = measure_all(corpus_model)
    assert {k: report.value(k) for k in corpus_oracle["measures"]} == corpus_oracle["measures"]


def test_components_counts_function_macros_once():
    m = model_of({"a.h": "#define F(x) x\n#define F(y) y\n#define O 1\nclass A {};"})
    c = count_characteristics(m)
    assert (c.components, c.classes, c.define_macros) == (2, 1, 3)


# -- plans -------------------------------------------------------------------

def test_default_plan_covers_everything():
    plan = default_plan()
    assert plan.metric_names() == list(ALL_METRICS)
    assert len(plan.goals) == 2


def test_default_plan_on_empty_model():
    r = run_plan(CodeModel(), default_plan())
    assert all(r.value(k) == 0 for k in ALL_METRICS)


def test_selecting_only_cld():
    r = run_plan(model_of(CHAIN), GqmPlan.selecting("CLD"))
    assert r.metric_names() == ["CLD"] and r.value("CLD") == 3


def test_plan_matches_individual_operations(corpus_model):
    r = run_plan(corpus_model, default_plan())
    assert r.characteristics == count_characteristics(corpus_model).as_dict()
    for name, f in (("CLD", cld), ("DIT", dit), ("NOC", noc)):
        assert r.traditional[name] == f(corpus_model)
    for name, f in (("NIT", nit), ("NOA", noa), ("CIR", cir)):
        assert r.product_line[name] == f(corpus_model)


def test_unknown_metric_in_plan():
    with pytest.raises(PlanError, match="LOC"):
        parse_plan("version: zac-plan/1\nname: x\ngoals:\n - goal: g\n   questions:\n"
                   "    - question: q\n      metrics: [CLD, LOC]\n")


@pytest.mark.parametrize("text", ["[1, 2", "version: other/1\n", "- just a list\n",
                                  "version: zac-plan/1\ngoals: [3]\n"])
def test_bad_plans(text):
    with pytest.raises(PlanError):
        parse_plan(text)


def test_measure_all_rejects_unknown():
    with pytest.raises(MetricsError):
        measure_all(CodeModel(), ["XYZ"])


# -- comparison --------------------------------------------------------------

def report(values: dict) -> MetricsReport:
    r = MetricsReport()
    for k, v in values.items():
        if k in CHARACTERISTICS:
            r.characteristics[k] = v
        elif k in ("CLD", "DIT", "NOC"):
            r.traditional[k] = MetricValue.aggregate(k, v)
        else:
            r.product_line[k] = MetricValue.aggregate(k, v)
    return r


@pytest.mark.parametrize("name,old,new,absolute,text", [
    ("classes", 333, 207, 126, "37.84"),
    ("includes", 1027, 532, 495, "48.20"),
    ("CLD", 66, 21, 45, "68.18"),
])
def test_compare_examples(name, old, new, absolute, text):
    (row,) = compare(report({name: old}), report({name: new}))
    assert (row.old_value, row.new_value, row.absolute_improvement) == (old, new, absolute)
    assert row.relative_text == f"{text} %"


def test_compare_identical():
    r = report({"classes": 5, "NIT": 3})
    assert [(row.absolute_improvement, row.relative_text) for row in compare(r, r)] == [
        (0, "0.00 %"), (0, "0.00 %")]


def test_compare_zero_old():
    (row,) = compare(report({"NIT": 0}), report({"NIT": 2}))
    assert row.absolute_improvement == -2 and row.relative_improvement_pct is None
    assert row.relative_text == "n/a"


def test_compare_mismatched_plans():
    with pytest.raises(MetricsError, match="CLD"):
        compare(report({"classes": 1, "CLD": 1}), report({"classes": 1}))


def test_round_half_up():
    assert str(round_half_up(Fraction(1, 8) * 100)) == "12.50"
    assert str(round_half_up(Fraction(100125, 1000))) == "100.13"
    assert str(round_half_up(Fraction(-100125, 1000))) == "-100.13"
    assert str(round_half_up(0.125)) == "0.13"
    assert format_pct(232, 145) == "37.50"


@given(st.integers(1, 10**6), st.integers(0, 10**6), st.integers(1, 1000))
def test_relative_improvement_scale_invariant(old, new, k):
    assert relative_improvement(old, new) == relative_improvement(old * k, new * k)
    assert format_pct(old, new) == format_pct(old * k, new * k)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_absolute_sign(old, new):
    (row,) = compare(report({"CIR": old}), report({"CIR": new}))
    assert row.absolute_improvement == old - new


def test_render_comparison_layout():
    text = render_comparison(compare(report({"classes": 333}), report({"classes": 207})),
                             "Ver 1.0", "Ver 1.1")
    assert text.splitlines()[2].split() == ["Classes", "333", "207", "126", "37.84", "%"]


def test_render_report(corpus_model):
    text = render_report(run_plan(corpus_model, default_plan()))
    assert "Include" in text and "CLD" in text and "NOA" in text


# -- correlation -------------------------------------------------------------

def test_pearson_perfect():
    assert pearson([1, 2, 3], [2, 4, 6]).r == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]).r == -1.0


@pytest.mark.parametrize("xs,ys", [([1, 2], [1]), ([1], [1]), ([1, 1, 1], [1, 2, 3]),
                                   ([1, 2, 3], [4, 4, 4])])
def test_pearson_errors(xs, ys):
    with pytest.raises(CorrelationError):
        pearson(xs, ys)


def test_six_point_value():
    r = pearson(TRADITIONAL_SIX, PRODUCT_LINE_SIX).r
    assert abs(r - R_ORACLE) < 1e-9
    assert abs(float(exact_pearson(TRADITIONAL_SIX, PRODUCT_LINE_SIX)) - R_ORACLE) < 1e-15
    assert abs(np.corrcoef(TRADITIONAL_SIX, PRODUCT_LINE_SIX)[0, 1] - R_ORACLE) < 1e-12


def test_correlate_reports():
    old = report({"CLD": 66, "DIT": 232, "NOC": 64, "NIT": 7, "NOA": 783, "CIR": 160})
    new = report({"CLD": 21, "DIT": 145, "NOC": 21, "NIT": 6, "NOA": 704, "CIR": 97})
    pairs = six_point_pairs(old, new)
    assert [p[1] for p in pairs] == TRADITIONAL_SIX
    assert [p[2] for p in pairs] == PRODUCT_LINE_SIX
    assert abs(correlate(old, new).r - R_ORACLE) < 1e-9


def test_correlate_requires_measures():
    with pytest.raises(MetricsError):
        correlate(report({"CLD": 1}), report({"CLD": 2}))


samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=12)


@settings(max_examples=200)
@given(st.data())
def test_pearson_properties(data):
    xs = data.draw(samples)
    ys = data.draw(st.lists(st.floats(-1e3, 1e3, allow_nan=False),
                            min_size=len(xs), max_size=len(xs)))
    assume(np.std(xs) > 1e-3 and np.std(ys) > 1e-3)
    r = pearson(xs, ys).r
    assert -1.0 <= r <= 1.0
    assert math.isclose(r, pearson(ys, xs).r, abs_tol=1e-12)
    assert math.isclose(r, float(np.corrcoef(xs, ys)[0, 1]), abs_tol=1e-9)
    a = data.draw(st.sampled_from([-3.5, -1.0, 0.25, 2.0, 7.0]))
    b = data.draw(st.floats(-100, 100))
    assert math.isclose(pearson([a * x + b for x in xs], ys).r, math.copysign(1, a) * r,
                        abs_tol=1e-9)
