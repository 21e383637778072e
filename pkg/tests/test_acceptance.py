"""Acceptance criteria, one test each.

Every test appends a single ``criterion N: PASS|FAIL ...`` line to
``RESULTS``; the lines are printed as they are produced and again in the
terminal summary (see ``conftest.py``).
"""

import io
import json
import random
import string
import time
import xml.etree.ElementTree as ET
from decimal import Decimal

import pytest

from oracles import (
    PRODUCT_LINE_SIX, R_ORACLE, TRADITIONAL_SIX, brute_force_measures, random_hierarchy,
    random_tree_model,
)
from test_metrics import _fig_10a_model, report
from test_viz import check_layout, dot_edges, files_model
from zac.gqm import default_plan
from zac.lexer import SourceText, tokenize
from zac.metrics import cir, cld, compare, count_characteristics, dit, nit, noa, noc, pearson, run_plan
from zac.model import Artifact, CodeModel, derive_namespaces
from zac.pipeline import analyze_tree
from zac.store import dumps_canonical, model_to_doc, report_to_doc
from zac.viz import MODES, bar_chart, inheritance_graph, namespace_graph, render, treemap

RESULTS: list[str] = []


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# name, old, new, reference absolute, reference relative (as printed)
REFERENCE_ROWS = [
    ("artifacts", 776, 698, 78, "10.51"),
    ("namespaces", 8, 7, 1, "12.50"),
    ("components", 561, 482, 79, "14.08"),
    ("decisions", 703, 445, 258, "36.70"),
    ("define_macros", 609, 447, 162, "26.60"),
    ("pragma_directives", 11, 10, 1, "9.09"),
    ("macro_expressions", 402, 276, 126, "31.34"),
    ("classes", 333, 207, 126, "37.84"),
    ("includes", 1027, 532, 495, "48.20"),
    ("CLD", 66, 21, 45, "68.18"),
    ("DIT", 232, 145, 87, "37.5"),
    ("NOC", 64, 21, 43, "67.18"),
    ("NIT", 7, 6, 1, "14.28"),
    ("NOA", 783, 704, 79, "10.08"),
    ("CIR", 160, 97, 63, "39.37"),
]


def test_criterion_1_comparison_arithmetic():
    t0 = time.perf_counter()
    old = report({name: o for name, o, _, _, _ in REFERENCE_ROWS})
    new = report({name: n for name, _, n, _, _ in REFERENCE_ROWS})
    rows = {r.name: r for r in compare(old, new)}
    bad = []
    for name, _, _, absolute, pct in REFERENCE_ROWS:
        row = rows[name]
        printed = f"{Decimal(pct):.2f}"  # "37.5" and "37.50" are the same 2-decimal value
        got = row.relative_text.removesuffix(" %")
        if row.absolute_improvement != absolute or got != printed:
            bad.append(f"{name} {row.absolute_improvement}/{got} vs {absolute}/{printed}")
    elapsed = time.perf_counter() - t0
    record(1, not bad and elapsed < 1,
           f"{len(REFERENCE_ROWS) - len(bad)}/{len(REFERENCE_ROWS)} rows reproduced in {elapsed:.3f}s"
           + (f"; mismatched: {', '.join(bad)}" if bad else ""))


def test_criterion_2_correlation():
    t0 = time.perf_counter()
    r = pearson(TRADITIONAL_SIX, PRODUCT_LINE_SIX).r
    elapsed = time.perf_counter() - t0
    ok = 0.90 <= r <= 0.94 and abs(r - R_ORACLE) <= 1e-9 and elapsed < 1
    record(2, ok, f"r = {r:.12f} (oracle {R_ORACLE:.12f}, reference claim +0.93) "
                  f"in {elapsed:.3f}s")


def test_criterion_3_graph_oracles():
    t0 = time.perf_counter()
    rng = random.Random(20240601)
    failures = 0
    for _ in range(1000):
        m = random_hierarchy(rng, 12)
        ref = brute_force_measures(m)
        if (cld(m).per_entity != ref["CLD"] or dit(m).per_entity != ref["DIT"]
                or noc(m).per_entity != ref["NOC"] or cir(m).aggregate_sum != ref["CIR"]):
            failures += 1
    for _ in range(1000):
        m, files, dirs = random_tree_model(rng)
        if (nit(m).aggregate_sum != len(m.namespaces) - 1
                or noa(m).aggregate_sum != files + len(m.namespaces) - 1
                or len(m.namespaces) - 1 != dirs):
            failures += 1
    elapsed = time.perf_counter() - t0
    record(3, failures == 0 and elapsed < 30,
           f"{2000 - failures}/2000 random cases agree with brute force in {elapsed:.2f}s")


def _fig_10b_model(files: int) -> CodeModel:
    subdirs = ["jpeglib/x", "libpng/x", "zlib/x", "MacOSX/MacOSX.xcodeproj/x",
               "MacOSX/MainMenu.nib/x"]
    paths = subdirs + [f"f{i}.cpp" for i in range(files - len(subdirs))]
    ns = derive_namespaces(paths)
    ids = {n.path: n.id for n in ns}
    arts = [Artifact(i, p, "source", 1, ids[p.rpartition("/")[0]])
            for i, p in enumerate(sorted(paths))]
    return CodeModel(artifacts=arts, namespaces=ns)


def test_criterion_4_reconciliation():
    a, b = _fig_10a_model(776), _fig_10b_model(698)
    got = (len(a.namespaces), nit(a).aggregate_sum, noa(a).aggregate_sum,
           len(b.namespaces), nit(b).aggregate_sum, noa(b).aggregate_sum)
    record(4, got == (8, 7, 783, 7, 6, 704),
           f"namespaces/NIT/NOA = {got[:3]} and {got[3:]}, expected (8, 7, 783) and (7, 6, 704)")


def test_criterion_5_fixture_counts(corpus_root, corpus_oracle):
    t0 = time.perf_counter()
    counts = count_characteristics(analyze_tree(corpus_root)).as_dict()
    elapsed = time.perf_counter() - t0
    diff = {k: (v, corpus_oracle["characteristics"][k]) for k, v in counts.items()
            if v != corpus_oracle["characteristics"][k]}
    record(5, not diff and elapsed < 1,
           f"9 characteristic counts vs hand-count oracle, {len(diff)} differ, {elapsed:.3f}s"
           + (f": {diff}" if diff else ""))


def test_criterion_6_lossless(corpus_root):
    t0 = time.perf_counter()
    rng = random.Random(6)
    bad = 0
    files = sorted(p for p in corpus_root.rglob("*") if p.is_file())
    for p in files:
        if tokenize(SourceText.from_path(p)).text().encode("latin-1") != p.read_bytes():
            bad += 1
    alphabet = string.printable + "".join(map(chr, range(0, 32)))
    for _ in range(10_000):
        s = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 80)))
        if tokenize(s).text() != s:
            bad += 1
    elapsed = time.perf_counter() - t0
    record(6, bad == 0 and elapsed < 10,
           f"{len(files)} corpus files + 10000 random strings, {bad} mismatches, {elapsed:.2f}s")


def _outputs(root, parallel, monkeypatch, flag):
    monkeypatch.setenv("ZAC_NO_PARALLEL", flag)
    m = analyze_tree(root, parallel=parallel)
    r = run_plan(m, default_plan(), "corpus.model.json")
    out = {"model": dumps_canonical(model_to_doc(m)), "report": dumps_canonical(report_to_doc(r))}
    out.update({mode: render(m, mode) for mode in MODES})
    return out


def test_criterion_7_determinism(corpus_root, monkeypatch):
    runs = [_outputs(corpus_root, None, monkeypatch, "0"),
            _outputs(corpus_root, None, monkeypatch, "1"),
            _outputs(corpus_root, True, monkeypatch, "0"),
            _outputs(corpus_root, False, monkeypatch, "1")]
    differing = sorted({k for run in runs[1:] for k in run if run[k] != runs[0][k]})
    record(7, not differing,
           f"{len(runs)} analyze/measure/viz runs (serial, parallel, ZAC_NO_PARALLEL 0/1), "
           f"{len(runs[0])} outputs each, differing: {differing or 'none'}")


def test_criterion_8_visual_conservation(corpus_model):
    t0 = time.perf_counter()
    problems = []
    rng = random.Random(8)
    models = [corpus_model] + [
        files_model({f"{rng.choice(['', 'a/', 'a/b/', 'c/'])}f{i}.cpp": rng.randint(0, 5000)
                     for i in range(rng.randint(1, 40))}) for _ in range(30)]
    for m in models:
        try:
            check_layout(m, (1024, 768))
        except AssertionError as exc:
            problems.append(f"treemap: {exc}")
        for svg in (treemap(m), bar_chart(m)):
            try:
                ET.fromstring(svg)
            except ET.ParseError as exc:
                problems.append(f"svg: {exc}")
    m = corpus_model
    counts = {
        "inheritance": (dot_edges(inheritance_graph(m, "class_inheritance")),
                        len(m.inheritance_edges)),
        "includes": (dot_edges(inheritance_graph(m, "include_relationship")),
                     len(m.include_edges)),
        "namespaces": (dot_edges(namespace_graph(m)), len(m.namespaces) - 1),
    }
    problems += [f"{k}: {a} DOT edges vs {b}" for k, (a, b) in counts.items() if a != b]
    elapsed = time.perf_counter() - t0
    record(8, not problems and elapsed < 5,
           f"{len(models)} treemaps conserve area without overlap, DOT edges {counts}, "
           f"{elapsed:.2f}s" + (f"; problems: {problems[:3]}" if problems else ""))


def _synthetic_corpus(root, lines_wanted=100_000):
    rng = random.Random(9)
    total, k = 0, 0
    while total < lines_wanted:
        d = root / f"mod{k % 12}" / f"sub{k % 5}"
        d.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        buf.write(f'#pragma once\n#include "../../mod{(k + 1) % 12}/sub0/f{k + 1}.h"\n'
                  f"#include <vector>\n#define F{k}_MAX(a, b) ((a) > (b) ? (a) : (b))\n"
                  f"#define F{k}_N {k}\n\nnamespace m{k % 12} {{\n")
        for c in range(20):
            base = f" : public C{k - 1}_{c}" if k and rng.random() < 0.5 else ""
            buf.write(f"class C{k}_{c}{base} {{\npublic:\n    int run(int x) {{\n")
            for j in range(rng.randint(5, 15)):
                buf.write(f"        if (x > {j}) x = F{k}_MAX(x, F{k}_N);\n"
                          f"        for (int i = 0; i < x; ++i) {{ x -= i ? 1 : 2; }}\n"
                          f"        // comment {j} with a \"string\" and while\n")
            buf.write("        return x;\n    }\n};\n\n")
        buf.write("}\n")
        text = buf.getvalue()
        (d / f"f{k}.h").write_text(text)
        total += text.count("\n")
        k += 1
    return total, k


@pytest.mark.slow
def test_criterion_9_scale(tmp_path):
    lines, files = _synthetic_corpus(tmp_path)
    t0 = time.perf_counter()
    m = analyze_tree(tmp_path)
    r = run_plan(m, default_plan())
    json.loads(dumps_canonical(model_to_doc(m)))
    for mode in MODES:
        render(m, mode)
    elapsed = time.perf_counter() - t0
    record(9, elapsed < 30 and r.value("classes") == 20 * files,
           f"{lines} lines in {files} files analyzed, measured and rendered in {elapsed:.2f}s")
