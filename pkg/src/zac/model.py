"""Semantic code model assembled from per-artifact parse outcomes.

Namespaces here are directories: the analysed root is the ``default``
namespace and every sub-directory holding at least one artifact becomes a
child. Declared C++ namespaces are kept in a side table only.
"""

from __future__ import annotations

import fnmatch
import logging
import os
import posixpath
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from .parser import (
    ClassDecl, DecisionPoint, DeclaredNamespace, DefineMacro, IncludeDirective,
    MacroExpansion, ParseOutcome, PragmaDirective,
)

log = logging.getLogger(__name__)

DEFAULT_EXTENSION_MAP: dict[str, tuple[str, ...]] = {
    "source": (".cpp", ".cc", ".cxx"),
    "header": (".h", ".hpp", ".hxx"),
    "doc": (".doc", ".md", ".txt"),
}
ARTIFACT_KINDS = ("source", "header", "doc", "other")
PARSED_KINDS = frozenset({"source", "header"})
ROOT_NAMESPACE = "default"


class ScanError(OSError):
    pass


class Diagnostic(NamedTuple):
    path: str
    line: int
    message: str

    def __str__(self):
        return f"{self.path}:{self.line}: {self.message}"


@dataclass(frozen=True)
class ArtifactDescriptor:
    path: str  # root-relative, posix separators
    kind: str
    size_bytes: int
    location: str = field(default="", compare=False)  # absolute on-disk path


@dataclass(frozen=True)
class Artifact:
    id: int
    path: str
    kind: str
    size_bytes: int
    namespace_id: int


@dataclass(frozen=True)
class NamespaceNode:
    id: int
    name: str
    parent_id: int | None
    path: str


@dataclass(frozen=True)
class ClassEntity:
    id: int
    qualified_name: str
    artifact_id: int | None
    kind: str | None
    is_external: bool
    line: int | None = None


@dataclass(frozen=True)
class InheritanceEdge:
    derived_id: int
    base_id: int
    access: str
    is_virtual: bool


@dataclass(frozen=True)
class IncludeEdge:
    from_artifact: int
    line: int
    target_text: str
    resolved_artifact: int | None
    style: str


@dataclass(frozen=True)
class MacroDef:
    artifact_id: int
    line: int
    name: str
    is_function_like: bool
    parameter_count: int


@dataclass(frozen=True)
class DeclaredNamespaceRow:
    artifact_id: int
    line: int
    name: str


@dataclass(frozen=True)
class DecisionRow:
    artifact_id: int
    line: int
    kind: str


@dataclass(frozen=True)
class MacroExpansionRow:
    artifact_id: int
    line: int
    name: str


@dataclass(frozen=True)
class PragmaRow:
    artifact_id: int
    line: int
    text: str


# Table name -> row type, in serialisation order.
TABLES: dict[str, type] = {
    "artifacts": Artifact,
    "namespaces": NamespaceNode,
    "classes": ClassEntity,
    "inheritance_edges": InheritanceEdge,
    "include_edges": IncludeEdge,
    "macro_defs": MacroDef,
    "declared_namespaces": DeclaredNamespaceRow,
    "decision_events": DecisionRow,
    "macro_expansions": MacroExpansionRow,
    "pragmas": PragmaRow,
}


@dataclass
class CodeModel:
    artifacts: list[Artifact] = field(default_factory=list)
    namespaces: list[NamespaceNode] = field(default_factory=list)
    classes: list[ClassEntity] = field(default_factory=list)
    inheritance_edges: list[InheritanceEdge] = field(default_factory=list)
    include_edges: list[IncludeEdge] = field(default_factory=list)
    macro_defs: list[MacroDef] = field(default_factory=list)
    declared_namespaces: list[DeclaredNamespaceRow] = field(default_factory=list)
    decision_events: list[DecisionRow] = field(default_factory=list)
    macro_expansions: list[MacroExpansionRow] = field(default_factory=list)
    pragmas: list[PragmaRow] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list, compare=False, repr=False)

    def table(self, name: str) -> list:
        if name not in TABLES:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def internal_classes(self) -> list[ClassEntity]:
        return [c for c in self.classes if not c.is_external]

    @property
    def internal_edges(self) -> list[InheritanceEdge]:
        internal = {c.id for c in self.classes if not c.is_external}
        return [e for e in self.inheritance_edges
                if e.derived_id in internal and e.base_id in internal]

    def pragma_count(self, artifact_id: int) -> int:
        return sum(1 for p in self.pragmas if p.artifact_id == artifact_id)

    def integrity_errors(self) -> list[str]:
        """Dangling references and structural violations, empty when valid."""
        errors = []
        for name, table in ((n, getattr(self, n)) for n in ("artifacts", "namespaces", "classes")):
            for pos, row in enumerate(table):
                if row.id != pos:
                    errors.append(f"{name}[{pos}] has id {row.id}, expected {pos}")
        art = range(len(self.artifacts))
        ns = range(len(self.namespaces))
        cls = range(len(self.classes))
        roots = [n for n in self.namespaces if n.parent_id is None]
        if self.namespaces and len(roots) != 1:
            errors.append(f"namespace tree has {len(roots)} roots")
        for n in self.namespaces:
            if n.parent_id is not None and n.parent_id not in ns:
                errors.append(f"namespace {n.id} references missing parent {n.parent_id}")
        for n in self.namespaces:
            seen, cur = set(), n
            while cur.parent_id is not None and cur.parent_id in ns:
                if cur.id in seen:
                    errors.append(f"namespace {n.id} is on a parent cycle")
                    break
                seen.add(cur.id)
                cur = self.namespaces[cur.parent_id]
        for a in self.artifacts:
            if a.namespace_id not in ns:
                errors.append(f"artifact {a.id} references missing namespace {a.namespace_id}")
        for c in self.classes:
            if c.is_external and c.artifact_id is not None:
                errors.append(f"external class {c.id} has an artifact")
            if not c.is_external and c.artifact_id not in art:
                errors.append(f"class {c.id} references missing artifact {c.artifact_id}")
        for e in self.inheritance_edges:
            for ref in (e.derived_id, e.base_id):
                if ref not in cls:
                    errors.append(f"inheritance edge references missing class {ref}")
            if e.derived_id == e.base_id:
                errors.append(f"class {e.derived_id} inherits from itself")
        for e in self.include_edges:
            if e.from_artifact not in art:
                errors.append(f"include edge references missing artifact {e.from_artifact}")
            if e.resolved_artifact is not None and e.resolved_artifact not in art:
                errors.append(f"include edge resolves to missing artifact {e.resolved_artifact}")
        for tname in ("macro_defs", "declared_namespaces", "decision_events",
                      "macro_expansions", "pragmas"):
            for row in getattr(self, tname):
                if row.artifact_id not in art:
                    errors.append(f"{tname} row references missing artifact {row.artifact_id}")
        if not errors and not is_acyclic(self.internal_edges):
            errors.append("internal inheritance graph has a cycle")
        return errors


def is_acyclic(edges: Iterable[InheritanceEdge]) -> bool:
    """Kahn's topological sort over derived -> base edges."""
    succ = defaultdict(list)
    indeg: dict[int, int] = defaultdict(int)
    nodes = set()
    for e in edges:
        succ[e.derived_id].append(e.base_id)
        indeg[e.base_id] += 1
        nodes.update((e.derived_id, e.base_id))
    ready = [n for n in nodes if indeg[n] == 0]
    visited = 0
    while ready:
        n = ready.pop()
        visited += 1
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    return visited == len(nodes)


# -- scanning ----------------------------------------------------------------

def artifact_kind(path: str, extension_map: Mapping[str, Iterable[str]] | None = None) -> str:
    ext = posixpath.splitext(path)[1].lower()
    for kind, exts in (extension_map or DEFAULT_EXTENSION_MAP).items():
        if ext in {e.lower() for e in exts}:
            return kind
    return "other"


def _excluded(rel: str, globs: Iterable[str]) -> bool:
    name = posixpath.basename(rel)
    return any(fnmatch.fnmatchcase(rel, g) or fnmatch.fnmatchcase(name, g) for g in globs)


def scan_tree(root, include_extensions: Iterable[str] | None = None,
              exclude_globs: Iterable[str] = (),
              extension_map: Mapping[str, Iterable[str]] | None = None,
              diagnostics: list | None = None) -> list[ArtifactDescriptor]:
    """Walk ``root`` and describe every accepted file, sorted by path.

    ``include_extensions`` of None accepts every file. Hidden entries (names
    starting with a dot) are skipped. Unreadable files are skipped with a
    diagnostic; an unreadable root raises :class:`ScanError`.
    """
    root = Path(root)
    if not root.is_dir():
        raise ScanError(f"cannot read directory {root}")
    try:
        os.listdir(root)
    except OSError as exc:
        raise ScanError(f"cannot read directory {root}: {exc.strerror}") from exc
    wanted = {e.lower() for e in include_extensions} if include_extensions is not None else None
    globs = tuple(exclude_globs)
    found = []

    def onerror(exc):
        rel = Path(exc.filename).relative_to(root).as_posix() if exc.filename else "?"
        _note(diagnostics, Diagnostic(rel, 0, f"unreadable directory skipped: {exc.strerror}"))

    for dirpath, dirnames, filenames in os.walk(root, onerror=onerror):
        reldir = Path(dirpath).relative_to(root).as_posix()
        reldir = "" if reldir == "." else reldir
        dirnames[:] = sorted(
            d for d in dirnames
            if not d.startswith(".") and not _excluded(posixpath.join(reldir, d), globs)
        )
        for fname in sorted(filenames):
            rel = posixpath.join(reldir, fname)
            if fname.startswith(".") or _excluded(rel, globs):
                continue
            if wanted is not None and posixpath.splitext(fname)[1].lower() not in wanted:
                continue
            full = os.path.join(dirpath, fname)
            try:
                if not os.path.isfile(full):
                    continue
                with open(full, "rb"):
                    pass
                size = os.path.getsize(full)
            except OSError as exc:
                _note(diagnostics, Diagnostic(rel, 0, f"unreadable file skipped: {exc.strerror}"))
                continue
            found.append(ArtifactDescriptor(rel, artifact_kind(rel, extension_map), size, full))
    found.sort(key=lambda d: d.path)
    return found


def _note(diagnostics, diag: Diagnostic):
    log.warning("%s", diag)
    if diagnostics is not None:
        diagnostics.append(diag)


def derive_namespaces(artifacts: Iterable[ArtifactDescriptor | str]) -> list[NamespaceNode]:
    """Directory-derived namespace tree rooted at ``default``."""
    dirs = {""}
    for a in artifacts:
        path = a if isinstance(a, str) else a.path
        d = posixpath.dirname(path)
        while d:
            dirs.add(d)
            d = posixpath.dirname(d)
    ordered = sorted(dirs)
    ids = {d: i for i, d in enumerate(ordered)}
    return [
        NamespaceNode(
            ids[d],
            posixpath.basename(d) if d else ROOT_NAMESPACE,
            ids[posixpath.dirname(d)] if d else None,
            d,
        )
        for d in ordered
    ]


# -- assembly ----------------------------------------------------------------

def _last(name: str) -> str:
    return name.rsplit("::", 1)[-1]


def _resolve_base(base: str, derived: str, internal: set[str],
                  by_last: Mapping[str, list[str]]) -> str | None:
    if base in internal:
        return base
    scope = derived.rsplit("::", 1)[0] if "::" in derived else ""
    while scope:
        candidate = f"{scope}::{base}"
        if candidate in internal:
            return candidate
        scope = scope.rsplit("::", 1)[0] if "::" in scope else ""
    matches = by_last.get(_last(base), [])
    if len(matches) == 1:
        return matches[0]
    return None


def _resolve_include(from_path: str, target: str, paths: Mapping[str, int],
                     by_basename: Mapping[str, list[int]]) -> int | None:
    target = target.replace("\\", "/")
    local = posixpath.normpath(posixpath.join(posixpath.dirname(from_path), target))
    if local in paths:
        return paths[local]
    rooted = posixpath.normpath(target)
    if rooted in paths:
        return paths[rooted]
    hits = by_basename.get(posixpath.basename(target), [])
    return hits[0] if len(hits) == 1 else None


def build_model(artifacts: Iterable[ArtifactDescriptor],
                outcomes: Mapping[str, ParseOutcome] | Iterable[tuple[str, ParseOutcome]],
                namespaces: list[NamespaceNode] | None = None) -> CodeModel:
    """Assemble the code model. Output does not depend on input ordering."""
    descs = sorted(artifacts, key=lambda d: d.path)
    if len({d.path for d in descs}) != len(descs):
        raise ValueError("duplicate artifact paths")
    outcome_map = dict(outcomes.items() if isinstance(outcomes, Mapping) else outcomes)
    if namespaces is None:
        namespaces = derive_namespaces(descs)
    ns_by_path = {n.path: n.id for n in namespaces}
    diagnostics: list[Diagnostic] = []
    model = CodeModel(namespaces=list(namespaces), diagnostics=diagnostics)

    for i, d in enumerate(descs):
        model.artifacts.append(
            Artifact(i, d.path, d.kind, d.size_bytes, ns_by_path[posixpath.dirname(d.path)]))
    paths = {a.path: a.id for a in model.artifacts}
    by_basename: dict[str, list[int]] = defaultdict(list)
    for a in model.artifacts:
        by_basename[posixpath.basename(a.path)].append(a.id)

    # (qualified name) -> (artifact id, line, kind, bases)
    definitions: dict[str, tuple[int, int, str, tuple]] = {}
    for a in model.artifacts:
        outcome = outcome_map.get(a.path)
        if outcome is None:
            continue
        for line, message in outcome.diagnostics:
            diagnostics.append(Diagnostic(a.path, line, message))
        anon = 0
        for ev in outcome.events:
            if isinstance(ev, IncludeDirective):
                model.include_edges.append(IncludeEdge(
                    a.id, ev.line, ev.target,
                    _resolve_include(a.path, ev.target, paths, by_basename), ev.style))
            elif isinstance(ev, DefineMacro):
                model.macro_defs.append(
                    MacroDef(a.id, ev.line, ev.name, ev.is_function_like, ev.parameter_count))
            elif isinstance(ev, PragmaDirective):
                model.pragmas.append(PragmaRow(a.id, ev.line, ev.text))
            elif isinstance(ev, DeclaredNamespace):
                model.declared_namespaces.append(DeclaredNamespaceRow(a.id, ev.line, ev.name))
            elif isinstance(ev, DecisionPoint):
                model.decision_events.append(DecisionRow(a.id, ev.line, ev.kind))
            elif isinstance(ev, MacroExpansion):
                model.macro_expansions.append(MacroExpansionRow(a.id, ev.line, ev.name))
            elif isinstance(ev, ClassDecl) and ev.is_definition:
                name = ev.name
                if not name:
                    anon += 1
                    name = f"<anonymous {ev.kind} {a.path}:{ev.line}#{anon}>"
                if name in definitions:
                    first = model.artifacts[definitions[name][0]].path
                    diagnostics.append(Diagnostic(
                        a.path, ev.line, f"duplicate definition of {name} ignored (first in {first})"))
                    continue
                definitions[name] = (a.id, ev.line, ev.kind, ev.bases)

    internal = set(definitions)
    by_last: dict[str, list[str]] = defaultdict(list)
    for name in sorted(internal):
        by_last[_last(name)].append(name)

    resolved: list[tuple[str, str, object]] = []  # derived, base entity name, spec
    external: set[str] = set()
    for derived in sorted(definitions):
        for spec in definitions[derived][3]:
            target = _resolve_base(spec.base_name, derived, internal, by_last)
            if target is None:
                target = spec.base_name
                external.add(target)
            resolved.append((derived, target, spec))

    entities = sorted([(n, False) for n in internal] + [(n, True) for n in external])
    ids = {}
    for i, (name, is_ext) in enumerate(entities):
        ids[name, is_ext] = i
        if is_ext:
            model.classes.append(ClassEntity(i, name, None, None, True, None))
        else:
            art, line, kind, _ = definitions[name]
            model.classes.append(ClassEntity(i, name, art, kind, False, line))

    edges = []
    for derived, target, spec in resolved:
        d_id = ids[derived, False]
        b_id = ids[target, target not in internal]
        if d_id == b_id:
            path = model.artifacts[definitions[derived][0]].path
            diagnostics.append(Diagnostic(path, definitions[derived][1],
                                          f"{derived} inherits from itself; edge dropped"))
            continue
        edges.append(InheritanceEdge(d_id, b_id, spec.access, spec.is_virtual))
    edges.sort(key=lambda e: (e.derived_id, e.base_id))
    model.inheritance_edges = _break_cycles(edges, model, diagnostics)
    return model


def _break_cycles(edges: list[InheritanceEdge], model: CodeModel,
                  diagnostics: list[Diagnostic]) -> list[InheritanceEdge]:
    """Drop any edge that would close a cycle, adding edges in (derived, base) order.

    Within a single cycle the edge with the highest (derived_id, base_id)
    pair is the one that closes it.
    """
    kept = []
    succ: dict[int, set[int]] = defaultdict(set)

    def reaches(src: int, dst: int) -> bool:
        stack, seen = [src], {src}
        while stack:
            n = stack.pop()
            if n == dst:
                return True
            for m in succ[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return False

    for e in edges:
        if not model.classes[e.base_id].is_external and reaches(e.base_id, e.derived_id):
            derived = model.classes[e.derived_id]
            diagnostics.append(Diagnostic(
                model.artifacts[derived.artifact_id].path, derived.line or 0,
                f"inheritance cycle broken: dropped {derived.qualified_name} -> "
                f"{model.classes[e.base_id].qualified_name}"))
            continue
        succ[e.derived_id].add(e.base_id)
        kept.append(e)
    return kept
