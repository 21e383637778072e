"""Scan -> tokenize -> two-pass parse -> model."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Mapping

from .lexer import LexError, SourceText, tokenize
from .model import (
    PARSED_KINDS, ArtifactDescriptor, CodeModel, Diagnostic, build_model,
    derive_namespaces, scan_tree,
)
from .parser import ParseOutcome, defined_macro_names, parse

log = logging.getLogger(__name__)

# Below this many parsed artifacts a process pool costs more than it saves.
PARALLEL_THRESHOLD = 64


def parallel_enabled(n_items: int) -> bool:
    if os.environ.get("ZAC_NO_PARALLEL") == "1":
        return False
    return (os.cpu_count() or 1) > 1 and n_items >= PARALLEL_THRESHOLD


def _lex(desc: ArtifactDescriptor):
    return tokenize(SourceText.from_path(desc.location, desc.path))


def _macro_names(desc: ArtifactDescriptor) -> set[str]:
    return defined_macro_names(_lex(desc))


_KNOWN: frozenset = frozenset()


def _init_known(known):
    global _KNOWN
    _KNOWN = known


def _parse_known(desc: ArtifactDescriptor) -> ParseOutcome:
    return parse(_lex(desc), _KNOWN)


def _run_parallel(parsed, diagnostics):
    workers = min(os.cpu_count() or 1, 8)
    chunk = max(1, len(parsed) // (workers * 4))
    with ProcessPoolExecutor(workers) as pool:
        known = set()
        for names in pool.map(_macro_names, parsed, chunksize=chunk):
            known |= names
    with ProcessPoolExecutor(workers, initializer=_init_known,
                             initargs=(frozenset(known),)) as pool:
        outcomes = dict(zip((d.path for d in parsed),
                            pool.map(_parse_known, parsed, chunksize=chunk)))
    return outcomes


def _run_serial(parsed, diagnostics):
    streams = {}
    known: set[str] = set()
    for d in parsed:
        try:
            stream = _lex(d)
        except LexError as exc:
            diagnostics.append(Diagnostic(d.path, 0, str(exc)))
            continue
        streams[d.path] = stream
        known |= defined_macro_names(stream)
    known_f = frozenset(known)
    return {path: parse(stream, known_f) for path, stream in streams.items()}


def parse_artifacts(artifacts: Iterable[ArtifactDescriptor], parallel: bool | None = None,
                    diagnostics: list | None = None) -> dict[str, ParseOutcome]:
    """Two-pass parse of every source/header artifact.

    Pass one gathers the corpus-wide set of ``#define`` names; pass two parses
    each artifact against that set so macro-use counts are order independent.
    """
    parsed = [d for d in artifacts if d.kind in PARSED_KINDS]
    diagnostics = diagnostics if diagnostics is not None else []
    if parallel is None:
        parallel = parallel_enabled(len(parsed))
    if parallel:
        try:
            return _run_parallel(parsed, diagnostics)
        except LexError:
            log.info("parallel analysis hit an unreadable file; retrying serially")
    return _run_serial(parsed, diagnostics)


def analyze_tree(root, exclude_globs: Iterable[str] = (),
                 extension_map: Mapping[str, Iterable[str]] | None = None,
                 include_extensions: Iterable[str] | None = None,
                 parallel: bool | None = None) -> CodeModel:
    diagnostics: list[Diagnostic] = []
    artifacts = scan_tree(root, include_extensions, exclude_globs, extension_map, diagnostics)
    outcomes = parse_artifacts(artifacts, parallel, diagnostics)
    read = [a for a in artifacts if a.kind not in PARSED_KINDS or a.path in outcomes]
    model = build_model(read, outcomes, derive_namespaces(read))
    model.diagnostics[:0] = diagnostics
    return model
