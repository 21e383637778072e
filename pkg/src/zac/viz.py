"""Deterministic renderers: treemap and bar chart as SVG, graphs as DOT."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .model import CodeModel

SVG_NS = "http://www.w3.org/2000/svg"
MARGIN = 20
MODES = ("treemap", "namespaces", "bars", "inheritance", "includes")
GRAPH_MODES = ("class_inheritance", "include_relationship")


class VizError(ValueError):
    pass


@dataclass(frozen=True)
class ColorScheme:
    kinds: dict = field(default_factory=lambda: {
        "source": "#FFC0CB",
        "doc": "#2E8B57",
        "header": "#4682B4",
        "other": "#A9A9A9",
    })
    bar: str = "#CC0000"
    frame: str = "#000000"

    def fill(self, kind: str) -> str:
        return self.kinds.get(kind, self.kinds["other"])


DEFAULT_COLORS = ColorScheme()


@dataclass(frozen=True)
class Cell:
    artifact_id: int
    x: float
    y: float
    w: float
    h: float
    fill: str

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass
class TreemapLayout:
    canvas: tuple[float, float]
    cells: list[Cell] = field(default_factory=list)
    # (namespace id, x, y, w, h)
    frames: list[tuple[int, float, float, float, float]] = field(default_factory=list)


def _num(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


# -- squarified layout -------------------------------------------------------

def _worst(row_sum: float, row_min: float, row_max: float, side: float) -> float:
    s2, side2 = row_sum * row_sum, side * side
    return max(side2 * row_max / s2, s2 / (side2 * row_min))


def squarify(areas: list[float], x: float, y: float, w: float, h: float):
    """Tile ``(x, y, w, h)`` with rectangles of the given areas.

    ``areas`` must be positive, sorted in descending order and sum to w*h.
    Rows are grown along the shorter side while the worst aspect ratio in
    the row keeps improving.
    """
    rects = []
    i, n = 0, len(areas)
    while i < n:
        side = min(w, h)
        row_sum = row_max = row_min = areas[i]
        j = i + 1
        while j < n:
            a = areas[j]
            trial = _worst(row_sum + a, min(row_min, a), max(row_max, a), side)
            if trial > _worst(row_sum, row_min, row_max, side):
                break
            row_sum += a
            row_min, row_max = min(row_min, a), max(row_max, a)
            j += 1
        last = j == n
        if w >= h:
            col_w = w if last else row_sum / h
            yy = y
            for k in range(i, j):
                rh = (y + h - yy) if k == j - 1 else areas[k] / col_w
                rects.append((x, yy, col_w, rh))
                yy += rh
            x, w = x + col_w, w - col_w
        else:
            row_h = h if last else row_sum / w
            xx = x
            for k in range(i, j):
                rw = (x + w - xx) if k == j - 1 else areas[k] / row_h
                rects.append((xx, y, rw, row_h))
                xx += rw
            y, h = y + row_h, h - row_h
        i = j
    return rects


def _size(a) -> int:
    return max(1, a.size_bytes)


def treemap_layout(model: CodeModel, canvas: tuple[float, float],
                   colors: ColorScheme = DEFAULT_COLORS) -> TreemapLayout:
    width, height = canvas
    if width <= 0 or height <= 0:
        raise VizError("canvas dimensions must be positive")
    layout = TreemapLayout((width, height))
    if not model.artifacts:
        return layout
    sub = {n.id: [] for n in model.namespaces}
    files = {n.id: [] for n in model.namespaces}
    for n in model.namespaces:
        if n.parent_id is not None:
            sub[n.parent_id].append(n)
    for a in model.artifacts:
        files[a.namespace_id].append(a)
    total: dict[int, int] = {}

    def weigh(nid: int) -> int:
        total[nid] = sum(_size(a) for a in files[nid]) + sum(weigh(c.id) for c in sub[nid])
        return total[nid]

    root = next(n for n in model.namespaces if n.parent_id is None)
    weigh(root.id)

    def place(nid: int, x, y, w, h):
        layout.frames.append((nid, x, y, w, h))
        items = [(total[c.id], c.path, "ns", c) for c in sub[nid] if total[c.id] > 0]
        items += [(_size(a), a.path, "file", a) for a in files[nid]]
        items.sort(key=lambda t: (-t[0], t[1]))
        scale = (w * h) / total[nid]
        rects = squarify([t[0] * scale for t in items], x, y, w, h)
        for (_, _, tag, obj), (rx, ry, rw, rh) in zip(items, rects):
            if tag == "ns":
                place(obj.id, rx, ry, rw, rh)
            else:
                layout.cells.append(Cell(obj.id, rx, ry, rw, rh, colors.fill(obj.kind)))

    place(root.id, 0.0, 0.0, float(width), float(height))
    layout.cells.sort(key=lambda c: c.artifact_id)
    return layout


def _svg_open(width, height) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="{SVG_NS}" version="1.1" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}">',
    ]


def treemap(model: CodeModel, canvas: tuple[float, float] = (1024, 768),
            colors: ColorScheme = DEFAULT_COLORS) -> str:
    layout = treemap_layout(model, canvas, colors)
    width, height = layout.canvas
    out = _svg_open(width, height)
    out.append(f'<rect class="frame root" x="0" y="0" width="{_num(width)}" '
               f'height="{_num(height)}" fill="none" stroke="{colors.frame}" stroke-width="2"/>')
    out.append('<g class="cells">')
    for c in layout.cells:
        a = model.artifacts[c.artifact_id]
        out.append(
            f'<rect class="cell" x="{_num(c.x)}" y="{_num(c.y)}" width="{_num(c.w)}" '
            f'height="{_num(c.h)}" fill="{c.fill}" stroke="#FFFFFF" stroke-width="0.5">'
            f'<title>{escape(a.path)} ({a.size_bytes} bytes)</title></rect>')
    out.append("</g>")
    out.append('<g class="namespaces">')
    for nid, x, y, w, h in layout.frames:
        if model.namespaces[nid].parent_id is None:
            continue
        ns = model.namespaces[nid]
        out.append(
            f'<rect class="frame" x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" '
            f'height="{_num(h)}" fill="none" stroke="{colors.frame}" stroke-width="1">'
            f'<title>{escape(ns.path)}</title></rect>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- bar chart ---------------------------------------------------------------

def bar_chart(model: CodeModel, canvas: tuple[float, float] = (1024, 400),
              colors: ColorScheme = DEFAULT_COLORS) -> str:
    """One red bar per file in path order; heights normalised to the largest file.

    Bars are ``max(1, floor(plot_width / N))`` wide; when they do not fit the
    document widens rather than clipping.
    """
    width, height = canvas
    if width <= 0 or height <= 0:
        raise VizError("canvas dimensions must be positive")
    plot_w = max(1, int(width) - 2 * MARGIN)
    plot_h = max(1, height - 2 * MARGIN)
    arts = model.artifacts
    bar_w = max(1, plot_w // len(arts)) if arts else plot_w
    doc_w = max(width, 2 * MARGIN + bar_w * len(arts))
    baseline = MARGIN + plot_h
    biggest = max((a.size_bytes for a in arts), default=0) or 1
    out = _svg_open(doc_w, height)
    out.append('<g class="bars">')
    for i, a in enumerate(arts):
        bh = plot_h * a.size_bytes / biggest
        out.append(
            f'<rect class="bar" x="{_num(MARGIN + i * bar_w)}" y="{_num(baseline - bh)}" '
            f'width="{bar_w}" height="{_num(bh)}" fill="{colors.bar}">'
            f'<title>{escape(a.path)} ({a.size_bytes} bytes)</title></rect>')
    out.append("</g>")
    out.append(f'<line class="axis" x1="{MARGIN}" y1="{_num(baseline)}" '
               f'x2="{_num(doc_w - MARGIN)}" y2="{_num(baseline)}" stroke="#000000" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- DOT ---------------------------------------------------------------------

def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def namespace_graph(model: CodeModel) -> str:
    out = ["digraph namespaces {", "  rankdir=TB;", "  node [shape=folder];"]
    for n in model.namespaces:
        style = ', style="bold,filled", fillcolor="#DDDDDD"' if n.parent_id is None else ""
        out.append(f"  {_q(f'ns{n.id}')} [label={_q(n.name)}{style}];")
    for n in model.namespaces:
        if n.parent_id is not None:
            out.append(f"  {_q(f'ns{n.parent_id}')} -> {_q(f'ns{n.id}')};")
    out.append("}")
    return "\n".join(out) + "\n"


def _clusters(model: CodeModel, members: dict[int, list[str]], out: list[str]):
    for ns in model.namespaces:
        lines = members.get(ns.id)
        if not lines:
            continue
        out.append(f"  subgraph {_q(f'cluster_ns{ns.id}')} {{")
        out.append(f"    label={_q(ns.path or ns.name)};")
        out.extend("    " + line for line in lines)
        out.append("  }")


def inheritance_graph(model: CodeModel, mode: str = "class_inheritance") -> str:
    if mode not in GRAPH_MODES:
        raise VizError(f"unknown graph mode {mode!r}; expected one of {', '.join(GRAPH_MODES)}")
    members: dict[int, list[str]] = {}
    loose: list[str] = []
    edges: list[str] = []
    if mode == "class_inheritance":
        out = ["digraph inheritance {", "  rankdir=BT;", "  node [shape=box];"]
        for c in model.classes:
            node = f"{_q(f'c{c.id}')} [label={_q(c.qualified_name)}"
            if c.is_external:
                loose.append(f"  {node}, style=dashed];")
            else:
                ns = model.artifacts[c.artifact_id].namespace_id
                members.setdefault(ns, []).append(node + "];")
        for e in model.inheritance_edges:
            edges.append(f"  {_q(f'c{e.derived_id}')} -> {_q(f'c{e.base_id}')};")
    else:
        out = ["digraph includes {", "  rankdir=LR;", "  node [shape=note];"]
        used = set()
        unresolved = {}
        for e in model.include_edges:
            used.add(e.from_artifact)
            if e.resolved_artifact is not None:
                used.add(e.resolved_artifact)
            else:
                unresolved.setdefault(e.target_text, None)
        ext_ids = {t: k for k, t in enumerate(sorted(unresolved))}
        for a in model.artifacts:
            if a.id in used:
                members.setdefault(a.namespace_id, []).append(
                    f"{_q(f'a{a.id}')} [label={_q(a.path)}];")
        for t, k in ext_ids.items():
            loose.append(f"  {_q(f'x{k}')} [label={_q(t)}, style=dashed];")
        for e in model.include_edges:
            dst = f"a{e.resolved_artifact}" if e.resolved_artifact is not None \
                else f"x{ext_ids[e.target_text]}"
            edges.append(f"  {_q(f'a{e.from_artifact}')} -> {_q(dst)};")
    _clusters(model, members, out)
    out.extend(loose)
    out.extend(edges)
    out.append("}")
    return "\n".join(out) + "\n"


def render(model: CodeModel, mode: str, canvas: tuple[float, float] | None = None) -> str:
    """Render one of the CLI visualisation modes."""
    if mode == "treemap":
        return treemap(model, canvas or (1024, 768))
    if mode == "bars":
        return bar_chart(model, canvas or (1024, 400))
    if mode == "namespaces":
        return namespace_graph(model)
    if mode == "inheritance":
        return inheritance_graph(model, "class_inheritance")
    if mode == "includes":
        return inheritance_graph(model, "include_relationship")
    raise VizError(f"unknown visualisation mode {mode!r}; expected one of {', '.join(MODES)}")


def extension(mode: str) -> str:
    return "svg" if mode in ("treemap", "bars") else "dot"
