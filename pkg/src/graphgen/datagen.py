"""Dataset files, train/validation/test splits and random-walk-with-restart
subgraph sampling.

File format (one graph per ``t`` block)::

    t # 0
    v 0 A
    v 1 B
    e 0 1 x

Labels are single tokens. Whitespace and ``%`` inside a label (such as the
``", "`` joiner of invariant-augmented labels) are written percent-escaped,
so ``"5, A"`` is stored as ``5,%20A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import quote, unquote

import numpy as np

from .errors import InvalidGraph, ParseError, TooFewGraphs
from .graph import EMPTY_EDGE_LABEL, LabeledGraph, induced_subgraph, validate_graph


def parse_dataset(text: str, strict: bool = True) -> list[LabeledGraph]:
    """Parse graphs from text in file order.

    ``strict`` raises :class:`InvalidGraph` for graphs failing validation;
    otherwise such graphs are skipped.
    """
    graphs = []
    cur_labels: dict[int, str] | None = None
    cur_edges: list = []
    cur_line = 0

    def flush():
        if cur_labels is None:
            return
        ids = sorted(cur_labels)
        if ids != list(range(len(ids))):
            raise ParseError(cur_line, "vertex ids must be 0..n-1")
        g = LabeledGraph.build([cur_labels[i] for i in ids], cur_edges)
        check = validate_graph(g)
        if check.ok:
            graphs.append(g)
        elif strict:
            raise InvalidGraph([f"graph starting at line {cur_line}: {v}"
                                for v in check.violations])

    for lineno, raw in enumerate(text.split("\n"), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "t":
            flush()
            cur_labels, cur_edges, cur_line = {}, [], lineno
        elif tag == "v":
            if cur_labels is None:
                raise ParseError(lineno, "vertex before graph header")
            if len(parts) != 3:
                raise ParseError(lineno, "expected 'v <id> <label>' (labels may not contain whitespace)")
            try:
                vid = int(parts[1])
            except ValueError:
                raise ParseError(lineno, f"bad vertex id {parts[1]!r}") from None
            if vid in cur_labels:
                raise ParseError(lineno, f"duplicate vertex {vid}")
            cur_labels[vid] = unquote(parts[2])
        elif tag == "e":
            if cur_labels is None:
                raise ParseError(lineno, "edge before graph header")
            if len(parts) not in (3, 4):
                raise ParseError(lineno, "expected 'e <u> <v> [label]'")
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(lineno, "bad edge endpoint") from None
            for x in (u, v):
                if x not in cur_labels:
                    raise ParseError(lineno, f"edge references undeclared vertex {x}")
            cur_edges.append((u, v, unquote(parts[3]) if len(parts) == 4 else EMPTY_EDGE_LABEL))
        else:
            raise ParseError(lineno, f"unknown record type {tag!r}")
    flush()
    return graphs


def read_dataset(path, strict: bool = True) -> list[LabeledGraph]:
    return parse_dataset(Path(path).read_text(encoding="utf-8"), strict)


def escape_label(label: str) -> str:
    """Percent-escape ``%`` and whitespace.

    >>> escape_label("5, A")
    '5,%20A'
    """
    if not label:
        raise ValueError("labels must be non-empty")
    return "".join(quote(c, safe="") if c == "%" or c.isspace() else c for c in label)


def format_dataset(graphs: Iterable[LabeledGraph]) -> str:
    out = []
    for i, g in enumerate(graphs):
        out.append(f"t # {i}\n")
        for v, lab in enumerate(g.node_labels):
            out.append(f"v {v} {escape_label(lab)}\n")
        for u, v, lab in g.edges:
            out.append(f"e {u} {v} {escape_label(lab or EMPTY_EDGE_LABEL)}\n")
    return "".join(out)


def write_dataset(graphs: Iterable[LabeledGraph], path):
    Path(path).write_text(format_dataset(graphs), encoding="utf-8", newline="\n")


# -- splits -----------------------------------------------------------------------

@dataclass
class DatasetSplit:
    train: list[LabeledGraph]
    valid: list[LabeledGraph]
    test: list[LabeledGraph]
    ratios: tuple[float, float, float]
    seed: int
    order: list[int]


def split_dataset(graphs: Sequence[LabeledGraph],
                  ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
                  seed: int = 0) -> DatasetSplit:
    """Seeded shuffle followed by a contiguous partition."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be three non-negative numbers summing to 1")
    n = len(graphs)
    n_train = int(round(ratios[0] * n))
    n_valid = int(round(ratios[1] * n))
    n_train = min(n_train, n)
    n_valid = min(n_valid, n - n_train)
    if n_train < 1:
        raise TooFewGraphs(f"{n} graphs leave no training graph at ratios {ratios}")
    order = np.random.default_rng(seed).permutation(n).tolist()
    pick = lambda idx: [graphs[i] for i in idx]
    return DatasetSplit(pick(order[:n_train]), pick(order[n_train:n_train + n_valid]),
                        pick(order[n_train + n_valid:]), tuple(ratios), seed, order)


# -- random walk with restart --------------------------------------------------------

@dataclass(frozen=True)
class RwrConfig:
    restart_prob: float = 0.15
    iterations: int = 150
    samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.restart_prob < 1.0:
            raise ValueError("restart_prob must lie in (0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def rwr_walk(g: LabeledGraph, cfg: RwrConfig, rng: np.random.Generator) -> LabeledGraph:
    """One sample: start node chosen proportionally to degree, then
    ``cfg.iterations`` steps that either jump back to the start (adding no
    edge) or move to a uniformly chosen neighbour. Every traversed edge is
    kept."""
    degs = np.array([g.degree(v) for v in range(g.n)], dtype=float)
    start = int(rng.choice(g.n, p=degs / degs.sum()))
    nbrs = [sorted(a) for a in g.adj]
    cur = start
    edges = set()
    for _ in range(cfg.iterations):
        if rng.random() < cfg.restart_prob:
            cur = start
            continue
        nxt = nbrs[cur][int(rng.integers(len(nbrs[cur])))]
        edges.add((min(cur, nxt), max(cur, nxt)))
        cur = nxt
    nodes = sorted({start} | {v for e in edges for v in e})
    sub = induced_subgraph(g, nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    keep = {(idx[u], idx[v]) for u, v in edges}
    return LabeledGraph(sub.node_labels, tuple(e for e in sub.edges if (e[0], e[1]) in keep))


def rwr_sample(g: LabeledGraph, cfg: RwrConfig = RwrConfig()) -> list[LabeledGraph]:
    """``cfg.samples`` subgraphs; sample ``i`` uses the stream ``(seed, i)``."""
    check = validate_graph(g)
    if not check.ok:
        raise InvalidGraph(check.violations)
    if g.m == 0:
        raise InvalidGraph(["graph has no edges to walk"])
    return [rwr_walk(g, cfg, np.random.default_rng([cfg.seed, i])) for i in range(cfg.samples)]


def tiny_dataset_path() -> Path:
    """Path of the bundled 40-graph molecule-like dataset."""
    from importlib.resources import files
    return Path(str(files("graphgen") / "data" / "tiny.txt"))
