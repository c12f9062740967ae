"""Labeled undirected graphs: validation, (sub)graph isomorphism, components,
and vertex-invariant label augmentation."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .errors import SearchBudgetExceeded

#: label written for datasets without edge labels
EMPTY_EDGE_LABEL = "_"


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected graph with string node and edge labels.

    Nodes are ``0..n-1``; ``node_labels[i]`` is the label of node ``i``.
    Each edge is stored once as ``(u, v, label)`` with ``u < v`` (self-loops
    keep ``u == v`` so that :func:`validate_graph` can report them).
    """

    node_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str], ...] = field(default=())

    @classmethod
    def build(cls, node_labels: Sequence, edges: Sequence) -> LabeledGraph:
        """Normalize labels to strings and edge endpoints to ``u <= v``.

        ``edges`` items are ``(u, v)`` or ``(u, v, label)``.
        """
        norm = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            lab = str(e[2]) if len(e) > 2 else EMPTY_EDGE_LABEL
            if u > v:
                u, v = v, u
            norm.append((u, v, lab))
        return cls(tuple(str(x) for x in node_labels), tuple(norm))

    @property
    def n(self) -> int:
        return len(self.node_labels)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> tuple[dict[int, str], ...]:
        """``adj[u][v]`` is the label of edge ``(u, v)``."""
        nbrs: list[dict[int, str]] = [{} for _ in range(self.n)]
        for u, v, lab in self.edges:
            if 0 <= u < self.n and 0 <= v < self.n:
                nbrs[u][v] = lab
                nbrs[v][u] = lab
        return tuple(nbrs)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def edge_label(self, u: int, v: int) -> str:
        return self.adj[u][v]

    def __repr__(self):
        return f"LabeledGraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class InvariantSpec:
    use_degree: bool = False
    use_clustering_coefficient: bool = False
    cc_decimals: int = 2

    def __post_init__(self):
        if self.cc_decimals < 0:
            raise ValueError("cc_decimals must be >= 0")

    @property
    def n_prefixes(self) -> int:
        return int(self.use_degree) + int(self.use_clustering_coefficient)


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_graph(g: LabeledGraph) -> ValidationResult:
    """Check the structural assumptions: no self-loops, no parallel edges,
    no dangling endpoints, connected."""
    out = []
    seen = set()
    for u, v, _ in g.edges:
        if not (0 <= u < g.n and 0 <= v < g.n):
            out.append(f"dangling endpoint ({u},{v})")
            continue
        if u == v:
            out.append(f"self-loop ({u},{v})")
            continue
        if (u, v) in seen:
            out.append(f"parallel edge ({u},{v})")
        seen.add((u, v))
    if g.n == 0:
        out.append("empty graph")
    elif len(_components(g)) > 1:
        out.append("disconnected")
    return ValidationResult(tuple(out))


def _components(g: LabeledGraph) -> list[list[int]]:
    comp = [-1] * g.n
    comps = []
    for s in range(g.n):
        if comp[s] >= 0:
            continue
        comp[s] = len(comps)
        members = [s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in g.adj[u]:
                if w != u and comp[w] < 0:
                    comp[w] = comp[s]
                    members.append(w)
                    queue.append(w)
        comps.append(sorted(members))
    return comps


def induced_subgraph(g: LabeledGraph, nodes: Sequence[int]) -> LabeledGraph:
    """Subgraph on ``nodes`` (re-densified in ascending original id order)."""
    keep = sorted(set(nodes))
    idx = {v: i for i, v in enumerate(keep)}
    edges = [(idx[u], idx[v], lab) for u, v, lab in g.edges
             if u in idx and v in idx]
    return LabeledGraph.build([g.node_labels[v] for v in keep], edges)


def max_connected_component(g: LabeledGraph) -> LabeledGraph:
    """Largest component by node count; ties by edge count, then by the
    smallest original node id."""
    if g.n == 0:
        raise ValueError("graph has no nodes")
    best, best_key = None, None
    for comp in _components(g):
        members = set(comp)
        n_edges = sum(1 for u, v, _ in g.edges if u in members)
        key = (-len(comp), -n_edges, comp[0])
        if best_key is None or key < best_key:
            best, best_key = comp, key
    return induced_subgraph(g, best)


def permute_nodes(g: LabeledGraph, perm: Sequence[int]) -> LabeledGraph:
    """Relabel node ``i`` as ``perm[i]``; edge order is shuffled accordingly."""
    labels = [None] * g.n
    for i, p in enumerate(perm):
        labels[p] = g.node_labels[i]
    edges = sorted((min(perm[u], perm[v]), max(perm[u], perm[v]), lab)
                   for u, v, lab in g.edges)
    return LabeledGraph.build(labels, edges)


# -- (sub)graph isomorphism -------------------------------------------------

def _prefilter(p: LabeledGraph, t: LabeledGraph) -> bool:
    if p.n > t.n or p.m > t.m:
        return False
    if Counter(p.node_labels) - Counter(t.node_labels):
        return False
    if Counter(e[2] for e in p.edges) - Counter(e[2] for e in t.edges):
        return False
    return True


def _match_order(p: LabeledGraph, t: LabeledGraph, cands):
    """Order pattern nodes: rarest candidate set first, then greedily the
    node most connected to those already placed."""
    order: list[int] = []
    placed = set()
    remaining = set(range(p.n))
    while remaining:
        def key(v):
            links = sum(1 for w in p.adj[v] if w in placed)
            return (-links, len(cands[v]), -p.degree(v), v)
        v = min(remaining, key=key)
        order.append(v)
        placed.add(v)
        remaining.discard(v)
    return order


def find_monomorphism(pattern: LabeledGraph, target: LabeledGraph,
                      budget: int | None = None) -> dict[int, int] | None:
    """Injective label-preserving map of pattern nodes into target nodes
    such that every pattern edge maps onto a target edge with the same label
    (non-induced). Returns ``None`` if none exists.

    ``budget`` caps the number of candidate expansions; exceeding it raises
    :class:`SearchBudgetExceeded`.
    """
    if not _prefilter(pattern, target):
        return None
    if pattern.n == 0:
        return {}
    by_label: dict[str, list[int]] = {}
    for v, lab in enumerate(target.node_labels):
        by_label.setdefault(lab, []).append(v)
    cands = []
    for v in range(pattern.n):
        d = pattern.degree(v)
        cs = [w for w in by_label.get(pattern.node_labels[v], ())
              if target.degree(w) >= d]
        if not cs:
            return None
        cands.append(cs)
    order = _match_order(pattern, target, cands)
    pos = {v: i for i, v in enumerate(order)}
    # earlier-placed neighbours of each pattern node, with edge labels
    back = [[(w, lab) for w, lab in pattern.adj[v].items() if pos[w] < pos[v]]
            for v in order]
    cand_sets = [set(c) for c in cands]
    mapping: dict[int, int] = {}
    used: set[int] = set()
    expansions = 0

    def extend(i):
        nonlocal expansions
        if i == len(order):
            return True
        v = order[i]
        if back[i]:
            anchor = mapping[back[i][0][0]]
            pool = [w for w in target.adj[anchor] if w in cand_sets[v]]
        else:
            pool = cands[v]
        for w in pool:
            if w in used:
                continue
            expansions += 1
            if budget is not None and expansions > budget:
                raise SearchBudgetExceeded(
                    f"subgraph search exceeded {budget} expansions")
            tadj = target.adj[w]
            if all(tadj.get(mapping[q]) == lab for q, lab in back[i]):
                mapping[v] = w
                used.add(w)
                if extend(i + 1):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    return dict(mapping) if extend(0) else None


def subgraph_isomorphic(pattern: LabeledGraph, target: LabeledGraph,
                        budget: int | None = None) -> bool:
    """True iff ``pattern`` embeds (non-induced, labels preserved) in ``target``."""
    return find_monomorphism(pattern, target, budget) is not None


def _signature(g: LabeledGraph):
    return (g.n, g.m, sorted(Counter(g.node_labels).items()),
            sorted(Counter(e[2] for e in g.edges).items()),
            sorted(Counter((g.node_labels[v], g.degree(v))
                           for v in range(g.n)).items()))


def is_isomorphic(g1: LabeledGraph, g2: LabeledGraph) -> bool:
    """Label-preserving isomorphism test.

    With equal node and edge counts a monomorphism is a bijection that maps
    the edge set onto the edge set, i.e. an isomorphism.
    """
    if _signature(g1) != _signature(g2):
        return False
    return find_monomorphism(g1, g2) is not None


# -- vertex invariants ------------------------------------------------------

def clustering_coefficient(g: LabeledGraph, v: int) -> float:
    nbrs = list(g.adj[v])
    k = len(nbrs)
    if k < 2:
        return 0.0
    closed = 0
    for i in range(k):
        ai = g.adj[nbrs[i]]
        for j in range(i + 1, k):
            if nbrs[j] in ai:
                closed += 1
    return 2.0 * closed / (k * (k - 1))


def augment_labels(g: LabeledGraph, spec: InvariantSpec) -> LabeledGraph:
    """Prefix node labels with enabled invariants in the order
    ``degree, clustering coefficient, original label`` joined by ``", "``.

    >>> g = LabeledGraph.build(["A", "B"], [(0, 1, "x")])
    >>> augment_labels(g, InvariantSpec(use_degree=True)).node_labels
    ('1, A', '1, B')
    """
    if spec.n_prefixes == 0:
        return g
    labels = []
    for v, lab in enumerate(g.node_labels):
        parts = []
        if spec.use_degree:
            parts.append(str(g.degree(v)))
        if spec.use_clustering_coefficient:
            cc = clustering_coefficient(g, v)
            parts.append(f"{cc:.{spec.cc_decimals}f}")
        parts.append(lab)
        labels.append(", ".join(parts))
    return LabeledGraph(tuple(labels), g.edges)


def strip_invariants(g: LabeledGraph, spec: InvariantSpec) -> LabeledGraph:
    """Inverse of :func:`augment_labels` for the same ``spec``."""
    k = spec.n_prefixes
    if k == 0:
        return g
    labels = tuple(lab.split(", ", k)[k] for lab in g.node_labels)
    return LabeledGraph(labels, g.edges)
