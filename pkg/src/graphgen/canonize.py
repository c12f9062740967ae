"""Minimum DFS codes: canonical labels of labeled graphs and their inverse.

A DFS code lists every edge of a graph as ``(t_u, t_v, L_u, L_e, L_v)``
where ``t`` are discovery timestamps of a depth-first traversal. The
lexicographically smallest code over all traversals identifies the graph up
to isomorphism.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

from .errors import CapExceeded, FrontierCapExceeded, InvalidCode, InvalidGraph
from .graph import LabeledGraph, max_connected_component, validate_graph

LT, EQ, GT = -1, 0, 1

DEFAULT_FRONTIER_CAP = 10**6
DEFAULT_BRUTE_FORCE_CAP = 8


class EdgeTuple(NamedTuple):
    t_u: int
    t_v: int
    l_u: str
    l_e: str
    l_v: str

    @property
    def is_forward(self) -> bool:
        return self.t_u < self.t_v


DfsCode = tuple  # tuple[EdgeTuple, ...]


def tuple_key(t: EdgeTuple):
    """Sort key realising the DFS-lexicographic order of edge tuples.

    Backward edges precede forward edges; backward edges order by smaller
    target timestamp, forward edges by deeper (larger) source timestamp;
    labels break structural ties.
    """
    if t.t_u > t.t_v:
        return (0, t.t_v, t.t_u, t.l_u, t.l_e, t.l_v)
    return (1, -t.t_u, t.t_v, t.l_u, t.l_e, t.l_v)


def _cmp(a, b) -> int:
    return LT if a < b else (GT if a > b else EQ)


def compare_tuples(a: EdgeTuple, b: EdgeTuple) -> int:
    return _cmp(tuple_key(a), tuple_key(b))


def code_key(code: Sequence[EdgeTuple]) -> list:
    return [tuple_key(t) for t in code]


def compare_codes(a: Sequence[EdgeTuple], b: Sequence[EdgeTuple]) -> int:
    """Element-wise comparison; a strict prefix sorts first."""
    return _cmp(code_key(a), code_key(b))


# -- branch-and-bound search -------------------------------------------------

class SearchState:
    """Partial traversal consistent with a DFS code prefix."""

    __slots__ = ("ts", "nodes", "rmpath", "used")

    def __init__(self, ts, nodes, rmpath, used):
        self.ts = ts            # graph node -> timestamp (-1 if unvisited)
        self.nodes = nodes      # timestamp -> graph node
        self.rmpath = rmpath    # timestamps on the rightmost path, root first
        self.used = used        # bitmask over edge indices

    @classmethod
    def empty(cls, g: LabeledGraph) -> SearchState:
        return cls([-1] * g.n, [], [], 0)


@dataclass
class SearchStats:
    expansions: int = 0
    max_frontier: int = 0
    steps: int = 0


def _edge_index(g: LabeledGraph) -> dict:
    idx = {}
    for i, (u, v, _) in enumerate(g.edges):
        idx[(u, v)] = i
        idx[(v, u)] = i
    return idx


def _extensions(state: SearchState, g: LabeledGraph, eidx) -> Iterator:
    """Yield ``(EdgeTuple, src_node, dst_node, rmpath_pos)`` for every
    rightmost extension. ``rmpath_pos`` is ``None`` for backward edges."""
    labels = g.node_labels
    if not state.nodes:
        for u in range(g.n):
            for w, lab in g.adj[u].items():
                yield EdgeTuple(0, 1, labels[u], lab, labels[w]), u, w, -1
        return
    ts, used = state.ts, state.used
    rm_t = state.rmpath[-1]
    rm = state.nodes[rm_t]
    # backward: rightmost vertex -> rightmost-path ancestor, unused edges only
    for anc_t in state.rmpath[:-1]:
        anc = state.nodes[anc_t]
        lab = g.adj[rm].get(anc)
        if lab is not None and not used >> eidx[(rm, anc)] & 1:
            yield EdgeTuple(rm_t, anc_t, labels[rm], lab, labels[anc]), rm, anc, None
    # forward: any rightmost-path vertex -> unvisited neighbour
    new_t = len(state.nodes)
    for pos in range(len(state.rmpath) - 1, -1, -1):
        src_t = state.rmpath[pos]
        src = state.nodes[src_t]
        for w, lab in g.adj[src].items():
            if ts[w] < 0:
                yield EdgeTuple(src_t, new_t, labels[src], lab, labels[w]), src, w, pos


def _apply(state: SearchState, eidx, src, dst, pos) -> SearchState:
    used = state.used | (1 << eidx[(src, dst)])
    if pos is None:
        return SearchState(state.ts, state.nodes, state.rmpath, used)
    ts = list(state.ts)
    if pos < 0:
        ts[src], ts[dst] = 0, 1
        return SearchState(ts, [src, dst], [0, 1], used)
    new_t = len(state.nodes)
    ts[dst] = new_t
    return SearchState(ts, state.nodes + [dst],
                       state.rmpath[:pos + 1] + [new_t], used)


def valid_extensions(state: SearchState, g: LabeledGraph):
    """All single-edge extensions of ``state`` forming valid DFS code
    prefixes, each paired with its successor state."""
    eidx = _edge_index(g)
    return [(t, _apply(state, eidx, s, d, p))
            for t, s, d, p in _extensions(state, g, eidx)]


def min_dfs_code_with_stats(g: LabeledGraph,
                            frontier_cap: int = DEFAULT_FRONTIER_CAP):
    """Minimum DFS code plus search statistics.

    Keeps every state whose partial code equals the best prefix found so far
    and extends all of them by the globally smallest extension tuple.
    """
    check = validate_graph(g)
    if not check.ok:
        raise InvalidGraph(check.violations)
    eidx = _edge_index(g)
    stats = SearchStats(max_frontier=1)
    frontier = [SearchState.empty(g)]
    code = []
    for _ in range(g.m):
        best_key, best = None, []
        for st in frontier:
            for ext in _extensions(st, g, eidx):
                stats.expansions += 1
                k = tuple_key(ext[0])
                if best_key is None or k < best_key:
                    best_key, best = k, [(st, ext)]
                elif k == best_key:
                    best.append((st, ext))
        code.append(best[0][1][0])
        nxt, seen = [], set()
        for st, (_, src, dst, pos) in best:
            new = _apply(st, eidx, src, dst, pos)
            sig = (tuple(new.nodes), new.used)
            if sig not in seen:
                seen.add(sig)
                nxt.append(new)
        if len(nxt) > frontier_cap:
            raise FrontierCapExceeded(
                f"frontier of {len(nxt)} states exceeds cap {frontier_cap}; "
                "consider augmenting labels with vertex invariants")
        frontier = nxt
        stats.steps += 1
        stats.max_frontier = max(stats.max_frontier, len(frontier))
    return tuple(code), stats


def min_dfs_code(g: LabeledGraph, frontier_cap: int = DEFAULT_FRONTIER_CAP):
    """Canonical label of ``g``: its lexicographically smallest DFS code."""
    return min_dfs_code_with_stats(g, frontier_cap)[0]


# -- exhaustive oracle -------------------------------------------------------

def _all_dfs_codes(g: LabeledGraph, start: int):
    labels = g.node_labels

    def walk(stack, ts, code):
        stack = list(stack)
        while stack and all(w in ts for w in g.adj[stack[-1]]):
            stack.pop()
        if not stack:
            yield code
            return
        u = stack[-1]
        for w in g.adj[u]:
            if w in ts:
                continue
            ts2 = dict(ts)
            ts2[w] = len(ts)
            tuples = [EdgeTuple(ts[u], ts2[w], labels[u], g.adj[u][w], labels[w])]
            back = sorted((ts[x], x) for x in g.adj[w] if x in ts and x != u)
            tuples += [EdgeTuple(ts2[w], tx, labels[w], g.adj[w][x], labels[x])
                       for tx, x in back]
            yield from walk(stack + [w], ts2, code + tuples)

    yield from walk([start], {start: 0}, [])


def brute_force_min_dfs_code(g: LabeledGraph, cap: int = DEFAULT_BRUTE_FORCE_CAP):
    """Enumerate every complete DFS traversal and keep the smallest code.

    Exponential; meant as a test oracle for small graphs only.
    """
    if g.n > cap:
        raise CapExceeded(f"{g.n} nodes exceeds brute-force cap {cap}")
    check = validate_graph(g)
    if not check.ok:
        raise InvalidGraph(check.violations)
    best, best_key = (), None
    for s in range(g.n):
        for code in _all_dfs_codes(g, s):
            k = code_key(code)
            if best_key is None or k < best_key:
                best, best_key = tuple(code), k
    return best


# -- inverse mapping ---------------------------------------------------------

def decode(code: Sequence[EdgeTuple], mode: str = "strict") -> LabeledGraph:
    """Build a graph from a code.

    ``strict`` requires a well-formed DFS code and raises :class:`InvalidCode`
    at the first offending tuple. ``lenient`` accepts arbitrary tuple
    sequences: timestamps become node ids, the first label seen for a node
    wins, self-loops and repeated edges are dropped, and the largest connected
    component is returned.
    """
    if mode == "strict":
        return _decode_strict(code)
    if mode == "lenient":
        return _decode_lenient(code)
    raise ValueError(f"unknown decode mode {mode!r}")


def _decode_strict(code) -> LabeledGraph:
    labels: list[str] = []
    edges: list = []
    seen = set()
    rmpath: list[int] = []
    last_back = None  # (t_u, t_v) of the previous backward tuple
    for i, t in enumerate(code):
        t = EdgeTuple(*t)
        if i == 0:
            if (t.t_u, t.t_v) != (0, 1):
                raise InvalidCode(0, "first tuple must be (0, 1, ...)")
            labels += [t.l_u, t.l_v]
            rmpath = [0, 1]
            edges.append((0, 1, t.l_e))
            seen.add((0, 1))
            last_back = None
            continue
        if t.t_u == t.t_v:
            raise InvalidCode(i, "self-loop")
        if t.t_u < t.t_v:
            if t.t_v != len(labels):
                raise InvalidCode(i, f"forward edge must introduce timestamp {len(labels)}")
            if t.t_u not in rmpath:
                raise InvalidCode(i, "forward edge source not on rightmost path")
            if labels[t.t_u] != t.l_u:
                raise InvalidCode(i, "source label disagrees with earlier tuple")
            labels.append(t.l_v)
            rmpath = rmpath[:rmpath.index(t.t_u) + 1] + [t.t_v]
            last_back = None
        else:
            if t.t_u != rmpath[-1]:
                raise InvalidCode(i, "backward edge must start at the rightmost vertex")
            if t.t_v not in rmpath[:-1]:
                raise InvalidCode(i, "backward edge target not on rightmost path")
            if labels[t.t_u] != t.l_u or labels[t.t_v] != t.l_v:
                raise InvalidCode(i, "node label disagrees with earlier tuple")
            if last_back is not None and last_back[0] == t.t_u and last_back[1] >= t.t_v:
                raise InvalidCode(i, "backward edges out of order")
            last_back = (t.t_u, t.t_v)
        key = (min(t.t_u, t.t_v), max(t.t_u, t.t_v))
        if key in seen:
            raise InvalidCode(i, "duplicate edge")
        seen.add(key)
        edges.append((key[0], key[1], t.l_e))
    return LabeledGraph.build(labels, edges)


def _decode_lenient(code) -> LabeledGraph:
    label_of: dict[int, str] = {}
    edges: dict = {}
    for t in code:
        t = EdgeTuple(*t)
        label_of.setdefault(t.t_u, t.l_u)
        label_of.setdefault(t.t_v, t.l_v)
        if t.t_u == t.t_v:
            continue
        key = (min(t.t_u, t.t_v), max(t.t_u, t.t_v))
        edges.setdefault(key, t.l_e)
    if not label_of:
        return LabeledGraph((), ())
    ids = {t: i for i, t in enumerate(sorted(label_of))}
    g = LabeledGraph.build([label_of[t] for t in sorted(label_of)],
                           [(ids[u], ids[v], lab) for (u, v), lab in edges.items()])
    return max_connected_component(g)


# -- text rendering ----------------------------------------------------------

def _q(label: str) -> str:
    return shlex.quote(label) if (not label or any(c.isspace() or c in "'\"\\" for c in label)) else label


def format_code(code: Sequence[EdgeTuple]) -> str:
    """One tuple per line: ``t_u t_v L_u L_e L_v``."""
    return "".join(f"{t[0]} {t[1]} {_q(t[2])} {_q(t[3])} {_q(t[4])}\n" for t in code)


def parse_code(text: str) -> DfsCode:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = shlex.split(line)
        if len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        out.append(EdgeTuple(int(parts[0]), int(parts[1]), *parts[2:]))
    return tuple(out)


def min_dfs_codes(graphs: Sequence[LabeledGraph], threads: int = 1,
                  frontier_cap: int = DEFAULT_FRONTIER_CAP) -> list:
    """Canonize many graphs; ``threads > 1`` uses a process pool. Output
    order follows input order regardless of scheduling."""
    graphs = list(graphs)
    if threads <= 1 or len(graphs) < 2:
        return [min_dfs_code(g, frontier_cap) for g in graphs]
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(partial(min_dfs_code, frontier_cap=frontier_cap),
                             graphs, chunksize=max(1, len(graphs) // (4 * threads))))
