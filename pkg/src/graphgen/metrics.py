"""Evaluation of generated graph sets against reference graphs.

Structural distributions (degree, clustering, 4-node orbits) and label
distributions are compared with a squared MMD under a Gaussian kernel on the
earth mover's distance; whole-graph similarity uses an NSPDK-style
neighbourhood-pair kernel; novelty and uniqueness rely on subgraph
isomorphism.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from collections import Counter, deque
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyDataset, KindMismatch, SearchBudgetExceeded
from .graph import LabeledGraph, clustering_coefficient, subgraph_isomorphic

log = logging.getLogger(__name__)

CLUSTERING_BINS = 100
N_ORBITS = 11
DEFAULT_SUBGRAPH_BUDGET = 10**7


@dataclass(frozen=True)
class Histogram:
    """Descriptor of one graph.

    ``ordinal`` histograms live on positions ``0..len-1`` (degree,
    clustering bins, orbit ids); categorical ones map keys to masses.
    """

    kind: str
    values: np.ndarray | None = None
    mass: dict | None = None
    normalized: bool = True

    @property
    def ordinal(self) -> bool:
        return self.values is not None


def _normalize(counts):
    total = counts.sum()
    return counts / total if total > 0 else counts


def degree_histogram(g: LabeledGraph) -> Histogram:
    degs = [g.degree(v) for v in range(g.n)]
    counts = np.bincount(degs, minlength=1).astype(float) if degs else np.zeros(1)
    return Histogram("degree", _normalize(counts))


def clustering_histogram(g: LabeledGraph, bins: int = CLUSTERING_BINS) -> Histogram:
    cc = [clustering_coefficient(g, v) for v in range(g.n)]
    counts, _ = np.histogram(cc, bins=bins, range=(0.0, 1.0))
    return Histogram("clustering", _normalize(counts.astype(float)))


def _categorical(kind, keys) -> Histogram:
    c = Counter(keys)
    total = sum(c.values())
    return Histogram(kind, mass={k: v / total for k, v in c.items()} if total else {})


def node_label_histogram(g: LabeledGraph) -> Histogram:
    return _categorical("node_label", g.node_labels)


def edge_label_histogram(g: LabeledGraph) -> Histogram:
    return _categorical("edge_label", (e[2] for e in g.edges))


def joint_label_degree_histogram(g: LabeledGraph) -> Histogram:
    return _categorical("joint_label_degree",
                        ((g.node_labels[v], g.degree(v)) for v in range(g.n)))


# -- graphlet orbits ---------------------------------------------------------

# (edge count, sorted induced degrees) -> orbit id per induced degree
_GRAPHLETS = {
    (3, (1, 1, 2, 2)): {1: 4, 2: 5},            # path
    (3, (1, 1, 1, 3)): {1: 6, 3: 7},            # star
    (4, (2, 2, 2, 2)): {2: 8},                  # 4-cycle
    (4, (1, 2, 2, 3)): {1: 9, 2: 10, 3: 11},    # paw
    (5, (2, 2, 3, 3)): {2: 12, 3: 13},          # diamond
    (6, (3, 3, 3, 3)): {3: 14},                 # clique
}


def _connected_quads(g: LabeledGraph):
    """Every connected 4-node set exactly once (ESU enumeration)."""
    adj = [set(a) for a in g.adj]

    def extend(sub, nbhd, ext, root):
        if len(sub) == 4:
            yield sub
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            excl = {u for u in adj[w] if u > root and u not in sub and u not in nbhd}
            yield from extend(sub + (w,), nbhd | adj[w], ext + sorted(excl), root)

    for v in range(g.n):
        yield from extend((v,), adj[v] | {v}, sorted(u for u in adj[v] if u > v), v)


def orbit_counts(g: LabeledGraph) -> np.ndarray:
    """Per-node counts of the 11 orbits of connected 4-node graphlets;
    column ``j`` is orbit ``j + 4``."""
    out = np.zeros((g.n, N_ORBITS), dtype=np.int64)
    for quad in _connected_quads(g):
        deg = {v: sum(1 for w in quad if w in g.adj[v]) for v in quad}
        m = sum(deg.values()) // 2
        roles = _GRAPHLETS[(m, tuple(sorted(deg.values())))]
        for v in quad:
            out[v, roles[deg[v]] - 4] += 1
    return out


def orbit_descriptor(g: LabeledGraph) -> Histogram:
    counts = orbit_counts(g)
    mean = counts.mean(axis=0) if g.n else np.zeros(N_ORBITS)
    return Histogram("orbit", mean.astype(float), normalized=False)


# -- kernels and MMD ---------------------------------------------------------

def emd(a: Histogram, b: Histogram) -> float:
    """1-D earth mover's distance with unit spacing for ordinal supports;
    with the 0/1 ground metric (total variation) for categorical ones."""
    if a.ordinal:
        n = max(len(a.values), len(b.values))
        x = np.zeros(n)
        y = np.zeros(n)
        x[:len(a.values)] = a.values
        y[:len(b.values)] = b.values
        return float(np.abs(np.cumsum(x - y)).sum())
    keys = set(a.mass) | set(b.mass)
    return 0.5 * sum(abs(a.mass.get(k, 0.0) - b.mass.get(k, 0.0)) for k in keys)


def gaussian_emd(sigma: float = 1.0) -> Callable:
    def kernel(a, b):
        d = emd(a, b)
        return float(np.exp(-d * d / (2.0 * sigma * sigma)))
    return kernel


def _kind(x):
    return x.kind if isinstance(x, Histogram) else type(x).__name__


def mmd(set_a: Sequence, set_b: Sequence, kernel: Callable) -> float:
    """Biased squared MMD (diagonal terms included), clamped at zero."""
    if not set_a or not set_b:
        raise EmptyDataset("mmd needs two non-empty descriptor sets")
    kinds = {_kind(x) for x in set_a} | {_kind(x) for x in set_b}
    if len(kinds) > 1:
        raise KindMismatch(f"descriptor kinds differ: {sorted(map(str, kinds))}")

    def mean_k(xs, ys):
        return sum(kernel(x, y) for x in xs for y in ys) / (len(xs) * len(ys))

    val = mean_k(set_a, set_a) + mean_k(set_b, set_b) - 2.0 * mean_k(set_a, set_b)
    return max(val, 0.0)


# -- NSPDK ---------------------------------------------------------------------

@dataclass(frozen=True)
class NspdkFeatures:
    kind = "nspdk"
    counts: dict
    norm: float


def _bfs(g, src, limit):
    dist = {src: 0}
    q = deque([src])
    while q:
        u = q.popleft()
        if dist[u] == limit:
            continue
        for w in g.adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def _hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def _rooted_encoding(g, dist):
    nodes = sorted(f"{d}:{g.node_labels[v]}" for v, d in dist.items())
    edges = []
    for u, v, lab in g.edges:
        if u in dist and v in dist:
            a = f"{dist[u]}:{g.node_labels[u]}"
            b = f"{dist[v]}:{g.node_labels[v]}"
            edges.append(f"{min(a, b)}-{max(a, b)}|{lab}")
    return "[" + ",".join(nodes) + "|" + ",".join(sorted(edges)) + "]"


def nspdk_features(g: LabeledGraph, r_max: int = 2, d_max: int = 4) -> NspdkFeatures:
    """Counts of ``(r, d, hash(enc_r(u) + enc_r(v)))`` over ordered node pairs
    at distance ``d <= d_max`` and radii ``r <= r_max``."""
    enc = [[None] * g.n for _ in range(r_max + 1)]
    for v in range(g.n):
        ball = _bfs(g, v, r_max)
        for r in range(r_max + 1):
            enc[r][v] = _rooted_encoding(g, {w: d for w, d in ball.items() if d <= r})
    counts: Counter = Counter()
    for u in range(g.n):
        for v, d in _bfs(g, u, d_max).items():
            for r in range(r_max + 1):
                counts[(r, d, _hash64(f"{r}/{d}/{enc[r][u]}{enc[r][v]}"))] += 1
    norm = float(np.sqrt(sum(c * c for c in counts.values())))
    return NspdkFeatures(dict(counts), norm)


def nspdk_kernel(a: NspdkFeatures, b: NspdkFeatures) -> float:
    if a.norm == 0.0 or b.norm == 0.0:
        return 1.0 if a.norm == b.norm else 0.0
    small, large = (a.counts, b.counts) if len(a.counts) <= len(b.counts) else (b.counts, a.counts)
    dot = sum(c * large.get(k, 0) for k, c in small.items())
    return min(1.0, dot / (a.norm * b.norm))


def nspdk_mmd(generated: Sequence[LabeledGraph], reference: Sequence[LabeledGraph],
              r_max: int = 2, d_max: int = 4) -> float:
    fa = [nspdk_features(g, r_max, d_max) for g in generated]
    fb = [nspdk_features(g, r_max, d_max) for g in reference]
    return mmd(fa, fb, nspdk_kernel)


# -- redundancy ------------------------------------------------------------------

def _contained(a, b, budget):
    try:
        return subgraph_isomorphic(a, b, budget)
    except SearchBudgetExceeded:
        log.warning("subgraph isomorphism budget exhausted; treating as not contained")
        return False


def is_novel(g: LabeledGraph, training: Sequence[LabeledGraph],
             budget: int = DEFAULT_SUBGRAPH_BUDGET) -> bool:
    return not any(_contained(g, t, budget) or _contained(t, g, budget) for t in training)


def novelty(generated: Sequence[LabeledGraph], training: Sequence[LabeledGraph],
            budget: int = DEFAULT_SUBGRAPH_BUDGET) -> float:
    """Percent of generated graphs neither contained in nor containing any
    training graph."""
    if not generated or not training:
        raise EmptyDataset("novelty needs non-empty generated and training sets")
    return 100.0 * sum(is_novel(g, training, budget) for g in generated) / len(generated)


def uniqueness(generated: Sequence[LabeledGraph],
               budget: int = DEFAULT_SUBGRAPH_BUDGET) -> float:
    """Percent of generated graphs left after removing every graph that is
    subgraph-isomorphic to another generated graph.

    Mutually contained (i.e. isomorphic) graphs keep their first occurrence,
    so ``n`` identical graphs score ``100 / n``.
    """
    if not generated:
        raise EmptyDataset("uniqueness needs a non-empty generated set")
    kept = 0
    for i, g in enumerate(generated):
        removed = False
        for j, h in enumerate(generated):
            if i == j:
                continue
            same_size = (g.n, g.m) == (h.n, h.m)
            if same_size and j > i:
                continue  # an isomorphic copy later in the list does not remove g
            if _contained(g, h, budget):
                removed = True
                break
        kept += not removed
    return 100.0 * kept / len(generated)


# -- full report -------------------------------------------------------------------

@dataclass
class MetricReport:
    degree_mmd: float
    clustering_mmd: float
    orbit_mmd: float
    nspdk_mmd: float
    avg_nodes_gen: float
    avg_nodes_ref: float
    avg_edges_gen: float
    avg_edges_ref: float
    node_label_mmd: float
    edge_label_mmd: float
    joint_label_degree_mmd: float
    novelty_pct: float
    uniqueness_pct: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = [f.name for f in fields(self)]
        w.writerow(names)
        w.writerow([repr(getattr(self, n)) for n in names])
        return buf.getvalue()


@dataclass(frozen=True)
class EvalConfig:
    runs: int = 10
    batch: int = 256
    sigma: float = 1.0
    nspdk_r: int = 2
    nspdk_d: int = 4
    subgraph_budget: int = DEFAULT_SUBGRAPH_BUDGET
    seed: int = 0


def _descriptors(g, cfg):
    return {
        "degree": degree_histogram(g),
        "clustering": clustering_histogram(g),
        "orbit": orbit_descriptor(g),
        "nspdk": nspdk_features(g, cfg.nspdk_r, cfg.nspdk_d),
        "node_label": node_label_histogram(g),
        "edge_label": edge_label_histogram(g),
        "joint": joint_label_degree_histogram(g),
    }


def evaluate(generated: Sequence[LabeledGraph], reference: Sequence[LabeledGraph],
             training: Sequence[LabeledGraph], cfg: EvalConfig = EvalConfig()) -> MetricReport:
    """Average every metric over ``cfg.runs`` random batches of at most
    ``cfg.batch`` generated and reference graphs."""
    if not generated or not reference or not training:
        raise EmptyDataset("evaluate needs non-empty generated, reference and training sets")
    rng = np.random.default_rng(cfg.seed)
    gen_desc = [_descriptors(g, cfg) for g in generated]
    ref_desc = [_descriptors(g, cfg) for g in reference]
    novel = [is_novel(g, training, cfg.subgraph_budget) for g in generated]
    hist_k = gaussian_emd(cfg.sigma)
    kernels = {"degree": hist_k, "clustering": hist_k, "orbit": hist_k,
               "nspdk": nspdk_kernel, "node_label": hist_k, "edge_label": hist_k,
               "joint": hist_k}
    acc = Counter()
    for _ in range(cfg.runs):
        gi = rng.choice(len(generated), size=min(cfg.batch, len(generated)), replace=False)
        ri = rng.choice(len(reference), size=min(cfg.batch, len(reference)), replace=False)
        gi, ri = sorted(gi.tolist()), sorted(ri.tolist())
        for name, kern in kernels.items():
            acc[name] += mmd([gen_desc[i][name] for i in gi],
                             [ref_desc[i][name] for i in ri], kern)
        acc["avg_nodes_gen"] += np.mean([generated[i].n for i in gi])
        acc["avg_nodes_ref"] += np.mean([reference[i].n for i in ri])
        acc["avg_edges_gen"] += np.mean([generated[i].m for i in gi])
        acc["avg_edges_ref"] += np.mean([reference[i].m for i in ri])
        acc["novelty"] += 100.0 * sum(novel[i] for i in gi) / len(gi)
        acc["uniqueness"] += uniqueness([generated[i] for i in gi], cfg.subgraph_budget)
    r = {k: float(v) / cfg.runs for k, v in acc.items()}
    return MetricReport(
        degree_mmd=r["degree"], clustering_mmd=r["clustering"], orbit_mmd=r["orbit"],
        nspdk_mmd=r["nspdk"], avg_nodes_gen=r["avg_nodes_gen"],
        avg_nodes_ref=r["avg_nodes_ref"], avg_edges_gen=r["avg_edges_gen"],
        avg_edges_ref=r["avg_edges_ref"], node_label_mmd=r["node_label"],
        edge_label_mmd=r["edge_label"], joint_label_degree_mmd=r["joint"],
        novelty_pct=r["novelty"], uniqueness_pct=r["uniqueness"])
