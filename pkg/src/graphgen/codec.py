"""One-hot vocabularies for the five edge-tuple components and conversion of
DFS codes to index/one-hot sequences."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .canonize import EdgeTuple
from .errors import EmptyDataset, OutOfVocab
from .graph import LabeledGraph

COMPONENTS = ("t_u", "t_v", "l_u", "l_e", "l_v")


@dataclass(frozen=True)
class VocabSpec:
    """Per-component one-hot sizes; the last index of each block is EOS."""

    dim_t: int
    node_labels: tuple[str, ...]
    edge_labels: tuple[str, ...]

    @property
    def dim_nl(self) -> int:
        return len(self.node_labels) + 1

    @property
    def dim_el(self) -> int:
        return len(self.edge_labels) + 1

    @property
    def dims(self) -> tuple[int, int, int, int, int]:
        return (self.dim_t, self.dim_t, self.dim_nl, self.dim_el, self.dim_nl)

    @property
    def k(self) -> int:
        return 2 * self.dim_t + 2 * self.dim_nl + self.dim_el

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)[:-1]]).astype(np.int64)

    @property
    def eos(self) -> np.ndarray:
        return np.array(self.dims, dtype=np.int64) - 1

    @property
    def max_nodes(self) -> int:
        return self.dim_t - 1

    @cached_property
    def node_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.node_labels)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.edge_labels)}

    def to_dict(self) -> dict:
        return {"dim_t": self.dim_t, "node_labels": list(self.node_labels),
                "edge_labels": list(self.edge_labels)}

    @classmethod
    def from_dict(cls, d: dict) -> VocabSpec:
        return cls(int(d["dim_t"]), tuple(d["node_labels"]), tuple(d["edge_labels"]))


def build_vocab(dataset: Iterable[LabeledGraph]) -> VocabSpec:
    graphs = list(dataset)
    if not graphs:
        raise EmptyDataset("cannot build a vocabulary from an empty dataset")
    max_n = max(g.n for g in graphs)
    nl = sorted({lab for g in graphs for lab in g.node_labels})
    el = sorted({e[2] for g in graphs for e in g.edges})
    return VocabSpec(max_n + 1, tuple(nl), tuple(el))


@dataclass(frozen=True)
class EncodedSequence:
    """Component indices, shape ``(len(code) + 1, 5)``; last row is all-EOS."""

    indices: np.ndarray
    vocab: VocabSpec

    def __len__(self):
        return len(self.indices)

    def onehot(self) -> np.ndarray:
        out = np.zeros((len(self.indices), self.vocab.k))
        rows = np.arange(len(self.indices))[:, None]
        out[rows, self.indices + self.vocab.offsets] = 1.0
        return out


def tuple_indices(t: EdgeTuple, vocab: VocabSpec) -> tuple[int, ...]:
    t = EdgeTuple(*t)
    for ts in (t.t_u, t.t_v):
        if not 0 <= ts < vocab.dim_t - 1:
            raise OutOfVocab(f"timestamp {ts} outside [0, {vocab.dim_t - 1})")
    try:
        return (t.t_u, t.t_v, vocab.node_index[t.l_u],
                vocab.edge_index[t.l_e], vocab.node_index[t.l_v])
    except KeyError as exc:
        raise OutOfVocab(f"label {exc.args[0]!r} not in vocabulary") from None


def encode_sequence(code: Sequence[EdgeTuple], vocab: VocabSpec) -> EncodedSequence:
    rows = [tuple_indices(t, vocab) for t in code]
    rows.append(tuple(vocab.eos))
    return EncodedSequence(np.array(rows, dtype=np.int64).reshape(-1, 5), vocab)


def decode_step(samples: Sequence[int], vocab: VocabSpec) -> EdgeTuple | None:
    """Map five sampled indices back to a tuple; ``None`` signals EOS, which
    fires as soon as any single component hits its EOS index."""
    if len(samples) != 5:
        raise IndexError("expected five component indices")
    for s, dim in zip(samples, vocab.dims):
        if not 0 <= s < dim:
            raise IndexError(f"index {s} out of range for component of size {dim}")
    if any(int(s) == e for s, e in zip(samples, vocab.eos)):
        return None
    tu, tv, lu, le, lv = (int(s) for s in samples)
    return EdgeTuple(tu, tv, vocab.node_labels[lu], vocab.edge_labels[le],
                     vocab.node_labels[lv])


def argmax_blocks(vec: np.ndarray, vocab: VocabSpec) -> tuple[int, ...]:
    """Per-component argmax of a concatenated k-vector."""
    out = []
    for off, dim in zip(vocab.offsets, vocab.dims):
        out.append(int(np.argmax(vec[off:off + dim])))
    return tuple(out)
