import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphgen.canonize import EdgeTuple, min_dfs_code
from graphgen.codec import (VocabSpec, argmax_blocks, build_vocab, decode_step,
                            encode_sequence)
from graphgen.errors import EmptyDataset, OutOfVocab
from graphgen.graph import LabeledGraph

from _support import random_graph

EDGE = LabeledGraph.build("AB", [(0, 1, "x")])


def test_single_edge_dims():
    v = build_vocab([EDGE])
    assert (v.dim_t, v.dim_nl, v.dim_el) == (3, 3, 2)
    assert v.k == 2 * 3 + 2 * 3 + 2


def test_two_triangles():
    tri = LabeledGraph.build("PPP", [(0, 1, "q"), (1, 2, "q"), (0, 2, "q")])
    v = build_vocab([tri, tri])
    assert (v.dim_t, v.dim_nl, v.dim_el) == (4, 2, 2)


def test_lung_like_sizes():
    labels = [f"L{i}" for i in range(11)]
    big = LabeledGraph.build([labels[i % 11] for i in range(50)],
                             [(i, i + 1, "abc"[i % 3]) for i in range(49)])
    small = LabeledGraph.build(labels[:6], [(i, i + 1, "a") for i in range(5)])
    v = build_vocab([small, big])
    assert (v.dim_t, v.dim_nl, v.dim_el) == (51, 12, 4)


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        build_vocab([])


def test_order_invariant_and_sorted():
    rng = np.random.default_rng(0)
    gs = [random_graph(rng, 5, "CBA", "zyx") for _ in range(6)]
    assert build_vocab(gs) == build_vocab(gs[::-1])
    assert list(build_vocab(gs).node_labels) == sorted(build_vocab(gs).node_labels)


def test_vocab_dict_roundtrip():
    v = build_vocab([EDGE])
    assert VocabSpec.from_dict(v.to_dict()) == v


class TestEncode:
    def test_empty_code(self):
        v = build_vocab([EDGE])
        enc = encode_sequence([], v)
        assert enc.indices.tolist() == [list(v.eos)]

    def test_single_tuple_positions(self):
        v = build_vocab([EDGE])
        oh = encode_sequence([EdgeTuple(0, 1, "A", "x", "B")], v).onehot()
        assert oh.shape == (2, v.k)
        # blocks: t_u [0,3) t_v [3,6) l_u [6,9) l_e [9,11) l_v [11,14)
        assert np.flatnonzero(oh[0]).tolist() == [0, 4, 6, 9, 12]
        assert np.flatnonzero(oh[1]).tolist() == [2, 5, 8, 10, 13]

    def test_out_of_vocab(self):
        v = build_vocab([EDGE])
        with pytest.raises(OutOfVocab):
            encode_sequence([EdgeTuple(0, 2, "A", "x", "B")], v)
        with pytest.raises(OutOfVocab):
            encode_sequence([EdgeTuple(0, 1, "A", "y", "B")], v)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_roundtrip_via_argmax(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, int(rng.integers(2, 9)), "ABC", "xy")
        v = build_vocab([g])
        code = min_dfs_code(g)
        oh = encode_sequence(code, v).onehot()
        assert len(oh) == g.m + 1
        assert (oh.sum(axis=1) == 5).all()
        for i, t in enumerate(code):
            assert decode_step(argmax_blocks(oh[i], v), v) == t
        assert decode_step(argmax_blocks(oh[-1], v), v) is None


class TestDecodeStep:
    def test_all_eos(self):
        v = build_vocab([EDGE])
        assert decode_step(tuple(v.eos), v) is None

    def test_inverse(self):
        v = build_vocab([EDGE])
        assert decode_step((0, 1, 0, 0, 1), v) == EdgeTuple(0, 1, "A", "x", "B")

    def test_any_component_eos(self):
        v = build_vocab([EDGE])
        assert decode_step((0, 1, 0, v.eos[3], 1), v) is None

    def test_out_of_range(self):
        v = build_vocab([EDGE])
        with pytest.raises(IndexError):
            decode_step((0, 1, 0, 7, 1), v)
