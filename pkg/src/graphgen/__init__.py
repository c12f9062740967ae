"""Graph generation through minimum DFS codes and a recurrent sequence model."""

__version__ = "0.1.0"

from .graph import (LabeledGraph, InvariantSpec, validate_graph, augment_labels,
                    strip_invariants, is_isomorphic, subgraph_isomorphic)
from .canonize import (EdgeTuple, min_dfs_code, min_dfs_code_with_stats,
                       brute_force_min_dfs_code, compare_codes, decode,
                       format_code, parse_code)
from .codec import VocabSpec, build_vocab, encode_sequence, decode_step
from .model import (TrainConfig, GenerativeModel, train, generate, generate_graphs,
                    save_checkpoint, load_checkpoint)
from .metrics import EvalConfig, MetricReport, evaluate, mmd, novelty, uniqueness
from .datagen import read_dataset, write_dataset, split_dataset, RwrConfig, rwr_sample

__all__ = [n for n in dir() if not n.startswith("_")]
